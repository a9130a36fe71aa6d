"""Linear operators on nodal vectors and their weighted operator norms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from ..errors import InvalidConfigError, NumericalFailure
from .grid import RadialGrid

POWER_TOL = 1e-8
POWER_CAP = 2000


@dataclass(frozen=True)
class LinOp:
    """Operator on stacked nodal values of ``blocks`` profiles.

    Either a dense matrix or a matrix-free pair (matvec, rmatvec) where
    rmatvec is the Euclidean adjoint.  Both callables accept a vector or a
    2D array of columns.
    """

    grid: RadialGrid
    matvec: Callable
    rmatvec: Callable
    blocks: int = 1
    domain_weight: object = None
    codomain_weight: object = None
    matrix: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.blocks * self.grid.n

    @classmethod
    def from_matrix(cls, grid, matrix, blocks=1, **kw) -> "LinOp":
        M = np.asarray(matrix)
        if M.shape != (blocks * grid.n, blocks * grid.n):
            raise InvalidConfigError(f"matrix shape {M.shape} does not fit the grid")
        return cls(grid, lambda x: M @ x, lambda y: M.conj().T @ y, blocks, matrix=M, **kw)

    def __call__(self, x):
        return self.matvec(x)

    def adjoint(self) -> "LinOp":
        M = None if self.matrix is None else self.matrix.conj().T
        return LinOp(self.grid, self.rmatvec, self.matvec, self.blocks, self.codomain_weight, self.domain_weight, M)

    def to_dense(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        return np.asarray(self.matvec(np.eye(self.size, dtype=complex)))

    def __sub__(self, other: "LinOp") -> "LinOp":
        return LinOp(self.grid, lambda x: self.matvec(x) - other.matvec(x),
                     lambda y: self.rmatvec(y) - other.rmatvec(y), self.blocks)

    def __matmul__(self, other: "LinOp") -> "LinOp":
        return LinOp(self.grid, lambda x: self.matvec(other.matvec(x)),
                     lambda y: other.rmatvec(self.rmatvec(y)), self.blocks)


def identity(grid: RadialGrid, blocks: int = 1) -> LinOp:
    return LinOp(grid, lambda x: np.array(x, dtype=complex), lambda y: np.array(y, dtype=complex), blocks)


def power_norm(apply: Callable, apply_adjoint: Callable, size: int, tol: float = POWER_TOL,
               cap: int = POWER_CAP) -> tuple[float, int]:
    """Largest singular value by power iteration on B^H B.

    Starts from the normalized all-ones vector.  Returns (norm, iterations);
    raises NumericalFailure when the relative change stays above tol.
    """
    x = np.full(size, 1.0 / np.sqrt(size), dtype=complex)
    prev = None
    gap = np.inf
    for it in range(1, cap + 1):
        z = apply_adjoint(apply(x))
        nz = float(np.linalg.norm(z))
        if nz == 0.0:
            return 0.0, it
        est = np.sqrt(nz)
        x = z / nz
        if prev is not None:
            gap = abs(est - prev) / est
            if gap <= tol:
                return float(est), it
        prev = est
    raise NumericalFailure(f"power iteration did not converge in {cap} steps", gap=gap)


def lanczos_norm(apply: Callable, apply_adjoint: Callable, size: int, tol: float = POWER_TOL,
                 cap: int = POWER_CAP) -> tuple[float, int]:
    """Largest singular value from implicitly restarted Lanczos (ARPACK) on B^H B.

    Same all-ones start vector as ``power_norm``.  Much faster when the top
    singular values cluster, as they do for the propagator between weighted
    spaces.
    """
    count = [0]

    def normal(x):
        count[0] += 1
        return apply_adjoint(apply(x))

    op = LinearOperator((size, size), matvec=normal, dtype=complex)
    v0 = np.full(size, 1.0 / np.sqrt(size), dtype=complex)
    try:
        w = eigsh(op, k=1, which="LA", v0=v0, tol=tol, maxiter=cap, return_eigenvectors=False)
    except ArpackNoConvergence as exc:
        raise NumericalFailure(f"Lanczos did not converge in {cap} restarts") from exc
    return float(np.sqrt(max(w[0].real, 0.0))), count[0]


def operator_norm_weighted(A: LinOp, frm, to, tol: float = POWER_TOL, cap: int = POWER_CAP,
                           method: str = "power") -> float:
    """Norm of A from the weighted space ``frm`` to ``to``.

    Largest singular value of W_to A W_frm^{-1}, where W is the weight and
    smoothing map (WeightSpec for single profiles, EnergyWeight for states).
    ``method`` is 'power' (default) or 'lanczos'.
    """
    g = A.grid
    for w in (frm, to):
        if w.blocks != A.blocks:
            raise InvalidConfigError("weight type does not match the operator block structure")

    def B(y):
        return to.apply(g, A.matvec(frm.apply_inverse(g, y)))

    def BH(y):
        return frm.apply_inverse_adjoint(g, A.rmatvec(to.apply_adjoint(g, y)))

    if method == "power":
        return power_norm(B, BH, A.size, tol, cap)[0]
    if method == "lanczos":
        return lanczos_norm(B, BH, A.size, tol, cap)[0]
    raise InvalidConfigError(f"unknown norm method {method!r}")


def norm_upper_bound(apply: Callable, size: int, probes: int = 10, alpha: float = 10.0, seed: int = 0) -> float:
    """Probabilistic upper bound on the 2-norm from Gaussian probes.

    ||B|| <= alpha*sqrt(2/pi)*max_i ||B w_i|| fails with probability at most
    alpha^(-probes) (a posteriori bound of Halko, Martinsson and Tropp).  Used
    where B is at roundoff level and power iteration has no dominant singular
    value to lock onto.  The probes come from a fixed seed, so the result is
    deterministic.
    """
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((size, probes)) + 0j
    Y = np.asarray(apply(W))
    return float(alpha * np.sqrt(2.0 / np.pi) * np.max(np.linalg.norm(Y, axis=0)))
