"""Tridiagonal resolvent solves shared by the free and perturbed operators.

R(zeta) = (-D2 + Q - zeta)^{-1} on the reduced grid.  Two closures at r_max:

* ``dirichlet``: the box operator, u(r_max) = 0;
* ``outgoing``: the exact transparent condition of the infinite uniform grid.
  Beyond the last node the solution is u_j = mu^j with mu + 1/mu = 2 - zeta*h^2,
  which folds into the last diagonal entry as -mu/h^2.  Off the cut |mu| < 1;
  on the cut (zeta > 0) the limiting-absorption side picks Im(mu)*side > 0,
  i.e. u ~ exp(+i*sqrt(zeta)*r) for side=+1.  This is the discrete form of the
  Robin condition u' = i*sqrt(zeta)*u and converges to it as h -> 0.

zeta-derivatives of the closed resolvent include the derivative of mu, so the
derivative jets are exact for the truncated problem and agree with those of
the infinite grid restricted to (0, r_max).
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

from .core.grid import RadialGrid
from .errors import BranchAmbiguityError, InvalidConfigError, NumericalFailure

CLOSURES = ("outgoing", "dirichlet")


def on_cut(zeta: complex) -> bool:
    """True when zeta sits on the closed positive half-axis (0 included)."""
    zeta = complex(zeta)
    return zeta.real >= 0 and abs(zeta.imag) <= 1e-14 * max(1.0, abs(zeta))


def outgoing_root(zeta: complex, h: float, side: int | None = None) -> complex:
    """Root mu of mu + 1/mu = 2 - zeta*h^2 selecting the decaying/outgoing branch."""
    zeta = complex(zeta)
    if on_cut(zeta) and zeta != 0:
        if side not in (1, -1):
            raise BranchAmbiguityError(f"zeta = {zeta.real:g} lies on the continuous spectrum; a side (+1 or -1) is required")
    b = 2.0 - zeta * h * h
    disc = np.sqrt(b * b - 4.0 + 0j)
    m1, m2 = (b + disc) / 2, (b - disc) / 2
    if abs(abs(m1) - abs(m2)) > 1e-12 * max(abs(m1), abs(m2)):
        return m1 if abs(m1) < abs(m2) else m2
    if side not in (1, -1):
        raise BranchAmbiguityError("outgoing branch is ambiguous without a side tag")
    return m1 if m1.imag * side > 0 else m2


def root_jet(zeta: complex, h: float, side: int | None = None):
    """mu and its first two zeta-derivatives."""
    mu = outgoing_root(zeta, h, side)
    f1 = 1.0 - 1.0 / mu**2
    mu1 = -h * h / f1
    mu2 = -(2.0 / mu**3) * mu1**2 / f1
    return mu, mu1, mu2


class ShiftedSolver:
    """LU-factored (-D2 + Q - zeta) with a chosen closure, plus exact zeta-jets."""

    def __init__(self, grid: RadialGrid, Q: np.ndarray, zeta: complex, side: int | None = None,
                 closure: str = "outgoing"):
        if closure not in CLOSURES:
            raise InvalidConfigError(f"closure must be one of {CLOSURES}")
        self.grid, self.zeta, self.side, self.closure = grid, complex(zeta), side, closure
        h = grid.h
        d = (2.0 / h**2 + np.asarray(Q, dtype=float) - self.zeta).astype(complex)
        if closure == "outgoing":
            mu, mu1, mu2 = root_jet(self.zeta, h, side)
            d[-1] -= mu / h**2
            self._c1, self._c2 = mu1 / h**2, mu2 / h**2
        else:
            self._c1, self._c2 = 0.0, 0.0
        e = np.full(grid.n - 1, -1.0 / h**2, dtype=complex)
        dl, dd, du, du2, ipiv, info = lapack.zgttrf(e.copy(), d, e.copy())
        if info != 0:
            raise NumericalFailure(f"tridiagonal factorization failed at pivot {info}")
        self._lu = (dl, dd, du, du2, ipiv)

    def solve(self, x, adjoint: bool = False):
        dl, d, du, du2, ipiv = self._lu
        b = np.asarray(x, dtype=complex)
        out, info = lapack.zgttrs(dl, d, du, du2, ipiv, b, trans="C" if adjoint else "N")
        if info != 0:
            raise NumericalFailure("tridiagonal solve failed")
        return out

    def _b1(self, v, adjoint):
        c = np.conj(self._c1) if adjoint else self._c1
        v = np.array(v, copy=True)
        v[-1] = v[-1] * (1.0 + c)
        return v

    def _b2(self, v, adjoint):
        c = np.conj(self._c2) if adjoint else self._c2
        out = np.zeros_like(v)
        out[-1] = v[-1] * c
        return out

    def derivative(self, k: int, x, adjoint: bool = False):
        """Apply d^k/dzeta^k R(zeta) (or its adjoint) for k = 0, 1, 2."""
        if k == 0:
            return self.solve(x, adjoint)
        y = self.solve(x, adjoint)
        if k == 1:
            return self.solve(self._b1(y, adjoint), adjoint)
        if k == 2:
            z = self.solve(self._b1(y, adjoint), adjoint)
            return 2.0 * self.solve(self._b1(z, adjoint), adjoint) + self.solve(self._b2(y, adjoint), adjoint)
        raise InvalidConfigError(f"derivative order {k} not supported (0..2)")


class OmegaJet:
    """omega-derivatives of R(omega^2 - m^2) for the Klein-Gordon resolvent."""

    def __init__(self, grid: RadialGrid, Q, omega: complex, m: float, side: int | None = None,
                 closure: str = "outgoing"):
        self.omega = complex(omega)
        zeta = self.omega**2 - m * m
        zside = None
        if side is not None:
            zside = side if self.omega.real >= 0 else -side
        self.solver = ShiftedSolver(grid, Q, zeta, zside, closure)

    def apply(self, k: int, x, adjoint: bool = False):
        if k < 0:
            return np.zeros_like(np.asarray(x, dtype=complex))
        w = np.conj(self.omega) if adjoint else self.omega
        S = self.solver
        if k == 0:
            return S.derivative(0, x, adjoint)
        if k == 1:
            return 2.0 * w * S.derivative(1, x, adjoint)
        if k == 2:
            return 2.0 * S.derivative(1, x, adjoint) + 4.0 * w * w * S.derivative(2, x, adjoint)
        raise InvalidConfigError(f"derivative order {k} not supported (0..2)")


def kg_block_apply(jet: OmegaJet, k: int, x, adjoint: bool = False):
    """k-th omega-derivative of the block resolvent applied to stacked (psi, pi).

    Blocks: [[w R, i R], [-i(1 + w^2 R), w R]] with R = R(w^2 - m^2).  Terms
    are grouped by the derivative order of R so that each order costs one
    batched solve.
    """
    n = jet.solver.grid.n
    x = np.asarray(x, dtype=complex)
    x1, x2 = x[:n], x[n:]
    w = np.conj(jet.omega) if adjoint else jet.omega

    def R(j, *vs):
        if j < 0:
            return [0.0 for _ in vs]
        if len(vs) == 1:
            return [jet.apply(j, vs[0], adjoint)]
        if np.ndim(vs[0]) == 1:
            out = jet.apply(j, np.stack(vs, axis=1), adjoint)
            return [out[:, i] for i in range(len(vs))]
        cols = vs[0].shape[1]
        out = jet.apply(j, np.hstack(vs), adjoint)
        return [out[:, i * cols:(i + 1) * cols] for i in range(len(vs))]

    if not adjoint:
        # top = R_k(w x1 + i x2) + k R_{k-1} x1
        # bot = R_k(-i w^2 x1 + w x2) + R_{k-1}(-2ikw x1 + k x2) - i k(k-1) R_{k-2} x1 - i[k=0] x1
        a0, b0 = R(k, w * x1 + 1j * x2, -1j * w * w * x1 + w * x2)
        top, bot = a0, b0
        if k >= 1:
            a1, b1 = R(k - 1, k * x1, -2j * k * w * x1 + k * x2)
            top, bot = top + a1, bot + b1
        if k >= 2:
            (c2,) = R(k - 2, x1)
            bot = bot - 1j * k * (k - 1) * c2
        if k == 0:
            bot = bot - 1j * x1
    else:
        # adjoint blocks [[conj(a), conj(c)], [conj(b), conj(a)]] with a = wR_k + kR_{k-1},
        # b = iR_k, c = -i(w^2 R_k + 2kwR_{k-1} + k(k-1)R_{k-2} + [k=0])
        a0, b0 = R(k, w * x1 + 1j * w * w * x2, -1j * x1 + w * x2)
        top, bot = a0, b0
        if k >= 1:
            a1, b1 = R(k - 1, k * x1 + 2j * k * w * x2, k * x2)
            top, bot = top + a1, bot + b1
        if k >= 2:
            (c2,) = R(k - 2, x2)
            top = top + 1j * k * (k - 1) * c2
        if k == 0:
            top = top + 1j * x2
    return np.concatenate([top, bot])
