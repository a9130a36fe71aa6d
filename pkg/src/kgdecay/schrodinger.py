"""The perturbed Schrodinger operator H = -D2 + Q on the reduced line.

Potentials are specified in the Klein-Gordon convention psi_tt = Lap psi - m^2 psi + V psi,
so the Schrodinger operator whose spectrum enters the Klein-Gordon frequencies
is -Lap - V and the effective reduced potential is Q = -V.  With this choice
H psi = (omega^2 - m^2) psi for every Klein-Gordon eigenstate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq, minimize_scalar

from .core.fitting import DecayFit, fit_power_law
from .core.grid import RadialGrid, RadialProfile
from .core.linop import LinOp, operator_norm_weighted
from .core.norms import WeightSpec
from .errors import ConditionVError, InvalidConfigError, NearSingularError, NonRegularError
from .parallel import pmap
from .resolvent import ShiftedSolver

KINDS = ("square_well", "gaussian_well", "algebraic", "zero")
CONVENTIONS = ("kg", "schrodinger")
TOL_B = 1e-3
TOL_S = 1e-3
_NOMINAL_BETA = 4.0


@dataclass(frozen=True)
class PotentialSpec:
    """Radial potential V(r).

    square_well:   V0 for r < a, 0 beyond (cell-averaged at the jump)
    gaussian_well: V0*exp(-(r/a)^2)
    algebraic:     V0*(1 + (r/a)^2)^(-beta/2), needs beta > 3
    zero:          V = 0

    ``convention='kg'`` (default) means V enters the Klein-Gordon equation as +V psi,
    so V0 > 0 is attractive.  ``convention='schrodinger'`` means the numbers
    describe the Schrodinger potential directly (Q = +V).
    """

    kind: str = "square_well"
    V0: float = 4.0
    a: float = 1.0
    beta: float | None = None
    convention: str = "kg"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidConfigError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}", "potential.kind")
        if self.convention not in CONVENTIONS:
            raise InvalidConfigError(f"convention must be one of {CONVENTIONS}", "potential.convention")
        if not np.isfinite(self.V0):
            raise InvalidConfigError("V0 must be finite", "potential.V0")
        if self.kind != "zero" and not self.a > 0:
            raise InvalidConfigError("range a must be positive", "potential.a")
        if self.kind == "algebraic":
            if self.beta is None:
                raise InvalidConfigError("algebraic potential needs beta", "potential.beta")
            if not self.beta > 3:
                raise ConditionVError(
                    f"algebraic potential with beta = {self.beta:g} violates the decay hypothesis "
                    "|V(x)| <= C <x>^-beta for some beta > 3")

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls("zero", 0.0, 1.0)

    def scaled(self, lam: float) -> "PotentialSpec":
        return PotentialSpec(self.kind, lam * self.V0, self.a, self.beta, self.convention)

    @property
    def tail_exponent(self) -> float:
        """Decay exponent used in the decay check (any value works for fast decay)."""
        return float(self.beta) if self.kind == "algebraic" else _NOMINAL_BETA

    def __call__(self, r):
        """Continuous V(r) in the Klein-Gordon convention."""
        r = np.asarray(r, dtype=float)
        sign = 1.0 if self.convention == "kg" else -1.0
        if self.kind == "zero":
            v = np.zeros_like(r)
        elif self.kind == "square_well":
            v = np.where(r < self.a, self.V0, 0.0)
        elif self.kind == "gaussian_well":
            v = self.V0 * np.exp(-((r / self.a) ** 2))
        else:
            v = self.V0 * (1.0 + (r / self.a) ** 2) ** (-0.5 * self.beta)
        return sign * v

    def values(self, grid: RadialGrid) -> np.ndarray:
        """V at the nodes; the square well is averaged over each node's cell."""
        r, h = grid.nodes, grid.h
        if self.kind == "square_well":
            sign = 1.0 if self.convention == "kg" else -1.0
            return sign * self.V0 * np.clip((self.a - (r - 0.5 * h)) / h, 0.0, 1.0)
        return self(r)

    def effective(self, grid: RadialGrid) -> np.ndarray:
        """Q = -V, the potential of the Schrodinger operator -D2 + Q."""
        return -self.values(grid)

    def breakpoints(self) -> list[float]:
        return [self.a] if self.kind == "square_well" else []

    def effective_range(self) -> float:
        """Radius beyond which the zero-energy solution is linear to high accuracy."""
        if self.kind == "zero" or self.V0 == 0:
            return 0.0
        if self.kind == "square_well":
            return self.a
        if self.kind == "gaussian_well":
            return self.a * np.sqrt(np.log(1e14))
        # |V| r^2 <= 1e-4 |V0| a^2
        return self.a * (1e4) ** (1.0 / (self.beta - 2.0))

    def decay_check(self, grid: RadialGrid) -> tuple[float, float]:
        """(beta, C) with |V(r_i)| <= C <r_i>^-beta on the grid."""
        beta = self.tail_exponent
        C = float(np.max(np.abs(self.values(grid)) * grid.japanese(beta)))
        return beta, C


class SchrodingerOp:
    """-D2 + diag(Q) with Dirichlet ends, with a lazily cached eigen-decomposition."""

    def __init__(self, grid: RadialGrid, potential: PotentialSpec):
        self.grid, self.potential = grid, potential
        self.Q = potential.effective(grid)
        self.Q.flags.writeable = False
        self.beta, self.decay_constant = potential.decay_check(grid)

    @property
    def diagonal(self) -> np.ndarray:
        return 2.0 / self.grid.h**2 + self.Q

    @property
    def offdiagonal(self) -> np.ndarray:
        return np.full(self.grid.n - 1, -1.0 / self.grid.h**2)

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """(eigenvalues ascending, orthonormal eigenvectors as columns)."""
        w, E = eigh_tridiagonal(self.diagonal, self.offdiagonal)
        w.flags.writeable = False
        E.flags.writeable = False
        return w, E

    @property
    def norm(self) -> float:
        w, _ = self.eigensystem
        return float(np.max(np.abs(w)))

    def apply(self, u):
        h2 = self.grid.h**2
        Q = self.Q[:, None] if np.ndim(u) == 2 else self.Q
        out = (2.0 / h2 + Q) * u
        out[1:] -= u[:-1] / h2
        out[:-1] -= u[1:] / h2
        return out

    def dense(self) -> np.ndarray:
        return np.diag(self.diagonal) + np.diag(self.offdiagonal, 1) + np.diag(self.offdiagonal, -1)

    @cached_property
    def regular_case(self) -> "RegularCaseReport":
        return regular_case_test(self.potential, self.grid)


def assemble_h(potential: PotentialSpec, grid: RadialGrid) -> SchrodingerOp:
    return SchrodingerOp(grid, potential)


@dataclass(frozen=True)
class BoundState:
    zeta: float
    profile: RadialProfile
    residual: float


@dataclass(frozen=True)
class SpectrumResult:
    bound_states: tuple[BoundState, ...]
    threshold_flag: bool
    tol_edge: float

    @property
    def count(self) -> int:
        return len(self.bound_states)

    @property
    def energies(self) -> np.ndarray:
        return np.array([b.zeta for b in self.bound_states])


def negative_spectrum(H: SchrodingerOp, m: float) -> SpectrumResult:
    """Eigenvalues below -tol_edge, with unit (Euclidean) eigenvectors and residuals."""
    w, E = H.eigensystem
    tol_edge = 1e-10 * H.norm
    states = []
    for j in np.nonzero(w < -tol_edge)[0]:
        vec = E[:, j]
        res = float(np.linalg.norm(H.apply(vec) - w[j] * vec))
        states.append(BoundState(float(w[j]), RadialProfile(H.grid, vec), res))
    return SpectrumResult(tuple(states), bool(any(b.zeta <= -m * m for b in states)), tol_edge)


# ---------------------------------------------------------------- regular case


@dataclass(frozen=True)
class RegularCaseReport:
    """Two zero-energy detectors: shooting slope b and smallest singular value of 1 + A0 Q."""

    shooting_slope: float
    intercept: float
    smin: float
    tol_b: float
    tol_s: float
    regular_by_shooting: bool
    regular_by_operator: bool

    @property
    def is_regular(self) -> bool:
        return self.regular_by_shooting and self.regular_by_operator

    @property
    def disagreement(self) -> bool:
        return self.regular_by_shooting != self.regular_by_operator

    @property
    def margin(self) -> float:
        return self.smin - self.tol_s


def zero_energy_solution(potential: PotentialSpec, r_max: float):
    """Dense solution of -u'' + Q u = 0, u(0)=0, u'(0)=1 on [0, r_max] (continuous Q)."""
    Qf = lambda r: -potential(r)
    cuts = [0.0] + [b for b in potential.breakpoints() if 0 < b < r_max] + [r_max]
    y = np.array([0.0, 1.0])
    pieces = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        sol = solve_ivp(lambda r, z: [z[1], Qf(r) * z[0]], (lo, hi), y, method="DOP853",
                        rtol=1e-11, atol=1e-13, dense_output=True, max_step=0.25)
        pieces.append((lo, hi, sol.sol))
        y = sol.y[:, -1]

    def u(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((2, r.size))
        for lo, hi, f in pieces:
            sel = (r >= lo) & (r <= hi)
            if sel.any():
                out[:, sel] = f(r[sel])
        return out

    return u


def shooting_detector(potential: PotentialSpec, r_max: float, samples: int = 401) -> tuple[float, float]:
    """Fit u ~ alpha + b r on [0.8 r_max, r_max]; returns (b, alpha)."""
    if potential.effective_range() >= 0.8 * r_max:
        raise InvalidConfigError(
            f"tail window [{0.8 * r_max:g}, {r_max:g}] overlaps the potential range "
            f"{potential.effective_range():.3g}; enlarge r_max")
    u = zero_energy_solution(potential, r_max)
    r = np.linspace(0.8 * r_max, r_max, samples)
    vals = u(r)[0]
    A = np.vstack([np.ones_like(r), r]).T
    (alpha, b), *_ = np.linalg.lstsq(A, vals, rcond=None)
    return float(b), float(alpha)


def operator_detector(potential: PotentialSpec, grid: RadialGrid) -> float:
    """Smallest singular value of I + h G diag(Q), G_ij = min(r_i, r_j).

    I + U P^T with P the coordinate columns of supp Q is the identity on the
    orthogonal complement of span(P, U), so only that subspace is decomposed.
    """
    Q = potential.effective(grid)
    r, h = grid.nodes, grid.h
    S = np.nonzero(np.abs(Q) > 1e-16 * max(np.abs(Q).max(), 1e-300))[0]
    if S.size == 0 or np.abs(Q).max() == 0:
        return 1.0
    U = h * np.minimum.outer(r, r[S]) * Q[S]
    if 2 * S.size >= grid.n:
        M = np.eye(grid.n)
        M[:, S] += U
        return float(np.linalg.svd(M, compute_uv=False)[-1])
    P = np.zeros((grid.n, S.size))
    P[S, np.arange(S.size)] = 1.0
    basis, _ = np.linalg.qr(np.hstack([P, U]))
    small = np.eye(basis.shape[1]) + (basis.T @ U) @ basis[S, :]
    return float(min(np.linalg.svd(small, compute_uv=False)[-1], 1.0))


def regular_case_test(potential: PotentialSpec, grid: RadialGrid, tol_b: float = TOL_B,
                      tol_s: float = TOL_S) -> RegularCaseReport:
    """Zero is neither an eigenvalue nor a resonance when both detectors say so."""
    b, alpha = shooting_detector(potential, grid.r_max)
    smin = operator_detector(potential, grid)
    return RegularCaseReport(b, alpha, smin, tol_b, tol_s, abs(b) > tol_b, smin > tol_s)


def zero_energy_nodes(potential: PotentialSpec, r_max: float, samples: int = 20001) -> int:
    """Sign changes of the zero-energy solution on (0, r_max] (Sturm count of bound states)."""
    u = zero_energy_solution(potential, r_max)
    r = np.linspace(0.0, r_max, samples)[1:]
    vals = u(r)[0]
    s = np.sign(vals)
    s = s[s != 0]
    return int(np.sum(s[1:] != s[:-1]))


@dataclass(frozen=True)
class CouplingScan:
    couplings: np.ndarray
    reports: tuple[RegularCaseReport, ...]
    resonances_shooting: tuple[float, ...]
    resonances_operator: tuple[float, ...]
    step: float

    def disagreements_outside(self, width: float | None = None) -> list[float]:
        """Couplings where the detectors disagree farther than ``width`` from every resonance."""
        width = self.step if width is None else width
        res = list(self.resonances_shooting) + list(self.resonances_operator)
        out = []
        for c, rep in zip(self.couplings, self.reports):
            if rep.disagreement and all(abs(c - x) > width for x in res):
                out.append(float(c))
        return out


def coupling_scan(potential: PotentialSpec, grid: RadialGrid, lambdas=None, tol_b: float = TOL_B,
                  tol_s: float = TOL_S, threads: int | None = None) -> CouplingScan:
    """Scan lambda*V; locate resonant couplings (in units of V0) by both detectors.

    Shooting: root of b(lambda) by Brent's method in each sign-change bracket.
    Operator: bounded minimization of smin around each local minimum below 10*tol_s.
    """
    lambdas = np.linspace(0.5, 2.0, 50) if lambdas is None else np.asarray(lambdas, dtype=float)
    reports = tuple(pmap(lambda lam: regular_case_test(potential.scaled(lam), grid, tol_b, tol_s), lambdas, threads))
    bs = np.array([r.shooting_slope for r in reports])
    sm = np.array([r.smin for r in reports])
    V0 = potential.V0
    shoot = []
    for i in np.nonzero(np.sign(bs[1:]) != np.sign(bs[:-1]))[0]:
        lam = brentq(lambda x: shooting_detector(potential.scaled(x), grid.r_max)[0], lambdas[i], lambdas[i + 1],
                     xtol=1e-12)
        shoot.append(float(lam * V0))
    oper = []
    for i in range(len(lambdas)):
        left = sm[i - 1] if i > 0 else np.inf
        right = sm[i + 1] if i + 1 < len(sm) else np.inf
        if sm[i] <= left and sm[i] <= right and sm[i] < 10 * tol_s:
            lo = lambdas[max(i - 1, 0)]
            hi = lambdas[min(i + 1, len(lambdas) - 1)]
            opt = minimize_scalar(lambda x: operator_detector(potential.scaled(x), grid), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-10})
            oper.append(float(opt.x * V0))
    step = float(np.min(np.diff(lambdas)) * abs(V0)) if len(lambdas) > 1 else 0.0
    return CouplingScan(lambdas * V0, reports, tuple(shoot), tuple(oper), step)


# ---------------------------------------------------------------- resolvent


def _check_not_near_spectrum(H: SchrodingerOp, zeta: complex, side):
    w, _ = H.eigensystem
    neg = w[w < 0]
    if neg.size == 0:
        return
    dist = float(np.min(np.abs(neg - complex(zeta))))
    tol = 1e-10 * H.norm
    if dist <= tol:
        raise NearSingularError(
            f"zeta = {complex(zeta)} is within {dist:.2e} of a bound-state energy (condition ~ {H.norm / max(dist, 1e-300):.2e})",
            condition=H.norm / max(dist, 1e-300))


def resolvent_perturbed(H: SchrodingerOp, zeta: complex, side: int | None = None, k: int = 0,
                        closure: str = "outgoing") -> LinOp:
    """k-th zeta-derivative of (H - zeta)^{-1} with the outgoing (or Dirichlet) closure."""
    _check_not_near_spectrum(H, zeta, side)
    S = ShiftedSolver(H.grid, H.Q, zeta, side, closure)
    return LinOp(H.grid, lambda x: S.derivative(k, x), lambda y: S.derivative(k, y, True))


def scan_perturbed_resolvent_asymptotics(H: SchrodingerOp, regime: str, k: int, s: int, l: int, sigma: float,
                                         sweep, side: int | None = None, path: str = "shifted",
                                         threads: int | None = None):
    """Fit ||R^(k)(zeta)||_{L(H^s_sigma, H^(s+l)_-sigma)} against |zeta|.

    threshold: zeta = -delta, x = delta (regular case required).
    high_energy: zeta = (x + i)^2 for path='shifted' (default) or zeta = -x for
    path='negative'; fitted against |zeta|.
    Returns (fit, |zeta| values, norms).
    """
    if k not in (0, 1, 2):
        raise InvalidConfigError(f"k must be 0, 1 or 2, got {k}")
    if not sigma > 0.5 + k:
        from .errors import HypothesisError
        raise HypothesisError(f"derivative order {k} requires sigma > {0.5 + k:g} (got {sigma:g})")
    sweep = np.asarray(sweep, dtype=float)
    if regime == "threshold":
        rep = H.regular_case
        if not rep.is_regular:
            raise NonRegularError(
                f"threshold asymptotics need the regular case; shooting slope {rep.shooting_slope:.3e}, "
                f"smin {rep.smin:.3e}")
        zetas = -sweep
    elif regime == "high_energy":
        if path == "shifted":
            zetas = (sweep + 1j) ** 2
        elif path == "negative":
            zetas = -sweep
        else:
            raise InvalidConfigError(f"path must be 'shifted' or 'negative', got {path!r}")
    else:
        raise InvalidConfigError(f"regime must be 'threshold' or 'high_energy', got {regime!r}")
    frm, to = WeightSpec(s, sigma), WeightSpec(s + l, -sigma)

    def one(z):
        return operator_norm_weighted(resolvent_perturbed(H, z, side, k), frm, to)

    norms = np.array(pmap(one, zetas, threads))
    xs = np.abs(zetas)
    return fit_power_law(xs, norms), xs, norms
