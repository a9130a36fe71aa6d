"""Free Klein-Gordon dynamics and resolvents.

Spectral propagator in the discrete sine basis, the explicit Bessel-kernel
propagator (an independent oracle for the psi-row of the free group), the
free Schrodinger resolvent in continuum and discrete form, the block
Klein-Gordon resolvent and its threshold and high-energy scans.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .core.bessel import bessel_j
from .core.fitting import DecayFit, fit_power_law
from .core.grid import KgState, RadialGrid, RadialProfile, support_radius
from .core.linop import LinOp, operator_norm_weighted
from .core.norms import EnergyWeight, energy_norm_arrays
from .errors import (BoundaryContaminationError, BranchAmbiguityError, HypothesisError, InvalidConfigError)
from .parallel import pmap
from .resolvent import OmegaJet, ShiftedSolver, kg_block_apply, on_cut

# Sign of the Bessel-tail term in the radial reduction of the kernel.  Fixed
# once against the spectral propagator (dual-propagator oracle) and frozen.
KERNEL_TAIL_SIGN = -1.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_PANEL = 0.5


@dataclass(frozen=True)
class ModelParams:
    m: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.m) or self.m <= 0:
            raise InvalidConfigError(f"mass must be positive, got {self.m}", "model.m")


@dataclass(frozen=True)
class SpectralBands:
    """Gap (-m, m) and continuous spectrum (-inf, -m] u [m, inf) of the free generator."""

    m: float

    @property
    def gap(self) -> tuple[float, float]:
        return (-self.m, self.m)

    def in_band(self, omega: complex) -> bool:
        omega = complex(omega)
        return abs(omega.imag) <= 1e-14 * max(1.0, abs(omega)) and abs(omega.real) > self.m

    def in_gap(self, omega: complex) -> bool:
        omega = complex(omega)
        return abs(omega.imag) <= 1e-14 * max(1.0, abs(omega)) and abs(omega.real) < self.m


class FreePropagator:
    """exp(-itH0) through the Dirichlet sine basis of the grid."""

    def __init__(self, grid: RadialGrid, params: ModelParams):
        self.grid, self.params = grid, params

    @cached_property
    def frequencies(self) -> np.ndarray:
        return np.sqrt(self.grid.laplacian_eigenvalues + self.params.m**2)

    def coefficients(self, a, b, t):
        """Evolve sine coefficients (a, b) of (psi, pi) by time t."""
        om = self.frequencies
        if np.ndim(a) == 2:
            om = om[:, None]
        c, s = np.cos(t * om), np.sin(t * om)
        return c * a + (s / om) * b, -om * s * a + c * b

    def evolve_arrays(self, u, v, t):
        T = self.grid.sine_transform
        a, b = self.coefficients(T(u), T(v), t)
        return T(a), T(b)

    def evolve(self, state: KgState, t: float) -> KgState:
        if state.grid != self.grid:
            raise InvalidConfigError("state and propagator live on different grids")
        u, v = self.evolve_arrays(state.u.values, state.v.values, t)
        return KgState.from_arrays(self.grid, u, v)

    def discrete_energy(self, state: KgState) -> float:
        T = self.grid.sine_transform
        a, b = T(state.u.values), T(state.v.values)
        return float(np.sum(np.abs(b) ** 2 + self.frequencies**2 * np.abs(a) ** 2))


def evolve_free(state: KgState, t: float, params: ModelParams | None = None,
                propagator: FreePropagator | None = None) -> KgState:
    if propagator is None:
        propagator = FreePropagator(state.grid, params or ModelParams())
    return propagator.evolve(state, t)


def kernel_propagate(psi0: RadialProfile, t: float, m: float = 1.0, support_tol: float = 1e-16) -> RadialProfile:
    """psi-component at time t of the free solution with data (0, psi0), from the kernel.

    Reduced form with u0 = r*psi0:
        u(r,t) = 1/2 int_{|r-t|}^{r+t} u0 ds
                 + KERNEL_TAIL_SIGN/2 int_{|r-s|<t} u0(s) [J0(m q(min(r+s,t))) - J0(m q(|r-s|))] ds,
    q(rho) = sqrt(t^2 - rho^2).  The first term is the sharp front, the second the
    integrated J1 tail.  u0 is interpolated by a cubic spline of its odd extension.
    """
    if t <= 0:
        raise InvalidConfigError("kernel_propagate needs t > 0")
    g = psi0.grid
    r, h = g.nodes, g.h
    u0 = psi0.values.real if np.all(psi0.values.imag == 0) else psi0.values
    S = support_radius(u0, g, support_tol) + h
    if S + t >= g.r_max:
        raise BoundaryContaminationError(f"data radius {S:.3g} plus t={t:g} reaches r_max={g.r_max:g}")
    keep = int(np.ceil(S / h)) + 3
    ss = np.concatenate([-r[:keep][::-1], [0.0], r[:keep]])
    uu = np.concatenate([-u0[:keep][::-1], [0.0], u0[:keep]])
    spline = CubicSpline(ss, uu)
    anti = spline.antiderivative()
    out = np.zeros(g.n, dtype=u0.dtype)
    active = r <= S + t
    ra = r[active]
    out[active] = 0.5 * (anti(np.minimum(ra + t, S)) - anti(np.minimum(np.abs(ra - t), S)))
    for i in np.nonzero(active)[0]:
        ri = r[i]
        lo = max(0.0, ri - t)
        hi = min(S, ri + t)
        if hi <= lo:
            continue
        cuts = sorted({lo, hi, *[b for b in (t - ri,) if lo < b < hi]})
        tot = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            npan = max(1, int(np.ceil((b - a) / _PANEL)))
            edges = np.linspace(a, b, npan + 1)
            left, right = edges[:-1, None], edges[1:, None]
            s = 0.5 * (left + right) + 0.5 * (right - left) * _GL_NODES
            wts = 0.5 * (right - left) * _GL_WEIGHTS
            s, wts = s.ravel(), np.broadcast_to(wts, (npan, _GL_NODES.size)).ravel()
            outer = np.sqrt(np.maximum(t * t - np.minimum(ri + s, t) ** 2, 0.0))
            inner = np.sqrt(np.maximum(t * t - (ri - s) ** 2, 0.0))
            kern = bessel_j(0, m * outer) - bessel_j(0, m * inner)
            tot += np.sum(wts * kern * spline(s))
        out[i] += 0.5 * KERNEL_TAIL_SIGN * tot
    return RadialProfile(g, out)


def _continuum_kernel(grid: RadialGrid, zeta: complex, side: int | None):
    zeta = complex(zeta)
    if on_cut(zeta):
        if side not in (1, -1):
            raise BranchAmbiguityError(f"zeta = {zeta.real:g} lies on the continuous spectrum; a side is required")
        k = side * np.sqrt(zeta.real)
    else:
        k = np.sqrt(zeta)
        if k.imag < 0:
            k = -k
    r = grid.nodes
    lo = np.minimum.outer(r, r)
    hi = np.maximum.outer(r, r)
    # sin(k lo) e^{ik hi} / k, written with bounded exponentials
    return (np.exp(1j * k * (lo + hi)) - np.exp(1j * k * (hi - lo))) / (2j * k) * grid.h


def resolvent_free_schrodinger(grid: RadialGrid, zeta: complex, mode: str = "discrete",
                               side: int | None = None) -> LinOp:
    """(-Laplacian - zeta)^{-1} on the reduced line.

    ``continuum``: dense matrix of the exact half-line kernel times h.
    ``discrete``: tridiagonal solve of (-D2 - zeta) with the outgoing closure.
    """
    if mode == "continuum":
        return LinOp.from_matrix(grid, _continuum_kernel(grid, zeta, side))
    if mode == "discrete":
        S = ShiftedSolver(grid, np.zeros(grid.n), zeta, side)
        return LinOp(grid, S.solve, lambda y: S.solve(y, True))
    raise InvalidConfigError(f"mode must be 'continuum' or 'discrete', got {mode!r}")


def resolvent_free_kg(grid: RadialGrid, omega: complex, params: ModelParams, side: int | None = None,
                      closure: str = "outgoing", k: int = 0) -> LinOp:
    """k-th omega-derivative of the free block resolvent (H0 - omega)^{-1} on stacked states."""
    bands = SpectralBands(params.m)
    if bands.in_band(omega) and side not in (1, -1):
        raise BranchAmbiguityError(f"omega = {complex(omega).real:g} lies in the continuous spectrum; a side is required")
    jet = OmegaJet(grid, np.zeros(grid.n), omega, params.m, side, closure)
    return LinOp(grid, lambda x: kg_block_apply(jet, k, x), lambda y: kg_block_apply(jet, k, y, True), blocks=2)


def apply_free_generator(grid: RadialGrid, params: ModelParams, x: np.ndarray) -> np.ndarray:
    """H0 on stacked (psi, pi): (i pi, -i(-D2 + m^2) psi) with Dirichlet ends."""
    n = grid.n
    psi, pi = x[:n], x[n:]
    return np.concatenate([1j * pi, -1j * (dirichlet_laplacian(grid, psi) + params.m**2 * psi)])


def dirichlet_laplacian(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    """-D2 u with zero boundary values."""
    out = 2.0 * u
    out[1:] -= u[:-1]
    out[:-1] -= u[1:]
    return out / grid.h**2


def _check_order(k: int, sigma: float):
    if k not in (0, 1, 2):
        raise InvalidConfigError(f"derivative order k must be 0, 1 or 2, got {k}")
    if not sigma > 0.5 + k:
        raise HypothesisError(f"derivative order {k} requires sigma > {0.5 + k:g} (got {sigma:g})")


def threshold_omegas(m: float, deltas, approach: str = "gap"):
    deltas = np.asarray(deltas, dtype=float)
    if approach == "gap":
        return m - deltas
    if approach == "band":
        return m + deltas
    raise InvalidConfigError(f"approach must be 'gap' or 'band', got {approach!r}")


def scan_free_resolvent_asymptotics(grid: RadialGrid, params: ModelParams, regime: str, k: int, sigma: float,
                                    sweep, side: int | None = None, approach: str = "gap",
                                    threads: int | None = None):
    """Fit the L(F_sigma, F_-sigma) norm of the k-th omega-derivative of the free block resolvent.

    threshold: omega = m - delta (or m + delta with a side), x = delta.
    high_energy: omega = x + i, fitted against |omega|.
    Returns (fit, x values, norms).
    """
    _check_order(k, sigma)
    sweep = np.asarray(sweep, dtype=float)
    if regime == "threshold":
        omegas = threshold_omegas(params.m, sweep, approach)
        xs = sweep
    elif regime == "high_energy":
        omegas = sweep + 1j
        xs = np.abs(omegas)
    else:
        raise InvalidConfigError(f"regime must be 'threshold' or 'high_energy', got {regime!r}")
    bands = SpectralBands(params.m)
    if side is None and any(bands.in_band(w) for w in omegas):
        raise BranchAmbiguityError("sweep touches the continuous spectrum without a side tag")

    def one(w):
        A = resolvent_free_kg(grid, w, params, side, k=k)
        return operator_norm_weighted(A, EnergyWeight(sigma), EnergyWeight(-sigma))

    norms = np.array(pmap(one, omegas, threads))
    return fit_power_law(xs, norms), xs, norms


def measure_free_decay(state: KgState, params: ModelParams, sigma: float, t_samples, fit_window=None,
                       propagator: FreePropagator | None = None):
    """Series of ||U0(t) Psi0||_{F_-sigma}; returns (fit, t, norms)."""
    prop = propagator or FreePropagator(state.grid, params)
    g = state.grid
    t_samples = np.asarray(t_samples, dtype=float)
    norms = np.empty(t_samples.size)
    for i, t in enumerate(t_samples):
        u, v = prop.evolve_arrays(state.u.values, state.v.values, t)
        norms[i] = energy_norm_arrays(g, u, v, -sigma)
    return fit_power_law(t_samples, norms, fit_window), t_samples, norms
