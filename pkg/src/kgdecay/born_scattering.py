"""Coupling operator, Duhamel and Born terms, the operators W and N, and Cook scattering.

With the generator H0 + Vc, Vc = [[0, 0], [iV, 0]], the Duhamel formula reads
    Psi(t) = U0(t) Psi0 + int_0^t U0(t - tau) (-i Vc) Psi(tau) dtau,
and -i Vc (psi, pi) = (0, V psi).  All time integrals are composite Simpson
rules over a uniform tau grid, evaluated in the free sine basis where
U0(-tau) is diagonal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .core.fitting import DecayFit, fit_power_law
from .core.grid import KgState, RadialGrid
from .core.linop import LinOp, operator_norm_weighted
from .core.norms import EnergyWeight
from .errors import HypothesisError, InvalidConfigError, NonRegularError, QuadratureWarning, TailWarning
from .free_kg import FreePropagator, ModelParams
from .kg_dynamics import KgGenerator, ProjectorSet, conserved_energy, stacked_energy_norms
from .parallel import pmap
from .resolvent import OmegaJet, kg_block_apply
from .schrodinger import PotentialSpec, SchrodingerOp

QUAD_TOL = 1e-4


@dataclass(frozen=True)
class CouplingOp:
    """Vc = [[0, 0], [iV, 0]] on stacked (psi, pi)."""

    grid: RadialGrid
    V: np.ndarray

    @classmethod
    def from_potential(cls, potential: PotentialSpec, grid: RadialGrid) -> "CouplingOp":
        return cls(grid, potential.values(grid))

    def apply(self, x):
        n = self.grid.n
        x = np.asarray(x, dtype=complex)
        V = self.V[:, None] if x.ndim == 2 else self.V
        return np.concatenate([np.zeros_like(x[:n]), 1j * V * x[:n]])

    def apply_adjoint(self, y):
        n = self.grid.n
        y = np.asarray(y, dtype=complex)
        V = self.V[:, None] if y.ndim == 2 else self.V
        return np.concatenate([-1j * V * y[n:], np.zeros_like(y[n:])])

    def linop(self) -> LinOp:
        return LinOp(self.grid, self.apply, self.apply_adjoint, blocks=2)


def apply_coupling(state: KgState, potential: PotentialSpec) -> KgState:
    op = CouplingOp.from_potential(potential, state.grid)
    return KgState.from_stacked(state.grid, op.apply(state.stacked()))


def _tau_grid(t_end: float, dtau: float) -> np.ndarray:
    steps = int(round(abs(t_end) / dtau))
    if steps < 2 or not math.isclose(steps * dtau, abs(t_end), rel_tol=1e-9, abs_tol=1e-12):
        raise InvalidConfigError(f"time {t_end:g} is not a multiple (>= 2) of the step {dtau:g}")
    return np.sign(t_end) * dtau * np.arange(steps + 1)


def _pulled_back_source(free: FreePropagator, V: np.ndarray, psi: np.ndarray, taus: np.ndarray):
    """Sine coefficients of U0(-tau) (0, V psi(tau)) for columns psi(tau)."""
    T = free.grid.sine_transform
    b = T(V[:, None] * psi)
    return free.coefficients(np.zeros_like(b), b, -taus[None, :])


def _cumsimpson(y: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """Cumulative Simpson along the last axis; scipy's version drops imaginary parts."""
    f = lambda v: cumulative_simpson(v, x=taus, axis=-1, initial=0.0)
    return f(y.real) + 1j * f(y.imag) if np.iscomplexobj(y) else f(y)


def _simpson_error(y: np.ndarray, taus: np.ndarray) -> float:
    """Richardson estimate |S_h - S_2h|/15 relative to |S_h| on the longest prefix of 4j intervals."""
    m = 4 * ((taus.size - 1) // 4)
    if m == 0:
        return 0.0
    y, taus = y[..., : m + 1], taus[: m + 1]
    fine = simpson(y, x=taus, axis=-1)
    coarse = simpson(y[..., ::2], x=taus[::2], axis=-1)
    scale = np.linalg.norm(fine)
    return float(np.linalg.norm(fine - coarse) / 15.0 / scale) if scale > 0 else 0.0


def duhamel_residual(gen: KgGenerator, state: KgState, t: float, dtau: float,
                     free: FreePropagator | None = None) -> float:
    """F_0 norm of Psi(t) - U0(t)Psi0 - int_0^t U0(t - tau)(0, V psi(tau)) dtau."""
    free = free or FreePropagator(gen.grid, gen.params)
    g = gen.grid
    n = g.n
    V = -gen.H.Q
    taus = _tau_grid(t, dtau)
    x0 = state.stacked()
    X = gen.evolve_many(x0, taus)
    A, B = _pulled_back_source(free, V, X[:n], taus)
    Ia, Ib = simpson(A, x=taus, axis=1), simpson(B, x=taus, axis=1)
    T = g.sine_transform
    a0, b0 = T(x0[:n]), T(x0[n:])
    ua, ub = free.coefficients(a0 + Ia, b0 + Ib, t)
    pert = gen.evolve_stacked(x0, t)
    resid = pert - np.concatenate([T(ua), T(ub)])
    return float(stacked_energy_norms(g, resid, 0.0)[0])


@dataclass(frozen=True)
class BornDecomposition:
    t: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    psi3: np.ndarray
    norms: dict
    fits: dict
    quadrature_error: float

    def state(self, which: str, i: int, grid: RadialGrid) -> KgState:
        return KgState.from_stacked(grid, getattr(self, which)[:, i])


def born_decompose(gen: KgGenerator, proj: ProjectorSet, state: KgState, t_samples, sigma: float,
                   dtau: float = 0.05, fit_window=None, free: FreePropagator | None = None,
                   quad_tol: float = QUAD_TOL, check: bool = True) -> BornDecomposition:
    """P_c Psi(t) = Psi1 + Psi2 + Psi3 with Psi1 = U0(t)Psi0,
    Psi2 = int_0^t U0(t - tau)(0, V psi1(tau)) dtau and Psi3 by subtraction."""
    if check:
        if not sigma > 2.5:
            raise HypothesisError(f"Born-term decay requires sigma > 5/2 (got sigma = {sigma:g})")
        rep = gen.H.regular_case
        if not rep.is_regular:
            raise NonRegularError("Born decomposition needs the regular case")
    free = free or FreePropagator(gen.grid, gen.params)
    g = gen.grid
    n = g.n
    T = g.sine_transform
    V = -gen.H.Q
    t_samples = np.asarray(t_samples, dtype=float)
    taus = _tau_grid(float(t_samples.max()), dtau)
    idx = np.rint(t_samples / dtau).astype(int)
    if np.any(np.abs(idx * dtau - t_samples) > 1e-9 * max(1.0, t_samples.max())) or np.any(idx < 0):
        raise InvalidConfigError("Born sample times must lie on the tau grid")
    x0 = state.stacked()
    a0, b0 = T(x0[:n]), T(x0[n:])
    ca, cb = free.coefficients(np.repeat(a0[:, None], taus.size, 1), np.repeat(b0[:, None], taus.size, 1),
                               taus[None, :])
    psi1_tau = T(ca)
    A, B = _pulled_back_source(free, V, psi1_tau, taus)
    err = _simpson_error(np.vstack([A, B]), taus)
    if err > quad_tol:
        warnings.warn(f"Simpson error estimate {err:.2e} above {quad_tol:.0e}; reduce dtau", QuadratureWarning)
    CA = _cumsimpson(A, taus)[:, idx]
    CB = _cumsimpson(B, taus)[:, idx]
    del A, B
    p2a, p2b = free.coefficients(CA, CB, t_samples[None, :])
    psi2 = np.concatenate([T(p2a), T(p2b)])
    psi1 = np.concatenate([T(ca[:, idx]), T(cb[:, idx])])
    X = gen.evolve_many(x0, t_samples)
    pc = proj.continuous(X)
    psi3 = pc - psi1 - psi2
    norms = {name: stacked_energy_norms(g, arr, -sigma) for name, arr in
             (("psi1", psi1), ("psi2", psi2), ("psi3", psi3), ("pc", pc))}
    fits = {}
    lo, hi = fit_window if fit_window is not None else (t_samples.min(), t_samples.max())
    sel = (t_samples >= lo) & (t_samples <= hi) & (t_samples > 0)
    for name in ("psi1", "psi2", "psi3"):
        ok = sel.sum() >= 4 and np.all(norms[name][sel] > 0)
        fits[name] = fit_power_law(t_samples, norms[name], fit_window) if ok else None
    return BornDecomposition(t_samples, psi1, psi2, psi3, norms, fits, err)


# ---------------------------------------------------------------- W and N


def _beta_hypothesis(potential: PotentialSpec, k: int, delta: float):
    need = 0.5 + k + delta
    if potential.kind == "algebraic" and not potential.beta > need:
        raise HypothesisError(f"requires beta > 1/2 + k + delta = {need:g} (got beta = {potential.beta:g})")


def w_apply(jet0: OmegaJet, V: np.ndarray, k: int, x, adjoint: bool = False):
    """k-th omega-derivative of Vc R0 Vc: the single block -i V d^k R0 V (lower left)."""
    n = V.size
    x = np.asarray(x, dtype=complex)
    Vc = V[:, None] if x.ndim == 2 else V
    if not adjoint:
        return np.concatenate([np.zeros_like(x[:n]), -1j * Vc * jet0.apply(k, Vc * x[:n])])
    return np.concatenate([1j * Vc * jet0.apply(k, Vc * x[n:], True), np.zeros_like(x[n:])])


def w_operator(grid: RadialGrid, params: ModelParams, potential: PotentialSpec, omega: complex, k: int,
               side: int | None = None) -> LinOp:
    V = potential.values(grid)
    jet = OmegaJet(grid, np.zeros(grid.n), omega, params.m, side)
    return LinOp(grid, lambda x: w_apply(jet, V, k, x), lambda y: w_apply(jet, V, k, y, True), blocks=2)


def w_operator_scan(grid: RadialGrid, params: ModelParams, potential: PotentialSpec, k: int, delta: float,
                    sweep, threads: int | None = None):
    """Fit ||W^(k)(x + i)||_{L(F_-delta, F_delta)} against |omega|; returns (fit, |omega|, norms)."""
    if k not in (0, 1, 2):
        raise InvalidConfigError(f"k must be 0, 1 or 2, got {k}")
    _beta_hypothesis(potential, k, delta)
    omegas = np.asarray(sweep, dtype=float) + 1j
    norms = np.array(pmap(lambda w: operator_norm_weighted(w_operator(grid, params, potential, w, k),
                                                           EnergyWeight(-delta), EnergyWeight(delta)),
                          omegas, threads))
    xs = np.abs(omegas)
    return fit_power_law(xs, norms), xs, norms


class _MSide:
    """Resolvent jets on one limiting side for M = R0 W R."""

    def __init__(self, grid, params, Q, V, omega, side):
        self.free = OmegaJet(grid, np.zeros(grid.n), omega, params.m, side)
        self.pert = OmegaJet(grid, Q, omega, params.m, side)
        self.V = V

    def apply(self, k, x, adjoint=False):
        out = 0.0
        for a in range(k + 1):
            for b in range(k + 1 - a):
                c = k - a - b
                coef = math.factorial(k) // (math.factorial(a) * math.factorial(b) * math.factorial(c))
                if not adjoint:
                    y = kg_block_apply(self.pert, c, x)
                    y = w_apply(self.free, self.V, b, y)
                    y = kg_block_apply(self.free, a, y)
                else:
                    y = kg_block_apply(self.free, a, x, True)
                    y = w_apply(self.free, self.V, b, y, True)
                    y = kg_block_apply(self.pert, c, y, True)
                out = out + coef * y
        return out


def n_operator(grid: RadialGrid, params: ModelParams, H: SchrodingerOp, omega: float, k: int) -> LinOp:
    """k-th derivative of N(omega) = M(omega + i0) - M(omega - i0), M = R0 W R."""
    V = H.potential.values(grid)
    up = _MSide(grid, params, H.Q, V, omega, +1)
    dn = _MSide(grid, params, H.Q, V, omega, -1)
    return LinOp(grid, lambda x: up.apply(k, x) - dn.apply(k, x),
                 lambda y: up.apply(k, y, True) - dn.apply(k, y, True), blocks=2)


def n_operator_scan(grid: RadialGrid, params: ModelParams, H: SchrodingerOp, k: int, sigma: float, regime: str,
                    sweep, threads: int | None = None):
    """threshold: omega = m + delta, fitted against delta; high_energy: omega = x on the band.

    Returns (fit, x values, norms) for the L(F_sigma, F_-sigma) norm.
    """
    if k not in (0, 1, 2):
        raise InvalidConfigError(f"k must be 0, 1 or 2, got {k}")
    sweep = np.asarray(sweep, dtype=float)
    if regime == "threshold":
        need = 1.5 if k == 0 else 2.5
        if not sigma > need:
            raise HypothesisError(f"threshold asymptotics of order {k} require sigma > {need:g} (got {sigma:g})")
        rep = H.regular_case
        if not rep.is_regular:
            raise NonRegularError("threshold asymptotics need the regular case")
        omegas = params.m + sweep
    elif regime == "high_energy":
        if np.any(sweep <= params.m):
            raise InvalidConfigError("high-energy sweep must lie on the band omega > m")
        omegas = sweep
    else:
        raise InvalidConfigError(f"regime must be 'threshold' or 'high_energy', got {regime!r}")
    norms = np.array(pmap(lambda w: operator_norm_weighted(n_operator(grid, params, H, w, k),
                                                           EnergyWeight(sigma), EnergyWeight(-sigma)),
                          omegas, threads))
    return fit_power_law(sweep, norms), sweep, norms


# ---------------------------------------------------------------- scattering


@dataclass(frozen=True)
class ScatteringResult:
    direction: int
    phi: KgState
    t: np.ndarray
    remainder: np.ndarray
    fit: DecayFit
    tail_estimate: float
    tail_slope: float
    source_norms: np.ndarray
    phi_energy: float
    data_energy: float


def cook_scatter(gen: KgGenerator, proj: ProjectorSet, state: KgState, direction: int = 1, T_max: float = 80.0,
                 dtau: float = 0.05, t_samples=None, fit_window=(10.0, 60.0), free: FreePropagator | None = None,
                 check: bool = True) -> ScatteringResult:
    """Scattering data Phi = P_c Psi0 + int_0^{+-T_max} U0(-tau)(0, V psi_c(tau)) dtau and the
    remainder r(t) = P_c Psi(t) - U0(t) Phi in F_0.

    The point part of the data is removed first; it only carries phases.  The
    neglected tail is bounded by C int_T^inf (1 + tau)^(-3/2) dtau where C is
    fitted from the source norm ||V psi_c(tau)|| (which equals its free energy norm).
    """
    if direction not in (1, -1):
        raise InvalidConfigError("direction must be +1 or -1")
    if check and not gen.H.regular_case.is_regular:
        raise NonRegularError("scattering needs the regular case")
    free = free or FreePropagator(gen.grid, gen.params)
    g = gen.grid
    n = g.n
    T = g.sine_transform
    V = -gen.H.Q
    xc = proj.continuous(state.stacked())
    taus = _tau_grid(direction * T_max, dtau)
    X = gen.evolve_many(xc, taus)
    A, B = _pulled_back_source(free, V, X[:n], taus)
    CA = _cumsimpson(A, taus)
    CB = _cumsimpson(B, taus)
    del A, B
    a0, b0 = T(xc[:n]), T(xc[n:])
    phi_a, phi_b = a0 + CA[:, -1], b0 + CB[:, -1]
    src = np.sqrt(4 * np.pi * g.h) * np.linalg.norm(V[:, None] * X[:n], axis=0)
    if t_samples is None:
        t_samples = np.arange(fit_window[0], fit_window[1] + 0.5 * dtau, 1.0)
    t_samples = np.asarray(t_samples, dtype=float)
    idx = np.rint(t_samples / dtau).astype(int)
    # r(t) = U0(t)[Psi_c coefficients pulled back to 0 up to t] - U0(t) Phi = -U0(t) int_t^T
    ra, rb = free.coefficients(CA[:, idx] - CA[:, [-1]], CB[:, idx] - CB[:, [-1]], direction * t_samples[None, :])
    rem = stacked_energy_norms(g, np.concatenate([T(ra), T(rb)]), 0.0)
    fit = fit_power_law(t_samples, rem, fit_window)
    late = np.abs(taus) >= 0.5 * T_max
    tail_fit = fit_power_law(np.abs(taus[late]), src[late])
    C = float(np.max(src[late] * (1.0 + np.abs(taus[late])) ** 1.5))
    tail = 2.0 * C / np.sqrt(1.0 + T_max)
    if tail_fit.slope > -1.35:
        warnings.warn(f"source norm decays like tau^{tail_fit.slope:.2f} at T_max = {T_max:g}; "
                      "tail estimate is not in its decay regime", TailWarning)
    phi = KgState.from_stacked(g, np.concatenate([T(phi_a), T(phi_b)]))
    om = free.frequencies
    phi_energy = float(np.sqrt(np.sum(np.abs(phi_b) ** 2 + (om * np.abs(phi_a)) ** 2)))
    data_energy = float(conserved_energy(gen, xc)[0])
    return ScatteringResult(direction, phi, t_samples, rem, fit, tail, tail_fit.slope, src, phi_energy, data_energy)
