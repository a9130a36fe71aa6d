"""Perturbed Klein-Gordon evolution, Riesz projectors and weighted decay.

The generator acts on stacked (psi, pi) as (i pi, -i (H + m^2) psi) with the
Dirichlet box operator H.  An eigenvalue zeta_j < 0 of H gives the pair of
Klein-Gordon eigenvalues omega = +-sqrt(m^2 + zeta_j) with eigenvector
(psi_j, -i omega psi_j).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core.fitting import DecayFit, fit_power_law
from .core.grid import KgState, RadialGrid, support_radius
from .core.linop import LinOp, operator_norm_weighted
from .core.norms import EnergyWeight, WeightSpec
from .errors import (BoundaryContaminationError, ContourError, HypothesisError, InstabilityError, NonRegularError)
from .free_kg import ModelParams
from .parallel import pmap
from .resolvent import OmegaJet, kg_block_apply
from .schrodinger import SchrodingerOp

CONTOUR_NODES = 64


def _rmat(E: np.ndarray, x: np.ndarray) -> np.ndarray:
    """E @ x for real E and possibly complex x without promoting E."""
    if not np.iscomplexobj(x):
        return E @ x
    x = np.ascontiguousarray(x, dtype=complex)
    # interleaved (re, im) view keeps the product a single real BLAS call
    flat = x.view(np.float64).reshape(x.shape[0], -1)
    return np.ascontiguousarray(E @ flat).view(complex).reshape(x.shape)


@dataclass(frozen=True)
class PointEigenvalue:
    omega: float
    mode: int
    zeta: float


class KgGenerator:
    """Generator of the perturbed flow with its spectral data."""

    def __init__(self, H: SchrodingerOp, params: ModelParams):
        self.H, self.params, self.grid = H, params, H.grid
        w, E = H.eigensystem
        m2 = params.m**2
        bad = np.nonzero(w + m2 <= 0)[0]
        if bad.size:
            j = int(bad[0])
            raise InstabilityError(
                f"mode {j} has zeta = {w[j]:.6g} <= -m^2 = {-m2:.6g}; the Klein-Gordon flow has "
                "non-real frequencies and is unstable")
        self.frequencies = np.sqrt(w + m2)
        self.tol_edge = 1e-10 * H.norm
        points = []
        for j in np.nonzero(w < -self.tol_edge)[0]:
            om = float(np.sqrt(m2 + w[j]))
            points += [PointEigenvalue(om, int(j), float(w[j])), PointEigenvalue(-om, int(j), float(w[j]))]
        self.point_spectrum = tuple(sorted(points, key=lambda p: p.omega))

    @property
    def eigvecs(self) -> np.ndarray:
        return self.H.eigensystem[1]

    def coefficients(self, u, v):
        E = self.eigvecs
        return _rmat(E.T, u), _rmat(E.T, v)

    def evolve_coefficients(self, a, b, t, adjoint=False):
        om = self.frequencies
        if np.ndim(a) == 2:
            om = om[:, None]
        c, s = np.cos(t * om), np.sin(t * om)
        if adjoint:
            return c * a - om * s * b, (s / om) * a + c * b
        return c * a + (s / om) * b, -om * s * a + c * b

    def evolve_arrays(self, u, v, t, adjoint=False):
        a, b = self.coefficients(u, v)
        a, b = self.evolve_coefficients(a, b, t, adjoint)
        E = self.eigvecs
        return _rmat(E, a), _rmat(E, b)

    def evolve_stacked(self, x, t, adjoint=False):
        n = self.grid.n
        u, v = self.evolve_arrays(x[:n], x[n:], t, adjoint)
        return np.concatenate([u, v])

    def evolve_many(self, x, times) -> np.ndarray:
        """Columns exp(-i t H) x for each t, with one basis change per direction."""
        n = self.grid.n
        a, b = self.coefficients(x[:n], x[n:])
        times = np.asarray(times, dtype=float)
        A, B = self.evolve_coefficients(np.repeat(a[:, None], times.size, 1),
                                        np.repeat(b[:, None], times.size, 1), times[None, :])
        E = self.eigvecs
        return np.concatenate([_rmat(E, A), _rmat(E, B)])

    def apply(self, x):
        """Generator on stacked vectors (Dirichlet ends)."""
        n = self.grid.n
        psi, pi = x[:n], x[n:]
        return np.concatenate([1j * pi, -1j * (self.H.apply(psi) + self.params.m**2 * psi)])

    def discrete_energy(self, u, v) -> float:
        a, b = self.coefficients(u, v)
        return float(np.sum(np.abs(b) ** 2 + self.frequencies**2 * np.abs(a) ** 2))


def evolve_perturbed(gen: KgGenerator, state: KgState, t: float) -> KgState:
    u, v = gen.evolve_arrays(state.u.values, state.v.values, t)
    return KgState.from_arrays(gen.grid, u, v)


class RieszProjector:
    """Contour-quadrature projector onto one eigenvalue of the generator."""

    def __init__(self, gen: KgGenerator, point: PointEigenvalue, delta: float, nodes: int = CONTOUR_NODES):
        self.gen, self.point, self.delta, self.nodes = gen, point, delta, nodes
        theta = 2 * np.pi * np.arange(nodes) / nodes
        self._phase = np.exp(1j * theta)
        self._jets = [OmegaJet(gen.grid, gen.H.Q, point.omega + delta * p, gen.params.m, closure="dirichlet")
                      for p in self._phase]

    @property
    def omega(self) -> float:
        return self.point.omega

    def apply(self, x, adjoint=False):
        # -(1/2 pi i) * sum R(w_k) x * i delta e^{i theta_k} * (2 pi / N)
        acc = 0.0
        for p, jet in zip(self._phase, self._jets):
            c = np.conj(p) if adjoint else p
            acc = acc + c * kg_block_apply(jet, 0, x, adjoint)
        return -(self.delta / self.nodes) * acc

    def residue(self, x, adjoint=False):
        """Rank-one formula 1/2 [psi; -i w psi][psi^T, (i/w) psi^T]."""
        n = self.gen.grid.n
        psi = self.gen.eigvecs[:, self.point.mode]
        w = self.omega
        right = np.concatenate([psi, -1j * w * psi])
        left = np.concatenate([psi, (1j / w) * psi])
        if np.ndim(x) == 2:
            if adjoint:
                return 0.5 * np.outer(left.conj(), right.conj() @ x)
            return 0.5 * np.outer(right, left @ x)
        if adjoint:
            return 0.5 * left.conj() * np.vdot(right, x)
        return 0.5 * right * (left @ x)

    def as_linop(self, residue=False) -> LinOp:
        f = self.residue if residue else self.apply
        return LinOp(self.gen.grid, lambda x: f(x), lambda y: f(y, True), blocks=2)


class ProjectorSet:
    """Riesz projectors P_J, P_d = sum P_J, P_c = 1 - P_d."""

    def __init__(self, projectors: list[RieszProjector], grid: RadialGrid):
        self.projectors, self.grid = tuple(projectors), grid

    def point(self, x, adjoint=False):
        out = np.zeros_like(np.asarray(x, dtype=complex))
        for P in self.projectors:
            out = out + P.apply(x, adjoint)
        return out

    def continuous(self, x, adjoint=False):
        return np.asarray(x, dtype=complex) - self.point(x, adjoint)

    def continuous_linop(self) -> LinOp:
        return LinOp(self.grid, lambda x: self.continuous(x), lambda y: self.continuous(y, True), blocks=2)


def riesz_projectors(gen: KgGenerator, nodes: int = CONTOUR_NODES, min_radius: float = 1e-8) -> ProjectorSet:
    """Projectors on circles of radius half the gap to the nearest other eigenvalue or +-m."""
    m = gen.params.m
    omegas = [p.omega for p in gen.point_spectrum]
    out = []
    for p in gen.point_spectrum:
        others = [w for w in omegas if w != p.omega] + [m, -m]
        delta = 0.5 * min(abs(p.omega - w) for w in others)
        if delta < min_radius:
            raise ContourError(f"contour radius {delta:.2e} around omega = {p.omega:.6g} collapsed")
        out.append(RieszProjector(gen, p, delta, nodes))
    return ProjectorSet(out, gen.grid)


def project_continuous(state: KgState, proj: ProjectorSet) -> KgState:
    return KgState.from_stacked(state.grid, proj.continuous(state.stacked()))


def stacked_energy_norms(grid: RadialGrid, X: np.ndarray, sigma: float) -> np.ndarray:
    """F_sigma norm (sum of component norms) of each column of a stacked array."""
    n = grid.n
    X = X if X.ndim == 2 else X[:, None]
    a = WeightSpec(1, sigma).apply(grid, X[:n])
    b = WeightSpec(0, sigma).apply(grid, X[n:])
    c = np.sqrt(4 * np.pi * grid.h)
    return c * (np.linalg.norm(a, axis=0) + np.linalg.norm(b, axis=0))


def conserved_energy(gen: KgGenerator, X: np.ndarray) -> np.ndarray:
    """sqrt(||pi||^2 + <psi, (H + m^2) psi>) per column (discrete, Euclidean)."""
    n = gen.grid.n
    X = X if X.ndim == 2 else X[:, None]
    a, b = gen.coefficients(X[:n], X[n:])
    om = gen.frequencies[:, None]
    return np.sqrt(np.sum(np.abs(b) ** 2 + (om * np.abs(a)) ** 2, axis=0))


def required_sigma(gen: KgGenerator) -> float:
    return 1.5 if gen.H.potential.kind == "zero" or gen.H.potential.V0 == 0 else 2.5


def check_decay_hypotheses(gen: KgGenerator, sigma: float, state: KgState | None = None, t_max: float | None = None):
    need = required_sigma(gen)
    if not sigma > need:
        raise HypothesisError(f"weighted decay of the continuous part requires sigma > {need:g} (got sigma = {sigma:g})")
    if need > 1.5:
        rep = gen.H.regular_case
        if not rep.is_regular:
            raise NonRegularError(
                f"decay needs the regular case (no zero resonance or eigenvalue); shooting slope "
                f"{rep.shooting_slope:.3e}, smin {rep.smin:.3e}")
    if state is not None and t_max is not None:
        R = support_radius(state.stacked()[: gen.grid.n], gen.grid, 1e-10)
        R = max(R, support_radius(state.stacked()[gen.grid.n:], gen.grid, 1e-10))
        if R + t_max >= gen.grid.r_max:
            raise BoundaryContaminationError(
                f"data radius {R:.3g} plus t_max = {t_max:g} reaches r_max = {gen.grid.r_max:g}")


@dataclass(frozen=True)
class DecaySeries:
    t: np.ndarray
    norm_Fc: np.ndarray
    norm_Fd: np.ndarray
    per_eigenvalue: np.ndarray
    point_energy: np.ndarray
    fit: DecayFit

    def relative_variation(self, values) -> float:
        v = np.asarray(values)
        if v.max() == 0:
            return 0.0
        return float((v.max() - v.min()) / v.max())


def measure_perturbed_decay(gen: KgGenerator, proj: ProjectorSet, state: KgState, sigma: float, t_samples,
                            fit_window=None, check=True) -> DecaySeries:
    """||P_c Psi(t)||_{F_-sigma} with its fit, plus the point part in F_0.

    P_J is applied to the evolved state at each t.  per_eigenvalue[J] holds
    ||P_J Psi(t)||_{F_0}; point_energy holds the conserved energy of P_d Psi(t).
    """
    t_samples = np.asarray(t_samples, dtype=float)
    if check:
        check_decay_hypotheses(gen, sigma, state, float(t_samples.max()))
    g = gen.grid
    x0 = state.stacked()
    X = gen.evolve_many(x0, t_samples)
    parts = [P.apply(X) for P in proj.projectors]
    Pd = sum(parts) if parts else np.zeros_like(X)
    Pc = X - Pd
    norm_c = stacked_energy_norms(g, Pc, -sigma)
    norm_d = stacked_energy_norms(g, Pd, 0.0)
    per = np.array([stacked_energy_norms(g, p, 0.0) for p in parts]) if parts else np.zeros((0, t_samples.size))
    energy = conserved_energy(gen, Pd)
    fit = fit_power_law(t_samples, norm_c, fit_window)
    return DecaySeries(t_samples, norm_c, norm_d, per, energy, fit)


def evolution_continuous_linop(gen: KgGenerator, proj: ProjectorSet, t: float) -> LinOp:
    """exp(-itH) P_c on stacked vectors, with its Euclidean adjoint."""
    return LinOp(gen.grid,
                 lambda x: gen.evolve_stacked(proj.continuous(x), t),
                 lambda y: proj.continuous(gen.evolve_stacked(y, t, adjoint=True), adjoint=True),
                 blocks=2)


def operator_decay_scan(gen: KgGenerator, proj: ProjectorSet, sigma: float, t_samples, fit_window=None,
                        threads: int | None = None, check=True, method: str = "lanczos"):
    """||exp(-itH) P_c||_{L(F_sigma, F_-sigma)} per t; returns (fit, t, norms).

    The top singular values of this operator cluster, so Lanczos is the default;
    method='power' runs the plain power iteration.
    """
    t_samples = np.asarray(t_samples, dtype=float)
    if check:
        check_decay_hypotheses(gen, sigma)
    norms = np.array(pmap(lambda t: operator_norm_weighted(evolution_continuous_linop(gen, proj, t),
                                                           EnergyWeight(sigma), EnergyWeight(-sigma), method=method),
                          t_samples, threads))
    pos = t_samples > 0
    fit = fit_power_law(t_samples[pos], norms[pos], fit_window) if pos.sum() >= 4 else None
    return fit, t_samples, norms
