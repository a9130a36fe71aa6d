"""High-energy resolvent bounds, Agmon-type inequalities, the Lavine identity and the
Jensen-Kato Fourier lemma.

Radial realization used throughout: a 3D radial function psi is stored as its
reduced profile u = r psi.  Then
    reduced(d_r psi)       = u' - u/r,
    reduced((Delta + z)psi) = u'' + z u,
    reduced(x . grad psi)  = r u' - u,
and for radial psi each Cartesian derivative has ||d_j psi|| = ||d_r psi|| / sqrt(3)
in any radial weight, so sum_j ||d_j psi|| = sqrt(3) ||d_r psi||.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core.fitting import DecayFit, fit_power_law
from .core.grid import RadialGrid
from .core.norms import WeightSpec
from .errors import DomainError, InvalidConfigError, RefinementError
from .parallel import pmap
from .resolvent import ShiftedSolver
from .schrodinger import PotentialSpec, SchrodingerOp, scan_perturbed_resolvent_asymptotics

SQRT3 = math.sqrt(3.0)
GAMMA_32 = math.sqrt(math.pi) / 2.0
PANEL_TOL = 1e-8

# fixed pointwise grid for the Fourier-side bound
A4_XI = np.round(np.arange(0, 10001) * 0.01, 2)
A4_MAGNITUDES = (1.0, 10.0, 100.0, 1000.0, 10000.0)
A4_RAYS = 8


def a1_allowed_l(k: int) -> tuple[int, ...]:
    return (-1, 0, 1, 2) if k == 0 else (-1, 0, 1)


def a1_exponent(k: int, l: int) -> float:
    return -(1 - l + k) / 2


def verify_a1(grid: RadialGrid, k: int, l: int, s: int, sigma: float, sweep, path: str = "shifted",
              threads: int | None = None):
    """Fit ||R0^(k)(zeta)||_{L(H^s_sigma, H^(s+l)_-sigma)} against |zeta|; returns (fit, |zeta|, norms).

    path='shifted' sweeps zeta = (x + i)^2, path='negative' sweeps zeta = -x.
    """
    if k not in (0, 1, 2):
        raise InvalidConfigError(f"k must be 0, 1 or 2, got {k}")
    if l not in a1_allowed_l(k):
        raise InvalidConfigError(f"l = {l} is outside the admissible set {a1_allowed_l(k)} for k = {k}")
    H = SchrodingerOp(grid, PotentialSpec.zero())
    return scan_perturbed_resolvent_asymptotics(H, "high_energy", k, s, l, sigma, sweep, path=path, threads=threads)


# ---------------------------------------------------------------- profiles and radial calculus


@dataclass(frozen=True)
class TestProfile:
    """Radial psi = exp(-((r - center)/width)^2) * cos(freq * r) stored as u = r psi."""

    width: float
    center: float = 0.0
    freq: float = 0.0
    scale: float = 1.0

    def values(self, grid: RadialGrid) -> np.ndarray:
        r = grid.nodes
        return self.scale * r * np.exp(-(((r - self.center) / self.width) ** 2)) * np.cos(self.freq * r)

    def scaled(self, c: float) -> "TestProfile":
        return TestProfile(self.width, self.center, self.freq, self.scale * c)

    def label(self) -> str:
        return f"w={self.width:g},c={self.center:g},f={self.freq:g}"


def gaussian_family(count: int, lo: float = 1.0, hi: float = 3.0) -> list[TestProfile]:
    return [TestProfile(float(w)) for w in np.geomspace(lo, hi, count)]


def _d1(grid: RadialGrid, u):
    """Centered first difference with zero Dirichlet ends."""
    p = np.concatenate([[0.0], u, [0.0]])
    return (p[2:] - p[:-2]) / (2 * grid.h)


def _d2(grid: RadialGrid, u):
    p = np.concatenate([[0.0], u, [0.0]])
    return (p[2:] - 2 * p[1:-1] + p[:-2]) / grid.h**2


def radial_derivative(grid: RadialGrid, u):
    """Reduced form of d_r psi."""
    return _d1(grid, u) - u / grid.nodes


def helmholtz(grid: RadialGrid, u, zeta: complex):
    """Reduced form of (Delta + zeta) psi."""
    return _d2(grid, u) + zeta * u


def dilation(grid: RadialGrid, u):
    """Reduced form of x . grad psi."""
    return grid.nodes * _d1(grid, u) - u


def _wnorm(grid: RadialGrid, u, sigma: float, s: int = 0) -> float:
    return float(np.sqrt(4 * np.pi * grid.h) * np.linalg.norm(WeightSpec(s, sigma).apply(grid, u)))


@dataclass(frozen=True)
class RatioReport:
    sup_ratio: float
    argmax: dict
    sample_count: int
    samples: list = field(default_factory=list, repr=False)

    def stability(self, other: "RatioReport") -> float:
        """Relative change of the sup between two sweeps."""
        return abs(self.sup_ratio - other.sup_ratio) / max(self.sup_ratio, other.sup_ratio)


def _report(samples: list[dict]) -> RatioReport:
    ratios = np.array([s["ratio"] for s in samples])
    if not np.all(np.isfinite(ratios)):
        raise DomainError("non-finite ratio in sweep")
    i = int(np.argmax(ratios))
    arg = {k: v for k, v in samples[i].items() if k != "ratio"}
    return RatioReport(float(ratios[i]), arg, len(samples), samples)


def ray_sweep(magnitudes, angles) -> list[complex]:
    return [complex(r * np.exp(1j * a)) for a in angles for r in magnitudes]


def a2_sweep(count: int = 16, lo: float = 1e-2, hi: float = 1e3) -> list[complex]:
    return ray_sweep(np.geomspace(lo, hi, count), (np.pi / 2, np.pi, 3 * np.pi / 2))


def a3_sweep(count: int = 16, hi: float = 1e3) -> list[complex]:
    return ray_sweep(np.geomspace(1.0, hi, count), 2 * np.pi * np.arange(8) / 8)


def verify_a2(grid: RadialGrid, profiles, sigma: float, zetas, threads: int | None = None) -> RatioReport:
    """sup of ||d_j psi||_{H^0_-sigma} / ||(Delta + zeta) psi||_{H^0_sigma}."""
    if not sigma > 0.5:
        raise InvalidConfigError(f"the derivative bound requires sigma > 1/2 (got {sigma:g})")

    def one(p):
        u = p.values(grid)
        num = _wnorm(grid, radial_derivative(grid, u), -sigma) / SQRT3
        return [{"profile": p.label(), "zeta_re": z.real, "zeta_im": z.imag,
                 "ratio": num / _wnorm(grid, helmholtz(grid, u, z), sigma)} for z in zetas]

    return _report([s for rows in pmap(one, list(profiles), threads) for s in rows])


def verify_a3(grid: RadialGrid, profiles, l: int, delta: float, zetas, threads: int | None = None) -> RatioReport:
    """sup of ||psi||_{H^l_delta} / (|zeta|^{-(1-l)/2} (||(Delta+zeta)psi||_{H^0_delta} + sum_j ||d_j psi||_{H^0_delta}))."""
    if l not in (0, 1):
        raise InvalidConfigError(f"l must be 0 or 1, got {l}")
    zetas = list(zetas)
    if any(abs(z) < 1 for z in zetas):
        raise DomainError("the estimate is stated for |zeta| >= 1")

    def one(p):
        u = p.values(grid)
        num = _wnorm(grid, u, delta, l)
        grad = SQRT3 * _wnorm(grid, radial_derivative(grid, u), delta)
        out = []
        for z in zetas:
            den = abs(z) ** (-(1 - l) / 2) * (_wnorm(grid, helmholtz(grid, u, z), delta) + grad)
            out.append({"profile": p.label(), "zeta_re": z.real, "zeta_im": z.imag, "ratio": num / den})
        return out

    return _report([s for rows in pmap(one, list(profiles), threads) for s in rows])


def a4_scan(l: int) -> RatioReport:
    """sup over the fixed (xi, |zeta|, ray) grid of (1 + |xi|^l)^2 |zeta|^(1-l) / (||xi|^2 - zeta|^2 + |xi|^2)."""
    if l not in (0, 1):
        raise InvalidConfigError(f"l must be 0 or 1, got {l}")
    xi = A4_XI
    samples = []
    for j in range(A4_RAYS):
        for mag in A4_MAGNITUDES:
            z = mag * np.exp(2j * np.pi * j / A4_RAYS)
            val = (1 + xi**l) ** 2 * mag ** (1 - l) / (np.abs(xi**2 - z) ** 2 + xi**2)
            i = int(np.argmax(val))
            samples.append({"ray": j, "magnitude": mag, "xi": float(xi[i]), "ratio": float(val[i])})
    return _report(samples)


# ---------------------------------------------------------------- Lavine identity


@dataclass(frozen=True)
class LavineResidual:
    profile: str
    zeta: complex
    h: float
    residual: float
    lhs_norm: float

    @property
    def relative(self) -> float:
        return self.residual / self.lhs_norm


def lavine_residual(grid: RadialGrid, profile: TestProfile, zeta: complex, sigma: float = -1.0) -> LavineResidual:
    """zeta R0'(zeta) f  vs  -R0 f + 1/2 [x . grad, R0] f with R0' = R0^2, measured in H^0_sigma."""
    if complex(zeta).real >= 0 and abs(complex(zeta).imag) < 1e-14:
        raise DomainError("zeta must lie off [0, inf)")
    S = ShiftedSolver(grid, np.zeros(grid.n), zeta)
    f = profile.values(grid).astype(complex)
    Rf = S.solve(f)
    lhs = zeta * S.solve(Rf)
    rhs = -Rf + 0.5 * (dilation(grid, Rf) - S.solve(dilation(grid, f)))
    return LavineResidual(profile.label(), complex(zeta), grid.h, _wnorm(grid, lhs - rhs, sigma), _wnorm(grid, lhs, sigma))


def verify_lavine(profiles, zetas, r_max: float = 30.0, n: int = 599, refinements: int = 1,
                  sigma: float = -1.0, threads: int | None = None) -> list[list[LavineResidual]]:
    """Residuals per (profile, zeta) on the grid sequence h, h/2, ... (n -> 2n + 1)."""
    grids = [RadialGrid(r_max, (n + 1) * 2**j - 1) for j in range(refinements + 1)]
    pairs = [(p, z) for p in profiles for z in zetas]
    return pmap(lambda pz: [lavine_residual(g, pz[0], pz[1], sigma) for g in grids], pairs, threads)


def lavine_profile() -> TestProfile:
    """Default Lavine profile: supported away from the origin and the far end."""
    return TestProfile(width=1.0, center=5.0)


# ---------------------------------------------------------------- Jensen-Kato lemma


@dataclass(frozen=True)
class OscillatoryModel:
    """F(w) = sqrt(w - a) exp(-(w - a)) on (a, inf), zero below a."""

    a: float = 0.0

    def F(self, w):
        x = np.maximum(np.asarray(w, dtype=float) - self.a, 0.0)
        return np.sqrt(x) * np.exp(-x)

    def dF(self, w):
        x = np.asarray(w, dtype=float) - self.a
        xp = np.where(x > 0, x, 1.0)
        return np.where(x > 0, (0.5 / np.sqrt(xp) - np.sqrt(xp)) * np.exp(-xp), 0.0)

    def closed_form(self, t):
        t = np.asarray(t, dtype=float)
        return GAMMA_32 * np.exp(-1j * t * self.a) * (1 + 1j * t) ** -1.5

    def closed_magnitude(self, t):
        return GAMMA_32 * (1 + np.asarray(t, dtype=float) ** 2) ** -0.75


_W_MAX = 7.0  # exp(-49) is below double precision relative to the integrals


def _gl(f, edges, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return np.sum(w * half * f(mid + half * x))


def _panel_integral(f, edges, what: str):
    fine, coarse = _gl(f, edges, 20), _gl(f, edges, 12)
    scale = max(abs(fine), 1e-300)
    if abs(fine - coarse) / scale > PANEL_TOL:
        raise RefinementError(f"{what}: panel error estimate {abs(fine - coarse) / scale:.2e} above {PANEL_TOL:.0e}")
    return fine


def _phase_edges(t: float, lo: float = 0.0) -> np.ndarray:
    """Panels in w no wider than 0.25 and no longer than half a period of exp(-i t w^2)."""
    base = np.linspace(0.0, _W_MAX, int(_W_MAX / 0.25) + 1)
    k = np.arange(1, int(t * _W_MAX**2 / np.pi) + 1)
    edges = np.union1d(base, np.sqrt(np.pi * k / t))
    edges = edges[edges >= lo]
    return edges if edges[0] == lo else np.concatenate([[lo], edges])


def _direct(model: OscillatoryModel, t: float) -> complex:
    # w = a + v^2: int_0^inf 2 v^2 exp(-v^2) exp(-i t (a + v^2)) dv
    f = lambda v: 2 * v * v * np.exp(-v * v) * np.exp(-1j * t * v * v)
    return np.exp(-1j * t * model.a) * _panel_integral(f, _phase_edges(t), f"direct quadrature at t={t:g}")


def _zygmund(model: OscillatoryModel, t: float) -> tuple[complex, float]:
    """Half-period difference -1/2 int (F'(w + pi/t) - F'(w)) e^{-itw} dw and its L1 norm."""
    c = np.pi / t
    # 2v F'(a + v^2) = (1 - 2v^2) exp(-v^2) is smooth in v
    g0 = lambda v: (1 - 2 * v * v) * np.exp(-v * v)
    edges = _phase_edges(t)
    k0 = _panel_integral(lambda v: g0(v) * np.exp(-1j * t * v * v), edges, "zygmund term")
    # the shifted copy lives on w > a - c; there w = a - c + v^2
    k1 = _panel_integral(lambda v: g0(v) * np.exp(-1j * t * (v * v - c)), edges, "zygmund shifted term")
    J = -0.5 * np.exp(-1j * t * model.a) * (k1 - k0)
    # L1 norm of F'(w + c) - F'(w): the part below a, then the overlap with w = a + v^2
    head_edges = np.union1d(np.linspace(0.0, np.sqrt(c), 9), [min(np.sqrt(0.5), np.sqrt(c))])
    head = _panel_integral(lambda v: np.abs(g0(v)), head_edges, "zygmund L1 head")
    dF = lambda v: np.abs(model.dF(model.a + v * v + c) - model.dF(model.a + v * v)) * 2 * v
    tail_edges = np.union1d(np.geomspace(np.sqrt(c) * 1e-4, np.sqrt(c), 24), np.linspace(np.sqrt(c), _W_MAX, 400))
    tail_edges = np.concatenate([[0.0], tail_edges])
    tail = _gl(dF, tail_edges, 20)  # |.| has kinks, so no panel-error gate here
    return complex(J), float(head + tail)


@dataclass(frozen=True)
class JensenKatoResult:
    method: str
    t: np.ndarray
    values: np.ndarray
    magnitude: np.ndarray
    reference: np.ndarray
    max_rel_error: float
    fit: DecayFit
    l1_norm: np.ndarray | None = None
    l1_fit: DecayFit | None = None


def jensen_kato_demo(model: OscillatoryModel, t_samples, method: str = "direct", fit_window=(10.0, 1000.0),
                     threads: int | None = None) -> JensenKatoResult:
    """direct: I(t) = int_a^inf e^{-itw} F(w) dw against the Gamma-integral closed form.

    zygmund: the half-period difference form of int F' e^{-itw} dw, which equals i t I(t).
    fit is on its magnitude; l1_fit is on the L1 norm of F'(w + pi/t) - F'(w), the
    quantity bounded by O(t^{-1/2}).
    """
    t = np.asarray(t_samples, dtype=float)
    if t.min() < 1 or t.max() > 1000:
        raise DomainError("t samples must lie in [1, 1000]")
    ref = model.closed_form(t)
    if method == "direct":
        vals = np.array(pmap(lambda s: _direct(model, s), list(t), threads))
        err = np.abs(vals - ref) / np.abs(ref)
        return JensenKatoResult(method, t, vals, np.abs(vals), np.abs(ref), float(err.max()),
                                fit_power_law(t, np.abs(vals), fit_window))
    if method == "zygmund":
        out = pmap(lambda s: _zygmund(model, s), list(t), threads)
        vals = np.array([o[0] for o in out])
        l1 = np.array([o[1] for o in out])
        ref = 1j * t * ref
        err = np.abs(vals - ref) / np.abs(ref)
        return JensenKatoResult(method, t, vals, np.abs(vals), np.abs(ref), float(err.max()),
                                fit_power_law(t, np.abs(vals), fit_window), l1, fit_power_law(t, l1, fit_window))
    raise InvalidConfigError(f"method must be 'direct' or 'zygmund', got {method!r}")
