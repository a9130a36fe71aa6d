"""Radial grid, sampled profiles and Klein-Gordon states.

A radial function psi(|x|) on R^3 is stored through its reduced form
u(r) = r*psi(r) at the interior nodes r_i = i*h, i = 1..n, of (0, r_max),
with u = 0 at both ends.  In this representation -Laplacian becomes -d^2/dr^2
and the L^2(R^3) norm of psi equals sqrt(4*pi*int |u|^2 dr).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.fft import dst

from ..errors import InvalidConfigError

MIN_NODES = 16


@dataclass(frozen=True)
class RadialGrid:
    """Uniform interior grid on (0, r_max) with Dirichlet ends."""

    r_max: float
    n: int

    def __post_init__(self):
        if not np.isfinite(self.r_max) or self.r_max <= 0:
            raise InvalidConfigError(f"r_max must be positive, got {self.r_max}", "grid.r_max")
        if int(self.n) != self.n or self.n < MIN_NODES:
            raise InvalidConfigError(f"n must be an integer >= {MIN_NODES}, got {self.n}", "grid.n")
        object.__setattr__(self, "r_max", float(self.r_max))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return self.r_max / (self.n + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        r = self.h * np.arange(1, self.n + 1)
        r.flags.writeable = False
        return r

    @cached_property
    def laplacian_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of -D2 (Dirichlet), ascending.

        The eigenvectors are the discrete sines, so the orthonormal DST-I is
        the exact eigenbasis transform.
        """
        k = np.arange(1, self.n + 1)
        lam = (4.0 / self.h**2) * np.sin(k * np.pi / (2 * (self.n + 1))) ** 2
        lam.flags.writeable = False
        return lam

    def japanese(self, sigma: float) -> np.ndarray:
        """<r>^sigma = (1 + r^2)^(sigma/2) at the nodes."""
        return (1.0 + self.nodes**2) ** (0.5 * sigma)

    def sine_transform(self, x: np.ndarray) -> np.ndarray:
        """Orthonormal DST-I along axis 0 (symmetric and self-inverse)."""
        return dst(x, type=1, norm="ortho", axis=0)

    def bessel_potential(self, x: np.ndarray, s: float) -> np.ndarray:
        """Apply <grad>^s = (1 - D2)^(s/2) along axis 0."""
        if s == 0:
            return np.array(x, copy=True)
        mult = (1.0 + self.laplacian_eigenvalues) ** (0.5 * s)
        if np.ndim(x) == 2:
            mult = mult[:, None]
        return self.sine_transform(self.sine_transform(x) * mult)

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        """L^2(R^3) pairing <a, b> of reduced profiles (antilinear in a)."""
        return 4 * np.pi * self.h * np.vdot(a, b)

    def l2norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(4 * np.pi * self.h) * np.linalg.norm(x))


def make_grid(r_max: float, n: int) -> RadialGrid:
    return RadialGrid(r_max, n)


@dataclass(frozen=True)
class RadialProfile:
    """Reduced radial samples u_i = r_i*psi(r_i)."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n,):
            raise InvalidConfigError(f"profile length {v.shape} does not match grid of {self.grid.n} nodes")
        if not np.all(np.isfinite(v)):
            raise InvalidConfigError("profile contains non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: RadialGrid, psi) -> "RadialProfile":
        """Sample u = r*psi(r) for a callable psi of r."""
        r = grid.nodes
        return cls(grid, r * psi(r))

    def __add__(self, other):
        _same_grid(self.grid, other.grid)
        return RadialProfile(self.grid, self.values + other.values)

    def __sub__(self, other):
        _same_grid(self.grid, other.grid)
        return RadialProfile(self.grid, self.values - other.values)

    def __mul__(self, c):
        return RadialProfile(self.grid, c * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True)
class KgState:
    """Cauchy datum (psi, psi_t) in reduced form."""

    u: RadialProfile
    v: RadialProfile

    def __post_init__(self):
        _same_grid(self.u.grid, self.v.grid)

    @property
    def grid(self) -> RadialGrid:
        return self.u.grid

    @classmethod
    def from_arrays(cls, grid: RadialGrid, u, v=None) -> "KgState":
        v = np.zeros(grid.n, dtype=complex) if v is None else v
        return cls(RadialProfile(grid, u), RadialProfile(grid, v))

    @classmethod
    def zeros(cls, grid: RadialGrid) -> "KgState":
        return cls.from_arrays(grid, np.zeros(grid.n))

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.u.values, self.v.values])

    @classmethod
    def from_stacked(cls, grid: RadialGrid, x: np.ndarray) -> "KgState":
        return cls.from_arrays(grid, x[: grid.n], x[grid.n :])

    def __add__(self, other):
        return KgState(self.u + other.u, self.v + other.v)

    def __sub__(self, other):
        return KgState(self.u - other.u, self.v - other.v)

    def __mul__(self, c):
        return KgState(c * self.u, c * self.v)

    __rmul__ = __mul__


def _same_grid(a: RadialGrid, b: RadialGrid):
    if a != b:
        raise InvalidConfigError("profiles live on different grids")


def gaussian_profile(grid: RadialGrid, width: float = 2.0, center: float = 0.0) -> RadialProfile:
    """psi(r) = exp(-((r - center)/width)^2), stored as u = r*psi."""
    return RadialProfile.from_function(grid, lambda r: np.exp(-(((r - center) / width) ** 2)))


def gaussian_state(grid: RadialGrid, width: float = 2.0, center: float = 0.0, velocity: str = "zero",
                   omega: float | None = None) -> KgState:
    """Gaussian Cauchy data.

    velocity='zero' gives (g, 0), 'position' gives (0, g) and 'frequency'
    gives (g, -i*omega*g), whose component along an eigenpair of frequency
    -omega vanishes.
    """
    g = gaussian_profile(grid, width, center).values
    if velocity == "zero":
        return KgState.from_arrays(grid, g)
    if velocity == "position":
        return KgState.from_arrays(grid, np.zeros(grid.n), g)
    if velocity == "frequency":
        if omega is None:
            raise InvalidConfigError("velocity='frequency' needs omega")
        return KgState.from_arrays(grid, g, -1j * omega * g)
    raise InvalidConfigError(f"unknown velocity kind {velocity!r}")


def support_radius(profile_values: np.ndarray, grid: RadialGrid, tol: float = 1e-12) -> float:
    """Largest node where |u| exceeds tol times its maximum."""
    a = np.abs(np.asarray(profile_values))
    if a.max() == 0:
        return 0.0
    idx = np.nonzero(a > tol * a.max())[0]
    return float(grid.nodes[idx[-1]])
