"""Log-log power-law regression."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from ..errors import DomainError, InsufficientDataError

MIN_POINTS = 4


@dataclass(frozen=True)
class DecayFit:
    """Least-squares line log y = intercept + slope*log x over a window."""

    slope: float
    intercept: float
    window: tuple[float, float]
    r_squared: float
    n_points: int
    residual: float

    def as_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def fit_power_law(x, y, window=None) -> DecayFit:
    """Fit y ~ C*x^slope using the samples with x inside ``window``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise InsufficientDataError("x and y differ in length")
    if window is None:
        window = (float(x.min()), float(x.max())) if x.size else (0.0, 0.0)
    lo, hi = float(window[0]), float(window[1])
    if lo > hi:
        raise InsufficientDataError(f"empty fit window {window}")
    sel = (x >= lo) & (x <= hi) & np.isfinite(y)
    if sel.sum() < MIN_POINTS:
        raise InsufficientDataError(f"need at least {MIN_POINTS} samples in window {window}, got {int(sel.sum())}")
    xs, ys = x[sel], y[sel]
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise DomainError("power-law fit needs positive samples inside the window")
    lx, ly = np.log(xs), np.log(ys)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return DecayFit(float(slope), float(intercept), (lo, hi), r2, int(sel.sum()), float(np.sqrt(ss_res / sel.sum())))
