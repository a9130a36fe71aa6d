import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from kgdecay.core.bessel import ASYMPTOTIC_MIN, SERIES_MAX, bessel_hankel, bessel_j, bessel_miller, bessel_series
from kgdecay.core.fitting import fit_power_law
from kgdecay.core.grid import KgState, RadialGrid, gaussian_profile, gaussian_state, make_grid, support_radius
from kgdecay.core.linop import LinOp, norm_upper_bound, operator_norm_weighted, power_norm
from kgdecay.core.norms import EnergyWeight, WeightSpec, energy_norm, weighted_norm
from kgdecay.errors import DomainError, InsufficientDataError, InvalidConfigError


# ---------------------------------------------------------------- grid


def test_grid_spacing_and_nodes():
    g = make_grid(120.0, 2399)
    assert g.h == pytest.approx(0.05)
    assert g.nodes[0] == pytest.approx(0.05) and g.nodes[-1] == pytest.approx(120.0 - 0.05)


@pytest.mark.parametrize("r_max,n", [(0.0, 100), (-1.0, 100), (10.0, 3), (10.0, 10.5)])
def test_grid_rejects_bad_parameters(r_max, n):
    with pytest.raises(InvalidConfigError):
        RadialGrid(r_max, n)


def test_sine_transform_is_orthonormal_involution(small_grid, rng):
    x = rng.standard_normal(small_grid.n)
    T = small_grid.sine_transform
    assert np.allclose(T(T(x)), x, atol=1e-13)
    assert np.linalg.norm(T(x)) == pytest.approx(np.linalg.norm(x), rel=1e-13)


def test_laplacian_eigenvalues_match_dense_matrix():
    g = make_grid(5.0, 49)
    D = (np.diag(np.full(g.n, 2.0)) - np.diag(np.ones(g.n - 1), 1) - np.diag(np.ones(g.n - 1), -1)) / g.h**2
    assert np.allclose(np.linalg.eigvalsh(D), g.laplacian_eigenvalues, rtol=1e-12)


def test_l2_norm_of_gaussian_matches_closed_form():
    # int_R3 exp(-2 r^2/w^2) dx = (pi/2)^(3/2) w^3
    g = make_grid(30.0, 2999)
    w = 2.0
    assert weighted_norm(gaussian_profile(g, w), WeightSpec(0, 0.0)) ** 2 == pytest.approx((np.pi / 2) ** 1.5 * w**3, rel=1e-10)


def test_h1_norm_of_gaussian_matches_closed_form():
    # ||<grad> psi||^2 = ||psi||^2 + ||grad psi||^2, ||grad psi||^2 = (3/w^2) ||psi||^2 for psi = exp(-r^2/w^2)
    g = make_grid(30.0, 2999)
    w = 2.0
    l2 = (np.pi / 2) ** 1.5 * w**3
    got = weighted_norm(gaussian_profile(g, w), WeightSpec(1, 0.0)) ** 2
    assert got == pytest.approx(l2 * (1 + 3 / w**2), rel=1e-3)


def test_weight_inverse_roundtrip(small_grid, rng):
    x = rng.standard_normal(small_grid.n) + 1j * rng.standard_normal(small_grid.n)
    for w in (WeightSpec(1, 2.0), WeightSpec(-1, -1.5), WeightSpec(2, 0.5)):
        assert np.allclose(w.apply_inverse(small_grid, w.apply(small_grid, x)), x, atol=1e-10)
    e = EnergyWeight(3.0)
    X = np.concatenate([x, x[::-1]])
    assert np.allclose(e.apply_inverse(small_grid, e.apply(small_grid, X)), X, atol=1e-10)


def test_weight_adjoint_is_euclidean_adjoint(small_grid, rng):
    x = rng.standard_normal(small_grid.n) + 0j
    y = rng.standard_normal(small_grid.n) + 0j
    w = WeightSpec(1, 1.5)
    assert np.vdot(y, w.apply(small_grid, x)) == pytest.approx(np.vdot(w.apply_adjoint(small_grid, y), x), rel=1e-12)


def test_weight_order_restricted():
    with pytest.raises(InvalidConfigError):
        WeightSpec(3, 0.0)


def test_energy_norm_monotone_in_sigma(small_grid):
    s = gaussian_state(small_grid, 2.0, 3.0, "position")
    vals = [energy_norm(s, sig) for sig in (-3, -1, 0, 1, 3)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_support_radius(small_grid):
    u = np.where(small_grid.nodes < 4.0, 1.0, 0.0)
    assert support_radius(u, small_grid) == pytest.approx(small_grid.nodes[small_grid.nodes < 4.0][-1])


def test_gaussian_state_frequency_needs_omega(small_grid):
    with pytest.raises(InvalidConfigError):
        gaussian_state(small_grid, velocity="frequency")
    s = gaussian_state(small_grid, velocity="frequency", omega=0.5)
    assert np.allclose(s.v.values, -0.5j * s.u.values)


def test_kgstate_arithmetic(small_grid):
    a = gaussian_state(small_grid)
    b = gaussian_state(small_grid, velocity="position")
    c = 2 * a - b
    assert np.allclose(c.stacked(), 2 * a.stacked() - b.stacked())
    assert np.allclose(KgState.from_stacked(small_grid, c.stacked()).stacked(), c.stacked())


# ---------------------------------------------------------------- Bessel


@pytest.mark.parametrize("order", [0, 1])
def test_bessel_against_scipy(order):
    x = np.concatenate([np.linspace(0, 60, 3001), [100.0, 1e3, 1e4]])
    ref = special.j0(x) if order == 0 else special.j1(x)
    assert np.max(np.abs(bessel_j(order, x) - ref)) < 1e-11


@pytest.mark.parametrize("order", [0, 1])
def test_bessel_branches_agree_on_overlaps(order):
    a = np.linspace(8.0, 12.0, 201)
    assert np.max(np.abs(bessel_series(order, a) - bessel_miller(order, a))) < 1e-10
    b = np.linspace(20.0, 30.0, 201)
    assert np.max(np.abs(bessel_miller(order, b) - bessel_hankel(order, b))) < 1e-10
    assert SERIES_MAX < ASYMPTOTIC_MIN


@given(st.floats(1e-3, 200.0))
@settings(max_examples=60, deadline=None)
def test_bessel_derivative_identity(x):
    # J0' = -J1, checked by a centered difference
    h = 1e-5
    d = (bessel_j(0, x + h) - bessel_j(0, x - h)) / (2 * h)
    assert d == pytest.approx(-bessel_j(1, x), abs=1e-7)


def test_bessel_domain():
    with pytest.raises(DomainError):
        bessel_j(2, 1.0)
    with pytest.raises(DomainError):
        bessel_j(0, -1.0)
    assert isinstance(bessel_j(0, 1.0), float)


# ---------------------------------------------------------------- fitting


@given(st.floats(-3.0, 1.0), st.floats(0.1, 10.0))
@settings(max_examples=50, deadline=None)
def test_fit_recovers_exact_power_law(p, c):
    x = np.geomspace(1, 100, 20)
    fit = fit_power_law(x, c * x**p)
    assert fit.slope == pytest.approx(p, abs=1e-10)
    assert np.exp(fit.intercept) == pytest.approx(c, rel=1e-9)
    assert fit.residual < 1e-10


def test_fit_window_and_errors():
    x = np.arange(1.0, 21.0)
    y = np.where(x < 10, x**-1.0, x**-2.0)
    assert fit_power_law(x, y, (10, 20)).slope == pytest.approx(-2.0)
    with pytest.raises(InsufficientDataError):
        fit_power_law(x, y, (10, 12))
    with pytest.raises(DomainError):
        fit_power_law(x, -y)


# ---------------------------------------------------------------- operator norms


def test_power_norm_matches_svd(rng):
    A = rng.standard_normal((40, 40))
    est, _ = power_norm(lambda x: A @ x, lambda y: A.T @ y, 40, tol=1e-12, cap=20000)
    assert est == pytest.approx(np.linalg.norm(A, 2), rel=1e-6)


def test_weighted_operator_norm_of_identity(small_grid):
    # identity from H^0_sigma to H^0_{-sigma}: sup <r>^{-2 sigma} = <r_1>^{-2 sigma}
    I = LinOp(small_grid, lambda x: np.array(x, dtype=complex), lambda y: np.array(y, dtype=complex))
    got = operator_norm_weighted(I, WeightSpec(0, 1.0), WeightSpec(0, -1.0), tol=1e-12, cap=100000)
    assert got == pytest.approx(1.0 / (1 + small_grid.h**2), rel=1e-4)


def test_weighted_operator_norm_block_mismatch(small_grid):
    I = LinOp(small_grid, lambda x: x, lambda y: y)
    with pytest.raises(InvalidConfigError):
        operator_norm_weighted(I, EnergyWeight(1.0), EnergyWeight(-1.0))


def test_norm_upper_bound_dominates_and_is_deterministic(rng):
    A = rng.standard_normal((60, 60)) * 1e-13
    b1 = norm_upper_bound(lambda X: A @ X, 60)
    assert b1 >= np.linalg.norm(A, 2)
    assert b1 == norm_upper_bound(lambda X: A @ X, 60)
