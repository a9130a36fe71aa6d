import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kgdecay.core.grid import RadialGrid, make_grid
from kgdecay.errors import DomainError, InvalidConfigError
from kgdecay.estimates import TestProfile as Profile
from kgdecay.estimates import (GAMMA_32, OscillatoryModel, a1_allowed_l, a1_exponent, a2_sweep, a3_sweep,
                               a4_scan, dilation, gaussian_family, helmholtz, jensen_kato_demo, lavine_profile,
                               lavine_residual, radial_derivative, verify_a1, verify_a2, verify_a3, verify_lavine)


def test_a1_exponents_and_admissible_set():
    assert [a1_exponent(k, l) for k, l in [(0, -1), (0, 0), (0, 1), (0, 2), (1, 0), (2, 0)]] == \
        [-1.0, -0.5, 0.0, 0.5, -1.0, -1.5]
    assert 2 in a1_allowed_l(0) and 2 not in a1_allowed_l(1)
    with pytest.raises(InvalidConfigError):
        verify_a1(make_grid(10.0, 99), 1, 2, 0, 2.0, [10.0, 20.0])


def test_a1_high_energy_slope():
    g = make_grid(20.0, 3999)
    fit, _, _ = verify_a1(g, 0, 0, 0, 1.0, np.geomspace(10, 60, 6))
    assert fit.slope == pytest.approx(-0.5, abs=0.1)


# ---------------------------------------------------------------- reduced calculus


def test_reduced_derivatives_of_polynomial_profile():
    # psi = exp(-r^2): d_r psi = -2 r psi, x.grad psi = -2 r^2 psi, (Delta + z) psi = (4 r^2 - 6 + z) psi
    g = make_grid(8.0, 3999)
    r = g.nodes
    psi = np.exp(-r * r)
    u = r * psi
    sel = r < 5
    assert np.allclose(radial_derivative(g, u)[sel], (r * -2 * r * psi)[sel], atol=1e-5)
    assert np.allclose(dilation(g, u)[sel], (r * -2 * r * r * psi)[sel], atol=1e-5)
    z = 0.7 - 0.2j
    assert np.allclose(helmholtz(g, u, z)[sel], (r * (4 * r * r - 6 + z) * psi)[sel], atol=1e-5)


def test_profiles():
    fam = gaussian_family(4)
    assert [p.width for p in fam] == pytest.approx(list(np.geomspace(1, 3, 4)))
    g = make_grid(10.0, 99)
    p = Profile(1.5, 2.0, 3.0)
    assert np.allclose(p.scaled(2.0).values(g), 2 * p.values(g))
    assert lavine_profile().center == 5.0


def test_sweeps():
    z2 = a2_sweep(4)
    assert len(z2) == 12 and min(abs(z) for z in z2) == pytest.approx(1e-2)
    z3 = a3_sweep(4)
    assert len(z3) == 32 and min(abs(z) for z in z3) == pytest.approx(1.0)


@given(st.floats(0.1, 100.0))
@settings(max_examples=15, deadline=None)
def test_ratio_reports_are_homogeneous(c):
    g = make_grid(30.0, 599)
    fam = gaussian_family(2)
    a = verify_a2(g, fam, 1.0, a2_sweep(3))
    b = verify_a2(g, [p.scaled(c) for p in fam], 1.0, a2_sweep(3))
    assert b.sup_ratio == pytest.approx(a.sup_ratio, rel=1e-12)
    a3 = verify_a3(g, fam, 1, 0.0, a3_sweep(3))
    b3 = verify_a3(g, [p.scaled(c) for p in fam], 1, 0.0, a3_sweep(3))
    assert b3.sup_ratio == pytest.approx(a3.sup_ratio, rel=1e-12)


def test_a2_a3_domains():
    g = make_grid(10.0, 99)
    with pytest.raises(InvalidConfigError, match="sigma > 1/2"):
        verify_a2(g, gaussian_family(1), 0.5, a2_sweep(2))
    with pytest.raises(DomainError):
        verify_a3(g, gaussian_family(1), 0, 0.0, [0.5j])
    with pytest.raises(InvalidConfigError):
        verify_a3(g, gaussian_family(1), 2, 0.0, a3_sweep(2))


def test_a4_scan_matches_direct_evaluation():
    rep = a4_scan(0)
    assert rep.sup_ratio <= 8.0
    xi, mag, ray = rep.argmax["xi"], rep.argmax["magnitude"], rep.argmax["ray"]
    z = mag * np.exp(2j * np.pi * ray / 8)
    assert rep.sup_ratio == pytest.approx(4 * mag / (abs(xi**2 - z) ** 2 + xi**2), rel=1e-12)
    assert rep.sample_count == 40
    assert np.isfinite(a4_scan(1).sup_ratio)
    with pytest.raises(InvalidConfigError):
        a4_scan(2)


# ---------------------------------------------------------------- Lavine


def test_lavine_first_order_convergence():
    res = verify_lavine([lavine_profile()], [-1.0, 2j], refinements=2)
    for seq in res:
        rel = [r.relative for r in seq]
        assert rel[0] < 5e-3
        assert rel[0] / rel[1] > 1.8 and rel[1] / rel[2] > 1.8


@given(st.floats(0.25, 4.0), st.sampled_from([-1.0, -4.0, 2j, -1 + 1j]))
@settings(max_examples=20, deadline=None)
def test_lavine_dilation_symmetry(lam, zeta):
    # (f(lam r), lam^2 zeta) on the grid scaled by 1/lam reproduces the relative L2 residual
    g = RadialGrid(30.0, 599)
    p = lavine_profile()
    ref = lavine_residual(g, p, zeta, sigma=0.0).relative
    got = lavine_residual(RadialGrid(30.0 / lam, 599), Profile(p.width / lam, p.center / lam), lam * lam * zeta,
                          sigma=0.0).relative
    assert got == pytest.approx(ref, rel=1e-8)


def test_lavine_domain():
    with pytest.raises(DomainError):
        lavine_residual(make_grid(10.0, 99), lavine_profile(), 2.0)


# ---------------------------------------------------------------- oscillatory integral


def test_closed_form_model():
    m = OscillatoryModel(0.3)
    assert abs(m.closed_form(0.0)) == pytest.approx(GAMMA_32)
    t = np.array([1.0, 10.0, 100.0])
    assert np.allclose(np.abs(m.closed_form(t)), m.closed_magnitude(t))
    # F' by differences
    w = np.array([0.5, 1.0, 2.0])
    d = (m.F(w + 1e-6) - m.F(w - 1e-6)) / 2e-6
    assert np.allclose(d, m.dF(w), atol=1e-7)


@given(st.floats(-2.0, 2.0))
@settings(max_examples=5, deadline=None)
def test_direct_quadrature_against_closed_form(a):
    res = jensen_kato_demo(OscillatoryModel(a), [1.0, 10.0, 100.0, 1000.0], "direct", (1.0, 1000.0))
    assert res.max_rel_error < 1e-6


def test_zygmund_form_equals_i_t_times_integral():
    t = np.geomspace(1, 1000, 7)
    res = jensen_kato_demo(OscillatoryModel(), t, "zygmund", (10.0, 1000.0))
    assert res.max_rel_error < 1e-8
    assert res.l1_fit.slope == pytest.approx(-0.5, abs=0.1)


def test_jk_domain():
    with pytest.raises(DomainError):
        jensen_kato_demo(OscillatoryModel(), [0.5, 2.0], "direct")
    with pytest.raises(InvalidConfigError):
        jensen_kato_demo(OscillatoryModel(), [1.0, 2.0, 3.0, 4.0], "simpson")
