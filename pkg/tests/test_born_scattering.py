import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kgdecay.born_scattering import (CouplingOp, _cumsimpson, _tau_grid, apply_coupling, born_decompose,
                                     cook_scatter, duhamel_residual, n_operator, n_operator_scan, w_operator,
                                     w_operator_scan)
from kgdecay.core.grid import gaussian_state, make_grid
from kgdecay.errors import HypothesisError, InvalidConfigError, NonRegularError, QuadratureWarning
from kgdecay.free_kg import FreePropagator, ModelParams
from kgdecay.kg_dynamics import KgGenerator, riesz_projectors
from kgdecay.schrodinger import PotentialSpec, assemble_h


def _adjoint_defect(op, n, rng):
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    lhs, rhs = np.vdot(y, op.matvec(x)), np.vdot(op.rmatvec(y), x)
    return abs(lhs - rhs) / abs(lhs)


def test_coupling_operator_structure(small_grid, square_well, rng):
    op = CouplingOp.from_potential(square_well, small_grid)
    n = small_grid.n
    x = rng.standard_normal(2 * n) + 0j
    y = op.apply(x)
    assert not np.any(y[:n])
    assert np.allclose(y[n:], 1j * square_well.values(small_grid) * x[:n])
    assert _adjoint_defect(op.linop(), 2 * n, rng) < 1e-12
    s = apply_coupling(gaussian_state(small_grid), square_well)
    assert not np.any(s.u.values)


def test_tau_grid():
    assert _tau_grid(1.0, 0.25).tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert _tau_grid(-1.0, 0.5).tolist() == [0.0, -0.5, -1.0]
    with pytest.raises(InvalidConfigError):
        _tau_grid(1.0, 0.3)


@given(st.floats(0.1, 5.0))
@settings(max_examples=20, deadline=None)
def test_cumsimpson_keeps_imaginary_part(w):
    taus = np.linspace(0, 2, 81)
    y = np.exp(1j * w * taus)
    exact = (np.exp(1j * w * taus) - 1) / (1j * w)
    assert np.allclose(_cumsimpson(y, taus)[2::2], exact[2::2], atol=1e-6)


@pytest.fixture(scope="module")
def gaussian_system():
    g = make_grid(30.0, 299)
    gen = KgGenerator(assemble_h(PotentialSpec("gaussian_well", 1.5, 1.0), g), ModelParams(1.0))
    return gen, riesz_projectors(gen)


def test_duhamel_residual_second_order(gaussian_system):
    gen, _ = gaussian_system
    s = gaussian_state(gen.grid, 2.0)
    r1 = duhamel_residual(gen, s, 4.0, 0.1)
    r2 = duhamel_residual(gen, s, 4.0, 0.05)
    assert r2 < r1 < 1e-3
    assert r1 / r2 > 8


def test_born_terms(small_system):
    gen, proj = small_system
    s = gaussian_state(gen.grid, 2.0)
    free = FreePropagator(gen.grid, gen.params)
    ts = np.array([2.0, 4.0, 6.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureWarning)
        coarse = born_decompose(gen, proj, s, ts, 3.0, 0.05, free=free)
    fine = born_decompose(gen, proj, s, ts, 3.0, 0.025, free=free)
    # Psi1 is the free flow of the data
    assert np.allclose(coarse.psi1[:, 1], free.evolve(s, 4.0).stacked(), atol=1e-12)
    # the split is exact and Psi2 converges with the step
    assert np.allclose(coarse.psi1 + coarse.psi2 + coarse.psi3,
                       proj.continuous(gen.evolve_many(s.stacked(), ts)), atol=1e-12)
    assert np.linalg.norm(coarse.psi2 - fine.psi2) < 1e-2 * np.linalg.norm(fine.psi2)
    assert coarse.fits["psi1"] is None  # fewer than four samples


def test_born_warns_and_checks(small_system):
    gen, proj = small_system
    s = gaussian_state(gen.grid, 2.0)
    with pytest.warns(QuadratureWarning, match="reduce dtau"):
        born_decompose(gen, proj, s, [4.0], 3.0, 0.4)
    with pytest.raises(HypothesisError, match="sigma > 5/2"):
        born_decompose(gen, proj, s, [4.0], 2.0)
    with pytest.raises(InvalidConfigError):
        born_decompose(gen, proj, s, [4.01], 3.0, 0.05)


def test_w_operator_blocks_and_adjoint(small_grid, params, square_well, rng):
    W = w_operator(small_grid, params, square_well, 3.0 + 1j, 1)
    n = small_grid.n
    x = rng.standard_normal(2 * n) + 0j
    y = W.matvec(x)
    assert not np.any(y[:n])
    x[:n] = 0
    assert not np.any(W.matvec(x))
    assert _adjoint_defect(W, 2 * n, rng) < 1e-10


def test_w_scan_slope_and_beta_condition():
    g = make_grid(20.0, 3999)
    fit, _, _ = w_operator_scan(g, ModelParams(1.0), PotentialSpec("square_well", 4.0, 1.0), 0, 1.0,
                                np.geomspace(10, 100, 6))
    assert fit.slope == pytest.approx(-2.0, abs=0.15)
    with pytest.raises(HypothesisError, match="beta > 1/2 \\+ k \\+ delta"):
        w_operator_scan(g, ModelParams(1.0), PotentialSpec("algebraic", 1.0, 1.0, beta=3.2), 2, 1.0, [10.0, 20.0])


def test_n_operator_vanishes_in_gap(small_grid, params, square_well, rng):
    # off the band both limiting sides coincide, so the jump is zero
    H = assemble_h(square_well, small_grid)
    N = n_operator(small_grid, params, H, 0.3, 0)
    x = rng.standard_normal(2 * small_grid.n) + 0j
    assert np.max(np.abs(N.matvec(x))) == 0.0


def test_n_scan_hypotheses(small_grid, params, square_well):
    H = assemble_h(square_well, small_grid)
    with pytest.raises(HypothesisError, match="sigma > 2.5"):
        n_operator_scan(small_grid, params, H, 1, 2.0, "threshold", [1e-3, 1e-2])
    with pytest.raises(InvalidConfigError, match="band"):
        n_operator_scan(small_grid, params, H, 0, 1.0, "high_energy", [0.5, 2.0])
    res = assemble_h(PotentialSpec("square_well", np.pi**2 / 4, 1.0), make_grid(60.0, 599))
    with pytest.raises(NonRegularError):
        n_operator_scan(make_grid(60.0, 599), params, res, 0, 2.0, "threshold", [1e-3, 1e-2])


def test_cook_scatter_short_horizon():
    g = make_grid(60.0, 1199)
    gen = KgGenerator(assemble_h(PotentialSpec("square_well", 4.0, 1.0), g), ModelParams(1.0))
    proj = riesz_projectors(gen)
    s = gaussian_state(g, 2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = cook_scatter(gen, proj, s, 1, 30.0, 0.05, np.arange(5.0, 21.0), (5.0, 20.0))
    assert res.fit.slope < -0.4
    assert abs(res.phi_energy - res.data_energy) <= res.tail_estimate
    with pytest.raises(InvalidConfigError):
        cook_scatter(gen, proj, s, 0)
