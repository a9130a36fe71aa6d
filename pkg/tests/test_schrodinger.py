import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from kgdecay.cli.experiments import square_well_oracle
from kgdecay.core.grid import make_grid
from kgdecay.errors import ConditionVError, InvalidConfigError
from kgdecay.schrodinger import (PotentialSpec, assemble_h, coupling_scan, negative_spectrum, regular_case_test,
                                 resolvent_perturbed, scan_perturbed_resolvent_asymptotics, zero_energy_nodes)


def test_square_well_oracle_value():
    # q cot(q a) = -kappa with q^2 + kappa^2 = V0
    z = square_well_oracle(4.0, 1.0)
    assert len(z) == 1
    q, kap = np.sqrt(4.0 + z[0]), np.sqrt(-z[0])
    assert q / np.tan(q) == pytest.approx(-kap, abs=1e-12)
    assert z[0] == pytest.approx(-0.407, abs=1e-3)


@pytest.mark.parametrize("V0", [4.0, 12.0, 30.0])
def test_bound_states_against_transcendental_oracle(V0):
    g = make_grid(40.0, 1999)
    spec = negative_spectrum(assemble_h(PotentialSpec("square_well", V0, 1.0), g), 10.0)
    oracle = square_well_oracle(V0, 1.0)
    assert spec.count == len(oracle) == zero_energy_nodes(PotentialSpec("square_well", V0, 1.0), 40.0)
    assert np.allclose(spec.energies, oracle, atol=0.02)
    assert max(b.residual for b in spec.bound_states) < 1e-8


def test_square_well_cell_average():
    g = make_grid(3.0, 29)  # h = 0.1, node 10 sits on r = a
    v = PotentialSpec("square_well", 4.0, 1.0).values(g)
    assert v[8] == 4.0 and v[9] == pytest.approx(2.0) and v[10] == 0.0


def test_sign_conventions():
    g = make_grid(10.0, 99)
    kg = PotentialSpec("gaussian_well", 3.0, 1.0)
    sch = PotentialSpec("gaussian_well", -3.0, 1.0, convention="schrodinger")
    assert np.allclose(kg.effective(g), sch.effective(g))
    assert np.all(kg.effective(g) <= 0)  # attractive


def test_condition_v_and_config_errors():
    with pytest.raises(ConditionVError, match="beta > 3"):
        PotentialSpec("algebraic", 1.0, 1.0, beta=2.5)
    PotentialSpec("algebraic", 1.0, 1.0, beta=3.5)
    with pytest.raises(InvalidConfigError):
        PotentialSpec("coulomb")
    with pytest.raises(InvalidConfigError):
        PotentialSpec("square_well", 1.0, -1.0)


@given(st.floats(0.1, 2.0))
@settings(max_examples=10, deadline=None)
def test_shallow_wells_are_regular_with_no_bound_state(V0):
    # the first zero-energy resonance of the unit well sits at V0 = pi^2/4
    pot = PotentialSpec("square_well", V0, 1.0)
    g = make_grid(30.0, 599)
    rep = regular_case_test(pot, g)
    assert rep.is_regular
    assert negative_spectrum(assemble_h(pot, g), 1.0).count == 0


def test_coupling_scan_finds_first_resonance():
    g = make_grid(60.0, 1199)
    scan = coupling_scan(PotentialSpec("square_well", 1.0, 1.0), g, np.linspace(1.0, 4.0, 31))
    target = np.pi**2 / 4
    assert min(abs(x - target) for x in scan.resonances_shooting) < 0.02
    assert min(abs(x - target) for x in scan.resonances_operator) < 0.02
    assert scan.disagreements_outside() == []


def test_perturbed_resolvent_inverts_operator(rng):
    g = make_grid(20.0, 199)
    H = assemble_h(PotentialSpec("square_well", 4.0, 1.0), g)
    x = rng.standard_normal(g.n) + 0j
    zeta = -0.2 + 0.3j
    y = resolvent_perturbed(H, zeta).matvec(x)
    r = H.apply(y) - zeta * y
    # only the last row carries the outgoing closure
    assert np.allclose(r[:-1], x[:-1], atol=1e-9)


def test_eigensystem_consistent_with_apply():
    g = make_grid(20.0, 199)
    H = assemble_h(PotentialSpec("gaussian_well", 3.0, 1.5), g)
    w, E = H.eigensystem
    assert np.allclose(H.apply(E[:, :5]), E[:, :5] * w[:5], atol=1e-9)
    assert np.allclose(H.dense() @ E[:, 0], w[0] * E[:, 0], atol=1e-9)


def test_perturbed_threshold_exponent_k1():
    g = make_grid(60.0, 1199)
    H = assemble_h(PotentialSpec("square_well", 4.0, 1.0), g)
    fit, _, _ = scan_perturbed_resolvent_asymptotics(H, "threshold", 1, 0, 0, 2.0, np.geomspace(1e-4, 1e-2, 6))
    assert fit.slope == pytest.approx(-0.5, abs=0.1)
