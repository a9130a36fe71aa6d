"""The fifteen acceptance criteria at their stated tolerances, on the default rig.

Each test records one PASS/FAIL line (shown in the terminal summary) before asserting.
"""

import time

import numpy as np
import pytest

from kgdecay.cli import experiments as ex
from kgdecay.cli import main
from kgdecay.cli.report import read_manifest

from conftest import ACCEPTANCE_LINES


def run(c):
    start = time.perf_counter()
    reports = {name: ex.run_experiment(cfg) for name, cfg in ex.criterion_runs(c)}
    return reports, time.perf_counter() - start


def record(c, ok, detail, runtime):
    line = f"criterion {c:02d} {'PASS' if ok else 'FAIL'}  {ex.CRITERIA[c]}: {detail} [{runtime:.1f} s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def within(x, target, tol):
    return abs(x - target) <= tol


def test_criterion_01_free_decay():
    reps, rt = run(1)
    slope = reps["free-decay"].fits["decay"].slope
    record(1, within(slope, -1.5, 0.1) and rt < 30, f"slope {slope:.4f} (target -1.5 +- 0.1)", rt)


def test_criterion_02_perturbed_decay():
    reps, rt = run(2)
    r = reps["perturbed-decay"]
    slope = r.fits["decay"].slope
    single = r.results["point_variation_single_frequency"]
    per = max(r.results["per_eigenvalue_variation"])
    energy = r.results["point_energy_variation"]
    ok = within(slope, -1.5, 0.15) and single <= 1e-6 and per <= 1e-6 and energy <= 1e-6 and rt < 120
    record(2, ok, f"slope {slope:.4f}; point part variation single-frequency {single:.1e}, per eigenvalue "
                  f"{per:.1e}, energy {energy:.1e}", rt)


def test_criterion_03_dual_propagator_oracle():
    reps, rt = run(3)
    r = reps["kernel-oracle"].results
    ok = r["relative_error"] <= 1e-3 and 3.4 <= r["refinement_ratio"] <= 4.6 and rt < 60
    record(3, ok, f"error {r['relative_error']:.2e}, refinement ratio {r['refinement_ratio']:.3f}", rt)


def _check(rep, name):
    return next(c.value for c in rep.checks if c.name == name)


def test_criterion_04_projector_algebra():
    reps, rt = run(4)
    r = reps["spectrum"]
    idem, cross = _check(r, "projector_idempotence"), _check(r, "projector_cross_products")
    gen, cont = _check(r, "projector_generator"), _check(r, "projector_contour_vs_residue")
    ok = idem <= 1e-8 and cross <= 1e-8 and gen <= 1e-7 and cont <= 1e-7 and rt < 60
    record(4, ok, f"P^2-P {idem:.1e}, PJPK {cross:.1e}, HP-wP {gen:.1e}, contour-residue {cont:.1e}", rt)


def test_criterion_05_regular_case_detector():
    reps, rt = run(5)
    r = reps["regular-case"].results
    shoot = min(r["resonances_shooting"], key=lambda v: abs(v - 2.467))
    oper = min(r["resonances_operator"], key=lambda v: abs(v - 2.467))
    ok = within(shoot, 2.467, 0.02) and within(oper, 2.467, 0.02) and not r["disagreements_outside"] and rt < 30
    record(5, ok, f"singular coupling {shoot:.4f} (shooting), {oper:.4f} (operator); "
                  f"disagreements elsewhere {len(r['disagreements_outside'])}", rt)


def test_criterion_06_bound_state():
    reps, rt = run(6)
    r = reps["spectrum"]
    z1, oracle = r.results["bound_states"][0], r.results["oracle"][0]
    res = _check(r, "bound_state_residual")
    ok = within(z1, -0.407, 0.02) and within(z1, oracle, 0.02) and res <= 1e-8 and rt < 10
    record(6, ok, f"zeta1 {z1:.5f} vs transcendental root {oracle:.5f}; residual {res:.1e}", rt)


def test_criterion_07_free_resolvent_high_energy():
    reps, rt = run(7)
    parts, ok = [], rt < 120
    for (k, l, s), (name, r) in zip(ex.A1_CASES, reps.items()):
        slope, target = r.fits["resolvent"].slope, -(1 - l + k) / 2
        ok &= within(slope, target, 0.1)
        parts.append(f"(k={k},l={l}) {slope:.3f}/{target:g}")
    record(7, ok, "; ".join(parts), rt)


def test_criterion_08_perturbed_threshold():
    reps, rt = run(8)
    s1, s2 = reps["threshold_k1"].fits["resolvent"].slope, reps["threshold_k2"].fits["resolvent"].slope
    ok = within(s1, -0.5, 0.1) and within(s2, -1.5, 0.1) and rt < 60
    record(8, ok, f"k=1 slope {s1:.4f} (-0.5), k=2 slope {s2:.4f} (-1.5)", rt)


def test_criterion_09_w_decay():
    reps, rt = run(9)
    r = reps["w-scan"]
    slope, blocks = r.fits["w"].slope, _check(r, "w_zero_blocks")
    record(9, within(slope, -2.0, 0.15) and blocks and rt < 60, f"slope {slope:.4f}; off-blocks exactly zero {blocks}", rt)


def test_criterion_10_n_threshold_and_high_energy():
    reps, rt = run(10)
    s = [reps[f"threshold_k{k}"].fits["n"].slope for k in (0, 1, 2)]
    hi = reps["high_energy_k0"].fits["n"].slope
    ok = all(within(x, t, 0.15) for x, t in zip(s, (0.5, -0.5, -1.5))) and within(hi, -2.0, 0.2) and rt < 180
    record(10, ok, f"threshold {s[0]:.3f}/{s[1]:.3f}/{s[2]:.3f}; high energy {hi:.3f}", rt)


def test_criterion_11_scattering():
    reps, rt = run(11)
    r = reps["scatter"]
    slope, tail = r.fits["remainder"].slope, r.results["tail_estimate"]
    ok = slope <= -0.4 and np.isfinite(tail) and rt < 120
    record(11, ok, f"remainder slope {slope:.4f} (<= -0.4); tail estimate {tail:.3g}", rt)


def test_criterion_12_duhamel():
    reps, rt = run(12)
    r = reps["duhamel"].results
    ok = r["residual"] <= 1e-4 and r["ratio"] >= 8 and rt < 60
    record(12, ok, f"residual {r['residual']:.2e}, halving ratio {r['ratio']:.2f}", rt)


def test_criterion_13_jensen_kato():
    reps, rt = run(13)
    r = reps["jk-lemma"]
    err, d, z = r.results["max_error_check_times"], r.fits["direct"].slope, r.fits["zygmund_l1"].slope
    ok = err <= 1e-6 and within(d, -1.5, 0.05) and within(z, -0.5, 0.1) and rt < 30
    record(13, ok, f"error {err:.1e}; slope {d:.4f}; Zygmund slope {z:.4f}", rt)


def test_criterion_14_inequality_battery():
    reps, rt = run(14)
    a4 = reps["a3"].results["a4_sup_l0"]
    stab = [c.value for r in (reps["agmon"], reps["a3"]) for c in r.checks if c.name.endswith("stability")]
    finite = _check(reps["agmon"], "a2_sup_finite")
    lav = reps["lavine"].results["worst_refinement_ratio"]
    ok = a4 <= 8 and max(stab) <= 0.1 and finite and lav >= 1.8 and rt < 120
    record(14, ok, f"pointwise-bound sup {a4:.4f}; worst sweep-doubling change {max(stab):.3f}; Lavine halving ratio {lav:.2f}", rt)


def test_criterion_15_determinism(tmp_path):
    start = time.perf_counter()
    from pathlib import Path
    cfg = Path(__file__).resolve().parents[1] / "configs" / "suite.yaml"
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["suite", "--config", str(cfg), "--out", str(out)]) == 0
        outs.append(out)
    m1, m2 = read_manifest(outs[0]), read_manifest(outs[1])
    same = m1 == m2 and all((outs[0] / p).read_bytes() == (outs[1] / p).read_bytes() for p in m1)
    same &= (outs[0] / "manifest.json").read_bytes() == (outs[1] / "manifest.json").read_bytes()
    csv_json = sum(p.endswith((".csv", ".json")) for p in m1)
    record(15, bool(same), f"{csv_json} CSV/JSON artifacts byte-identical across two suite runs",
           time.perf_counter() - start)
