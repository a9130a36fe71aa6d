import hashlib
import json
import warnings

import pytest
import yaml
from hypothesis import given, settings, strategies as st

from kgdecay.cli import main
from kgdecay.cli import experiments as ex
from kgdecay.cli.config import EXPERIMENTS, validate_config
from kgdecay.cli.report import RunReport, check_le, emit_report, read_manifest
from kgdecay.errors import HypothesisError, InvalidConfigError, NumericalFailure, QuadratureWarning


def _run(tmp_path, sub, cfg, *extra):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(cfg))
    out = tmp_path / "out"
    return main([sub, "--config", str(path), "--out", str(out), *extra]), out


# ---------------------------------------------------------------- config schema


@pytest.mark.parametrize("sub", sorted(EXPERIMENTS))
def test_shipped_configs_validate(sub):
    from pathlib import Path
    text = (Path(__file__).resolve().parents[1] / "configs" / f"{sub}.yaml").read_text()
    assert validate_config(text, sub).subcommand == sub


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=12))
@settings(max_examples=40, deadline=None)
def test_unknown_keys_rejected(key):
    from kgdecay.cli.config import AgmonExp
    import dataclasses
    if key in {f.name for f in dataclasses.fields(AgmonExp)}:
        return
    with pytest.raises(InvalidConfigError, match="unknown key"):
        validate_config(yaml.safe_dump({"experiment": {key: 1}}), "agmon")


@pytest.mark.parametrize("text,match", [
    ("colour: red", "unknown section"),
    ("grid: {n: 10.5}", "expected an integer"),
    ("experiment: {sigma: yes}", "expected a number"),
    ("experiment: {fit_window: [80, 10]}", "lo < hi"),
    ("[1, 2]", "mapping"),
    ("grid: {r_max: [}", "malformed YAML"),
])
def test_config_errors(text, match):
    with pytest.raises(InvalidConfigError, match=match):
        validate_config(text, "free-decay")


def test_suite_config_takes_only_experiment_and_output():
    with pytest.raises(InvalidConfigError):
        validate_config("grid: {n: 99}", "suite")
    with pytest.raises(InvalidConfigError, match="out of range"):
        validate_config("experiment: {criteria: [16]}", "suite")


@pytest.mark.parametrize("sub,text,condition", [
    ("free-decay", "experiment: {sigma: 1.4}", "sigma > 3/2"),
    ("perturbed-decay", "experiment: {sigma: 2.5}", "sigma > 5/2"),
    ("resolvent-scan", "experiment: {k: 2, sigma: 2.4}", "sigma > 2.5"),
    ("n-scan", "experiment: {k: 1, sigma: 2.0}", "sigma > 2.5"),
    ("w-scan", "potential: {kind: algebraic, beta: 3.1}\nexperiment: {k: 2, delta: 1.0}", "beta > 1/2 + k + delta"),
    ("spectrum", "potential: {kind: algebraic, beta: 2.0}", "beta > 3"),
    ("agmon", "experiment: {sigma: 0.5}", "sigma > 1/2"),
])
def test_hypothesis_messages_name_the_condition(sub, text, condition):
    with pytest.raises(HypothesisError) as exc:
        validate_config(text, sub)
    assert condition in str(exc.value)


# ---------------------------------------------------------------- exit codes


def test_exit_0_writes_manifest(tmp_path):
    code, out = _run(tmp_path, "agmon", {})
    assert code == 0
    man = read_manifest(out)
    assert set(man) == {"report.json", "a2_samples.csv"}
    for name, digest in man.items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    rep = json.loads((out / "report.json").read_text())
    assert rep["pass"] is True and rep["experiment"] == "agmon"
    assert (out / "timings.txt").exists()


def test_exit_1_on_threshold_fail(tmp_path):
    code, out = _run(tmp_path, "agmon", {"experiment": {"stability_tolerance": -1.0}})
    assert code == 1
    assert json.loads((out / "report.json").read_text())["pass"] is False


def test_exit_2_on_config_and_hypothesis(tmp_path, capsys):
    assert _run(tmp_path, "agmon", {"experiment": {"bogus": 1}})[0] == 2
    assert _run(tmp_path, "free-decay", {"experiment": {"sigma": 1.0}})[0] == 2
    assert "sigma > 3/2" in capsys.readouterr().err
    assert main(["agmon", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert _run(tmp_path, "agmon", {}, "--threads", "0")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-subcommand", "--config", "x"])
    assert exc.value.code == 2


def test_exit_2_on_boundary_contamination(tmp_path, capsys):
    code, _ = _run(tmp_path, "free-decay", {"grid": {"r_max": 40.0, "n": 799}})
    assert code == 2
    assert "r_max" in capsys.readouterr().err


def test_exit_3_on_numerical_failure(tmp_path, monkeypatch):
    def boom(cfg):
        raise NumericalFailure("power iteration did not converge")
    monkeypatch.setitem(ex.RUNNERS, "agmon", boom)
    assert _run(tmp_path, "agmon", {})[0] == 3


def test_strict_turns_warnings_into_exit_3(tmp_path, monkeypatch):
    def warn(cfg):
        warnings.warn("coarse step", QuadratureWarning)
        rep = RunReport("agmon", cfg.as_dict())
        rep.checks.append(check_le("x", 0.0, 1.0))
        return rep
    monkeypatch.setitem(ex.RUNNERS, "agmon", warn)
    assert _run(tmp_path, "agmon", {})[0] == 0
    assert _run(tmp_path, "agmon", {}, "--strict")[0] == 3
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert rep["warnings"] == ["QuadratureWarning: coarse step"]


def test_strict_end_to_end_on_coarse_born_run(tmp_path):
    cfg = {"grid": {"r_max": 60.0, "n": 599},
           "experiment": {"t_min": 4.0, "t_max": 20.0, "t_step": 0.4, "dtau": 0.4, "fit_window": [4.0, 20.0],
                          "halving_time": 4.0}}
    assert _run(tmp_path, "born", cfg, "--strict")[0] == 3


def test_outputs_byte_identical_across_runs(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    c1, o1 = _run(a, "jk-lemma", {})
    c2, o2 = _run(b, "jk-lemma", {})
    assert c1 == c2 == 0
    names = sorted(p.name for p in o1.iterdir() if p.name != "timings.txt")
    assert names == sorted(p.name for p in o2.iterdir() if p.name != "timings.txt")
    for n in names:
        assert (o1 / n).read_bytes() == (o2 / n).read_bytes()


def test_emit_report():
    r1 = RunReport("a", {}, [check_le("x", 1.0, 2.0)])
    r2 = RunReport("b", {}, [check_le("x", 3.0, 2.0)])
    assert emit_report([r1, r2]) == {"overall": "fail", "experiments": [{"experiment": "a", "pass": True},
                                                                        {"experiment": "b", "pass": False}],
                                     "failing": ["b"]}
    assert not RunReport("c", {}).passed
    with pytest.raises(InvalidConfigError):
        emit_report([])


def test_suite_subset_with_determinism_probe(tmp_path):
    code, out = _run(tmp_path, "suite", {"experiment": {"criteria": [13, 15]}})
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["overall"] == "pass"
    assert [e["experiment"] for e in summary["experiments"]] == ["criterion_13", "criterion_15"]
    assert "criterion_13/jk-lemma/report.json" in read_manifest(out)
