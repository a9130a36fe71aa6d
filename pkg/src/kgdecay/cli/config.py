"""YAML experiment configs: dataclass schemas, strict key checking and eager hypothesis checks."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field

import yaml

from ..errors import HypothesisError, InvalidConfigError
from ..schrodinger import PotentialSpec


@dataclass(frozen=True)
class ModelCfg:
    m: float = 1.0


@dataclass(frozen=True)
class GridCfg:
    r_max: float = 120.0
    n: int = 2399


@dataclass(frozen=True)
class PotentialCfg:
    kind: str = "square_well"
    V0: float = 4.0
    a: float = 1.0
    beta: typing.Optional[float] = None
    convention: str = "kg"

    def spec(self) -> PotentialSpec:
        return PotentialSpec(self.kind, self.V0, self.a, self.beta, self.convention)


@dataclass(frozen=True)
class DataCfg:
    width: float = 2.0
    center: float = 0.0
    velocity: str = "zero"


@dataclass(frozen=True)
class OutputCfg:
    dir: str = "out"


# ---------------------------------------------------------------- experiment blocks


@dataclass(frozen=True)
class FreeDecayExp:
    sigma: float = 2.0
    t_min: float = 1.0
    t_max: float = 80.0
    t_step: float = 0.5
    fit_window: typing.Tuple[float, float] = (10.0, 80.0)
    expected: float = -1.5
    tolerance: float = 0.1


@dataclass(frozen=True)
class KernelOracleExp:
    t: float = 10.0
    tolerance: float = 1e-3
    ratio_range: typing.Tuple[float, float] = (3.4, 4.6)


@dataclass(frozen=True)
class SpectrumExp:
    zeta_tolerance: float = 0.02
    residual_tolerance: float = 1e-8
    projector_tolerance: float = 1e-8
    generator_tolerance: float = 1e-7
    contour_tolerance: float = 1e-7
    contour_nodes: int = 64


@dataclass(frozen=True)
class RegularCaseExp:
    scan_min: float = 0.5
    scan_max: float = 2.0
    scan_count: int = 50
    expected_coupling: float = 2.467
    tolerance: float = 0.02
    tol_b: float = 1e-3
    tol_s: float = 1e-3


@dataclass(frozen=True)
class ResolventScanExp:
    operator: str = "perturbed"
    regime: str = "threshold"
    k: int = 1
    l: int = 0
    s: int = 0
    sigma: float = 2.0
    sweep_min: float = 1e-4
    sweep_max: float = 1e-2
    sweep_count: int = 8
    path: str = "shifted"
    side: typing.Optional[int] = None
    approach: str = "gap"
    expected: typing.Optional[float] = None
    tolerance: float = 0.1


@dataclass(frozen=True)
class PerturbedDecayExp:
    sigma: float = 3.0
    t_min: float = 10.0
    t_max: float = 80.0
    t_step: float = 0.25
    fit_window: typing.Tuple[float, float] = (10.0, 80.0)
    expected: float = -1.5
    tolerance: float = 0.15
    point_tolerance: float = 1e-6
    contour_nodes: int = 64


@dataclass(frozen=True)
class OperatorDecayExp:
    sigma: float = 3.0
    times: typing.List[float] = field(default_factory=lambda: [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0])
    fit_window: typing.Tuple[float, float] = (10.0, 60.0)
    expected: float = -1.5
    tolerance: float = 0.2
    method: str = "lanczos"


@dataclass(frozen=True)
class BornExp:
    sigma: float = 3.0
    t_min: float = 10.0
    t_max: float = 80.0
    t_step: float = 1.0
    dtau: float = 0.05
    fit_window: typing.Tuple[float, float] = (10.0, 80.0)
    max_slope: float = -1.35
    halving_time: float = 10.0


@dataclass(frozen=True)
class WScanExp:
    k: int = 0
    delta: float = 1.0
    sweep_min: float = 10.0
    sweep_max: float = 100.0
    sweep_count: int = 8
    expected: float = -2.0
    tolerance: float = 0.15


@dataclass(frozen=True)
class NScanExp:
    k: int = 0
    sigma: float = 2.0
    regime: str = "threshold"
    sweep_min: float = 1e-4
    sweep_max: float = 1e-2
    sweep_count: int = 8
    expected: typing.Optional[float] = None
    tolerance: typing.Optional[float] = None


@dataclass(frozen=True)
class ScatterExp:
    direction: int = 1
    T_max: float = 80.0
    dtau: float = 0.05
    fit_window: typing.Tuple[float, float] = (10.0, 60.0)
    t_step: float = 1.0
    max_slope: float = -0.4


@dataclass(frozen=True)
class DuhamelExp:
    t: float = 10.0
    dtau: float = 0.05
    tolerance: float = 1e-4
    min_ratio: float = 8.0


@dataclass(frozen=True)
class AgmonExp:
    sigma: float = 1.0
    profiles: int = 4
    sweep_count: int = 16
    zeta_min: float = 1e-2
    zeta_max: float = 1e3
    stability_tolerance: float = 0.1


@dataclass(frozen=True)
class A3Exp:
    l: typing.List[int] = field(default_factory=lambda: [0, 1])
    delta: typing.List[float] = field(default_factory=lambda: [0.0, -1.0])
    profiles: int = 4
    sweep_count: int = 16
    zeta_max: float = 1e3
    stability_tolerance: float = 0.1
    a4_bound: float = 8.0


@dataclass(frozen=True)
class LavineExp:
    zetas: typing.List[typing.List[float]] = field(default_factory=lambda: [[-1.0, 0.0], [-4.0, 0.0], [0.0, 2.0]])
    refinements: int = 1
    residual_tolerance: float = 5e-3
    min_ratio: float = 1.8
    scale_factors: typing.List[float] = field(default_factory=lambda: [2.0, 0.5])
    scaling_tolerance: float = 1e-8


@dataclass(frozen=True)
class JkLemmaExp:
    a: float = 0.0
    t_count: int = 13
    check_times: typing.List[float] = field(default_factory=lambda: [1.0, 10.0, 100.0])
    fit_window: typing.Tuple[float, float] = (10.0, 1000.0)
    error_tolerance: float = 1e-6
    expected: float = -1.5
    tolerance: float = 0.05
    zygmund_expected: float = -0.5
    zygmund_tolerance: float = 0.1


@dataclass(frozen=True)
class SuiteExp:
    criteria: typing.List[int] = field(default_factory=lambda: list(range(1, 16)))


EXPERIMENTS = {
    "free-decay": FreeDecayExp,
    "kernel-oracle": KernelOracleExp,
    "spectrum": SpectrumExp,
    "regular-case": RegularCaseExp,
    "resolvent-scan": ResolventScanExp,
    "perturbed-decay": PerturbedDecayExp,
    "operator-decay": OperatorDecayExp,
    "born": BornExp,
    "w-scan": WScanExp,
    "n-scan": NScanExp,
    "scatter": ScatterExp,
    "duhamel": DuhamelExp,
    "agmon": AgmonExp,
    "a3": A3Exp,
    "lavine": LavineExp,
    "jk-lemma": JkLemmaExp,
    "suite": SuiteExp,
}

# grids tuned per experiment family (see README)
THRESHOLD_GRID = GridCfg(60.0, 1199)
HIGH_ENERGY_GRID = GridCfg(20.0, 3999)
PROFILE_GRID = GridCfg(30.0, 1199)
LAVINE_GRID = GridCfg(30.0, 599)


def default_grid(subcommand: str, exp) -> GridCfg:
    if subcommand in ("resolvent-scan", "n-scan"):
        return THRESHOLD_GRID if exp.regime == "threshold" else HIGH_ENERGY_GRID
    if subcommand == "w-scan":
        return HIGH_ENERGY_GRID
    if subcommand == "regular-case":
        return THRESHOLD_GRID
    if subcommand in ("agmon", "a3"):
        return PROFILE_GRID
    if subcommand == "lavine":
        return LAVINE_GRID
    return GridCfg()


def default_potential(subcommand: str) -> PotentialCfg:
    if subcommand == "duhamel":
        return PotentialCfg(kind="gaussian_well")
    return PotentialCfg()


@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    model: ModelCfg
    grid: GridCfg
    potential: PotentialCfg
    data: DataCfg
    experiment: typing.Any
    output: OutputCfg

    def as_dict(self) -> dict:
        out = {"subcommand": self.subcommand}
        for name in ("model", "grid", "potential", "data", "experiment"):
            out[name] = dataclasses.asdict(getattr(self, name))
        return out


# ---------------------------------------------------------------- schema machinery


def _coerce(value, tp, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], path)
    if tp is bool:
        if not isinstance(value, bool):
            raise InvalidConfigError(f"expected a boolean, got {value!r}", path)
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise InvalidConfigError(f"expected an integer, got {value!r}", path)
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidConfigError(f"expected a number, got {value!r}", path)
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise InvalidConfigError(f"expected a string, got {value!r}", path)
        return value
    if origin in (list, tuple):
        if not isinstance(value, (list, tuple)):
            raise InvalidConfigError(f"expected a list, got {value!r}", path)
        if origin is tuple and args and args[-1] is not Ellipsis:
            if len(value) != len(args):
                raise InvalidConfigError(f"expected {len(args)} entries, got {len(value)}", path)
            return tuple(_coerce(v, a, f"{path}[{i}]") for i, (v, a) in enumerate(zip(value, args)))
        return [_coerce(v, args[0], f"{path}[{i}]") for i, v in enumerate(value)]
    raise InvalidConfigError(f"unsupported schema type {tp}", path)


def build(cls, raw, path: str, base=None):
    """Instantiate dataclass ``cls`` from a mapping, rejecting unknown keys."""
    base = base if base is not None else cls()
    if raw is None:
        return base
    if not isinstance(raw, dict):
        raise InvalidConfigError(f"expected a mapping, got {type(raw).__name__}", path)
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in names:
            raise InvalidConfigError(f"unknown key {key!r} (allowed: {', '.join(sorted(names))})", f"{path}.{key}")
    values = {k: _coerce(v, hints[k], f"{path}.{k}") for k, v in raw.items()}
    return dataclasses.replace(base, **values)


SECTIONS = ("model", "grid", "potential", "data", "experiment", "output")
SUITE_SECTIONS = ("experiment", "output")


def validate_config(text: str, subcommand: str) -> ExperimentConfig:
    """Parse YAML text for ``subcommand``; apply defaults and run eager checks."""
    if subcommand not in EXPERIMENTS:
        raise InvalidConfigError(f"unknown subcommand {subcommand!r}")
    try:
        raw = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise InvalidConfigError(f"malformed YAML: {exc}") from exc
    raw = raw or {}
    if not isinstance(raw, dict):
        raise InvalidConfigError("top level must be a mapping")
    allowed = SUITE_SECTIONS if subcommand == "suite" else SECTIONS
    for key in raw:
        if key not in allowed:
            raise InvalidConfigError(f"unknown section {key!r} (allowed: {', '.join(allowed)})", key)
    exp = build(EXPERIMENTS[subcommand], raw.get("experiment"), "experiment")
    cfg = ExperimentConfig(
        subcommand,
        build(ModelCfg, raw.get("model"), "model"),
        build(GridCfg, raw.get("grid"), "grid", default_grid(subcommand, exp)),
        build(PotentialCfg, raw.get("potential"), "potential", default_potential(subcommand)),
        build(DataCfg, raw.get("data"), "data"),
        exp,
        build(OutputCfg, raw.get("output"), "output"),
    )
    check_config(cfg)
    return cfg


def _choice(value, options, path):
    if value not in options:
        raise InvalidConfigError(f"must be one of {options}, got {value!r}", path)


def _window(w, path):
    if not w[0] < w[1]:
        raise InvalidConfigError("window must satisfy lo < hi", path)


def check_config(cfg: ExperimentConfig) -> None:
    """Structural checks plus the mathematical hypotheses that can be decided from the config."""
    if not cfg.model.m > 0:
        raise InvalidConfigError("mass must be positive", "model.m")
    if not cfg.grid.r_max > 0:
        raise InvalidConfigError("r_max must be positive", "grid.r_max")
    if cfg.grid.n < 16:
        raise InvalidConfigError("need at least 16 interior nodes", "grid.n")
    _choice(cfg.data.velocity, ("zero", "position", "frequency"), "data.velocity")
    if not cfg.data.width > 0:
        raise InvalidConfigError("width must be positive", "data.width")
    if cfg.subcommand != "suite":
        cfg.potential.spec()  # kind, convention and the beta > 3 decay condition
    e, sub = cfg.experiment, cfg.subcommand
    if hasattr(e, "fit_window"):
        _window(e.fit_window, "experiment.fit_window")
    if sub == "free-decay" and not e.sigma > 1.5:
        raise HypothesisError(f"free weighted decay requires sigma > 3/2 (got sigma = {e.sigma:g})")
    if sub in ("perturbed-decay", "operator-decay", "born") and not e.sigma > 2.5:
        raise HypothesisError(
            f"weighted decay of the perturbed continuous part requires sigma > 5/2 (got sigma = {e.sigma:g})")
    if sub == "resolvent-scan":
        _choice(e.operator, ("free", "perturbed", "free_kg"), "experiment.operator")
        _choice(e.regime, ("threshold", "high_energy"), "experiment.regime")
        _choice(e.k, (0, 1, 2), "experiment.k")
        _choice(e.path, ("shifted", "negative"), "experiment.path")
        _choice(e.approach, ("gap", "band"), "experiment.approach")
        if e.side is not None:
            _choice(e.side, (1, -1), "experiment.side")
        if not e.sigma > 0.5 + e.k:
            raise HypothesisError(f"derivative order {e.k} requires sigma > {0.5 + e.k:g} (got sigma = {e.sigma:g})")
        if e.operator == "free" and e.regime == "high_energy":
            allowed = (-1, 0, 1, 2) if e.k == 0 else (-1, 0, 1)
            _choice(e.l, allowed, "experiment.l")
        if not 0 < e.sweep_min < e.sweep_max:
            raise InvalidConfigError("need 0 < sweep_min < sweep_max", "experiment.sweep_min")
    if sub == "n-scan":
        _choice(e.k, (0, 1, 2), "experiment.k")
        _choice(e.regime, ("threshold", "high_energy"), "experiment.regime")
        if e.regime == "threshold":
            need = 1.5 if e.k == 0 else 2.5
            if not e.sigma > need:
                raise HypothesisError(
                    f"threshold asymptotics of order {e.k} require sigma > {need:g} (got sigma = {e.sigma:g})")
    if sub == "w-scan":
        _choice(e.k, (0, 1, 2), "experiment.k")
        p = cfg.potential
        if p.kind == "algebraic" and not p.beta > 0.5 + e.k + e.delta:
            raise HypothesisError(f"requires beta > 1/2 + k + delta = {0.5 + e.k + e.delta:g} (got beta = {p.beta:g})")
    if sub == "scatter":
        _choice(e.direction, (1, -1), "experiment.direction")
    if sub == "agmon" and not e.sigma > 0.5:
        raise HypothesisError(f"the derivative bound requires sigma > 1/2 (got sigma = {e.sigma:g})")
    if sub == "a3":
        for i, l in enumerate(e.l):
            _choice(l, (0, 1), f"experiment.l[{i}]")
        if not e.zeta_max >= 1:
            raise InvalidConfigError("the estimate is stated for |zeta| >= 1", "experiment.zeta_max")
    if sub == "lavine":
        for i, z in enumerate(e.zetas):
            if len(z) != 2:
                raise InvalidConfigError("each zeta is a [re, im] pair", f"experiment.zetas[{i}]")
            if z[0] >= 0 and z[1] == 0:
                raise InvalidConfigError("zeta must lie off [0, inf)", f"experiment.zetas[{i}]")
    if sub == "jk-lemma":
        if min(e.check_times) < 1 or max(e.check_times) > 1000:
            raise InvalidConfigError("times must lie in [1, 1000]", "experiment.check_times")
    if sub == "suite":
        for i, c in enumerate(e.criteria):
            if not 1 <= c <= 15:
                raise InvalidConfigError(f"criterion {c} out of range 1..15", f"experiment.criteria[{i}]")
