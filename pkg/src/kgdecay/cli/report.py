"""Run reports, pass/fail checks and deterministic artifact writing."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core.fitting import DecayFit
from ..errors import InvalidConfigError

DIGITS = 12


def canonical(x):
    """JSON-ready value with floats rounded to DIGITS significant digits."""
    if isinstance(x, dict):
        return {str(k): canonical(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [canonical(v) for v in x]
    if isinstance(x, np.ndarray):
        return [canonical(v) for v in x.tolist()]
    if isinstance(x, DecayFit):
        return canonical(x.as_dict())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": canonical(float(x.real)), "im": canonical(float(x.imag))}
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{DIGITS}g}")
    return x


def _cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{DIGITS}g}"
    if isinstance(x, (complex, np.complexfloating)):
        return f"{complex(x).real:.{DIGITS}g}{complex(x).imag:+.{DIGITS}g}j"
    return str(x)


@dataclass(frozen=True)
class Check:
    name: str
    value: object
    passed: bool
    criterion: str

    def as_dict(self) -> dict:
        return {"name": self.name, "value": canonical(self.value), "criterion": self.criterion, "pass": bool(self.passed)}


def check_close(name, value, expected, tol) -> Check:
    return Check(name, value, bool(abs(value - expected) <= tol), f"|value - ({expected:g})| <= {tol:g}")


def check_le(name, value, bound) -> Check:
    return Check(name, value, bool(value <= bound), f"value <= {bound:g}")


def check_ge(name, value, bound) -> Check:
    return Check(name, value, bool(value >= bound), f"value >= {bound:g}")


def check_in(name, value, lo, hi) -> Check:
    return Check(name, value, bool(lo <= value <= hi), f"{lo:g} <= value <= {hi:g}")


def check_true(name, flag, criterion: str) -> Check:
    return Check(name, bool(flag), bool(flag), criterion)


@dataclass
class Table:
    columns: list
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(c) for c in row])
        return buf.getvalue()


def table(**cols) -> Table:
    names = list(cols)
    data = [np.asarray(cols[k]).ravel() for k in names]
    return Table(names, [list(r) for r in zip(*data)])


@dataclass
class RunReport:
    experiment: str
    config: dict
    checks: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    note: str = ""
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        # runtime is excluded so that reports are byte-identical across runs
        return canonical({
            "experiment": self.experiment,
            "config": self.config,
            "checks": [c.as_dict() for c in self.checks],
            "fits": self.fits,
            "results": self.results,
            "warnings": list(self.warnings),
            "note": self.note,
            "pass": self.passed,
        })


def dumps(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def emit_report(reports: list) -> dict:
    """Aggregate verdict with stable ordering."""
    if not reports:
        raise InvalidConfigError("emit_report needs at least one report")
    items = [{"experiment": r.experiment, "pass": r.passed} for r in reports]
    failing = [r.experiment for r in reports if not r.passed]
    return {"overall": "pass" if not failing else "fail", "experiments": items, "failing": failing}


def write_text(path: Path, text: str, written: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(text.encode("utf-8"))
    written.append(path)


def write_report(report: RunReport, out_dir: Path, written: list, schemas: dict) -> None:
    """report.json plus one CSV per table under out_dir."""
    write_text(out_dir / "report.json", dumps(report.to_dict()), written)
    for name in sorted(report.tables):
        t = report.tables[name]
        path = out_dir / f"{name}.csv"
        write_text(path, t.to_csv(), written)
        schemas[path] = list(t.columns)


def write_manifest(root: Path, written: list, schemas: dict) -> Path:
    entries = []
    for p in sorted(set(written), key=lambda q: str(q.relative_to(root))):
        data = p.read_bytes()
        item = {"path": str(p.relative_to(root)), "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
        if p in schemas:
            item["columns"] = schemas[p]
        entries.append(item)
    path = root / "manifest.json"
    path.write_bytes(dumps({"files": entries}).encode("utf-8"))
    return path


def read_manifest(root: Path) -> dict | None:
    path = root / "manifest.json"
    if not path.exists():
        return None
    try:
        return {e["path"]: e["sha256"] for e in json.loads(path.read_text())["files"]}
    except (ValueError, KeyError, TypeError):
        return None
