"""Experiment reports: metric rows, CSV tables and the JSON summary."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence


@dataclass
class Metric:
    name: str
    value: float
    target: float | str
    tolerance: float | str
    passed: bool

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: value={_fmt(self.value)} target={_fmt(self.target)} tol={_fmt(self.tolerance)}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def within(name: str, value: float, target: float, tol: float) -> Metric:
    return Metric(name, float(value), float(target), float(tol), bool(abs(value - target) <= tol))


def at_most(name: str, value: float, bound: float) -> Metric:
    return Metric(name, float(value), f"<= {bound:.6g}", 0.0, bool(value <= bound))


def holds(name: str, ok: bool, value: float = math.nan, what: str = "true") -> Metric:
    return Metric(name, float(value), what, 0.0, bool(ok))


@dataclass
class Report:
    experiment: str
    config: dict
    metrics: list[Metric] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.metrics)

    def add(self, metric: Metric) -> Metric:
        self.metrics.append(metric)
        return metric

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "passed": self.passed,
            "config": self.config,
            "metrics": [
                {
                    "name": m.name,
                    "value": _json_float(m.value),
                    "target": _json_float(m.target),
                    "tolerance": _json_float(m.tolerance),
                    "passed": m.passed,
                }
                for m in self.metrics
            ],
            "artifacts": self.artifacts,
            "info": _jsonable(self.info),
        }

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "report.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        if path.name not in self.artifacts:
            self.artifacts.append(path.name)
        return path


def _json_float(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        obj = obj.item()
    return _json_float(obj)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return path
