"""Experiment configuration files."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .. import drift as drift_mod
from ..drift import DriftSpec


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit status 2."""


DRIFT_SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "kind": {"const": "rank_based"},
                "b": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "n": {"type": "integer", "minimum": 1},
            },
            "required": ["kind", "b"],
        },
        {
            "properties": {
                "kind": {"const": "general"},
                "n": {"type": "integer", "minimum": 1},
                "table": {
                    "type": "object",
                    "patternProperties": {
                        "^[1-9]+$": {"type": "array", "items": {"type": "number"}}
                    },
                    "additionalProperties": False,
                },
            },
            "required": ["table"],
        },
    ],
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "experiment": {"type": "string"},
        "drift": {"anyOf": [{"type": "string"}, DRIFT_SCHEMA]},
        "x0": {"type": "array", "items": {"type": "number"}},
        "eps_ladder": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0},
            "minItems": 1,
        },
        "T": {"type": "number", "exclusiveMinimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "paths": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "params": {"type": "object"},
    },
    "required": ["experiment"],
    "additionalProperties": False,
}


@dataclass
class ExperimentConfig:
    experiment: str
    drift: DriftSpec | None = None
    x0: tuple[float, ...] | None = None
    eps_ladder: list[float] = field(default_factory=list)
    T: float | None = None
    dt: float | None = None
    paths: int | None = None
    seed: int = 0
    output_dir: Path = Path("oflab-out")
    params: dict[str, Any] = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "experiment": self.experiment,
            "drift": None if self.drift is None else self.drift.to_dict(),
            "x0": None if self.x0 is None else list(self.x0),
            "eps_ladder": list(self.eps_ladder),
            "T": self.T,
            "dt": self.dt,
            "paths": self.paths,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "params": self.params,
        }


def _where(err: jsonschema.ValidationError) -> str:
    parts = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    return "$" + parts


def load_drift(data: Any, base: Path | None = None) -> DriftSpec:
    """Drift from an inline object or a path (relative to ``base``)."""
    if isinstance(data, str):
        p = Path(data)
        if base is not None and not p.is_absolute():
            p = base / p
        data = read_json(p)
    try:
        jsonschema.validate(data, DRIFT_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"drift at {_where(err)}: {err.message}") from None
    try:
        return drift_mod.from_dict(data)
    except ValueError as err:
        raise ConfigError(f"drift: {err}") from None


def read_json(path: Path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: line {err.lineno} column {err.colno}: {err.msg}") from None


def parse_config(data: Any, base: Path | None = None, known: set[str] | None = None) -> ExperimentConfig:
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        raise ConfigError(f"config at {_where(err)}: {err.message}") from None
    if known is not None and data["experiment"] not in known:
        raise ConfigError(
            f"unknown experiment {data['experiment']!r}; choose from {', '.join(sorted(known))}"
        )
    ladder = [float(e) for e in data.get("eps_ladder", [])]
    if any(a <= b for a, b in zip(ladder, ladder[1:])):
        raise ConfigError("eps_ladder must be strictly decreasing")
    spec = load_drift(data["drift"], base) if "drift" in data else None
    x0 = tuple(float(v) for v in data["x0"]) if "x0" in data else None
    if spec is not None and x0 is not None and len(x0) != spec.n:
        raise ConfigError(f"x0 has length {len(x0)} but the drift has n={spec.n}")
    seed = int(data.get("seed", 0))
    env_seed = os.environ.get("OFLAB_SEED")
    if env_seed:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"OFLAB_SEED must be an integer, got {env_seed!r}") from None
    out = Path(data.get("output_dir", "oflab-out"))
    if base is not None and not out.is_absolute():
        out = base / out
    return ExperimentConfig(
        experiment=data["experiment"],
        drift=spec,
        x0=x0,
        eps_ladder=ladder,
        T=data.get("T"),
        dt=data.get("dt"),
        paths=data.get("paths"),
        seed=seed,
        output_dir=out,
        params=dict(data.get("params", {})),
    )


def load_config(path: str | Path, known: set[str] | None = None) -> ExperimentConfig:
    path = Path(path)
    return parse_config(read_json(path), path.parent, known)
