"""Command line entry point: ``oflab run | check-sc | sticky | list-experiments``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .drift import check_sc
from .harness import REGISTRY, ConfigError, load_config, load_drift, run
from .sticky import sticky_dynamics

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_run(args) -> int:
    cfg = load_config(args.config, set(REGISTRY))
    if args.output_dir:
        cfg.output_dir = Path(args.output_dir)
    report = run(cfg)
    for m in report.metrics:
        print(m.line())
    print(f"report: {cfg.output_dir / 'report.json'}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_check_sc(args) -> int:
    spec = load_drift(str(Path(args.drift).resolve()))
    if spec.n < 2:
        raise ConfigError("stability needs n >= 2")
    rep = check_sc(spec)
    print(json.dumps(rep.to_dict(), indent=2))
    return EXIT_OK if rep.satisfies_sc else EXIT_FAIL


def cmd_sticky(args) -> int:
    y0, b = args.y0, args.b
    if len(y0) != len(b):
        raise ConfigError(f"y0 has {len(y0)} entries but b has {len(b)}")
    if any(y0[i] > y0[i + 1] for i in range(len(y0) - 1)):
        raise ConfigError("y0 must be nondecreasing")
    if not (args.T > 0 and args.dt > 0):
        raise ConfigError("T and dt must be positive")
    path = sticky_dynamics(y0, b, args.T)
    if args.json:
        print(json.dumps(path.to_dict(), indent=2))
        return EXIT_OK
    steps = max(1, int(round(args.T / args.dt)))
    grid = np.arange(steps + 1) * args.dt
    xi = path.sample(grid)
    out = sys.stdout
    out.write("t," + ",".join(f"x{i}" for i in range(1, len(b) + 1)) + "\n")
    for t, row in zip(grid, xi):
        out.write(",".join(repr(float(v)) for v in (t, *row)) + "\n")
    return EXIT_OK


def cmd_list(args) -> int:
    width = max(len(k) for k in REGISTRY)
    for name in sorted(REGISTRY):
        print(f"{name:<{width}}  {REGISTRY[name].summary}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oflab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--output-dir", help="override output_dir from the config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check-sc", help="check the stability conditions of a drift file")
    p.add_argument("drift")
    p.set_defaults(func=cmd_check_sc)

    p = sub.add_parser("sticky", help="sticky dynamics sampled on a grid, as CSV")
    p.add_argument("y0", type=_floats, help="initial positions, e.g. 0,0,1")
    p.add_argument("b", type=_floats, help="rank velocities, e.g. 1,0,-1")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--json", action="store_true", help="print the event history instead")
    p.set_defaults(func=cmd_sticky)

    p = sub.add_parser("list-experiments", help="list registered experiments")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
