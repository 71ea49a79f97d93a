"""Command-line entry point.

Usage::

    advtraffic analyze --config scenario.yaml --out out/
    advtraffic sim-lane --config lane.yaml --out out/ --dt 0.001
    advtraffic sweep --config sweep.yaml --out out/ --threads 4
    advtraffic reproduce-tables --out out/

Exit codes: 0 success, 2 configuration error, 3 infeasible scenario,
4 step limit reached.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__, runner
from .config import ConfigError, parse_config
from .core import InfeasibleError, ParameterError, StepLimitError
from .export import write_json

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_STEP_LIMIT = 4

COMMANDS = {
    "analyze": "analyze",
    "sim-lane": "lane",
    "sim-intersection": "intersection",
    "platoon": "platoon",
    "sweep": "sweep",
}

log = logging.getLogger("advtraffic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="advtraffic", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "analyze": "closed-form collision metrics",
        "sim-lane": "single-lane braking simulation",
        "sim-intersection": "six-lane crossroad simulation",
        "platoon": "platoon probabilities and stealthy coalescence",
        "sweep": "grid sweep of one metric",
        "reproduce-tables": "recompute the reference distance and collision tables",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        if name != "reproduce-tables":
            p.add_argument("--config", type=Path, help="YAML scenario file (defaults if omitted)")
            p.add_argument("--seed", type=int, help="override the config seed")
            p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--dt", type=float, help="override the time step (s)")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _load(args, kind: str):
    text = args.config.read_text() if args.config else ""
    cfg = parse_config(text, kind=kind)
    if args.seed is not None:
        cfg = cfg.with_value("seed", args.seed)
    if args.dt is not None:
        if not args.dt > 0:
            raise ConfigError("--dt must be > 0")
        cfg = cfg.with_value("dt", args.dt)
    if cfg.kind == "platoon" and cfg.get("seed") is None:
        raise ConfigError("platoon scenarios need a seed (config 'seed' or --seed)")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "reproduce-tables":
            args.out.mkdir(parents=True, exist_ok=True)
            payload = runner.reproduce_tables(args.out, dt=args.dt or 0.01)
            write_json(args.out / "run.json", {"engine_version": __version__,
                                               "kind": "reproduce-tables", "payload": payload})
            print(f"tables written to {args.out}")
            return EXIT_OK
        cfg = _load(args, COMMANDS[args.command])
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        record = runner.execute(cfg, args.out, threads=args.threads)
        log.info("finished in %.3f s", record["wall_time_s"])
        print(f"{args.command}: results written to {args.out}")
        return EXIT_OK
    except (ConfigError, ParameterError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except StepLimitError as exc:
        print(f"step limit: {exc}", file=sys.stderr)
        return EXIT_STEP_LIMIT


if __name__ == "__main__":
    sys.exit(main())
