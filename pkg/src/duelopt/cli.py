"""Command line entry point: ``duelopt run`` and ``duelopt sweep``.

Exit status is 0 on success, 1 for an invalid configuration and 2 for a
runtime failure such as an unwritable output path.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ParameterError
from .harness import ALGOS, ExperimentConfig, SweepConfig, run_experiment, run_sweep
from .objectives import OBJECTIVES

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

# CLI flag -> ExperimentConfig field
_FLAGS = {
    "objective": "objective",
    "dim": "dim",
    "algo": "algo",
    "m": "m",
    "nu": "nu",
    "eps": "eps",
    "budget": "budget",
    "seed": "seed",
    "w1_fill": "w1_fill",
    "domain": "domain",
    "eta": "eta",
    "gamma": "gamma",
    "delta": "delta",
    "D": "D",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--objective", choices=sorted(OBJECTIVES))
    p.add_argument("--dim", type=int)
    p.add_argument("--algo", choices=ALGOS)
    p.add_argument("--m", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--budget", type=int, help="round budget overriding the theoretical one")
    p.add_argument("--seed", type=int)
    p.add_argument("--w1-fill", dest="w1_fill", type=float)
    p.add_argument("--domain", help="all | ball:R | box:LO:HI")
    p.add_argument("--eta", type=float, help="step size override")
    p.add_argument("--gamma", type=float, help="perturbation override")
    p.add_argument("--delta", type=float, help="resampling failure probability when nu > 0")
    p.add_argument("--D", dest="D", type=float, help="bound on ||w1 - x*||^2")


def _numbers(text: str, cast):
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"cannot parse list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duelopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write its trace CSV")
    _add_common(run)
    run.add_argument("--out", help="trace CSV path")

    sweep = sub.add_parser("sweep", help="run one experiment per m (or nu) value")
    _add_common(sweep)
    group = sweep.add_mutually_exclusive_group(required=True)
    group.add_argument("--ms", help="comma-separated m values")
    group.add_argument("--nus", help="comma-separated nu values")
    sweep.add_argument("--out", default="sweep", help="output directory")
    sweep.add_argument("--jobs", type=int, default=1)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    changes = {
        field: getattr(args, flag)
        for flag, field in _FLAGS.items()
        if getattr(args, flag, None) is not None
    }
    return cfg.replace(**changes)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = config_from_args(args)
        if args.command == "run":
            cfg = cfg.replace(out=args.out or cfg.out)
            cfg.validate()
            res = run_experiment(cfg)
            last = res.trace.records[-1]
            print(
                f"{cfg.algo} on {cfg.objective} (d={cfg.dim}, m={cfg.m}): "
                f"{last.round} rounds, f_runmin={last.f_runmin:.6g}, "
                f"duels={last.duel_queries}, battles={last.multiwise_queries}"
                + (f" -> {res.path}" if res.path else "")
            )
        else:
            if args.ms:
                key, values = "m", _numbers(args.ms, int)
            else:
                key, values = "nu", _numbers(args.nus, float)
            cfg.validate() if key == "nu" else cfg.replace(m=values[0]).validate()
            path = run_sweep(SweepConfig(cfg, values, key, args.out, args.jobs))
            print(f"summary -> {path}")
    except (ParameterError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, RuntimeError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
