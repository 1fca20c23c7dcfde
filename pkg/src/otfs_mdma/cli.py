"""Command-line entry point for batch experiments."""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import SCHEMES, SWEEP_AXES, emit_results, run_experiment
from .scenario import ScenarioConfig, load_config


def _parse_sweep(spec: str) -> tuple[str, tuple[float, ...]]:
    axis, _, rest = spec.partition("=")
    axis = axis.strip()
    if axis not in SWEEP_AXES:
        raise argparse.ArgumentTypeError(
            f"sweep axis must be one of {', '.join(SWEEP_AXES)}"
        )
    if axis == "none":
        return axis, ()
    try:
        values = tuple(float(v) for v in rest.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad sweep values {rest!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("sweep needs at least one value, e.g. power=35,40,45")
    return axis, values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otfs-mdma",
        description="Monte Carlo resource-allocation experiments on delay-Doppler grids",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV results")
    run.add_argument("--config", help="path to a key=value scenario file")
    run.add_argument(
        "--scheme",
        default="all",
        help=f"comma-separated subset of: {', '.join(SCHEMES)} (or 'all')",
    )
    run.add_argument("--trials", type=int, default=10)
    run.add_argument("--seed", type=int, default=None, help="base RNG seed (seed+trial per draw)")
    run.add_argument(
        "--sweep",
        type=_parse_sweep,
        default=("none", ()),
        help="axis=v1,v2,... with axis one of power (dBm), users, antennas",
    )
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--out", default="results", help="output prefix for the two CSV files")
    run.add_argument("--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    config = load_config(args.config) if args.config else ScenarioConfig()
    if args.scheme.strip() == "all":
        schemes = SCHEMES
    else:
        schemes = tuple(s.strip() for s in args.scheme.split(",") if s.strip())
    axis, values = args.sweep

    results = run_experiment(
        config,
        schemes=schemes,
        n_trials=args.trials,
        base_seed=args.seed,
        sweep_axis=axis,
        sweep_values=values or None,
        n_jobs=args.jobs,
    )
    per_trial = f"{args.out}_trials.csv"
    aggregate = f"{args.out}_summary.csv"
    emit_results(results, per_trial, aggregate)
    print(f"wrote {per_trial} and {aggregate} ({len(results)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
