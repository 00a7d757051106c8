"""Command line entry point: ``chainbath run|list-scenarios|validate|estimate``.

Exit codes: 0 success, 1 config error, 2 some sweep cells failed, 3 hard failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, load_config
from .runner import OUTPUT_ENV, default_output_dir, estimate, run_scenario, write_result
from .scenarios import SCENARIOS

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_HARD = 0, 1, 2, 3


def _t_final(value: str):
    return "horizon" if value == "horizon" else float(value)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chainbath", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config")
    run.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or run.output)")
    run.add_argument("--workers", type=int)
    run.add_argument("--dt", type=float)
    run.add_argument("--t-final", type=_t_final, help="number or 'horizon'")
    run.add_argument("--emit-plots", action="store_true", help="also write a matplotlib script")

    sub.add_parser("list-scenarios", help="list scenarios and their output columns")

    val = sub.add_parser("validate", help="parse and check a config without running it")
    val.add_argument("config")

    est = sub.add_parser("estimate", help="print cell count, horizons and cost without running")
    est.add_argument("config")
    est.add_argument("--dt", type=float)
    est.add_argument("--t-final", type=_t_final)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "list-scenarios":
        for name, sc in SCENARIOS.items():
            print(f"{name}\n    {sc.description}\n    columns: {', '.join(sc.columns)}")
        return EXIT_OK

    try:
        cfg = load_config(args.config)
        if args.command == "validate":
            print(f"ok: {cfg.scenario}, {cfg.n_cells()} cells")
            return EXIT_OK
        if args.command == "estimate":
            print(json.dumps(estimate(cfg, args.dt, args.t_final), indent=2))
            return EXIT_OK
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if (args.dt is not None and args.dt <= 0) or (isinstance(args.t_final, float) and args.t_final <= 0):
            raise ConfigError("--dt and --t-final must be positive")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = run_scenario(cfg, workers=args.workers, dt=args.dt, t_final=args.t_final)
        paths = write_result(result, default_output_dir(cfg, args.out), emit_plots=args.emit_plots)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_HARD
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    n_failed = result.meta["n_failed"]
    if n_failed:
        print(f"{n_failed} of {result.meta['n_cells']} cells failed; see {paths['meta']}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
