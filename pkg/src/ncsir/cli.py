"""Command line entry point: ``ncsir simulate|optimize|sweep``.

Exit codes: 0 success, 2 config error, 3 solver failure, 4 optimizer did
not converge within ``max_iter`` (results are still written).
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import PRESET_NAMES, load_config, preset
from .errors import ConfigError, IoError, SolverError
from .io import run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_NOT_CONVERGED = 0, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ncsir", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb, text in (("simulate", "forward run with the configured (uncontrolled) controls"),
                       ("optimize", "projected gradient descent on the controls"),
                       ("sweep", "optimize once per zeta value")):
        p = sub.add_parser(verb, help=text)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--preset", choices=PRESET_NAMES, default=None)
        src.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="seed for random control initialization")
        p.add_argument("--init", choices=("random", "midpoint", "uncontrolled"))
        p.add_argument("--nx", type=int, help="cells per axis")
        p.add_argument("--dt", type=float)
        p.add_argument("--t-final", type=float)
        p.add_argument("--max-iter", type=int)
        p.add_argument("--jobs", type=int, default=1, help="parallel sweep members")
        p.add_argument("--quiet", action="store_true")
    return ap


def _resolve(args):
    cfg = load_config(args.config) if args.config else preset(args.preset or "baseline")
    over = {"mode": args.verb}
    if args.nx is not None:
        over["grid"] = {"nx": args.nx, "ny": args.nx}
    time = {k: v for k, v in (("dt", args.dt), ("t_final", args.t_final)) if v is not None}
    if time:
        over["time"] = time
    optim = {k: v for k, v in (("seed", args.seed), ("init", args.init),
                               ("max_iter", args.max_iter)) if v is not None}
    if optim:
        over["optim"] = optim
    if args.out:
        over["outputs"] = {"directory": args.out}
    return cfg.with_overrides(**over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run_experiment(cfg, jobs=args.jobs)
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except IoError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if not args.quiet:
        if cfg.mode == "sweep":
            for r in summary["runs"]:
                print(f"{r['name']}: J={r['cost']['j_total']:.6g} RelCR={100 * r['relcr']:.2f}%")
        else:
            print(f"{cfg.name}: J={summary['cost']['j_total']:.6g} "
                  f"RelCR={100 * summary['relcr']:.2f}% iterations={summary['iterations']}")
        print(f"results in {cfg.outputs.directory}")
    return EXIT_OK if summary["converged"] else EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
