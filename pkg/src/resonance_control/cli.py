"""Command-line entry point: ``resonance-control <subcommand> --config FILE``.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure
(ill-conditioned kernel or basis, failed self-check).
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

from .config import ScenarioConfig, from_dict, load_config, validate
from .errors import CoarseGrainingWarning, NumericalError, ValidationError
from .runner import RUNNERS

log = logging.getLogger("resonance_control")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
MODE_OF = {"propagate": "uncontrolled", "optimize": "optimize",
           "diagnose": "diagnose", "simplify": "simplify", "generate": None}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="resonance-control",
        description="Coherent control of S2 population decay through overlapping resonances.",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "draw a synthetic resonance system and archive it",
        "propagate": "single-pulse (uncontrolled) population traces",
        "optimize": "relative-control fields, verified by propagation",
        "diagnose": "overlap and non-diagonality measures per window",
        "simplify": "averaging, smoothing and truncation of optimal fields",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text, description=text)
        s.add_argument("--config", metavar="PATH", help="scenario file (JSON or YAML)")
        s.add_argument("--out", metavar="DIR", help="output directory (overrides out_dir)")
        s.add_argument("--seed", type=int, help="random seed (overrides seed)")
        s.add_argument("--workers", type=int, help="threads for time sweeps")
        s.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    return p


def resolve_config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else from_dict({})
    if args.out is not None:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    mode = MODE_OF[args.command]
    if mode is not None:
        cfg.mode = mode
    return validate(cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", CoarseGrainingWarning)
    try:
        cfg = resolve_config(args)
        log.info("running %s into %s", args.command, cfg.out_dir)
        result = RUNNERS[args.command](cfg, plots=not args.no_plots)
    except ValidationError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        print(f"error{where}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for p in result.outputs:
        log.info("wrote %s", p)
    print(f"{args.command}: {len(result.outputs)} files in {result.out_dir}")
    return EXIT_OK
