"""Command line entry point.

Exit codes: 0 on success, 1 on a configuration error, 2 when any experiment
cell did not finish (DNF), 3 when a ``validate`` check fails.
"""

import argparse
import dataclasses
import logging
import os
import sys

from . import harness, outputs
from .config import load_config
from .errors import ConfigurationError
from .validation import run_validation

EXIT_OK, EXIT_CONFIG, EXIT_DNF, EXIT_CHECK = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="thermofsi",
                                description="Partitioned thermal coupling experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (INI sections)")
    common.add_argument("--out", help="output directory (default: [experiment] output)")
    common.add_argument("--seed", type=int, help="seed for randomized checks")
    common.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("stage-study", parents=[common],
                   help="residual decay of the first stage for every accelerator")
    sub.add_parser("matrix", parents=[common],
                   help="total iterations by tolerance and method")
    sub.add_parser("fixed-vs-adaptive", parents=[common],
                   help="adaptive run vs accuracy-matched fixed step runs")
    sub.add_parser("validate", parents=[common], help="analytic-oracle checks")
    return p


def _print_file(path):
    with open(path, encoding="utf-8") as fh:
        sys.stdout.write(fh.read())


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise ConfigurationError("--jobs must be at least 1")
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        out = args.out or cfg.output

        if args.command == "validate":
            checks = run_validation(seed=cfg.seed)
            for c in checks:
                print(c.line())
            return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK

        if args.command == "stage-study":
            rows = harness.run_single_stage_study(cfg)
            paths = outputs.emit_stage_study(rows, out)
            _print_file(os.path.join(out, "stage_study.txt"))
            expected = len(cfg.study.dts) * len(cfg.accelerators)
            got = len({(r.dt, r.method) for r in rows})
            return EXIT_OK if got == expected else EXIT_DNF

        if args.command == "matrix":
            result = harness.run_iteration_count_matrix(cfg, jobs=args.jobs)
            paths = outputs.emit_outputs(result.records, out, "matrix", result.reference)
            _print_file(paths["table"])
            return EXIT_DNF if result.dnf else EXIT_OK

        result = harness.run_fixed_vs_adaptive(cfg, jobs=args.jobs)
        paths = outputs.emit_fixed_vs_adaptive(result, out)
        _print_file(paths["comparison"])
        return EXIT_DNF if result.dnf else EXIT_OK
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
