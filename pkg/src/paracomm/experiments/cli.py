"""Command-line entry point: ``paracomm run --suite ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import SUITES, ConfigError, ExperimentConfig, dump_config, load_config
from .runner import run_experiment

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_DEFAULTS_EPILOG = """\
Without --config every setting takes its default (print them with
`paracomm defaults`).  --n replaces every grid size in the config, including
the equivalence grid list and the Plancherel grid.

exit status: 0 when every asserted check passes, 1 when a check fails,
2 on a usage or configuration error.
"""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="paracomm",
        description="Verification experiments for the paracommutator I_u f = P(u x f).",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=_DEFAULTS_EPILOG,
    )
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run",
        help="run one suite or all of them",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        epilog="defaults for the config sections:\n" + dump_config(ExperimentConfig()),
    )
    run.formatter_class = argparse.RawDescriptionHelpFormatter
    run.add_argument("--suite", choices=SUITES + ("all",), default=None, help="suite to run (config default: all)")
    run.add_argument("--config", default=None, help="YAML config file")
    run.add_argument("--n", type=int, default=None, help="grid points per axis (power of two)")
    run.add_argument("--L", dest="length", type=float, default=None, help="domain side length (default 2*pi)")
    run.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    run.add_argument("--out", default=None, help="output directory (default results)")
    run.add_argument("--threads", type=int, default=None, help="worker threads for independent cases (default 1)")
    run.add_argument("--dump-fields", action="store_true", default=None, help="write generated fields to <out>/fields")
    run.add_argument("--update-baselines", action="store_true", help="store newly measured intervals in the config's baseline file")
    run.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")

    sub.add_parser("defaults", help="print the default config as YAML")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "defaults":
        sys.stdout.write(dump_config(ExperimentConfig()))
        return EXIT_OK

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config is not None else ExperimentConfig()
        cfg = cfg.with_overrides(
            suite=args.suite,
            n=args.n,
            length=args.length,
            seed=args.seed,
            output=args.out,
            threads=args.threads,
            dump_fields=args.dump_fields,
        )
    except ConfigError as exc:
        print(f"paracomm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        report = run_experiment(cfg, cfg.output, update_baselines=args.update_baselines)
    except ValueError as exc:
        print(f"paracomm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    for res in report.results:
        print(f"{res.suite:12s} {'PASS' if res.passed else 'FAIL'}  ({len(res.cases)} cases)")
        for line in res.failures():
            print(f"  failed: {line}", file=sys.stderr)
    print(f"report: {cfg.output}/report.json")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
