"""Command-line interface: ``tvpr reconstruct`` and ``tvpr compare``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import glob
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import ConfigError, TvprError
from .experiment import (METHODS, PRESETS, ExperimentConfig, StageError, comparison_csv,
                         run_experiment, summary_csv)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

# CLI flag -> config key
_OVERRIDES = {"method": "method", "lam": "lam", "sigma": "sigma", "masks": "J",
              "seed_masks": "seed_masks", "seed_noise": "seed_noise", "out": "out"}


def _read_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    data.setdefault("name", os.path.splitext(os.path.basename(path))[0])
    return data


def build_config(args):
    data = _read_config(args.config) if args.config else {}
    if args.preset:
        data["preset"] = args.preset
    for flag, key in _OVERRIDES.items():
        val = getattr(args, flag)
        if val is not None:
            data[key] = val
    if args.sigma is not None:
        data["er_target_db"] = None
    return ExperimentConfig.from_dict(data).validate()


def _exit_code(exc):
    cause = exc.cause if isinstance(exc, StageError) else exc
    return EXIT_NUMERICAL if isinstance(cause, ArithmeticError) else EXIT_CONFIG


def cmd_reconstruct(args):
    try:
        cfg = build_config(args)
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.print_config:
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    try:
        report = run_experiment(cfg)
    except TvprError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    sys.stdout.write(summary_csv([report.summary]))
    return EXIT_OK


def _run_file(path, out):
    data = _read_config(path)
    if out is not None:
        data["out"] = out
    return run_experiment(ExperimentConfig.from_dict(data)).summary


def cmd_compare(args):
    paths = sorted(glob.glob(os.path.join(args.configs, "*.json")))
    if not paths:
        print(f"config error: no *.json files in {args.configs}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                summaries = list(pool.map(_run_file, paths, [args.out] * len(paths)))
        else:
            summaries = [_run_file(p, args.out) for p in paths]
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TvprError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    table = comparison_csv(summaries)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "comparison.csv"), "w", newline="") as fh:
            fh.write(table)
        with open(os.path.join(args.out, "summaries.csv"), "w", newline="") as fh:
            fh.write(summary_csv(summaries))
    sys.stdout.write(table)
    return EXIT_OK


def make_parser():
    parser = argparse.ArgumentParser(prog="tvpr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser("reconstruct", help="run one experiment config")
    rec.add_argument("--config", help="JSON config file")
    rec.add_argument("--method", choices=METHODS)
    rec.add_argument("--lambda", dest="lam", type=float, help="TV weight")
    rec.add_argument("--sigma", type=float, help="noise level on the unitary scale")
    rec.add_argument("--masks", type=int, help="number of masks J")
    rec.add_argument("--seed-masks", type=int)
    rec.add_argument("--seed-noise", type=int)
    rec.add_argument("--out", help="output directory")
    rec.add_argument("--preset", choices=sorted(PRESETS))
    rec.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    rec.set_defaults(func=cmd_reconstruct)

    cmp_ = sub.add_parser("compare", help="run every config in a directory and join the summaries")
    cmp_.add_argument("--configs", required=True, help="directory of JSON configs")
    cmp_.add_argument("--jobs", type=int, default=1)
    cmp_.add_argument("--out", help="output directory for all runs")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
