"""Command line entry point.

    lorentz <experiment> [--config FILE] [--seed N] [--workers K]
            [--out DIR] [--no-figures] [--set key=value ...]

The config file is TOML; command line flags override it.  Outputs are CSV
files plus summary.json (and a PNG figure unless disabled); the process
exits 0 only if every in-run check passed.
"""

import argparse
import ast
import sys

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import experiments


def _load_config(path):
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    flat = {}
    for key, val in data.items():
        if isinstance(val, dict):
            flat.update(val)
        else:
            flat[key] = val
    return flat


def _parse_set(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise experiments.ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            out[key.strip()] = ast.literal_eval(raw)
        except (ValueError, SyntaxError):
            out[key.strip()] = raw
    return out


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lorentz",
        description="Periodic Lorentz gas experiments in the Boltzmann-Grad limit",
    )
    parser.add_argument("experiment", choices=sorted(experiments.EXPERIMENTS),
                        help="experiment to run")
    parser.add_argument("--config", help="TOML configuration file")
    parser.add_argument("--seed", type=int, help="override the master seed")
    parser.add_argument("--workers", type=int, help="worker process count")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override any config field")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        file_cfg = _load_config(args.config) if args.config else {}
        overrides = _parse_set(args.set)
        if args.seed is not None:
            overrides["seeds"] = [args.seed]
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.no_figures:
            overrides["figures"] = False
        out_dir = args.out or (file_cfg.get("dir") or "out")
        result = experiments.run(args.experiment, file_cfg, overrides, out_dir)
    except experiments.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    for rep in result.reports:
        mark = "PASS" if rep.passed else "FAIL"
        print(f"[{mark}] {rep.test}: statistic={rep.statistic:.6g} "
              f"p={rep.p_value:.4g}")
    print(f"artifacts in {out_dir} (config {result.config_hash})")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
