"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, NumericsError, TripodmemError
from . import scenario as sc

EXIT_CONFIG = 2
EXIT_NUMERICS = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripodmem",
        description="Tripod-memory image storage and wavelength-conversion simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario config")
    p_run.add_argument("config", help="scenario INI file or bundled preset name")
    p_run.add_argument("--out", help="output directory (overrides config and env)")
    p_run.add_argument("--seed", type=int, help="camera RNG seed override")

    p_sweep = sub.add_parser("sweep", help="run a scenario over a parameter list")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True, help="parameter path, e.g. control.alpha_deg")
    p_sweep.add_argument("--values", required=True, help="comma-separated numeric values")
    p_sweep.add_argument("--out", help="output directory")

    p_oracle = sub.add_parser("oracle", help="run a named analytic self-check")
    p_oracle.add_argument("name")

    p_validate = sub.add_parser("validate", help="validate a config without running it")
    p_validate.add_argument("config")

    p_presets = sub.add_parser("presets", help="bundled scenario presets")
    p_presets.add_argument("--list", action="store_true", dest="list_presets")

    return parser


def _load(config: str) -> sc.Scenario:
    if config in sc.list_presets():
        return sc.load_preset(config)
    return sc.load_config(config)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            metrics = sc.run_scenario(_load(args.config), out_dir=args.out, seed=args.seed)
            print(sc._metrics_json(metrics), end="")
            return 0
        if args.command == "sweep":
            try:
                values = [float(v) for v in args.values.split(",") if v.strip() != ""]
            except ValueError as exc:
                raise ConfigError(f"--values: {exc}") from exc
            path = sc.sweep(_load(args.config), args.param, values, out_dir=args.out)
            print(path)
            return 0
        if args.command == "oracle":
            passed, lines = sc.oracle(args.name)
            for line in lines:
                print(line)
            return 0 if passed else 1
        if args.command == "validate":
            _load(args.config)
            print("ok")
            return 0
        if args.command == "presets":
            for name in sc.list_presets():
                print(name)
            return 0
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        _emit_error("config", exc)
        return EXIT_CONFIG
    except NumericsError as exc:
        _emit_error("numerics", exc)
        return EXIT_NUMERICS
    except TripodmemError as exc:
        _emit_error("validation", exc)
        return EXIT_CONFIG


def _emit_error(kind: str, exc: Exception) -> None:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
