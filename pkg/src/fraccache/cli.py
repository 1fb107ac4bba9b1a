"""Command-line entry point: ``fraccache {alpha-profile,quality-sweep,validate}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Errors
print one ``key=value`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig, parse_config
from .experiments import NumericalFailure, run_alpha_profile, run_quality_sweep, write_result

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _error(kind, message, field=None):
    parts = [f"error={kind}"]
    if field is not None:
        parts.append(f"field={field}")
    parts.append(f"message={message!r}")
    print(" ".join(parts), file=sys.stderr)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fraccache",
        description="Optimal caching of content fractions under Rayleigh-fading delivery.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file (defaults apply when omitted)")
    common.add_argument("--seed", type=int, help="Monte Carlo seed (overrides sim.seed)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials (overrides sim.n_trials)")

    for name, help_text in (
        ("alpha-profile", "cached fraction of every content along the sweep"),
        ("quality-sweep", "expected quality of fractional vs whole-content caching"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--format", choices=("csv", "json"), help="output format (overrides output.formats)")

    v = sub.add_parser("validate", parents=[common], help="run the oracle checks")
    v.add_argument("--full", action="store_true", help="full acceptance sample sizes")
    return parser


def _load(args):
    cfg = parse_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed", "must fit in an unsigned 64-bit integer")
        cfg = cfg.replace("sim", seed=args.seed)
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials", "must be at least 1")
        cfg = cfg.replace("sim", n_trials=args.trials)
    if getattr(args, "out", None):
        cfg = cfg.replace("output", directory=args.out)
    if getattr(args, "format", None):
        cfg = cfg.replace("output", formats=(args.format,))
    return cfg


def _validate(args):
    from .validation import run_all

    results = run_all(quick=not args.full, seed=args.seed)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        _error("numerical", f"checks failed: {', '.join(failed)}")
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "validate":
            return _validate(args)
        runner = run_alpha_profile if args.command == "alpha-profile" else run_quality_sweep
        result = runner(cfg)
        for path in write_result(result, cfg.output.directory, cfg.output.formats):
            print(path)
    except ConfigError as exc:
        _error("config", str(exc), exc.field)
        return EXIT_CONFIG
    except (NumericalFailure, FloatingPointError) as exc:
        _error("numerical", str(exc))
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
