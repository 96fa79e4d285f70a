"""Command-line entry point.

    affinescope <command> --config <file.json> [--seed N] [--threads N] [--out DIR]

Exit codes: 0 success, 2 validation failure, 3 numerical non-convergence.
Verbosity via the AFFINESCOPE_LOG environment variable.  The --threads
knob caps the parallelism budget; results are identical for any value
(operations run with fixed-order reductions).
"""

from __future__ import annotations

import argparse
import json
import sys

from .runner import ValidationFailure, load_config, run

COMMANDS = ["fit", "modulus", "witness", "dorronsoro", "counterexample", "umd", "multiplier"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="affinescope", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="experiment config JSON")
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    ap.add_argument("--threads", type=int, default=1, help="parallelism budget (result-identical)")
    ap.add_argument("--out", default=None, help="output directory for reports and plots")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except (OSError, json.JSONDecodeError) as e:
        print(f"affinescope: cannot read config: {e}", file=sys.stderr)
        return 2
    config.setdefault("command", args.command)
    if config["command"] != args.command:
        print("affinescope: config command does not match CLI command", file=sys.stderr)
        return 2
    if args.seed is not None:
        config["seed"] = args.seed
    try:
        report = run(config, out_dir=args.out)
    except ValidationFailure as e:
        print(f"affinescope: {e}", file=sys.stderr)
        return 2
    except (OSError, FileNotFoundError) as e:
        print(f"affinescope: {e}", file=sys.stderr)
        return 2
    except (RuntimeError, OverflowError) as e:
        print(f"affinescope: numerical failure: {e}", file=sys.stderr)
        return 3
    if not args.out:
        json.dump(report, sys.stdout, sort_keys=True, indent=1)
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
