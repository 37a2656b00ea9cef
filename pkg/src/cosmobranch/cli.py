"""``sim <command> --config FILE [--seed S] [--out DIR]``.

Exit codes: 0 success, 2 config/validation error, 3 numeric failure,
4 I/O failure. Errors are reported on stderr as one JSON object per line
with the error type, so each failure class is distinguishable by name.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigInvalid, CosmobranchError
from .scenario import COMMANDS, load_scenario, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _report(kind, message, code, **extra):
    rec = {"error": kind, "message": message, "exit_code": code}
    rec.update(extra)
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)
    return code


def build_parser():
    parser = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="TOML scenario file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.config, command=args.command, seed=args.seed, output_dir=args.out)
    except ConfigInvalid as exc:
        return _report("ConfigInvalid", str(exc), EXIT_CONFIG, errors=exc.errors)
    except OSError as exc:
        return _report("ConfigUnreadable", str(exc), EXIT_IO)
    try:
        bundle = run_scenario(scenario)
    except CosmobranchError as exc:
        return _report(type(exc).__name__, str(exc), exc.exit_code)
    except OSError as exc:
        return _report("OutputUnwritable", str(exc), EXIT_IO)
    for f in bundle.files:
        print(f)
    print(bundle.manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
