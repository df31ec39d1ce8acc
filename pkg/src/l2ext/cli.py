"""Command line front end: ``l2ext {extend,verify,constant}``.

Exit codes: 0 when every check passes, 1 when any check fails, 2 for
configuration errors.
"""

import argparse
import sys

from .errors import ConfigError
from .harness import PRESETS, load_scenarios, run_constant, run_extend, run_verify, summary_lines, table_csv

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

COMMANDS = {"extend": run_extend, "verify": run_verify, "constant": run_constant}


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="l2ext", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON scenario file")
        p.add_argument("--scenario", action="append", default=None,
                       help=f"preset scenario, repeatable: {', '.join(sorted(PRESETS))}")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--mc-samples", type=int)
        p.add_argument("--max-degree", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--perturb", type=float, help="debug: verify sigma + EPS * t_1 * e_1 instead of sigma")
        p.add_argument("--parallel", type=int, help="worker threads for sampling and suite cells")
        p.add_argument("--out", help="write the JSON report here")
        p.add_argument("--csv", help="constant only: write the table as CSV here")
        p.add_argument("--no-timings", action="store_true", help="omit wall-clock fields from the JSON")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        "seed": args.seed,
        "mc_samples": args.mc_samples,
        "max_degree": args.max_degree,
        "trials": args.trials,
        "perturb": args.perturb,
        "parallel": args.parallel,
    }
    try:
        configs = load_scenarios(args.config, args.scenario, overrides)
    except ConfigError as exc:
        print(f"l2ext: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.csv and args.command != "constant":
        print("l2ext: config error: --csv is only valid for 'constant'", file=sys.stderr)
        return EXIT_CONFIG

    report = COMMANDS[args.command](configs)
    for line in summary_lines(report):
        print(line)
    text = report.to_json(include_timings=not args.no_timings)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(table_csv(report))
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
