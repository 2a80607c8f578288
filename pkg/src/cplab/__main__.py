"""Command line front end for the batch runner.

    python -m cplab <command> --model FILE [--out DIR] [--seed N]
                    [--tol NAME=VALUE ...] [--lambda-list 0.5,0.35,0.25]
                    [--grid r,n] [--nmax N]

Exit codes: 0 all checks passed, 1 a check failed or a module computation
refused, 2 unreadable or malformed input.
"""

import argparse
import sys

from .runner import COMMANDS, DEFAULT_SEED, InputError, write_outputs


def _parse_tols(items):
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise InputError("--tol expects NAME=VALUE, got %r" % item)
        try:
            out[name] = float(value)
        except ValueError:
            raise InputError("--tol %s: %r is not a number" % (name, value))
    return out


def _parse_lambdas(text):
    if text is None:
        return None
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError("--lambda-list expects comma-separated numbers")
    if not values:
        raise InputError("--lambda-list must not be empty")
    return values


def _parse_grid(text):
    if text is None:
        return None
    parts = text.split(",")
    try:
        if len(parts) != 2:
            raise ValueError
        return float(parts[0]), int(parts[1])
    except ValueError:
        raise InputError("--grid expects r,n with integer n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m cplab",
        description="certification reports and convergence tables for "
                    "completely positive semigroup models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        p = sub.add_parser(name, help=(func.__doc__ or "").splitlines()[0])
        p.add_argument("--model", required=True, help="model JSON file")
        p.add_argument("--out", default=None,
                       help="directory for report.json and CSV tables")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--tol", action="append", metavar="NAME=VALUE",
                       help="override a named tolerance (repeatable)")
        p.add_argument("--lambda-list", dest="lambda_list", default=None,
                       help="comma-separated coupling ladder")
        p.add_argument("--grid", default=None, metavar="R,N",
                       help="single reservoir grid override")
        p.add_argument("--nmax", type=int, default=None,
                       help="Fock truncation override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command]
    try:
        report = func(args.model, out=None, seed=args.seed,
                      tols=_parse_tols(args.tol),
                      lambdas=_parse_lambdas(args.lambda_list),
                      grid=_parse_grid(args.grid), nmax=args.nmax)
    except InputError as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2

    for check in report.checks:
        line = "%-4s %s" % (check.status.upper(), check.name)
        if check.residual is not None:
            line += "  residual=%.3e" % check.residual
        if check.tolerance is not None:
            line += "  tol=%.3e" % check.tolerance
        if check.detail:
            line += "  (%s)" % check.detail
        print(line)
    if report.error is not None:
        print("ERROR %(type)s: %(message)s" % report.error, file=sys.stderr)
    for name, rows in report.tables.items():
        print("table %s: %d rows" % (name, len(rows)))
    if args.out:
        for path in write_outputs(report, args.out):
            print("wrote %s" % path)
    print("%s: %s in %.2f s"
          % (report.model, "ok" if report.passed() else "FAILED",
             report.wall_time_s))
    return report.exit_code()


if __name__ == "__main__":
    sys.exit(main())
