"""Command-line scenario runner.

``leakycavity run scenario.ini [--engine rwa|oracle|both] [--out path]``

Exit codes: 0 success, 1 invalid scenario, 2 numerical failure, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from typing import Optional, Sequence

from . import scenario as sc
from .errors import ScenarioError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

#: modules whose ValueErrors still mean a numerical rather than input failure
_NUMERICAL_MODULES = ("oracle",)


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation code instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="leakycavity", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="evaluate a scenario file and write the result CSV")
    r.add_argument("scenario", help="scenario file (key = value, [sections])")
    r.add_argument("--engine", choices=[e.value for e in sc.Engine],
                   help="override [output] engine")
    r.add_argument("--out", help="CSV path (overrides [output] path; '-' for stdout)")
    r.add_argument("--jobs", type=int, help="worker processes for sweeps")
    r.add_argument("-q", "--quiet", action="store_true", help="no summary on stderr")
    return p


def _err(msg: str) -> None:
    print(f"leakycavity: {msg}", file=sys.stderr)


def _summary(rows) -> str:
    first = rows[0].values
    w = first["omega_L"]
    lines = [f"{len(rows)} row(s); Omega_L = {w:.6g} 1/m = {w * sc.SPEED_OF_LIGHT / 1e9:.6g} "
             f"Grad/s (f = {w * sc.SPEED_OF_LIGHT / (2e9 * math.pi):.6g} GHz), Q = {first['Q']:.6g}"]
    if first["regime"] is not None:
        lines.append(f"regime {first['regime']}, xi = {first['xi']:.6g} 1/m, "
                     f"chi = {first['chi']:.6g} 1/m")
    return "\n".join(lines)


def run_command(args) -> int:
    try:
        with open(args.scenario, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        _err(f"cli: cannot read scenario: {exc}")
        return EXIT_IO
    try:
        scn = sc.parse_scenario(text)
        engine = sc.parse_engine(args.engine) if args.engine else None
        scn = sc.with_overrides(scn, engine=engine, output_path=args.out, jobs=args.jobs)
    except ScenarioError as exc:
        _err(f"scenario: {exc}")
        return EXIT_VALIDATION
    try:
        rows = sc.run(scn)
    except sc.StageFailure as exc:
        _err(f"{exc.module}: {type(exc.error).__name__}: {exc.error}")
        numerical = isinstance(exc.error, ArithmeticError) or exc.module in _NUMERICAL_MODULES
        return EXIT_NUMERICAL if numerical else EXIT_VALIDATION
    text = sc.format_csv(rows)
    path = scn.output_path
    try:
        if path is None or path == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        _err(f"cli: cannot write {path}: {exc}")
        return EXIT_IO
    if not args.quiet:
        print(_summary(rows), file=sys.stderr)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    if args.command == "run":
        return run_command(args)
    return EXIT_VALIDATION  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
