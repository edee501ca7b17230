from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from nq_ricci.errors import SchemaError
from nq_ricci.report import dumps_report, render_pretty


def parse_point(text: str) -> tuple[float, ...]:
    """'0.5,1' -> (0.5, 1.0); an empty string is the point of a 0-dimensional base."""
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid point {text!r}: {exc}") from exc


def add_input_arguments(parser: argparse.ArgumentParser, points: bool = True) -> None:
    parser.add_argument("input", help="Path to the JSON input file")
    if points:
        parser.add_argument("--point", action="append", type=parse_point, default=None,
                            help="Base point override, comma separated (repeatable)")
    parser.add_argument("--tol", type=float, default=None, help="Tolerance override")
    fmt = parser.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="pretty", action="store_false",
                     help="Canonical JSON on stdout (default)")
    fmt.add_argument("--pretty", dest="pretty", action="store_true",
                     help="Render the report as tables")
    parser.set_defaults(pretty=False)
    parser.add_argument("--out", default=None, help="Also write the JSON report to this path")


def check_point(point: Sequence[float], dim: int) -> None:
    if len(point) != dim:
        raise SchemaError(f"--point has {len(point)} entries but the base dimension is {dim}")


def per_point(args: argparse.Namespace, default: Sequence[float], dim: int,
              fn: Callable[[tuple[float, ...]], tuple[dict[str, Any], bool]]
              ) -> tuple[dict[str, Any], bool]:
    """Run `fn` at every --point (or the file's base point); reports keep input order."""
    points = args.point or [tuple(default)]
    for p in points:
        check_point(p, dim)
    results = [fn(tuple(p)) for p in points]
    ok = all(passed for _, passed in results)
    if len(results) == 1:
        return results[0][0], ok
    return {"points": [report for report, _ in results]}, ok


def emit(report: dict[str, Any], args: argparse.Namespace) -> None:
    text = dumps_report(report)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(render_pretty(report) if args.pretty else text)


def status(ok: bool, good: str, bad: str) -> int:
    print(f"✅ {good}" if ok else f"❌ {bad}", file=sys.stderr)
    return 0 if ok else 1
