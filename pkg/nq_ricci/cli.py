"""
nq-ricci command line.

Exit codes: 0 success, 1 validation failure, 2 input/schema error,
3 numeric error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from nq_ricci.errors import NQRicciError
from nq_ricci.settings import use_settings
from nq_ricci.utils.command_loader import import_command, load_registry


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nq-ricci",
        description="Generalized Ricci tensors of degree-2 NQ symplectic manifolds",
    )
    parser.add_argument("--settings", default=None, help="Alternative settings.yaml")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for entry in load_registry():
        mod = import_command(entry)
        p = sub.add_parser(entry.key, help=entry.description, description=entry.description)
        mod.add_arguments(p)
        p.set_defaults(handler=mod.run)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    use_settings(args.settings)
    try:
        return args.handler(args)
    except NQRicciError as exc:
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
