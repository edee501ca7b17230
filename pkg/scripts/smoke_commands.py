#!/usr/bin/env python3
"""
Smoke test for commands.yaml:
- Adds repo root to sys.path for local runs
- Imports each subcommand module and checks its add_arguments/run contract
- Runs `validate` on every model fixture and expects the exit code in FIXTURE_CODES
- Exits 1 with clear messages if anything fails
"""

import contextlib
import importlib
import io
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parents[1]
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

try:
    from nq_ricci import cli
    from nq_ricci.utils.command_loader import contract_problems, load_registry
except ImportError as e:
    print(f"nq_ricci not importable ({e}). Run: pip install -r requirements.txt", file=sys.stderr)
    sys.exit(2)

FIXTURE_CODES = {
    "so3_point.json": 0,
    "so3_double.json": 0,
    "invariant_torsion.json": 0,
    "torsion_perturbed.json": 0,
    "isotropy_violation.json": 1,
    "broken_jacobi.json": 1,
}


def _quiet_main(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main(argv)
    return code, err.getvalue().strip()


def main():
    failures = []
    entries = load_registry()
    for i, entry in enumerate(entries, 1):
        try:
            mod = importlib.import_module(entry.module)
        except Exception as e:
            failures.append(f"[{i}] Failed to import {entry.key} ({entry.module}): {e}")
            continue
        problems = contract_problems(mod)
        if problems:
            failures.append(f"[{i}] {entry.key}: {'; '.join(problems)}")
            continue
        print(f"Imported: {entry.key} ({entry.module}) ✅   [{entry.label} | {entry.section}]")

    for name, expected in FIXTURE_CODES.items():
        code, err = _quiet_main(["validate", str(REPO_ROOT / "fixtures" / name)])
        if code != expected:
            failures.append(f"validate {name}: exit {code}, expected {expected} ({err})")
        else:
            print(f"validate {name}: exit {code} ✅")

    if failures:
        print("\n--- Smoke Failures ---", file=sys.stderr)
        for f in failures:
            print(f, file=sys.stderr)
        sys.exit(1)

    print(f"\nAll {len(entries)} commands and {len(FIXTURE_CODES)} fixtures OK ✅")
    return 0


if __name__ == "__main__":
    sys.exit(main())
