#!/usr/bin/env python3
# Delegate to the command smoke so we keep the ✅ logs.
import pathlib
import runpy
import sys

sys.exit(
    runpy.run_path(
        str(pathlib.Path(__file__).with_name("smoke_commands.py")),
        run_name="__main__"
    ) or 0
)
