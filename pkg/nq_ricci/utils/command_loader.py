from __future__ import annotations

import importlib
import inspect
from dataclasses import dataclass
from pathlib import Path
from types import ModuleType

from nq_ricci.settings import REPO_ROOT, load_yaml

COMMANDS_FILE = REPO_ROOT / "commands.yaml"


@dataclass(frozen=True)
class CommandEntry:
    key: str
    module: str
    label: str = ""
    section: str = ""
    description: str = ""


def load_registry(path: Path = COMMANDS_FILE) -> list[CommandEntry]:
    """
    Entries of commands.yaml, either a top-level list or {'commands': [...]}.
    Raises ValueError on missing or duplicate keys.
    """
    data = load_yaml(path)
    if isinstance(data, dict):
        data = data.get("commands", [])
    if not isinstance(data, list):
        raise ValueError(f"{path.name} must be a list or a mapping with a 'commands' key")
    entries: list[CommandEntry] = []
    seen: set[str] = set()
    for i, raw in enumerate(data, 1):
        key, module = raw.get("key"), raw.get("module")
        if not key or not module:
            raise ValueError(f"[{i}] missing key/module in entry: {raw!r}")
        if key in seen:
            raise ValueError(f"[{i}] duplicate key '{key}' in {path.name}")
        seen.add(key)
        entries.append(CommandEntry(key, module, raw.get("label", ""), raw.get("section", ""),
                                    raw.get("description", "")))
    return entries


def contract_problems(mod: ModuleType) -> list[str]:
    """What keeps `mod` from being a subcommand: add_arguments(parser) and run(args)."""
    problems = []
    for name in ("add_arguments", "run"):
        fn = getattr(mod, name, None)
        if not callable(fn):
            problems.append(f"missing a callable `{name}()`")
            continue
        required = [
            p for p in inspect.signature(fn).parameters.values()
            if p.default is inspect.Parameter.empty
            and p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)
        ]
        if len(required) != 1:
            problems.append(f"`{name}()` must take exactly one required argument")
    return problems


def import_command(entry: CommandEntry) -> ModuleType:
    mod = importlib.import_module(entry.module)
    problems = contract_problems(mod)
    if problems:
        raise ImportError(f"command '{entry.key}' ({entry.module}): {'; '.join(problems)}")
    return mod
