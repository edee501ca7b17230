from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any

import yaml

REPO_ROOT = Path(__file__).resolve().parents[1]
SETTINGS_FILE = REPO_ROOT / "settings.yaml"


@dataclass(frozen=True)
class Settings:
    master_constant: float = 1e-10
    master_transcendental: float = 1e-8
    agreement: float = 1e-9
    agreement_transcendental: float = 1e-7
    end2: float = 1e-8
    torsion_invariance: float = 1e-10
    compare_exact: float = 1e-6
    orthonormality: float = 1e-9
    fd_step_scale: float = 1e-4
    pivot_floor: float = 1e-12
    flow_direction: str = "forward"


def load_yaml(p: Path) -> dict:
    if not p.exists():
        return {}
    return yaml.safe_load(p.read_text(encoding="utf-8")) or {}


def _section(data: dict, key: str) -> dict[str, Any]:
    value = data.get(key) or {}
    if not isinstance(value, dict):
        raise TypeError(f"settings section '{key}' must be a mapping")
    return value


_active_path: str | None = None


def use_settings(path: str | None) -> None:
    """Make `path` the settings file read by later `load_settings()` calls."""
    global _active_path
    _active_path = path


def load_settings(path: str | None = None) -> Settings:
    return _load(path or _active_path)


@lru_cache(maxsize=None)
def _load(path: str | None) -> Settings:
    """Read settings.yaml (or `path`); absent keys keep their defaults."""
    data = load_yaml(Path(path) if path else SETTINGS_FILE)
    tol = _section(data, "tolerances")
    fd = _section(data, "finite_difference")
    frames = _section(data, "frames")
    flow = _section(data, "flow")
    base = Settings()
    direction = str(flow.get("direction", base.flow_direction))
    if direction not in ("forward", "backward"):
        raise ValueError(f"flow.direction must be forward|backward, got {direction!r}")
    return Settings(
        master_constant=float(tol.get("master_constant", base.master_constant)),
        master_transcendental=float(tol.get("master_transcendental", base.master_transcendental)),
        agreement=float(tol.get("agreement", base.agreement)),
        agreement_transcendental=float(
            tol.get("agreement_transcendental", base.agreement_transcendental)
        ),
        end2=float(tol.get("end2", base.end2)),
        torsion_invariance=float(tol.get("torsion_invariance", base.torsion_invariance)),
        compare_exact=float(tol.get("compare_exact", base.compare_exact)),
        orthonormality=float(tol.get("orthonormality", base.orthonormality)),
        fd_step_scale=float(fd.get("step_scale", base.fd_step_scale)),
        pivot_floor=float(frames.get("pivot_floor", base.pivot_floor)),
        flow_direction=direction,
    )
