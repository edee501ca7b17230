"""JSON schemas for model, exact-model and flow-scenario files."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator

from nq_ricci.errors import SchemaError

_EXPR = {"type": "string", "minLength": 1}
_SIGNS = {"type": "array", "items": {"enum": [1, -1]}}
_REALS = {"type": "array", "items": {"type": "number"}}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _EXPR}}
_COMPONENT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["indices", "expr"],
    "properties": {
        "indices": {"type": "array", "items": {"type": "integer", "minimum": 1},
                    "minItems": 3, "maxItems": 3},
        "expr": _EXPR,
    },
}

MODEL_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["base_dim", "rank_plus", "rank_minus", "signature_plus", "signature_minus",
                 "base_point", "jet_order", "rho"],
    "properties": {
        "base_dim": {"type": "integer", "minimum": 0},
        "rank_plus": {"type": "integer", "minimum": 0},
        "rank_minus": {"type": "integer", "minimum": 0},
        "signature_plus": _SIGNS,
        "signature_minus": _SIGNS,
        "base_point": _REALS,
        "jet_order": {"type": "integer", "minimum": 0},
        "rho": _MATRIX,
        "c": {"type": "array", "items": _COMPONENT},
        "psi": {"type": "array", "items": _MATRIX},
        "invariant_torsion": {
            "type": "object",
            "additionalProperties": False,
            "oneOf": [{"required": ["psi_plus"]}, {"required": ["lambda"]}],
            "properties": {
                "psi_plus": {"type": "array", "items": _MATRIX},
                "lambda": {"type": "array", "items": _EXPR},
            },
        },
    },
    "not": {"required": ["psi", "invariant_torsion"]},
}

EXACT_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["dim", "metric", "base_point", "jet_order"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "metric": _MATRIX,
        "eta": {"type": "array", "items": _COMPONENT},
        "base_point": _REALS,
        "jet_order": {"type": "integer", "minimum": 2},
    },
}

FLOW_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "dt", "steps"],
    "properties": {
        "model": {k: v for k, v in MODEL_SCHEMA.items() if k != "$schema"},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "steps": {"type": "integer", "minimum": 0},
        "direction": {"enum": ["forward", "backward"]},
        "lambda": _REALS,
        "frame": {"type": "array", "items": _REALS},
    },
}

SCHEMAS = {"model": MODEL_SCHEMA, "exact": EXACT_SCHEMA, "flow": FLOW_SCHEMA}


def validate(data: Any, kind: str) -> dict[str, Any]:
    """Validate against one of SCHEMAS; the first error becomes a SchemaError."""
    validator = Draft202012Validator(SCHEMAS[kind])
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(f"{kind} file invalid at {where}: {err.message}")
    return data


def load_json(path: str | Path, kind: str) -> dict[str, Any]:
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise SchemaError(f"{p} not found") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{p} is not valid JSON: {exc}") from exc
    return validate(data, kind)
