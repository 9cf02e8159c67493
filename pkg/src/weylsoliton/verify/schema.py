"""JSON schemas for configurations, chart manifests and reports."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema


class ConfigError(ValueError):
    """Invalid configuration; maps to exit status 2."""


_BOX = {
    "type": "array",
    "minItems": 2,
    "maxItems": 2,
    "items": {"type": "array", "minItems": 4, "maxItems": 4, "items": {"type": "number"}},
}

POLICY_SCHEMA = {
    "type": "object",
    "properties": {
        "mode": {"enum": ["analytic", "fd"]},
        "order": {"enum": [2, 4, 6]},
        "step": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["mode"],
    "additionalProperties": False,
}

CHART_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "builder": {"type": "string"},
        "params": {"type": "object"},
        "metric": {
            "type": "array",
            "minItems": 4,
            "maxItems": 4,
            "items": {"type": "array", "minItems": 4, "maxItems": 4, "items": {"type": ["string", "number"]}},
        },
        "potential": {"type": ["string", "number"]},
        "lam": {"type": ["number", "null"]},
        "soliton": {"type": "boolean"},
        "coordinates": {"type": "array", "minItems": 4, "maxItems": 4, "items": {"type": "string"}},
        "box": _BOX,
        "policy": POLICY_SCHEMA,
    },
    "required": ["name"],
    "oneOf": [{"required": ["builder"], "not": {"required": ["metric"]}},
              {"required": ["metric", "box"], "not": {"required": ["builder"]}}],
    "additionalProperties": False,
}

_SUITES = ["algebraic", "differential", "conformal", "flow", "all"]

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "verification suite configuration and chart manifest",
    "type": "object",
    "properties": {
        "suite": {"enum": _SUITES},
        "manifolds": {"type": ["array", "null"], "items": {"type": "string"}},
        "points": {"type": ["integer", "null"], "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "fd_order": {"enum": [2, 4, 6]},
        "fd_step": {"type": "number", "exclusiveMinimum": 0},
        "tol_scale": {"type": "number", "exclusiveMinimum": 0},
        "overrides": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
        "report": {"type": ["string", "null"]},
        "charts": {"type": "array", "items": CHART_SCHEMA},
    },
    "additionalProperties": False,
}

_RECORD = {
    "type": "object",
    "properties": {
        "check_id": {"type": "string", "minLength": 1},
        "reference": {"type": "string", "minLength": 1},
        "manifold": {"type": "string"},
        "point": {"oneOf": [{"type": "integer", "minimum": 0},
                            {"type": "array", "minItems": 4, "maxItems": 4, "items": {"type": "number"}}]},
        "residual": {"type": "number"},
        "tolerance": {"type": "number"},
        "passed": {"type": "boolean"},
        "runtime_ms": {"type": "number", "minimum": 0},
        "detail": {"type": "string"},
    },
    "required": ["check_id", "reference", "manifold", "point", "residual", "tolerance", "passed", "runtime_ms"],
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "verification report",
    "type": "object",
    "properties": {
        "header": {
            "type": "object",
            "properties": {
                "tool": {"type": "string"},
                "config": CONFIG_SCHEMA,
                "versions": {"type": "object", "additionalProperties": {"type": "string"}},
                "timestamp": {"type": "string"},
            },
            "required": ["config", "versions", "timestamp"],
        },
        "summary": {"type": "object"},
        "records": {"type": "array", "items": _RECORD},
    },
    "required": ["header", "records"],
}


def _check(instance, schema, what):
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid {what} at {where}: {exc.message}") from None


def validate_config(d: dict) -> None:
    _check(d, CONFIG_SCHEMA, "configuration")


def validate_report(d: dict) -> None:
    _check(d, REPORT_SCHEMA, "report")


def write_schemas(directory) -> list[Path]:
    """Write ``config_schema.json`` and ``report_schema.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, s in (("config_schema.json", CONFIG_SCHEMA), ("report_schema.json", REPORT_SCHEMA)):
        p = directory / name
        p.write_text(json.dumps(s, indent=2, ensure_ascii=False) + "\n")
        out.append(p)
    return out
