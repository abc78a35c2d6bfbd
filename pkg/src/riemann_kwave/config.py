"""Run configuration: a JSON document validated against a published schema.

Every key is optional so that a config can hold just the settings shared by
several subcommands; command-line flags override config values.  Unknown keys
are rejected anywhere in the document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import jsonschema

from .errors import ConfigError

_AXIS = {
    "type": "object",
    "properties": {"min": {"type": "number"}, "max": {"type": "number"}, "n": {"type": "integer", "minimum": 1}},
    "required": ["min", "max", "n"],
    "additionalProperties": False,
}
_GRID = {"oneOf": [{"type": "string"}, {"type": "array", "items": _AXIS, "minItems": 1}]}
_VECTOR = {"oneOf": [{"type": "string"}, {"type": "array", "items": {"type": "number"}, "minItems": 1}]}

_PROFILE = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["linear", "gaussian", "polynomial"]},
        "slope": {"type": "array", "items": {"type": "number"}},
        "offset": {"type": "number"},
        "amplitude": {"type": "number"},
        "center": {"type": "array", "items": {"type": "number"}},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "powers": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    "coef": {"type": "number"},
                },
                "required": ["powers", "coef"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["kind"],
    "additionalProperties": False,
}

RUN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": "riemann-kwave/run-config/1",
    "title": "riemann-kwave run configuration",
    "type": "object",
    "properties": {
        "schema_version": {"const": 1},
        "model": {
            "type": "object",
            "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
            "required": ["name"],
            "additionalProperties": False,
        },
        "frame": {
            "type": "object",
            "properties": {
                "selectors": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "tracked": {"type": "boolean"},
            },
            "required": ["selectors"],
            "additionalProperties": False,
        },
        "base_state": _VECTOR,
        "rgrid": _GRID,
        "xgrid": _GRID,
        "profiles": {"type": "array", "items": _PROFILE, "minItems": 1},
        "newton": {
            "type": "object",
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "damping": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "max_halvings": {"type": "integer", "minimum": 0},
                "singular_cond": {"type": "number", "exclusiveMinimum": 1},
            },
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "residual": {"type": "number", "exclusiveMinimum": 0},
                "rank": {"type": "number", "exclusiveMinimum": 0},
                "involutivity": {"type": "number", "exclusiveMinimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "eps": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "outputs": {
            "type": "object",
            "properties": {
                "solution": {"type": "string"},
                "samples": {"type": "string"},
                "report": {"type": "string"},
                "symmetry": {"type": "string"},
                "plot": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer"},
        "samples": {"type": "integer", "minimum": 1},
        "threads": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}


def _escape(token) -> str:
    return str(token).replace("~", "~0").replace("/", "~1")


def _pointer(path) -> str:
    return "".join("/" + _escape(p) for p in path)


def _error_pointer(err: jsonschema.ValidationError) -> str:
    path = list(err.absolute_path)
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in allowed)
        if extra:
            path.append(extra[0])
    return _pointer(path) or "/"


def validate_config(doc) -> dict:
    """Validate ``doc`` against :data:`RUN_CONFIG_SCHEMA`.

    Raises
    ------
    ConfigError
        With ``pointer`` set to the JSON pointer of the offending key.
    """
    validator = jsonschema.Draft202012Validator(RUN_CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (_error_pointer(e), e.validator))
    if errors:
        err = errors[0]
        ptr = _error_pointer(err)
        raise ConfigError(f"config error at {ptr}: {err.message}", pointer=ptr)
    return doc


@dataclass
class RunConfig:
    """A validated configuration document; ``get`` reads nested keys."""

    data: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc) -> "RunConfig":
        return cls(validate_config(doc))

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}", pointer="") from None
        return cls.from_dict(doc)

    def get(self, *keys, default=None):
        node = self.data
        for key in keys:
            if not isinstance(node, dict) or key not in node:
                return default
            node = node[key]
        return node
