"""Named JSON schemas that every chat reply must validate against."""

from __future__ import annotations

import jsonschema

from ..errors import ProtocolViolation

_BOX = {
    "type": "object",
    "properties": {
        "x_min": {"type": "integer", "minimum": 0},
        "y_min": {"type": "integer", "minimum": 0},
        "x_max": {"type": "integer", "minimum": 0},
        "y_max": {"type": "integer", "minimum": 0},
    },
    "required": ["x_min", "y_min", "x_max", "y_max"],
    "additionalProperties": False,
}

SCHEMAS: dict[str, dict] = {
    "task_decomposition": {
        "type": "object",
        "properties": {
            "subtasks": {
                "type": "array",
                "items": {"type": "string", "minLength": 1},
                "minItems": 1,
            }
        },
        "required": ["subtasks"],
        "additionalProperties": False,
    },
    "sufficiency": {
        "type": "object",
        "properties": {
            "need": {"enum": ["none", "semantic", "spatial"]},
            "detail": {"type": "string"},
        },
        "required": ["need"],
        "additionalProperties": False,
        "if": {"properties": {"need": {"const": "none"}}},
        "then": {},
        "else": {
            "required": ["need", "detail"],
            "properties": {"detail": {"type": "string", "minLength": 1}},
        },
    },
    "spatial_program": {
        "type": "object",
        "properties": {
            "statements": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "attr": {"type": "string", "minLength": 1},
                        "expr": {"type": "string", "minLength": 1},
                    },
                    "required": ["attr", "expr"],
                    "additionalProperties": False,
                },
                "minItems": 1,
                "maxItems": 32,
            }
        },
        "required": ["statements"],
        "additionalProperties": False,
    },
    "edit_resolution": {
        "type": "object",
        "properties": {
            "target_ids": {"type": "array", "items": {"type": "integer"}},
            "instruction": {"type": "string", "minLength": 1},
            "op": {"enum": ["add", "remove", "replace"]},
            "placement_box": _BOX,
        },
        "required": ["instruction", "op"],
        "additionalProperties": False,
        "allOf": [
            {
                "if": {"properties": {"op": {"const": "add"}}},
                "then": {"required": ["placement_box"]},
                "else": {
                    "required": ["target_ids"],
                    "properties": {"target_ids": {"minItems": 1}},
                },
            }
        ],
    },
    "idcs_description": {
        "type": "object",
        "properties": {"description": {"type": "string", "minLength": 1}},
        "required": ["description"],
        "additionalProperties": False,
    },
    "idcs_score": {
        "type": "object",
        "properties": {"score": {"type": "integer", "minimum": 1, "maximum": 5}},
        "required": ["score"],
        "additionalProperties": False,
    },
}


def validate_payload(schema_name: str, payload) -> None:
    """Raise jsonschema.ValidationError when the payload misses the named schema."""
    if schema_name not in SCHEMAS:
        raise ProtocolViolation(f"unknown chat schema {schema_name!r}")
    jsonschema.validate(payload, SCHEMAS[schema_name])


def known_schema(schema_name: str) -> bool:
    return schema_name in SCHEMAS
