"""Shipped JSON schemas and a thin validation wrapper."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

SchemaValidationError = jsonschema.ValidationError


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("detbench").joinpath(f"schemas/{name}").read_text("utf-8")
    return json.loads(text)


def validate(obj, schema_name: str) -> None:
    """Raises SchemaValidationError when obj does not match the schema."""
    jsonschema.validate(obj, load_schema(schema_name))
