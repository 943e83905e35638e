"""Lenient JSON extraction followed by strict schema validation."""
from __future__ import annotations

import json
import re

import jsonschema


class StructuredParseError(ValueError):
    def __init__(self, message: str, field_path: str | None = None):
        self.field_path = field_path
        super().__init__(message if field_path is None else f"{message} (at {field_path})")


def extract_json(text: str):
    """First JSON object or array embedded in possibly prose-wrapped text."""
    text = text.strip()
    # fenced code blocks first
    fence = re.search(r"```(?:json)?\s*(.*?)```", text, re.DOTALL)
    if fence:
        text = fence.group(1).strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    decoder = json.JSONDecoder()
    for match in re.finditer(r"[\{\[]", text):
        try:
            value, _ = decoder.raw_decode(text[match.start():])
            return value
        except json.JSONDecodeError:
            continue
    raise StructuredParseError("no JSON value found in response")


def parse_structured(raw: str, schema: dict):
    """Value from `raw` validating against `schema`, or StructuredParseError."""
    value = extract_json(raw)
    try:
        jsonschema.validate(value, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise StructuredParseError(exc.message, field_path=path) from exc
    return value
