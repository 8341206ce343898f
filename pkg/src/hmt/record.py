"""Self-describing JSON run records and their versioned schema."""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
from pathlib import Path

import jsonschema

from . import __version__

SCHEMA_ID = "hmt.run-record/1"

_NUMBER_OR_NULL = {"type": ["number", "null"]}

RUN_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "$id": SCHEMA_ID,
    "type": "object",
    "required": ["schema", "artifact_version", "command", "params", "outputs", "timestamp"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "artifact_version": {"type": "string"},
        "command": {"enum": ["solve", "eigen", "green", "bubble", "testfn", "sweep", "verify"]},
        "params": {
            "type": "object",
            "properties": {
                "beta": _NUMBER_OR_NULL,
                "alpha": _NUMBER_OR_NULL,
                "eps": {"type": ["number", "array", "null"]},
                "n": {"type": ["integer", "null"]},
                "grading": {"type": ["array", "null"], "items": {"type": "number"}},
                "seed": {"type": ["integer", "null"]},
            },
        },
        "outputs": {"type": "object"},
        "timestamp": {"type": ["string", "null"]},
    },
}


def timestamp() -> str | None:
    """UTC time taken from ``SOURCE_DATE_EPOCH`` when set, else ``None``.

    Wall-clock time is never recorded, so reruns produce identical bytes.
    """
    raw = os.environ.get("SOURCE_DATE_EPOCH")
    if raw is None or raw.strip() == "":
        return None
    when = _dt.datetime.fromtimestamp(int(raw), tz=_dt.timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def _clean(obj):
    """Replace non-finite floats by ``None`` and tuples by lists, recursively."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _clean(obj.item())
    return obj


def make_record(command: str, params: dict, outputs: dict) -> dict:
    record = {
        "schema": SCHEMA_ID,
        "artifact_version": __version__,
        "command": command,
        "params": _clean(params),
        "outputs": _clean(outputs),
        "timestamp": timestamp(),
    }
    jsonschema.validate(record, RUN_SCHEMA)
    return record


def dumps(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_record(record: dict, path: str | Path) -> None:
    jsonschema.validate(record, RUN_SCHEMA)
    Path(path).write_text(dumps(record), encoding="utf-8", newline="\n")
