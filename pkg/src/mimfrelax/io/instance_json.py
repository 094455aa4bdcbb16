"""Strict JSON form of benchmark instances (schema version ``"1"``)."""
from __future__ import annotations

import json
import math
from dataclasses import fields
from typing import Any, Dict

from ..bench import Instance

VERSION = "1"
_FIELDS = [f.name for f in fields(Instance)]


class SchemaError(ValueError):
    pass


def instance_to_dict(instance: Instance) -> Dict[str, Any]:
    d: Dict[str, Any] = {"version": VERSION}
    for name in _FIELDS:
        value = getattr(instance, name)
        d[name] = list(value) if isinstance(value, list) else value
    return d


def dump_instance(instance: Instance, indent: int = 2) -> str:
    return json.dumps(instance_to_dict(instance), indent=indent) + "\n"


def _check_real(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(f"field {name!r} must be a finite number, got {value!r}")
    return float(value)


def _check_int(name: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"field {name!r} must be an integer, got {value!r}")
    return value


def instance_from_dict(d: Dict[str, Any]) -> Instance:
    if not isinstance(d, dict):
        raise SchemaError("instance JSON must be an object")
    expected = {"version", *_FIELDS}
    missing = [k for k in ["version"] + _FIELDS if k not in d]
    if missing:
        raise SchemaError(f"missing field(s): {', '.join(missing)}")
    extra = sorted(set(d) - expected)
    if extra:
        raise SchemaError(f"unknown field(s): {', '.join(extra)}")
    if d["version"] != VERSION:
        raise SchemaError(f"unsupported version {d['version']!r}, expected {VERSION!r}")
    kwargs: Dict[str, Any] = {}
    for name in ("n", "k", "seed"):
        kwargs[name] = _check_int(name, d[name])
    kwargs["demand"] = _check_real("demand", d["demand"])
    for name in ("c", "d", "lower", "upper"):
        vec = d[name]
        if not isinstance(vec, list):
            raise SchemaError(f"field {name!r} must be a list")
        kwargs[name] = [_check_real(f"{name}[{i}]", v) for i, v in enumerate(vec)]
    try:
        return Instance(**kwargs)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


def load_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return instance_from_dict(data)
