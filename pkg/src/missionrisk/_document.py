"""Strict JSON document access shared by the catalog, mission and assessment
loaders.

Every reader rejects unknown top-level and nested keys, reports errors with a
path to the offending key, and refuses duplicate keys inside a single JSON
object (the second occurrence would silently win under plain ``json.loads``).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, BinaryIO

from .errors import IntegrityError, SchemaError

SCHEMA_VERSION = 1


def _no_duplicate_keys(pairs: list[tuple[str, Any]]) -> dict[str, Any]:
    obj: dict[str, Any] = {}
    for key, value in pairs:
        if key in obj:
            raise IntegrityError(f"duplicate key {key!r} in one object")
        obj[key] = value
    return obj


def read_json(source: str | Path | bytes | BinaryIO) -> Any:
    """Parse JSON from a path, raw bytes, or a binary stream.

    ``str`` and ``Path`` are treated as filesystem paths; pass ``bytes`` for
    in-memory content.  Duplicate keys raise IntegrityError.
    """
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    try:
        return json.loads(data.decode("utf-8"), object_pairs_hook=_no_duplicate_keys)
    except UnicodeDecodeError as exc:
        raise SchemaError("", f"document is not UTF-8: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"document is not valid JSON: {exc}") from exc


def as_object(value: Any, path: str) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected an object, got {type(value).__name__}")
    return value


def as_array(value: Any, path: str) -> list[Any]:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected an array, got {type(value).__name__}")
    return value


def as_string(value: Any, path: str, allow_empty: bool = False) -> str:
    if not isinstance(value, str):
        raise SchemaError(path, f"expected a string, got {type(value).__name__}")
    if not allow_empty and not value.strip():
        raise SchemaError(path, "string must be non-empty")
    return value


def as_int(value: Any, path: str) -> int:
    # bool is a subclass of int and must not slip through here
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {type(value).__name__}")
    return value


def require(obj: dict[str, Any], key: str, path: str) -> Any:
    if key not in obj:
        raise SchemaError(path, f"missing required key {key!r}")
    return obj[key]


def reject_unknown(obj: dict[str, Any], allowed: set[str], path: str) -> None:
    extra = [key for key in obj if key not in allowed]
    if extra:
        raise SchemaError(path, f"unknown key {extra[0]!r}")


def check_schema_version(obj: dict[str, Any], path: str = "schema") -> None:
    version = as_int(require(obj, "schema", path), path)
    if version != SCHEMA_VERSION:
        raise SchemaError(path, f"unsupported schema version {version}, expected {SCHEMA_VERSION}")
