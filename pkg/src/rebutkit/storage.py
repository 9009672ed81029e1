"""Run-artifact interchange: deterministic JSON files with atomic writes."""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from pathlib import Path
from typing import Any

from .errors import SchemaViolation

_FENCED_JSON_RE = re.compile(r"```(?:json)?\s*(\{.*?\})\s*```", re.DOTALL)


def extract_json_object(text: str) -> dict:
    """First JSON object in model output; a fenced block wins over bare braces."""
    m = _FENCED_JSON_RE.search(text)
    raw = m.group(1) if m else None
    if raw is None:
        m = re.search(r"\{.*\}", text, re.DOTALL)
        raw = m.group(0) if m else None
    if raw is None:
        raise SchemaViolation("output", "no JSON object found")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaViolation("output", f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaViolation("output", "JSON value is not an object")
    return data


def canonical_json(payload: Any) -> str:
    """Stable single-line form used for hashing."""
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def pretty_json(payload: Any) -> str:
    """Stable human-diffable form used for all persisted artifacts."""
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def content_hash(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def atomic_write_text(path: Path, text: str) -> None:
    """Write-then-rename so readers never observe a partial file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def write_json(path: Path, payload: Any) -> None:
    atomic_write_text(path, pretty_json(payload))


def read_json(path: Path) -> Any:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)
