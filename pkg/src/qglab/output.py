"""Deterministic report emission: CSV/JSON with fixed float formatting and a
manifest recording the configuration hash."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

from . import __version__

__all__ = ["fmt", "write_csv", "write_json", "write_manifest"]


def fmt(x) -> str:
    """17-significant-digit, round-trip-exact rendering of a float."""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, float):
        # normalize through the fixed rendering so output is byte-stable
        return float.fromhex(float(fmt(obj)).hex()) if obj == obj else None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _dump(obj, indent: int) -> str:
    pad = " " * indent
    if isinstance(obj, float):
        # NaN/inf are not valid JSON scalars
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad} {json.dumps(str(k))}: {_dump(v, indent + 1)}' for k, v in sorted(obj.items())
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(f"{pad} {_dump(v, indent + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    return json.dumps(obj)


def write_json(path, obj) -> None:
    Path(path).write_text(_dump(obj, 0) + "\n")


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_manifest(out_dir, command: str, config: dict, artifacts: list[str]) -> None:
    canon = json.dumps(_jsonable(config), sort_keys=True, default=str)
    digest = hashlib.sha256(canon.encode()).hexdigest()
    write_json(
        Path(out_dir) / "manifest.json",
        {
            "artifact_version": __version__,
            "command": command,
            "config_hash": digest,
            "config": _jsonable(config),
            "artifacts": sorted(artifacts),
        },
    )
