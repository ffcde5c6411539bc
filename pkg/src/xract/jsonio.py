"""Canonical JSON rendering.

Every artifact this package writes goes through one of these two functions so
that repeated runs over identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any


def dumps_compact(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def json_num(x: float) -> Any:
    """Integral values as JSON ints (2 not 2.0), so numeric wire tokens match
    their shortest cross-language rendering."""
    xf = float(x)
    if xf.is_integer() and abs(xf) < 1e15:
        return int(xf)
    return xf


def dumps_pretty(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2) + "\n"


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write via a sibling temp file and rename, so readers and crash-recovery
    never observe a half-written file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def clean_stale_tmp(root: Path) -> None:
    """Remove temp files left behind by an interrupted atomic write."""
    if not root.exists():
        return
    for p in root.rglob("*.tmp"):
        if p.name.startswith("."):
            p.unlink(missing_ok=True)
