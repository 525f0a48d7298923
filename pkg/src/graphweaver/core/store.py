"""JSON document persistence with advisory file locking."""

from __future__ import annotations

import fcntl
import json
from pathlib import Path
from typing import Any

from graphweaver.core.errors import GraphParseError


def dumps(data: Any) -> str:
    """Serialize *data* deterministically (insertion-ordered keys, two-space indent)."""
    return json.dumps(data, indent=2) + "\n"


def write_json(path: Path, data: Any) -> None:
    """Write *data* to *path* under an exclusive lock, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        fcntl.flock(f, fcntl.LOCK_EX)
        f.write(dumps(data))


def read_text(path: Path) -> str:
    """Read *path* as UTF-8 under a shared lock."""
    with open(path, "rb") as f:
        fcntl.flock(f, fcntl.LOCK_SH)
        raw = f.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise GraphParseError(f"{path}: not valid UTF-8 (byte {exc.start})") from exc
    return text.replace("\r\n", "\n")


def read_json(path: Path) -> Any:
    """Load a JSON document from *path* under a shared lock."""
    text = read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphParseError(f"{path}: invalid JSON ({exc.msg})", line=exc.lineno) from exc
