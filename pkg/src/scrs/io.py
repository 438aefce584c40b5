"""Small file helpers shared by the stores and the CLI."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from scrs.errors import IoFailure

# mkstemp creates 0600 files; give outputs the usual umask-derived mode
_UMASK = os.umask(0)
os.umask(_UMASK)


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.chmod(tmp, 0o666 & ~_UMASK)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def dump_json(obj) -> str:
    """Canonical JSON text used for every persisted document."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
