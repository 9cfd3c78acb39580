"""Small file/format helpers shared by the library and the CLI."""

from __future__ import annotations

import os
import tempfile


def fmt(x: float) -> str:
    """Canonical float formatting: 17 significant digits, '.' decimal."""
    return format(float(x), ".17g")


def atomic_write_text(path, text: str) -> None:
    """Write via temp file + rename so readers never see partial output."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
