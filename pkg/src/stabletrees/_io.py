"""Small I/O helpers: atomic text writes and float formatting for emitters."""

from __future__ import annotations

import os
import tempfile


def fmt(x) -> str:
    """Shortest round-trip decimal form of a float (plain, no numpy repr)."""
    return repr(float(x))


def atomic_write_text(path, text: str):
    """Write ``text`` to ``path`` via a temp file and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
