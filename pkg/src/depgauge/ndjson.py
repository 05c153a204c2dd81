"""Small helpers shared by the newline-delimited file formats."""

from __future__ import annotations

import logging
import os
from pathlib import Path

log = logging.getLogger(__name__)


def truncate_partial_line(path: str | os.PathLike) -> None:
    """Cut an unterminated last line left behind by an interrupted writer."""
    path = Path(path)
    with path.open("rb+") as fh:
        fh.seek(0, os.SEEK_END)
        size = fh.tell()
        if size == 0:
            return
        fh.seek(size - 1)
        if fh.read(1) == b"\n":
            return
        # walk back to the previous newline
        pos = size - 1
        while pos > 0:
            step = min(4096, pos)
            fh.seek(pos - step)
            chunk = fh.read(step)
            idx = chunk.rfind(b"\n")
            if idx >= 0:
                pos = pos - step + idx + 1
                break
            pos -= step
        log.warning("%s: dropping partial last line at byte %d", path, pos)
        fh.truncate(pos)
