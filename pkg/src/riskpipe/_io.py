"""File helpers shared by the loaders, writers and the CLI."""

from __future__ import annotations

import contextlib
import csv
import hashlib
import io
import os
import tempfile
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence


@contextlib.contextmanager
def open_text(source) -> Iterator[IO[str]]:
    """Yield a text stream for a path, a binary stream or a text stream.

    Streams passed in are not closed.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            yield fh
        return
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(source, "mode", ""):
        wrapper = io.TextIOWrapper(source, encoding="utf-8", newline="")
        try:
            yield wrapper
        finally:
            wrapper.detach()
        return
    yield source


def atomic_write_text(path, text: str) -> None:
    """Write through a temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    atomic_write_text(path, csv_text(header, rows))


def fmt_float(x: float) -> str:
    # repr round-trips exactly
    return repr(float(x))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def worker_count(default: int = 4) -> int:
    """Worker cap from RISKPIPE_THREADS (>= 1)."""
    raw = os.environ.get("RISKPIPE_THREADS")
    if not raw:
        return max(1, min(default, os.cpu_count() or 1))
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
