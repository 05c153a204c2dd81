"""Resolve many top-level packages into a resumable newline-delimited dataset."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Optional, Sequence

from ..errors import RecordCorrupt, SchemaMismatch
from ..ingest.names import normalize_name
from ..ingest.snapshot import Snapshot
from ..ndjson import truncate_partial_line
from .greedy import MetadataSource, ResolveOptions, resolve_tree
from .tree import TREES_SCHEMA

log = logging.getLogger(__name__)


def dumps_record(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class Shard:
    index: int = 0
    count: int = 1

    @classmethod
    def parse(cls, text: str) -> "Shard":
        """Parse ``i/n`` (0-based index)."""
        try:
            i, n = (int(x) for x in text.split("/"))
        except ValueError:
            raise ValueError(f"shard must look like i/n, got {text!r}") from None
        if n < 1 or not 0 <= i < n:
            raise ValueError(f"shard index out of range: {text!r}")
        return cls(i, n)

    def select(self, names: Sequence[str]) -> list[str]:
        """The contiguous slice of *names* owned by this shard."""
        total = len(names)
        lo = self.index * total // self.count
        hi = (self.index + 1) * total // self.count
        return list(names[lo:hi])

    def __str__(self) -> str:
        return f"{self.index}/{self.count}"


def trees_header() -> dict:
    return {"schema": TREES_SCHEMA}


def read_trees(path: str | os.PathLike, errors: Optional[list] = None) -> Iterator[dict]:
    """Stream tree records from a dataset written by :func:`ecosystem_resolve`."""
    with open(path, "rb") as fh:
        first = fh.readline()
        offset = len(first)
        try:
            header = json.loads(first) if first.strip() else None
        except ValueError:
            header = None
        if header is not None and (not isinstance(header, dict) or header.get("schema") != TREES_SCHEMA):
            raise SchemaMismatch(f"{path}: not a {TREES_SCHEMA} dataset")
        for raw in fh:
            start = offset
            offset += len(raw)
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                if not isinstance(rec, dict) or "tree" not in rec:
                    raise ValueError("record lacks 'tree'")
            except ValueError as exc:
                err = RecordCorrupt(str(path), start, str(exc))
                log.warning("%s", err)
                if errors is not None:
                    errors.append(err)
                continue
            yield rec


def _emitted(out: Path, progress: Path) -> set[str]:
    done: set[str] = set()
    if out.exists() and out.stat().st_size:
        truncate_partial_line(out)
        for rec in read_trees(out):
            done.add(rec["package"])
    if progress.exists() and progress.stat().st_size:
        truncate_partial_line(progress)
        listed = {line.strip() for line in progress.read_text().splitlines() if line.strip()}
        missing = listed - done
        if missing:
            log.warning("progress lists %d packages absent from output; re-resolving them", len(missing))
        # the output file is authoritative; rewrite progress to match it
        if listed != done:
            tmp = progress.with_suffix(progress.suffix + ".tmp")
            tmp.write_text("".join(f"{n}\n" for n in sorted(done)))
            os.replace(tmp, progress)
    return done


# worker-process state for parallel resolution
_worker_source: Optional[MetadataSource] = None
_worker_opts: Optional[ResolveOptions] = None


def _init_worker(snapshot_path: str, opts: ResolveOptions) -> None:
    global _worker_source, _worker_opts
    _worker_source = Snapshot(snapshot_path)
    _worker_opts = opts


def _resolve_in_worker(name: str) -> str:
    tree = resolve_tree(name, _worker_source, _worker_opts)
    return dumps_record(tree.to_record())


def ecosystem_resolve(
    names: Sequence[str],
    source: MetadataSource,
    out_path: str | os.PathLike,
    opts: ResolveOptions = ResolveOptions(),
    shard: Shard = Shard(),
    progress_path: Optional[str | os.PathLike] = None,
    workers: int = 1,
    on_record: Optional[Callable[[str, int], None]] = None,
) -> dict:
    """Resolve this shard's slice of *names*, appending one tree per line to *out_path*.

    Packages already present in the output are skipped, so an interrupted run
    can simply be restarted.  Output order follows input order.  Each record
    is flushed before its name is appended to the progress file.
    ``on_record(name, n)`` is called after the n-th record of this run is
    durable.  Returns counters for the run.
    """
    out = Path(out_path)
    progress = Path(progress_path) if progress_path else out.with_name(out.name + ".progress")
    todo = [normalize_name(n) for n in shard.select(list(names))]
    todo = list(dict.fromkeys(todo))
    done = _emitted(out, progress)
    pending = [n for n in todo if n not in done]
    counters = {"shard": str(shard), "assigned": len(todo), "skipped": len(todo) - len(pending),
                "resolved": 0, "statuses": {}}

    fresh = not out.exists() or out.stat().st_size == 0
    with out.open("a", encoding="utf-8") as fh, progress.open("a", encoding="utf-8") as pf:
        if fresh:
            fh.write(dumps_record(trees_header()) + "\n")
            fh.flush()
        for name, line in _produce(pending, source, opts, workers):
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
            pf.write(name + "\n")
            pf.flush()
            counters["resolved"] += 1
            status = json.loads(line)["status"]
            counters["statuses"][status] = counters["statuses"].get(status, 0) + 1
            if on_record is not None:
                on_record(name, counters["resolved"])
    return counters


def _produce(names: list[str], source: MetadataSource, opts: ResolveOptions,
             workers: int) -> Iterator[tuple[str, str]]:
    if workers > 1 and isinstance(source, Snapshot) and len(names) > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(str(source.path), opts)) as pool:
            yield from zip(names, pool.map(_resolve_in_worker, names, chunksize=4))
        return
    for name in names:
        try:
            tree = resolve_tree(name, source, opts)
        except Exception:  # a bug on one package must not end the run
            log.exception("resolving %s failed", name)
            continue
        yield name, dumps_record(tree.to_record())
