"""Package metadata records and their newline-delimited snapshot files.

Layout: the first line is a header object carrying the schema tag, the
index source and a creation timestamp; every following line is one package::

    {"schema": "depgauge.snapshot/1", "source": "...", "created_at": "..."}
    {"name": "d", "releases": [{"version": "1.5", "yanked": false,
                                "requires": ["x>=1"], "requires_python": ">=3.8"}]}

A record may instead carry ``"error": "<reason>"`` when the package could not
be fetched; resolvers then mark it unresolvable with that reason.
"""

from __future__ import annotations

import json
import logging
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional

from ..errors import NotFound, ParseError, RecordCorrupt, SchemaMismatch
from ..ndjson import truncate_partial_line
from ..versions import Version, parse_version
from .names import PackageName, normalize_name
from .requirements import Requirement, parse_requirement

log = logging.getLogger(__name__)

SCHEMA = "depgauge.snapshot/1"


@dataclass(frozen=True)
class Release:
    version: Version
    yanked: bool = False
    requires: tuple[str, ...] = ()
    requires_python: Optional[str] = None

    @property
    def requirements(self) -> tuple[Requirement, ...]:
        return self._parsed()[0]

    @property
    def malformed(self) -> tuple[str, ...]:
        """Requirement lines that did not parse; kept rather than dropped."""
        return self._parsed()[1]

    def _parsed(self) -> tuple[tuple[Requirement, ...], tuple[str, ...]]:
        cached = self.__dict__.get("_cache")
        if cached is None:
            good, bad = [], []
            for line in self.requires:
                try:
                    good.append(parse_requirement(line))
                except ParseError as exc:
                    log.warning("%s: malformed requirement %r: %s", self.version, line, exc.reason)
                    bad.append(line)
            cached = (tuple(good), tuple(bad))
            object.__setattr__(self, "_cache", cached)
        return cached

    def to_dict(self) -> dict:
        out = {"version": self.version.original_text, "yanked": self.yanked,
               "requires": list(self.requires)}
        if self.requires_python is not None:
            out["requires_python"] = self.requires_python
        return out


@dataclass(frozen=True)
class PackageMetadata:
    name: PackageName
    releases: tuple[Release, ...] = ()
    error: Optional[str] = None
    invalid_versions: tuple[str, ...] = field(default=(), compare=False)

    @property
    def versions(self) -> list[Version]:
        return [r.version for r in self.releases]

    def release(self, version: Version) -> Release:
        for r in self.releases:
            if r.version == version:
                return r
        raise KeyError(str(version))

    def to_dict(self) -> dict:
        out: dict = {"name": self.name.normalized}
        if self.error is not None:
            out["error"] = self.error
        out["releases"] = [r.to_dict() for r in self.releases]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PackageMetadata":
        if not isinstance(data, dict) or not isinstance(data.get("name"), str):
            raise ValueError("record lacks a string 'name'")
        releases = []
        invalid = []
        for item in data.get("releases") or []:
            text = item["version"]
            try:
                version = parse_version(text)
            except ParseError:
                invalid.append(text)
                continue
            releases.append(Release(
                version,
                bool(item.get("yanked", False)),
                tuple(item.get("requires") or ()),
                item.get("requires_python"),
            ))
        releases.sort(key=lambda r: r.version)
        return cls(PackageName.of(data["name"]), tuple(releases), data.get("error"),
                   tuple(invalid))


def make_header(source: str, created_at: Optional[str] = None) -> dict:
    if created_at is None:
        created_at = datetime.now(timezone.utc).replace(microsecond=0).isoformat()
    return {"schema": SCHEMA, "source": source, "created_at": created_at}


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class SnapshotWriter:
    """Append-only writer that keeps one record per normalized name.

    Opening an existing snapshot scans it for names already present, so an
    interrupted fetch can resume without duplicating records.  A partially
    written last line is cut off before appending.
    """

    def __init__(self, path: str | os.PathLike, source: str = "", created_at: Optional[str] = None):
        self.path = Path(path)
        self.seen: set[str] = set()
        if self.path.exists() and self.path.stat().st_size > 0:
            truncate_partial_line(self.path)
            for rec in iter_records(self.path):
                self.seen.add(normalize_name(rec["name"]))
            self._fh: IO[str] = self.path.open("a", encoding="utf-8")
        else:
            self._fh = self.path.open("w", encoding="utf-8")
            self._fh.write(_dumps(make_header(source, created_at)) + "\n")
            self._fh.flush()

    def write(self, meta: PackageMetadata | dict) -> bool:
        """Append *meta*; returns False (and writes nothing) for a repeated name."""
        data = meta.to_dict() if isinstance(meta, PackageMetadata) else meta
        key = normalize_name(data["name"])
        if key in self.seen:
            return False
        self.seen.add(key)
        self._fh.write(_dumps(data) + "\n")
        self._fh.flush()
        return True

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "SnapshotWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def snapshot_write(path: str | os.PathLike, records: Iterable[PackageMetadata | dict],
                   source: str = "", created_at: Optional[str] = None) -> int:
    """Write *records* to a fresh snapshot; returns the number written."""
    p = Path(path)
    if p.exists():
        p.unlink()
    n = 0
    with SnapshotWriter(p, source, created_at) as w:
        for rec in records:
            n += w.write(rec)
    return n


def read_header(path: str | os.PathLike) -> dict:
    with open(path, "rb") as fh:
        first = fh.readline()
    try:
        header = json.loads(first)
    except ValueError:
        raise SchemaMismatch(f"{path}: first line is not a snapshot header") from None
    if not isinstance(header, dict) or header.get("schema") != SCHEMA:
        raise SchemaMismatch(f"{path}: expected schema {SCHEMA!r}, got {header.get('schema') if isinstance(header, dict) else None!r}")
    return header


def iter_records(path: str | os.PathLike, errors: Optional[list] = None) -> Iterator[dict]:
    """Yield raw record dicts (header skipped); corrupt lines are logged and skipped."""
    read_header(path)
    for offset, rec in _iter_lines(path, errors):
        yield rec


def _iter_lines(path, errors) -> Iterator[tuple[int, dict]]:
    with open(path, "rb") as fh:
        offset = len(fh.readline())
        for raw in fh:
            start = offset
            offset += len(raw)
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                if not isinstance(rec, dict) or not isinstance(rec.get("name"), str):
                    raise ValueError("record lacks a string 'name'")
            except ValueError as exc:
                err = RecordCorrupt(str(path), start, str(exc))
                log.warning("%s", err)
                if errors is not None:
                    errors.append(err)
                continue
            yield start, rec


def snapshot_read(path: str | os.PathLike, errors: Optional[list] = None) -> Iterator[PackageMetadata]:
    """Stream :class:`PackageMetadata` records from *path* one line at a time."""
    seen: set[str] = set()
    for rec in iter_records(path, errors):
        try:
            meta = PackageMetadata.from_dict(rec)
        except (KeyError, TypeError, ValueError) as exc:
            err = RecordCorrupt(str(path), -1, f"{rec.get('name')}: {exc}")
            log.warning("%s", err)
            if errors is not None:
                errors.append(err)
            continue
        if meta.name.normalized in seen:
            continue
        seen.add(meta.name.normalized)
        yield meta


class Snapshot:
    """Random access to a snapshot file by package name.

    Only byte offsets are kept in memory; records are decoded on demand and a
    small LRU cache keeps recently used packages.
    """

    def __init__(self, path: str | os.PathLike, cache_size: int = 4096) -> None:
        self.path = Path(path)
        self.header = read_header(self.path)
        self._offsets: dict[str, int] = {}
        self.errors: list[RecordCorrupt] = []
        for offset, rec in _iter_lines(self.path, self.errors):
            self._offsets.setdefault(normalize_name(rec["name"]), offset)
        self._cache: OrderedDict[str, PackageMetadata] = OrderedDict()
        self._cache_size = cache_size
        self._fh = self.path.open("rb")

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self._offsets

    def __len__(self) -> int:
        return len(self._offsets)

    def names(self) -> list[str]:
        """Normalized names in file order."""
        return list(self._offsets)

    def get(self, name: str) -> PackageMetadata:
        key = normalize_name(name)
        meta = self._cache.get(key)
        if meta is not None:
            self._cache.move_to_end(key)
            return meta
        offset = self._offsets.get(key)
        if offset is None:
            raise NotFound(name)
        self._fh.seek(offset)
        meta = PackageMetadata.from_dict(json.loads(self._fh.readline()))
        self._cache[key] = meta
        if len(self._cache) > self._cache_size:
            self._cache.popitem(last=False)
        return meta

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "Snapshot":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class MemorySource:
    """An in-memory metadata source with the same ``get`` interface as :class:`Snapshot`."""

    def __init__(self, records: Iterable[PackageMetadata | dict]) -> None:
        self._data: dict[str, PackageMetadata] = {}
        for rec in records:
            meta = rec if isinstance(rec, PackageMetadata) else PackageMetadata.from_dict(rec)
            self._data.setdefault(meta.name.normalized, meta)

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self._data

    def names(self) -> list[str]:
        return list(self._data)

    def get(self, name: str) -> PackageMetadata:
        try:
            return self._data[normalize_name(name)]
        except KeyError:
            raise NotFound(name) from None
