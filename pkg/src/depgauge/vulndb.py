"""Vulnerability records: affected package, severity and vulnerable ranges.

File format: a JSON array of objects::

    {"cve": "CVE-2023-43804", "package": "urllib3", "severity": "High",
     "ranges": [">=2.0.0,<2.0.6", "<1.26.17"], "note": "..."}

Each element of ``ranges`` is a comma-separated conjunction; the elements are
alternatives.  The vulnerable set V of a record is the union of their
interval forms.
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ParseError, RangeParseError, SchemaError
from .ingest.names import normalize_name
from .versions import ConstraintSet, IntervalSet, parse_constraints, to_interval_set, union_of

log = logging.getLogger(__name__)

SEVERITIES = ("Low", "Medium", "High", "Critical")
UNKNOWN = "Unknown"
_CVE_RE = re.compile(r"^CVE-\d{4}-\d+$")


@dataclass(frozen=True)
class VulnRecord:
    cve_id: str
    package: str
    severity: str
    ranges: tuple[ConstraintSet, ...]
    note: str = ""
    range_texts: tuple[str, ...] = field(default=(), compare=False)

    @property
    def vulnerable(self) -> IntervalSet:
        cached = self.__dict__.get("_v")
        if cached is None:
            cached = vulnerable_interval_set(self)
            object.__setattr__(self, "_v", cached)
        return cached

    def to_dict(self) -> dict:
        return {
            "cve": self.cve_id,
            "package": self.package,
            "severity": self.severity,
            "ranges": [str(r) for r in self.ranges],
            "note": self.note,
        }


def vulnerable_interval_set(record: VulnRecord) -> IntervalSet:
    """V for *record*: the union of every range's interval form."""
    return union_of(to_interval_set(r) for r in record.ranges)


class VulnDb:
    """Records grouped under normalized package names."""

    def __init__(self, records: Iterable[VulnRecord] = ()) -> None:
        self._by_package: dict[str, list[VulnRecord]] = {}
        self.warnings: list[str] = []
        for rec in records:
            self.add(rec)

    def add(self, rec: VulnRecord, index: int | None = None) -> None:
        bucket = self._by_package.setdefault(rec.package, [])
        if any(r.cve_id == rec.cve_id for r in bucket):
            raise SchemaError(f"duplicate {rec.cve_id} for package {rec.package}", index)
        bucket.append(rec)

    def lookup(self, name: str) -> list[VulnRecord]:
        return self._by_package.get(normalize_name(name), [])

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self._by_package

    def __iter__(self) -> Iterator[VulnRecord]:
        for recs in self._by_package.values():
            yield from recs

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_package.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VulnDb):
            return NotImplemented
        return self._by_package == other._by_package

    def packages(self) -> list[str]:
        return sorted(self._by_package)

    def records(self) -> list[VulnRecord]:
        return list(self)


def _record_from_dict(item: object, index: int, warnings: list[str]) -> VulnRecord:
    if not isinstance(item, dict):
        raise SchemaError("record must be an object", index)
    for key, typ in (("cve", str), ("package", str), ("severity", str), ("ranges", list)):
        if key not in item:
            raise SchemaError(f"missing field {key!r}", index)
        if not isinstance(item[key], typ):
            raise SchemaError(f"field {key!r} must be {typ.__name__}", index)
    note = item.get("note", "")
    if not isinstance(note, str):
        raise SchemaError("field 'note' must be str", index)
    cve = item["cve"].strip()
    if not _CVE_RE.match(cve):
        raise SchemaError(f"bad CVE identifier {cve!r}", index)
    severity = item["severity"].strip().capitalize()
    if severity not in SEVERITIES:
        warnings.append(f"record {index} ({cve}): unknown severity {item['severity']!r}")
        severity = UNKNOWN
    if not item["ranges"]:
        raise SchemaError("ranges must not be empty", index)
    ranges = []
    for text in item["ranges"]:
        if not isinstance(text, str):
            raise SchemaError("each range must be a string", index)
        try:
            ranges.append(parse_constraints(text))
        except ParseError as exc:
            raise RangeParseError(f"range {text!r}: {exc.reason}", index) from None
    rec = VulnRecord(cve, normalize_name(item["package"]), severity, tuple(ranges), note,
                     tuple(item["ranges"]))
    if not rec.vulnerable:
        raise RangeParseError(f"ranges of {cve} describe no version", index)
    return rec


def load_vuln_db(path: str | os.PathLike) -> VulnDb:
    """Load and validate a vulnerability file; an empty file gives an empty db."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return VulnDb()
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from None
    return vuln_db_from_list(data)


def vuln_db_from_list(data: object) -> VulnDb:
    if not isinstance(data, list):
        raise SchemaError("top level must be an array of records")
    db = VulnDb()
    for i, item in enumerate(data):
        db.add(_record_from_dict(item, i, db.warnings), i)
    for w in db.warnings:
        log.warning("%s", w)
    return db


def save_vuln_db(db: VulnDb, path: str | os.PathLike) -> None:
    Path(path).write_text(json.dumps([r.to_dict() for r in db], indent=2) + "\n", encoding="utf-8")


def bundled_path(name: str = "urllib3_cves.json") -> Path:
    """Path of a vulnerability file shipped with the package."""
    return Path(__file__).parent / "data" / name
