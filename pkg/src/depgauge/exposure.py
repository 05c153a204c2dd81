"""Match resolved trees against the vulnerability database.

For a dependency edge with permitted versions S and a CVE with vulnerable
versions V:

* guaranteed: S is a subset of V, so every installable version is vulnerable;
* potential: S and V overlap but S is not a subset of V;
* none: S and V are disjoint.

Two notions of S are supported.  ``direct`` uses the constraints on the
edge being visited.  ``effective`` intersects the constraints of every
occurrence of the dependency in the tree and reports one finding per
(top-level, dependency, CVE) at the shallowest occurrence.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .errors import EmptyEffective, ParseError, SchemaMismatch
from .ingest.names import normalize_name
from .resolver.ecosystem import read_trees
from .resolver.tree import CIRCULAR, UNRESOLVABLE, iter_nodes
from .versions import (
    IntervalSet,
    Version,
    intersect,
    is_empty,
    is_subset,
    parse_constraints,
    restrict_to_releases,
    to_interval_set,
)
from .vulndb import VulnDb, load_vuln_db

log = logging.getLogger(__name__)

GUARANTEED = "guaranteed"
POTENTIAL = "potential"
NONE = "none"
MODES = ("direct", "effective")
FINDINGS_SCHEMA = "depgauge.findings/1"


def classify(s: IntervalSet, v: IntervalSet) -> str:
    """Exposure class of permitted set *s* against vulnerable set *v*."""
    if is_subset(s, v):
        return GUARANTEED
    if not is_empty(intersect(s, v)):
        return POTENTIAL
    return NONE


def classify_concrete(
    s: IntervalSet, v: IntervalSet, releases: Sequence[Version], *, exclude_prereleases: bool = False
) -> str:
    """Like :func:`classify` but decided over a published release list."""
    permitted = restrict_to_releases(s, releases, exclude_prereleases=exclude_prereleases)
    hits = [x for x in permitted if v.contains_key(x.public_key)]
    if permitted and len(hits) == len(permitted):
        return GUARANTEED
    if hits:
        return POTENTIAL
    return NONE


@dataclass(frozen=True)
class ExposureFinding:
    top_level: str
    dependency: str
    cve_id: str
    kind: str
    path: tuple[str, ...]
    depth: int
    constraint_mode: str
    s_rendered: str
    v_rendered: str

    def to_dict(self) -> dict:
        return {
            "top_level": self.top_level,
            "dependency": self.dependency,
            "cve": self.cve_id,
            "kind": self.kind,
            "mode": self.constraint_mode,
            "depth": self.depth,
            "path": list(self.path),
            "S": self.s_rendered,
            "V": self.v_rendered,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExposureFinding":
        return cls(d["top_level"], d["dependency"], d["cve"], d["kind"], tuple(d["path"]),
                   d["depth"], d["mode"], d["S"], d["V"])


@dataclass
class Analysis:
    findings: list[ExposureFinding] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    visited: int = 0


class Analyzer:
    """Classifies trees against one vulnerability database.

    Interval forms of specifier strings and classification results are cached,
    since the same edge constraints recur across many trees.
    """

    def __init__(self, db: VulnDb, mode: str = "direct",
                 releases: Optional[Mapping[str, Sequence[Version]]] = None,
                 exclude_prereleases: bool = False, cache_size: int = 100_000) -> None:
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.db = db
        self.mode = mode
        self.releases = releases
        self.exclude_prereleases = exclude_prereleases
        self._sets: dict[str, IntervalSet] = {}
        self._classes: dict[tuple[str, str, str], str] = {}
        self._cache_size = cache_size

    def interval_set(self, specifier: str) -> IntervalSet:
        s = self._sets.get(specifier)
        if s is None:
            s = to_interval_set(parse_constraints(specifier))
            if len(self._sets) >= self._cache_size:
                self._sets.clear()
            self._sets[specifier] = s
        return s

    def _classify(self, name: str, key: str, s: IntervalSet, rec) -> str:
        ck = (name, key, rec.cve_id)
        kind = self._classes.get(ck)
        if kind is None:
            if self.releases is not None and name in self.releases:
                kind = classify_concrete(s, rec.vulnerable, self.releases[name],
                                         exclude_prereleases=self.exclude_prereleases)
            else:
                kind = classify(s, rec.vulnerable)
            if len(self._classes) >= self._cache_size:
                self._classes.clear()
            self._classes[ck] = kind
        return kind

    def analyze_tree(self, record: dict) -> Analysis:
        """Iterative DFS over one tree record."""
        result = Analysis()
        top = record["package"]
        occurrences: dict[str, list[tuple[str, tuple[str, ...]]]] = {}
        stack: deque[tuple[dict, tuple[str, ...]]] = deque([(record["tree"], (record["tree"]["name"],))])
        while stack:
            node, path = stack.pop()
            depth = len(path) - 1
            if depth > 0:
                status = node.get("status")
                if status in (CIRCULAR, UNRESOLVABLE):
                    continue
                result.visited += 1
                name = node["name"]
                if name in self.db:
                    if self.mode == "direct":
                        self._emit(result, top, name, node.get("specifier", ""), path)
                    else:
                        occurrences.setdefault(name, []).append((node.get("specifier", ""), path))
            for child in reversed(node.get("deps") or ()):
                stack.append((child, path + (child["name"],)))

        for name, occ in occurrences.items():
            try:
                s = effective_constraints_from(self, name, [spec for spec, _ in occ])
            except EmptyEffective as exc:
                result.warnings.append(f"{top}: {exc}")
                continue
            except ParseError as exc:
                result.warnings.append(f"{top}: {name}: {exc}")
                continue
            shallowest = min(occ, key=lambda o: len(o[1]))[1]
            key = "&".join(sorted({spec for spec, _ in occ}))
            self._emit_set(result, top, name, key, s, shallowest)
        return result

    def _emit(self, result: Analysis, top: str, name: str, specifier: str, path) -> None:
        try:
            s = self.interval_set(specifier)
        except ParseError as exc:
            result.warnings.append(f"{top}: {name}: {exc}")
            return
        self._emit_set(result, top, name, specifier, s, path)

    def _emit_set(self, result, top, name, key, s, path) -> None:
        if is_empty(s):
            result.warnings.append(f"{top}: {name}: unsatisfiable constraints {key!r}")
            return
        for rec in self.db.lookup(name):
            kind = self._classify(name, key, s, rec)
            if kind == NONE:
                continue
            result.findings.append(ExposureFinding(
                top, name, rec.cve_id, kind, tuple(path), len(path) - 1, self.mode,
                str(s), str(rec.vulnerable),
            ))


def effective_constraints_from(analyzer: Analyzer, name: str, specifiers: Iterable[str]) -> IntervalSet:
    specifiers = list(specifiers)
    acc = None
    for spec in specifiers:
        s = analyzer.interval_set(spec)
        acc = s if acc is None else intersect(acc, s)
    if acc is None or is_empty(acc):
        raise EmptyEffective(name, specifiers)
    return acc


def effective_constraints(record: dict, dependency: str) -> IntervalSet:
    """Intersection of the constraints on every occurrence of *dependency* in a tree record.

    Raises :class:`EmptyEffective` when the intersection is empty, and
    ``LookupError`` when the dependency does not occur.
    """
    key = normalize_name(dependency)
    specs = [
        node.get("specifier", "")
        for node, depth in iter_nodes(record["tree"])
        if depth > 0 and node["name"] == key and node.get("status") != CIRCULAR
    ]
    if not specs:
        raise LookupError(f"{dependency} does not occur in the tree of {record['package']}")
    acc = to_interval_set(parse_constraints(specs[0]))
    for spec in specs[1:]:
        acc = intersect(acc, to_interval_set(parse_constraints(spec)))
    if is_empty(acc):
        raise EmptyEffective(key, specs)
    return acc


def analyze_tree(record: dict, db: VulnDb, mode: str = "direct") -> list[ExposureFinding]:
    return Analyzer(db, mode).analyze_tree(record).findings


# streaming ----------------------------------------------------------------------

@dataclass
class Counters:
    trees: int = 0
    corrupt: int = 0
    findings_guaranteed: int = 0
    findings_potential: int = 0
    packages_guaranteed: int = 0
    packages_potential: int = 0
    packages_potential_only: int = 0
    packages_exposed: int = 0
    conflicts: int = 0
    nodes_visited: int = 0

    def add(self, analysis: Analysis) -> None:
        self.trees += 1
        kinds = {f.kind for f in analysis.findings}
        self.findings_guaranteed += sum(f.kind == GUARANTEED for f in analysis.findings)
        self.findings_potential += sum(f.kind == POTENTIAL for f in analysis.findings)
        self.packages_guaranteed += GUARANTEED in kinds
        self.packages_potential += POTENTIAL in kinds
        self.packages_potential_only += POTENTIAL in kinds and GUARANTEED not in kinds
        self.packages_exposed += bool(kinds)
        self.conflicts += len(analysis.warnings)
        self.nodes_visited += analysis.visited

    def merge(self, other: "Counters") -> None:
        for k, v in vars(other).items():
            setattr(self, k, getattr(self, k) + v)

    def to_dict(self) -> dict:
        return dict(vars(self))


def _dumps(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


_worker_analyzer: Optional[Analyzer] = None


def _init_worker(db_path: str, mode: str) -> None:
    global _worker_analyzer
    _worker_analyzer = Analyzer(load_vuln_db(db_path), mode)


def _analyze_batch(records: list[dict]) -> list[Analysis]:
    return [_worker_analyzer.analyze_tree(r) for r in records]


def _batches(it: Iterator[dict], size: int) -> Iterator[list[dict]]:
    batch: list[dict] = []
    for rec in it:
        batch.append(rec)
        if len(batch) >= size:
            yield batch
            batch = []
    if batch:
        yield batch


def _analyses(records: Iterator[dict], analyzer: Analyzer, workers: int,
              db_path: Optional[str]) -> Iterator[Analysis]:
    if workers <= 1 or db_path is None:
        for rec in records:
            yield analyzer.analyze_tree(rec)
        return
    # A bounded window of in-flight batches keeps memory independent of input size.
    window: deque = deque()
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(db_path, analyzer.mode)) as pool:
        for batch in _batches(records, 64):
            window.append(pool.submit(_analyze_batch, batch))
            if len(window) >= workers * 2:
                yield from window.popleft().result()
        while window:
            yield from window.popleft().result()


def stream_analyze(
    dataset: str | os.PathLike,
    db: VulnDb,
    out_path: str | os.PathLike,
    mode: str = "direct",
    *,
    workers: int = 1,
    db_path: Optional[str | os.PathLike] = None,
    analyzer: Optional[Analyzer] = None,
    echo_summary: bool = True,
) -> Counters:
    """Analyze a tree dataset record by record, writing one finding per line.

    The output starts with a header line and ends with ``{"summary": {...}}``;
    the summary is also printed to standard error.
    """
    analyzer = analyzer or Analyzer(db, mode)
    counters = Counters()
    errors: list = []
    with open(out_path, "w", encoding="utf-8") as out:
        out.write(_dumps({"schema": FINDINGS_SCHEMA, "mode": analyzer.mode}) + "\n")
        records = read_trees(dataset, errors)
        for analysis in _analyses(records, analyzer, workers, str(db_path) if db_path else None):
            counters.add(analysis)
            for f in analysis.findings:
                out.write(_dumps(f.to_dict()) + "\n")
            for w in analysis.warnings:
                log.info("conflict: %s", w)
        counters.corrupt = len(errors)
        out.write(_dumps({"summary": counters.to_dict()}) + "\n")
    if echo_summary:
        print(json.dumps({"summary": counters.to_dict()}), file=sys.stderr)
    return counters


def read_findings(path: str | os.PathLike) -> tuple[dict, list[ExposureFinding], Optional[dict]]:
    """Header, findings and summary of a findings file (small files only)."""
    header: dict = {}
    findings = []
    summary = None
    for header_or_rec in iter_findings_lines(path):
        if "schema" in header_or_rec:
            header = header_or_rec
        elif "summary" in header_or_rec:
            summary = header_or_rec["summary"]
        else:
            findings.append(ExposureFinding.from_dict(header_or_rec))
    return header, findings, summary


def iter_findings_lines(path: str | os.PathLike) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        first = True
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if first:
                first = False
                if obj.get("schema") != FINDINGS_SCHEMA:
                    raise SchemaMismatch(f"{path}: not a {FINDINGS_SCHEMA} file")
            yield obj


__all__ = [
    "GUARANTEED",
    "POTENTIAL",
    "NONE",
    "MODES",
    "FINDINGS_SCHEMA",
    "classify",
    "classify_concrete",
    "ExposureFinding",
    "Analysis",
    "Analyzer",
    "effective_constraints",
    "analyze_tree",
    "Counters",
    "stream_analyze",
    "read_findings",
    "iter_findings_lines",
]
