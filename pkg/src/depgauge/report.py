"""Report generators: per-CVE summary, exposure-by-depth, structure histograms,
occurrence ranking and version density.

Every table is written as CSV plus an aligned plain-text rendering.  Depths
follow the tree convention (top-level package = 0, direct dependency = 1).
Counts are given per finding and per unique top-level package.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import PackageAbsent
from .exposure import GUARANTEED, POTENTIAL, iter_findings_lines
from .ingest.names import normalize_name
from .resolver.tree import CIRCULAR, UNRESOLVABLE, EcosystemStats, iter_nodes
from .versions import Version, parse_constraints, parse_version, to_interval_set
from .vulndb import VulnDb

CVE_COLUMNS = ("CVE", "Avg Depth", "Potential Pkgs", "Required Pkgs", "Severity")


@dataclass(frozen=True)
class CveSummaryRow:
    cve_id: str
    avg_depth: float
    potential_pkgs: int
    required_pkgs: int
    severity: str

    def cells(self) -> list[str]:
        return [self.cve_id, f"{self.avg_depth:.2f}", str(self.potential_pkgs),
                str(self.required_pkgs), self.severity]


class FindingsAccumulator:
    """Single pass over findings collecting everything the reports need."""

    def __init__(self) -> None:
        self.depths: dict[str, list[int]] = defaultdict(list)
        self.required: dict[str, set[str]] = defaultdict(set)
        self.potential: dict[str, set[str]] = defaultdict(set)
        self.by_depth_findings: dict[str, Counter] = {GUARANTEED: Counter(), POTENTIAL: Counter()}
        self.by_depth_packages: dict[str, set[tuple[int, str]]] = {GUARANTEED: set(), POTENTIAL: set()}
        self.mode: Optional[str] = None

    def add(self, f: dict) -> None:
        cve, kind, depth, top = f["cve"], f["kind"], f["depth"], f["top_level"]
        self.depths[cve].append(depth)
        (self.required if kind == GUARANTEED else self.potential)[cve].add(top)
        self.by_depth_findings[kind][depth] += 1
        self.by_depth_packages[kind].add((depth, top))

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "FindingsAccumulator":
        acc = cls()
        for obj in iter_findings_lines(path):
            if "schema" in obj:
                acc.mode = obj.get("mode")
            elif "summary" not in obj:
                acc.add(obj)
        return acc

    def cve_rows(self, db: VulnDb) -> list[CveSummaryRow]:
        """One row per CVE in *db*, sorted by CVE id.

        Required Pkgs counts top-level packages with a guaranteed finding for
        the CVE; Potential Pkgs counts the remaining packages with a potential
        finding (guaranteed takes precedence).  Avg Depth is the mean over all
        findings of the CVE.
        """
        rows = []
        for rec in sorted(db, key=lambda r: (_cve_key(r.cve_id), r.package)):
            depths = self.depths.get(rec.cve_id, [])
            required = self.required.get(rec.cve_id, set())
            potential = self.potential.get(rec.cve_id, set()) - required
            avg = sum(depths) / len(depths) if depths else 0.0
            rows.append(CveSummaryRow(rec.cve_id, avg, len(potential), len(required), rec.severity))
        return rows

    def depth_rows(self) -> list[list[int]]:
        depths = set(self.by_depth_findings[GUARANTEED]) | set(self.by_depth_findings[POTENTIAL])
        top = max(depths, default=0)
        pk = {k: Counter(d for d, _ in v) for k, v in self.by_depth_packages.items()}
        return [
            [d, self.by_depth_findings[GUARANTEED][d], self.by_depth_findings[POTENTIAL][d],
             pk[GUARANTEED][d], pk[POTENTIAL][d]]
            for d in range(1, top + 1)
        ]


def _cve_key(cve: str) -> tuple:
    parts = cve.split("-")
    return (int(parts[1]), int(parts[2])) if len(parts) == 3 else (0, 0)


def cve_summary(findings: Iterable[dict], db: VulnDb) -> list[CveSummaryRow]:
    acc = FindingsAccumulator()
    for f in findings:
        acc.add(f)
    return acc.cve_rows(db)


# version density ------------------------------------------------------------------

def version_density(
    records: Iterable[dict],
    package: str,
    releases: Optional[Sequence[Version]] = None,
) -> list[tuple[float, int]]:
    """Requested-version positions of *package* across every tree, with weights.

    Each requesting edge contributes one point: the midpoint rank of the
    releases its constraints admit (a pin contributes its exact rank),
    divided by the highest rank.  Without *releases*, the distinct versions
    selected in the dataset stand in for the published list.
    """
    key = normalize_name(package)
    specs: Counter = Counter()
    seen_versions: set[Version] = set()
    found = False
    for rec in records:
        for node, depth in iter_nodes(rec["tree"]):
            if depth == 0 or node["name"] != key or node.get("status") in (CIRCULAR, UNRESOLVABLE):
                continue
            found = True
            specs[node.get("specifier", "")] += 1
            if node.get("version"):
                seen_versions.add(parse_version(node["version"]))
    if not found:
        raise PackageAbsent(package)
    ordered = sorted(set(releases) if releases is not None else seen_versions)
    if not ordered:
        return []
    top = len(ordered) - 1
    weights: Counter = Counter()
    for spec, n in specs.items():
        s = to_interval_set(parse_constraints(spec))
        ranks = [i for i, v in enumerate(ordered) if s.contains_key(v.public_key)]
        if not ranks:
            continue
        mid = (ranks[0] + ranks[-1]) / 2
        weights[1.0 if top == 0 else mid / top] += n
    return sorted(weights.items())


# writers ----------------------------------------------------------------------------

def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def aligned(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    table = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    lines = []
    for j, r in enumerate(table):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip())
        if j == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _hist_rows(hist: Counter) -> list[list[int]]:
    if not hist:
        return []
    return [[k, hist.get(k, 0)] for k in range(0, max(hist) + 1)]


def write_report(
    out_dir: str | os.PathLike,
    db: VulnDb,
    findings_path: Optional[str | os.PathLike] = None,
    trees: Optional[Callable[[], Iterable[dict]]] = None,
    *,
    top_n: int = 10,
    density_packages: Sequence[str] = (),
    releases: Optional[Mapping[str, Sequence[Version]]] = None,
) -> dict[str, Path]:
    """Write the report bundle into *out_dir*; returns the files written by name.

    *trees* is a zero-argument callable returning a fresh iterator over tree
    records, since the density export needs a second pass.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    text_parts: list[str] = []

    def put(name: str, content: str) -> None:
        p = out / name
        p.write_text(content, encoding="utf-8")
        written[name] = p

    acc = FindingsAccumulator.from_file(findings_path) if findings_path else FindingsAccumulator()
    mode = acc.mode or "direct"
    rows = acc.cve_rows(db)
    put("cve_summary.csv", _csv_text(CVE_COLUMNS, [r.cells() for r in rows]))
    cve_txt = aligned(CVE_COLUMNS, [r.cells() for r in rows])
    put("cve_summary.txt", cve_txt)
    text_parts.append(f"Per-CVE summary (constraint mode: {mode})\n\n{cve_txt}")

    depth_header = ("depth", "guaranteed_findings", "potential_findings",
                    "guaranteed_packages", "potential_packages")
    drows = acc.depth_rows()
    put("exposure_by_depth.csv", _csv_text(depth_header, drows))
    text_parts.append(
        f"Exposure by dependency depth (direct dependency = 1, mode: {mode})\n\n"
        + aligned(depth_header, drows)
    )

    if trees is not None:
        stats = EcosystemStats()
        for rec in trees():
            stats.add(rec)
        put("direct_histogram.csv", _csv_text(("direct_dependencies", "packages"), _hist_rows(stats.direct)))
        put("depth_histogram.csv", _csv_text(("max_depth", "packages"), _hist_rows(stats.depth)))
        put("circular_depth_histogram.csv",
            _csv_text(("detection_depth", "markers"), _hist_rows(stats.circular_depth)))
        top = stats.top(top_n)
        put("top_occurrences.csv",
            _csv_text(("rank", "package", "occurrences"), [[i + 1, n, c] for i, (n, c) in enumerate(top)]))
        put("structure_stats.json", json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n")
        text_parts.append(
            "Dependency structure (top-level = depth 0)\n\n"
            f"trees: {stats.trees}\nmean direct dependencies: {stats.mean_direct:.2f}\n"
            f"mean max depth: {stats.mean_depth:.2f}\n"
            f"circular markers: {sum(stats.circular_depth.values())}\n\n"
            + aligned(("rank", "package", "occurrences"), [[i + 1, n, c] for i, (n, c) in enumerate(top)])
        )

    for pkg in density_packages:
        if trees is None:
            break
        key = normalize_name(pkg)
        try:
            points = version_density(trees(), key, (releases or {}).get(key))
        except PackageAbsent:
            continue
        put(f"density_{key}.csv", _csv_text(("position", "weight"), [[f"{p:.6f}", w] for p, w in points]))

    put("report.txt", "\n".join(text_parts))
    return written
