"""Resolved dependency trees, their record format, and structural statistics.

Depth convention: the top-level package sits at depth 0 and its direct
dependencies at depth 1.

Record format (one tree per line)::

    {"package": "p", "status": "complete", "tree": NODE, "cycles": [...],
     "stats": {"direct_count": 2, "max_depth": 2, "node_count": 5}}

    NODE := {"name", "version", "specifier", "status", "deps": [NODE, ...]}
          | {"name", "status": "circular"}
          | {"name", "version": null, "specifier", "status": "unresolvable",
             "reason", "deps": []}
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from ..versions import ANY, ConstraintSet, Version

RESOLVED = "resolved"
CIRCULAR = "circular"
UNRESOLVABLE = "unresolvable"

REASONS = (
    "not-found",
    "no-satisfying-version",
    "marker-excluded-python",
    "network",
    "timeout",
    "malformed-metadata",
    "limit-exceeded",
)

TREES_SCHEMA = "depgauge.trees/1"


@dataclass
class DepNode:
    name: str
    constraints: ConstraintSet = ANY
    depth: int = 0
    version: Optional[Version] = None
    status: str = RESOLVED
    reason: Optional[str] = None
    children: list["DepNode"] = field(default_factory=list)
    specifier: Optional[str] = None

    def __post_init__(self) -> None:
        if self.specifier is None:
            self.specifier = str(self.constraints)

    def walk(self) -> Iterator["DepNode"]:
        """Pre-order traversal without recursion."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def to_dict(self) -> dict:
        # Built bottom-up with an explicit stack so deep trees do not recurse.
        out: dict[int, dict] = {}
        order = list(self.walk())
        for node in reversed(order):
            if node.status == CIRCULAR:
                out[id(node)] = {"name": node.name, "status": CIRCULAR}
                continue
            d = {
                "name": node.name,
                "version": str(node.version) if node.version is not None else None,
                "specifier": node.specifier,
                "status": node.status,
            }
            if node.reason is not None:
                d["reason"] = node.reason
            d["deps"] = [out.pop(id(c)) for c in node.children]
            out[id(node)] = d
        return out[id(self)]


@dataclass
class DependencyTree:
    package: str
    root: DepNode
    status: str = "complete"
    cycles: list[tuple[tuple[str, ...], int]] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def node_count(self) -> int:
        return sum(1 for _ in self.root.walk())

    @property
    def max_depth(self) -> int:
        return max(n.depth for n in self.root.walk())

    @property
    def direct_count(self) -> int:
        return len(self.root.children)

    def stats(self) -> dict:
        return tree_stats(self.to_record())

    def to_record(self) -> dict:
        rec = {
            "package": self.package,
            "status": self.status,
            "tree": self.root.to_dict(),
            "cycles": [{"path": list(p), "depth": d} for p, d in self.cycles],
        }
        rec["stats"] = tree_stats(rec)
        return rec


# statistics -------------------------------------------------------------------

def iter_nodes(tree: dict) -> Iterator[tuple[dict, int]]:
    """(node, depth) pairs of a serialized tree, pre-order."""
    stack = [(tree, 0)]
    while stack:
        node, depth = stack.pop()
        yield node, depth
        deps = node.get("deps") or ()
        for child in reversed(deps):
            stack.append((child, depth + 1))


def tree_stats(record: dict) -> dict:
    """direct_count, max_depth and node_count of one tree record.

    node_count counts every node, root and marker leaves included; max_depth
    is the depth of the deepest node.
    """
    root = record["tree"]
    count = 0
    deepest = 0
    for _node, depth in iter_nodes(root):
        count += 1
        deepest = max(deepest, depth)
    return {
        "direct_count": len(root.get("deps") or ()),
        "max_depth": deepest,
        "node_count": count,
    }


@dataclass
class EcosystemStats:
    trees: int = 0
    direct: Counter = field(default_factory=Counter)
    depth: Counter = field(default_factory=Counter)
    occurrences: Counter = field(default_factory=Counter)
    circular_depth: Counter = field(default_factory=Counter)
    statuses: Counter = field(default_factory=Counter)
    unresolvable: Counter = field(default_factory=Counter)
    total_nodes: int = 0

    def add(self, record: dict) -> None:
        s = record.get("stats") or tree_stats(record)
        self.trees += 1
        self.direct[s["direct_count"]] += 1
        self.depth[s["max_depth"]] += 1
        self.total_nodes += s["node_count"]
        self.statuses[record.get("status", "complete")] += 1
        for node, depth in iter_nodes(record["tree"]):
            if depth == 0:
                continue
            status = node.get("status")
            if status == CIRCULAR:
                self.circular_depth[depth] += 1
                continue
            self.occurrences[node["name"]] += 1
            if status == UNRESOLVABLE:
                self.unresolvable[node.get("reason")] += 1

    @staticmethod
    def _mean(hist: Counter) -> float:
        n = sum(hist.values())
        if not n:
            return 0.0
        return sum(k * v for k, v in hist.items()) / n

    @property
    def mean_direct(self) -> float:
        return self._mean(self.direct)

    @property
    def mean_depth(self) -> float:
        return self._mean(self.depth)

    @property
    def mean_circular_depth(self) -> float:
        return self._mean(self.circular_depth)

    def top(self, n: int = 10) -> list[tuple[str, int]]:
        return sorted(self.occurrences.items(), key=lambda kv: (-kv[1], kv[0]))[:n]

    def to_dict(self) -> dict:
        def hist(c: Counter) -> dict:
            return {str(k): c[k] for k in sorted(c)}

        return {
            "trees": self.trees,
            "total_nodes": self.total_nodes,
            "mean_direct": self.mean_direct,
            "mean_depth": self.mean_depth,
            "mean_circular_depth": self.mean_circular_depth,
            "direct_histogram": hist(self.direct),
            "depth_histogram": hist(self.depth),
            "circular_depth_histogram": hist(self.circular_depth),
            "statuses": dict(sorted(self.statuses.items())),
            "unresolvable_reasons": dict(sorted(self.unresolvable.items())),
            "top_occurrences": self.top(),
        }


def ecosystem_stats(records: Iterable[dict]) -> EcosystemStats:
    stats = EcosystemStats()
    for rec in records:
        stats.add(rec)
    return stats


__all__ = [
    "RESOLVED",
    "CIRCULAR",
    "UNRESOLVABLE",
    "REASONS",
    "TREES_SCHEMA",
    "DepNode",
    "DependencyTree",
    "EcosystemStats",
    "ecosystem_stats",
    "iter_nodes",
    "tree_stats",
]
