"""Greedy depth-first resolution of one top-level package.

Every edge is resolved on its own: the highest published, non-yanked release
that satisfies the edge's constraints (and the environment's Python version)
is selected, and its requirements become the node's children.  There is no
backtracking and no unification across edges, so two edges on the same
package may select different versions.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol

from ..errors import NotFound, ParseError
from ..ingest.names import normalize_name
from ..ingest.requirements import DEFAULT_ENVIRONMENT, requirement_applies
from ..ingest.snapshot import PackageMetadata, Release
from ..versions import ANY, ConstraintSet, parse_constraints, parse_version
from .tree import CIRCULAR, RESOLVED, UNRESOLVABLE, DependencyTree, DepNode

log = logging.getLogger(__name__)

_LEADING_NAME = re.compile(r"\s*([A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?)")


class MetadataSource(Protocol):
    def get(self, name: str) -> PackageMetadata: ...


@dataclass(frozen=True)
class Limits:
    max_depth: int = 30
    timeout: float = 300.0
    max_nodes: int = 1_000_000


@dataclass(frozen=True)
class ResolveOptions:
    environment: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_ENVIRONMENT))
    limits: Limits = Limits()
    with_extras: frozenset[str] = frozenset()
    lenient: bool = False
    exclude_prereleases: bool = False


def _python_ok(release: Release, python: Optional[str]) -> bool:
    if not release.requires_python or python is None:
        return True
    try:
        return parse_constraints(release.requires_python).accepts(parse_version(python))
    except ParseError:
        log.warning("%s: ignoring malformed requires_python %r", release.version, release.requires_python)
        return True


def select_release(
    meta: PackageMetadata, constraints: ConstraintSet, opts: ResolveOptions
) -> tuple[Optional[Release], Optional[str]]:
    """Pick the release for one edge; returns (release, None) or (None, reason)."""
    candidates = [r for r in meta.releases if not r.yanked and constraints.accepts(r.version)]
    if opts.exclude_prereleases and not constraints.mentions_prerelease():
        finals = [r for r in candidates if not r.version.is_prerelease]
        if finals:
            candidates = finals
    if not candidates:
        return None, "no-satisfying-version"
    python = opts.environment.get("python_full_version") or opts.environment.get("python_version")
    fitting = [r for r in candidates if _python_ok(r, python)]
    if not fitting:
        return None, "marker-excluded-python"
    return max(fitting, key=lambda r: r.version), None


def _edges(release: Release, opts: ResolveOptions, owner: str) -> list[tuple[str, ConstraintSet, Optional[str]]]:
    """Active dependency edges of *release* as (name, constraints, failure reason)."""
    merged: dict[str, list] = {}
    for req in release.requirements:
        if not requirement_applies(req, opts.environment, opts.with_extras):
            continue
        name = req.name.normalized
        if name in merged:
            merged[name][1] = merged[name][1] & req.constraints
        else:
            merged[name] = [name, req.constraints, None]
    for line in release.malformed:
        m = _LEADING_NAME.match(line)
        name = normalize_name(m.group(1)) if m else line.strip()
        if opts.lenient and m:
            log.warning("%s %s: treating malformed requirement %r as any version",
                        owner, release.version, line)
            merged.setdefault(name, [name, ANY, None])
        else:
            merged[name] = [name, ANY, "malformed-metadata"]
    return [tuple(v) for v in merged.values()]


def resolve_tree(
    name: str,
    source: MetadataSource,
    opts: ResolveOptions = ResolveOptions(),
    constraints: ConstraintSet = ANY,
) -> DependencyTree:
    """Resolve the dependency tree of *name* from *source*.

    A package already on the current path becomes a circular marker leaf.
    Nodes that cannot be resolved carry a reason.  If the timeout or the
    node limit is hit, the nodes not yet expanded are marked and the tree
    status says why.
    """
    limits = opts.limits
    started = time.monotonic()
    deadline = started + limits.timeout
    key = normalize_name(name)
    root = DepNode(key, constraints, 0)
    tree = DependencyTree(key, root)
    stack: list[tuple[DepNode, tuple[str, ...]]] = [(root, (key,))]
    count = 1
    halted: Optional[str] = None
    depth_cut = False

    while stack:
        node, path = stack.pop()
        if halted is None and time.monotonic() > deadline:
            halted = "timeout"
        if halted is not None:
            _mark(node, halted)
            continue
        try:
            meta = source.get(node.name)
        except NotFound:
            _mark(node, "not-found")
            continue
        if meta.error:
            _mark(node, meta.error)
            continue
        release, reason = select_release(meta, node.constraints, opts)
        if release is None:
            _mark(node, reason)
            continue
        node.version = release.version
        node.status = RESOLVED

        pending = []
        for dep, cs, failure in _edges(release, opts, node.name):
            child = DepNode(dep, cs, node.depth + 1)
            node.children.append(child)
            count += 1
            if failure:
                _mark(child, failure)
            elif dep in path:
                child.status = CIRCULAR
                tree.cycles.append((path + (dep,), child.depth))
            elif child.depth > limits.max_depth:
                _mark(child, "limit-exceeded")
                depth_cut = True
            else:
                pending.append((child, path + (dep,)))
        if count > limits.max_nodes and halted is None:
            halted = "limit-exceeded"
        stack.extend(reversed(pending))

    if halted is not None:
        tree.status = halted
    elif depth_cut:
        tree.status = "limit-exceeded"
    tree.wall_time = time.monotonic() - started
    return tree


def _mark(node: DepNode, reason: str) -> None:
    node.status = UNRESOLVABLE
    node.reason = reason
    node.version = None
    node.children = []
