"""Greedy dependency resolution and structural statistics."""

from .ecosystem import Shard, dumps_record, ecosystem_resolve, read_trees, trees_header
from .greedy import Limits, MetadataSource, ResolveOptions, resolve_tree, select_release
from .tree import (
    CIRCULAR,
    REASONS,
    RESOLVED,
    TREES_SCHEMA,
    UNRESOLVABLE,
    DependencyTree,
    DepNode,
    EcosystemStats,
    ecosystem_stats,
    iter_nodes,
    tree_stats,
)

__all__ = [
    "Shard",
    "dumps_record",
    "ecosystem_resolve",
    "read_trees",
    "trees_header",
    "Limits",
    "MetadataSource",
    "ResolveOptions",
    "resolve_tree",
    "select_release",
    "CIRCULAR",
    "REASONS",
    "RESOLVED",
    "TREES_SCHEMA",
    "UNRESOLVABLE",
    "DependencyTree",
    "DepNode",
    "EcosystemStats",
    "ecosystem_stats",
    "iter_nodes",
    "tree_stats",
]
