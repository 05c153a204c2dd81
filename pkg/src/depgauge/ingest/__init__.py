"""Package lists, dependency metadata and offline snapshots."""

from .index import IndexClient, RateLimiter, parse_simple_index
from .names import PackageName, is_valid_name, normalize_name
from .requirements import (
    DEFAULT_ENVIRONMENT,
    BoolOp,
    Compare,
    Literal,
    Marker,
    Requirement,
    Variable,
    evaluate_marker,
    marker_variables,
    parse_marker,
    parse_requirement,
    requirement_applies,
)
from .snapshot import (
    SCHEMA,
    MemorySource,
    PackageMetadata,
    Release,
    Snapshot,
    SnapshotWriter,
    iter_records,
    read_header,
    snapshot_read,
    snapshot_write,
)

__all__ = [
    "IndexClient",
    "RateLimiter",
    "parse_simple_index",
    "PackageName",
    "is_valid_name",
    "normalize_name",
    "DEFAULT_ENVIRONMENT",
    "BoolOp",
    "Compare",
    "Literal",
    "Marker",
    "Requirement",
    "Variable",
    "evaluate_marker",
    "marker_variables",
    "parse_marker",
    "parse_requirement",
    "requirement_applies",
    "SCHEMA",
    "MemorySource",
    "PackageMetadata",
    "Release",
    "Snapshot",
    "SnapshotWriter",
    "iter_records",
    "read_header",
    "snapshot_read",
    "snapshot_write",
]
