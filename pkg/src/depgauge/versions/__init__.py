"""PEP 440 versions, specifiers and the interval algebra built on them."""

from .intervals import (
    EMPTY,
    FULL,
    Bound,
    Interval,
    IntervalSet,
    contains,
    intersect,
    is_empty,
    is_subset,
    point,
    restrict_to_releases,
    to_interval_set,
    union,
    union_of,
)
from .specifiers import ANY, Clause, ConstraintSet, parse_clause, parse_constraints
from .version import Version, compare_versions, parse_version

__all__ = [
    "ANY",
    "EMPTY",
    "FULL",
    "Bound",
    "Clause",
    "ConstraintSet",
    "Interval",
    "IntervalSet",
    "Version",
    "compare_versions",
    "contains",
    "intersect",
    "is_empty",
    "is_subset",
    "parse_clause",
    "parse_constraints",
    "parse_version",
    "point",
    "restrict_to_releases",
    "to_interval_set",
    "union",
    "union_of",
]
