"""Exact interval-union algebra over the PEP 440 version order.

A set of versions is stored as a sorted tuple of disjoint intervals.  Bounds
are :class:`Bound` objects ordered by the public version key (see
:mod:`depgauge.versions.version`); two synthetic bounds also appear:

* the *floor* of a release, ``R.dev0``, which is a real version, and
* the *post ceiling* of a version ``V``, a key above every ``V.postN`` and
  below every other version greater than ``V``.  No version sits on a
  ceiling, so ceilings are always open.

The order is treated as dense: between two distinct bounds another version
is assumed to exist.  Consequently ``[1.0, 2.0)`` minus the point ``1.2`` is
stored as ``[1.0, 1.2) ∪ (1.2, 2.0)`` and is not a subset of ``[1.0, 1.2]``.
Use :func:`restrict_to_releases` to reason about a concrete release list.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .specifiers import Clause, ConstraintSet
from .version import Version, earliest_prerelease, post_ceiling, release_floor

__all__ = [
    "Bound",
    "Interval",
    "IntervalSet",
    "to_interval_set",
    "intersect",
    "union",
    "is_empty",
    "is_subset",
    "contains",
    "restrict_to_releases",
    "point",
]


@dataclass(frozen=True, order=True)
class Bound:
    key: tuple
    label: str = field(default="", compare=False)

    @property
    def synthetic(self) -> bool:
        """True for release ceilings and +inf, which no version occupies."""
        return self.key[0] == math.inf or len(self.key) == 4

    def __str__(self) -> str:
        return self.label


# The smallest PEP 440 version is 0.dev0, so the lower end of the order is a
# real, closed bound rather than an abstract -inf.
NEG_KEY = release_floor(0, (0,))
POS_KEY = (math.inf,)
NEG_INF = Bound(NEG_KEY, "-inf")
POS_INF = Bound(POS_KEY, "+inf")


def _vbound(v: Version) -> Bound:
    return Bound(v.public_key, str(v.public()))


def _release_text(epoch: int, release: tuple[int, ...]) -> str:
    text = ".".join(str(x) for x in release)
    return f"{epoch}!{text}" if epoch else text


def _floor(epoch: int, release: tuple[int, ...]) -> Bound:
    return Bound(release_floor(epoch, release), _release_text(epoch, release) + ".dev0")


def _ceiling(v: Version) -> Bound:
    return Bound(post_ceiling(v), f"{v.public()}.post*")


@dataclass(frozen=True)
class Interval:
    lo: Bound
    lo_closed: bool
    hi: Bound
    hi_closed: bool

    def is_empty(self) -> bool:
        if self.lo.key < self.hi.key:
            return False
        return not (self.lo.key == self.hi.key and self.lo_closed and self.hi_closed)

    def contains_key(self, key: tuple) -> bool:
        lo, hi = self.lo.key, self.hi.key
        if key < lo or (key == lo and not self.lo_closed):
            return False
        if key > hi or (key == hi and not self.hi_closed):
            return False
        return True

    def __str__(self) -> str:
        if self.lo.key == self.hi.key:
            return f"[{self.hi}]"
        if self.lo.key == NEG_KEY:
            left = "(-inf"
        else:
            left = ("[" if self.lo_closed else "(") + str(self.lo)
        right = "]" if self.hi_closed else ")"
        return f"{left}, {self.hi}{right}"


def _normalize(iv: Interval) -> Interval:
    lo_closed = iv.lo_closed and not iv.lo.synthetic
    hi_closed = iv.hi_closed and not iv.hi.synthetic
    if lo_closed == iv.lo_closed and hi_closed == iv.hi_closed:
        return iv
    return Interval(iv.lo, lo_closed, iv.hi, hi_closed)


def _canonical(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    items = [n for n in (_normalize(iv) for iv in intervals) if not n.is_empty()]
    if not items:
        return ()
    items.sort(key=lambda iv: (iv.lo.key, not iv.lo_closed))
    out: list[Interval] = []
    cur = items[0]
    for nxt in items[1:]:
        touching = nxt.lo.key == cur.hi.key and (
            nxt.lo_closed or cur.hi_closed or nxt.lo.synthetic
        )
        if nxt.lo.key < cur.hi.key or touching:
            if (nxt.hi.key, nxt.hi_closed) > (cur.hi.key, cur.hi_closed):
                cur = Interval(cur.lo, cur.lo_closed, nxt.hi, nxt.hi_closed)
        else:
            out.append(cur)
            cur = nxt
    out.append(cur)
    return tuple(out)


class IntervalSet:
    """An immutable, canonical union of disjoint version intervals."""

    __slots__ = ("intervals", "_los")

    def __init__(self, intervals: Iterable[Interval] = ()) -> None:
        self.intervals: tuple[Interval, ...] = _canonical(intervals)
        self._los = [iv.lo.key for iv in self.intervals]

    @classmethod
    def full(cls) -> "IntervalSet":
        return cls([Interval(NEG_INF, True, POS_INF, False)])

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls()

    # queries ------------------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self.intervals == other.intervals

    def __hash__(self) -> int:
        return hash(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def is_full(self) -> bool:
        return self == FULL

    def contains_key(self, key: tuple) -> bool:
        i = bisect_right(self._los, key) - 1
        return i >= 0 and self.intervals[i].contains_key(key)

    def __contains__(self, v: Version) -> bool:
        return self.contains_key(v.public_key)

    @property
    def excluded_points(self) -> tuple[Bound, ...]:
        """Versions carved out of an otherwise contiguous range (``!=`` holes)."""
        pts = []
        for a, b in zip(self.intervals, self.intervals[1:]):
            if a.hi.key == b.lo.key and not a.hi.synthetic:
                pts.append(a.hi)
        return tuple(pts)

    # algebra ------------------------------------------------------------

    def __and__(self, other: "IntervalSet") -> "IntervalSet":
        a, b = self.intervals, other.intervals
        out = []
        i = j = 0
        while i < len(a) and j < len(b):
            x, y = a[i], b[j]
            if x.lo.key > y.lo.key:
                lo, lo_c = x.lo, x.lo_closed
            elif x.lo.key < y.lo.key:
                lo, lo_c = y.lo, y.lo_closed
            else:
                lo, lo_c = x.lo, x.lo_closed and y.lo_closed
            if x.hi.key < y.hi.key:
                hi, hi_c = x.hi, x.hi_closed
            elif x.hi.key > y.hi.key:
                hi, hi_c = y.hi, y.hi_closed
            else:
                hi, hi_c = x.hi, x.hi_closed and y.hi_closed
            iv = Interval(lo, lo_c, hi, hi_c)
            if not iv.is_empty():
                out.append(iv)
            if (x.hi.key, x.hi_closed) < (y.hi.key, y.hi_closed):
                i += 1
            else:
                j += 1
        return IntervalSet(out)

    def __or__(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def complement(self) -> "IntervalSet":
        out = []
        lo, lo_c = NEG_INF, True
        for iv in self.intervals:
            out.append(Interval(lo, lo_c, iv.lo, not iv.lo_closed))
            lo, lo_c = iv.hi, not iv.hi_closed
        out.append(Interval(lo, lo_c, POS_INF, False))
        return IntervalSet(out)

    def __sub__(self, other: "IntervalSet") -> "IntervalSet":
        return self & other.complement()

    def issubset(self, other: "IntervalSet") -> bool:
        return (self & other) == self

    # rendering ----------------------------------------------------------

    def __str__(self) -> str:
        if not self.intervals:
            return "{}"
        return " U ".join(str(iv) for iv in self.intervals)

    def __repr__(self) -> str:
        return f"IntervalSet({self})"


FULL = IntervalSet([Interval(NEG_INF, True, POS_INF, False)])
EMPTY = IntervalSet()


def point(v: Version) -> IntervalSet:
    b = _vbound(v)
    return IntervalSet([Interval(b, True, b, True)])


def _below(b: Bound, closed: bool) -> IntervalSet:
    return IntervalSet([Interval(NEG_INF, True, b, closed)])


def _above(b: Bound, closed: bool) -> IntervalSet:
    return IntervalSet([Interval(b, closed, POS_INF, False)])


def _bump(release: tuple[int, ...]) -> tuple[int, ...]:
    return release[:-1] + (release[-1] + 1,)


def _prefix_range(epoch: int, prefix: tuple[int, ...]) -> IntervalSet:
    """Every version whose zero-padded release starts with *prefix*."""
    return IntervalSet([Interval(_floor(epoch, prefix), True, _floor(epoch, _bump(prefix)), False)])


def clause_interval_set(c: Clause) -> IntervalSet:
    v = c.version
    if v is None:
        return EMPTY
    op = c.op
    if c.wildcard:
        rng = _prefix_range(*c.prefix)
        return rng if op == "==" else rng.complement()
    if op == "~=":
        epoch, prefix = c.prefix
        return IntervalSet([Interval(_vbound(v), True, _floor(epoch, _bump(prefix)), False)])
    if op in ("==", "==="):
        return point(v)
    if op == "!=":
        return point(v).complement()
    if op == ">=":
        return _above(_vbound(v), True)
    if op == "<=":
        return _below(_vbound(v), True)
    if op == "<":
        if v.is_prerelease:
            return _below(_vbound(v), False)
        return _below(_vbound(earliest_prerelease(v)), False)
    if op == ">":
        if v.is_postrelease or v.is_devrelease:
            return _above(_vbound(v), False)
        return _above(_ceiling(v), False)
    raise AssertionError(op)


def to_interval_set(c: ConstraintSet) -> IntervalSet:
    """Exact interval form of a conjunction of clauses."""
    result = FULL
    for clause in c:
        result = result & clause_interval_set(clause)
        if not result:
            break
    return result


def union_of(sets: Iterable[IntervalSet]) -> IntervalSet:
    acc: list[Interval] = []
    for s in sets:
        acc.extend(s.intervals)
    return IntervalSet(acc)


def intersect(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a & b


def union(a: IntervalSet, b: IntervalSet) -> IntervalSet:
    return a | b


def is_empty(a: IntervalSet) -> bool:
    return not a.intervals


def is_subset(a: IntervalSet, b: IntervalSet) -> bool:
    return a.issubset(b)


def contains(a: IntervalSet, v: Version) -> bool:
    return a.contains_key(v.public_key)


def restrict_to_releases(
    a: IntervalSet, releases: Sequence[Version], *, exclude_prereleases: bool = False
) -> list[Version]:
    """The releases (kept in input order) that fall inside *a*."""
    return [
        v
        for v in releases
        if a.contains_key(v.public_key) and not (exclude_prereleases and v.is_prerelease)
    ]
