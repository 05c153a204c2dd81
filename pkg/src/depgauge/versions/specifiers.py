"""Version specifier clauses and their conjunction.

Clause semantics follow PEP 440 as implemented by current ``packaging``:

* ``<V`` with ``V`` not a pre-release rejects every pre-release at or above
  ``V.dev0`` (so ``<2.0`` rejects ``2.0rc1``).
* ``>V`` with ``V`` not a post-release rejects the post-releases of ``V``
  itself (so ``>1.7`` rejects ``1.7.post1`` but ``>1.7a1`` accepts ``1.7``).

Local segments are ignored during matching.  ``===`` matches by normalized
version equality rather than raw text, so it behaves like ``==``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..errors import ParseError
from .version import Version, earliest_prerelease, parse_version, post_base

log = logging.getLogger(__name__)

OPERATORS = ("~=", "===", "==", "!=", "<=", ">=", "<", ">")

_CLAUSE_RE = re.compile(r"^\s*(~=|===|==|!=|<=|>=|<|>)\s*(\S+)\s*$")
_WILDCARD_RE = re.compile(r"^v?(?:(?P<epoch>[0-9]+)!)?(?P<release>[0-9]+(?:\.[0-9]+)*)\.\*$", re.I)


@dataclass(frozen=True, eq=False)
class Clause:
    """One ``<op><version>`` comparison.  Clauses compare by normalized text."""

    op: str
    literal: str
    wildcard: bool = False
    version: Optional[Version] = field(default=None, compare=False, repr=False)

    # Prefix (epoch, release) used by wildcard and ~= clauses.
    @property
    def prefix(self) -> tuple[int, tuple[int, ...]]:
        v = self.version
        if self.op == "~=":
            return v.epoch, v.release[:-1]
        return v.epoch, v.release

    def __str__(self) -> str:
        if self.version is None:
            return f"{self.op}{self.literal}"
        text = str(self.version.public()) if self.op != "===" else self.literal
        if self.wildcard:
            text = ".".join(str(x) for x in self.version.release)
            if self.version.epoch:
                text = f"{self.version.epoch}!{text}"
            text += ".*"
        return f"{self.op}{text}"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Clause):
            return NotImplemented
        return str(self) == str(other)

    def __hash__(self) -> int:
        return hash(str(self))

    def accepts(self, v: Version) -> bool:
        """Evaluate the clause directly against *v*."""
        op = self.op
        target = self.version
        if target is None:
            # === against something that is not a version matches nothing we can parse
            return False
        if self.wildcard or op == "~=":
            epoch, prefix = self.prefix
            hit = v.epoch == epoch and _padded(v.release, len(prefix))[: len(prefix)] == prefix
            if op == "!=":
                return not hit
            if op == "~=":
                return hit and v.public_key >= target.public_key
            return hit
        a, b = v.public_key, target.public_key
        if op in ("==", "==="):
            return a == b
        if op == "!=":
            return a != b
        if op == ">=":
            return a >= b
        if op == "<=":
            return a <= b
        if op == "<":
            if not a < b:
                return False
            return not (
                not target.is_prerelease
                and v.is_prerelease
                and a >= earliest_prerelease(target).public_key
            )
        if op == ">":
            if not a > b:
                return False
            return not (
                not target.is_postrelease
                and v.is_postrelease
                and post_base(v).public_key == b
            )
        raise AssertionError(op)


def _padded(release: tuple[int, ...], n: int) -> tuple[int, ...]:
    if len(release) >= n:
        return release
    return release + (0,) * (n - len(release))


@dataclass(frozen=True)
class ConstraintSet:
    """A conjunction of clauses; the empty conjunction accepts any version."""

    clauses: tuple[Clause, ...] = ()

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)

    def __bool__(self) -> bool:
        return bool(self.clauses)

    def __str__(self) -> str:
        return ",".join(str(c) for c in self.clauses)

    def accepts(self, v: Version) -> bool:
        return all(c.accepts(v) for c in self.clauses)

    def mentions_prerelease(self) -> bool:
        return any(c.version is not None and c.version.is_prerelease for c in self.clauses)

    def __and__(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet(self.clauses + other.clauses)


ANY = ConstraintSet()


def parse_clause(text: str) -> Clause:
    m = _CLAUSE_RE.match(text)
    if m is None:
        raise ParseError(text, "expected <operator><version>")
    op, literal = m.groups()

    if op == "===":
        try:
            version = parse_version(literal)
        except ParseError:
            version = None
        return Clause(op, literal, False, version)

    if literal.endswith(".*"):
        if op not in ("==", "!="):
            raise ParseError(text, f"wildcard not allowed with {op}")
        w = _WILDCARD_RE.match(literal)
        if w is None:
            raise ParseError(text, "wildcard must follow a plain release")
        release = tuple(int(x) for x in w.group("release").split("."))
        version = Version(release, epoch=int(w.group("epoch") or 0), original_text=literal)
        return Clause(op, literal, True, version)

    version = parse_version(literal)
    if version.local is not None:
        if op not in ("==", "!="):
            raise ParseError(text, f"local version label not allowed with {op}")
        log.debug("stripping local segment from %s", text)
    if op == "~=" and len(version.release) < 2:
        raise ParseError(text, "~= needs at least two release segments")
    return Clause(op, literal, False, version)


def parse_constraints(text: str) -> ConstraintSet:
    """Parse a comma separated specifier list; the empty string means any version."""
    if text is None or not text.strip():
        return ANY
    parts = text.split(",")
    clauses = []
    for part in parts:
        if not part.strip():
            raise ParseError(text, "empty clause in specifier list")
        clauses.append(parse_clause(part))
    return ConstraintSet(tuple(clauses))
