"""Dependency declarations: the ``name[extras] specifiers ; marker`` grammar.

The parser is a small recursive-descent reader over the requirement line.
Markers are kept as an expression tree and evaluated later against an
environment mapping, so one snapshot can be resolved for several target
interpreters.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from ..errors import ParseError, UnknownVariable
from ..versions import ANY, ConstraintSet, parse_constraints, parse_version
from ..versions.specifiers import parse_clause
from .names import PackageName, normalize_name

log = logging.getLogger(__name__)

MARKER_VARIABLES = frozenset({
    "python_version",
    "python_full_version",
    "os_name",
    "sys_platform",
    "platform_release",
    "platform_system",
    "platform_version",
    "platform_machine",
    "platform_python_implementation",
    "implementation_name",
    "implementation_version",
    "extra",
})

# Pre-standard spellings still found in old metadata.
_ALIASES = {
    "os.name": "os_name",
    "sys.platform": "sys_platform",
    "platform.version": "platform_version",
    "platform.machine": "platform_machine",
    "platform.python_implementation": "platform_python_implementation",
    "python_implementation": "platform_python_implementation",
}

VERSION_OPS = ("~=", "===", "==", "!=", "<=", ">=", "<", ">")

DEFAULT_ENVIRONMENT: dict[str, str] = {
    "python_version": "3.10",
    "python_full_version": "3.10.12",
    "os_name": "posix",
    "sys_platform": "linux",
    "platform_release": "",
    "platform_system": "Linux",
    "platform_version": "",
    "platform_machine": "x86_64",
    "platform_python_implementation": "CPython",
    "implementation_name": "cpython",
    "implementation_version": "3.10.12",
    "extra": "",
}


# marker tree ----------------------------------------------------------------

@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Literal:
    value: str

    def __str__(self) -> str:
        quote = "'" if '"' in self.value else '"'
        return f"{quote}{self.value}{quote}"


Operand = Union[Variable, Literal]


@dataclass(frozen=True)
class Compare:
    lhs: Operand
    op: str
    rhs: Operand

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


@dataclass(frozen=True)
class BoolOp:
    op: str  # "and" | "or"
    items: tuple["Marker", ...]

    def __str__(self) -> str:
        parts = []
        for item in self.items:
            text = str(item)
            if isinstance(item, BoolOp) and item.op == "or" and self.op == "and":
                text = f"({text})"
            parts.append(text)
        return f" {self.op} ".join(parts)


Marker = Union[Compare, BoolOp]


def _combine(op: str, items: list[Marker]) -> Marker:
    if len(items) == 1:
        return items[0]
    flat: list[Marker] = []
    for item in items:
        if isinstance(item, BoolOp) and item.op == op:
            flat.extend(item.items)
        else:
            flat.append(item)
    return BoolOp(op, tuple(flat))


def marker_variables(marker: Optional[Marker]) -> set[str]:
    if marker is None:
        return set()
    if isinstance(marker, BoolOp):
        out: set[str] = set()
        for item in marker.items:
            out |= marker_variables(item)
        return out
    return {x.name for x in (marker.lhs, marker.rhs) if isinstance(x, Variable)}


# requirement ------------------------------------------------------------------

@dataclass(frozen=True)
class Requirement:
    name: PackageName
    extras: frozenset[str] = frozenset()
    constraints: ConstraintSet = ANY
    marker: Optional[Marker] = None
    url: Optional[str] = None
    text: str = field(default="", compare=False)

    def __str__(self) -> str:
        out = self.name.original or self.name.normalized
        if self.extras:
            out += "[" + ",".join(sorted(self.extras)) + "]"
        if self.url is not None:
            out += f" @ {self.url}"
            if self.marker is not None:
                out += " "
        elif self.constraints:
            out += str(self.constraints)
        if self.marker is not None:
            out += f"; {self.marker}"
        return out


# parser -------------------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z0-9](?:[A-Za-z0-9._-]*[A-Za-z0-9])?")
_SPEC_RE = re.compile(
    r"\s*(?:~=|===|==|!=|<=|>=|<|>)\s*[A-Za-z0-9_.*+!-]+\s*"
    r"(?:,\s*(?:~=|===|==|!=|<=|>=|<|>)\s*[A-Za-z0-9_.*+!-]+\s*)*"
)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
_MARKER_OP_RE = re.compile(r"~=|===|==|!=|<=|>=|<|>|not\s+in\b|in\b")


class _Reader:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self, s: str) -> bool:
        return self.text.startswith(s, self.pos)

    def take(self, s: str) -> bool:
        if self.peek(s):
            self.pos += len(s)
            return True
        return False

    def match(self, rx: re.Pattern) -> Optional[re.Match]:
        m = rx.match(self.text, self.pos)
        if m:
            self.pos = m.end()
        return m

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def fail(self, reason: str) -> ParseError:
        return ParseError(self.text, reason, offset=self.pos)


def parse_requirement(text: str) -> Requirement:
    """Parse one requirement line such as ``pkg[extra]>=1.0; python_version >= "3.8"``.

    Raises :class:`ParseError` whose ``offset`` points at the offending byte.
    """
    if not text or not text.strip():
        raise ParseError(text, "empty requirement", offset=0)
    r = _Reader(text)
    r.ws()
    m = r.match(_NAME_RE)
    if m is None:
        raise r.fail("expected a package name")
    name = PackageName(normalize_name(m.group()), m.group())
    r.ws()

    extras: set[str] = set()
    if r.take("["):
        r.ws()
        if not r.take("]"):
            while True:
                r.ws()
                em = r.match(_NAME_RE)
                if em is None:
                    raise r.fail("expected an extra name")
                extras.add(normalize_name(em.group()))
                r.ws()
                if r.take("]"):
                    break
                if not r.take(","):
                    raise r.fail("expected ',' or ']' in extras")
        r.ws()

    constraints = ANY
    url = None
    if r.take("@"):
        r.ws()
        start = r.pos
        while not r.at_end() and not r.text[r.pos].isspace():
            r.pos += 1
        url = text[start:r.pos]
        if not url:
            raise r.fail("expected a URL after '@'")
        r.ws()
        if not r.at_end() and not r.peek(";"):
            raise r.fail("expected ';' after URL")
    else:
        paren = r.take("(")
        start = r.pos
        sm = r.match(_SPEC_RE)
        if sm is not None:
            try:
                constraints = parse_constraints(sm.group())
            except ParseError as exc:
                raise ParseError(text, exc.reason, offset=start) from None
        if paren:
            r.ws()
            if not r.take(")"):
                raise r.fail("expected ')'")
        r.ws()

    marker = None
    if r.take(";"):
        r.ws()
        marker = _parse_or(r)
        r.ws()
    if not r.at_end():
        raise r.fail("unexpected text")
    return Requirement(name, frozenset(extras), constraints, marker, url, text)


def parse_marker(text: str) -> Marker:
    r = _Reader(text)
    r.ws()
    marker = _parse_or(r)
    r.ws()
    if not r.at_end():
        raise r.fail("unexpected text after marker")
    return marker


def _keyword(r: _Reader, word: str) -> bool:
    save = r.pos
    r.ws()
    if r.take(word) and (r.at_end() or not (r.text[r.pos].isalnum() or r.text[r.pos] == "_")):
        return True
    r.pos = save
    return False


def _parse_or(r: _Reader) -> Marker:
    items = [_parse_and(r)]
    while _keyword(r, "or"):
        items.append(_parse_and(r))
    return _combine("or", items)


def _parse_and(r: _Reader) -> Marker:
    items = [_parse_atom(r)]
    while _keyword(r, "and"):
        items.append(_parse_atom(r))
    return _combine("and", items)


def _parse_atom(r: _Reader) -> Marker:
    r.ws()
    if r.take("("):
        inner = _parse_or(r)
        r.ws()
        if not r.take(")"):
            raise r.fail("expected ')' in marker")
        return inner
    lhs = _parse_operand(r)
    r.ws()
    m = r.match(_MARKER_OP_RE)
    if m is None:
        raise r.fail("expected a marker operator")
    op = " ".join(m.group().split())
    r.ws()
    rhs = _parse_operand(r)
    return Compare(lhs, op, rhs)


def _parse_operand(r: _Reader) -> Operand:
    r.ws()
    for quote in ("'", '"'):
        if r.take(quote):
            end = r.text.find(quote, r.pos)
            if end < 0:
                raise r.fail("unterminated string")
            value = r.text[r.pos:end]
            r.pos = end + 1
            return Literal(value)
    start = r.pos
    m = r.match(_IDENT_RE)
    if m is None:
        raise r.fail("expected a marker variable or quoted string")
    name = _ALIASES.get(m.group(), m.group())
    if name not in MARKER_VARIABLES:
        r.pos = start
        raise r.fail(f"unknown marker variable {m.group()!r}")
    return Variable(name)


# evaluation -------------------------------------------------------------------

def evaluate_marker(marker: Optional[Marker], environment: Mapping[str, str]) -> bool:
    """Evaluate *marker* under *environment*; an absent marker is true.

    Raises :class:`UnknownVariable` if the marker reads a variable the
    environment does not define.
    """
    if marker is None:
        return True
    if isinstance(marker, BoolOp):
        if marker.op == "and":
            return all(evaluate_marker(m, environment) for m in marker.items)
        return any(evaluate_marker(m, environment) for m in marker.items)
    lhs = _value(marker.lhs, environment)
    rhs = _value(marker.rhs, environment)
    if _is_extra(marker):
        lhs, rhs = normalize_name(lhs), normalize_name(rhs)
    return _compare(lhs, marker.op, rhs)


def _is_extra(c: Compare) -> bool:
    return any(isinstance(x, Variable) and x.name == "extra" for x in (c.lhs, c.rhs))


def _value(operand: Operand, env: Mapping[str, str]) -> str:
    if isinstance(operand, Literal):
        return operand.value
    try:
        return env[operand.name]
    except KeyError:
        raise UnknownVariable(operand.name) from None


def _compare(lhs: str, op: str, rhs: str) -> bool:
    if op == "in":
        return lhs in rhs
    if op == "not in":
        return lhs not in rhs
    try:
        return parse_clause(f"{op}{rhs}").accepts(parse_version(lhs))
    except ParseError:
        pass
    if op == "==":
        return lhs == rhs
    if op == "!=":
        return lhs != rhs
    if op == "===":
        return lhs == rhs
    if op == "<":
        return lhs < rhs
    if op == "<=":
        return lhs <= rhs
    if op == ">":
        return lhs > rhs
    if op == ">=":
        return lhs >= rhs
    return False


def requirement_applies(
    req: Requirement,
    environment: Mapping[str, str],
    extras: frozenset[str] | set[str] = frozenset(),
) -> bool:
    """Whether *req* is active when the declaring package is installed with *extras*.

    The marker is tried with ``extra`` set to the empty string and to each
    requested extra; an unknown variable makes the requirement inactive.
    """
    if req.marker is None:
        return True
    candidates = [""] + sorted(normalize_name(e) for e in extras)
    try:
        for extra in candidates:
            env = dict(environment)
            env["extra"] = extra
            if evaluate_marker(req.marker, env):
                return True
    except UnknownVariable as exc:
        log.warning("requirement %r: %s; treating marker as false", req.text or str(req), exc)
    return False
