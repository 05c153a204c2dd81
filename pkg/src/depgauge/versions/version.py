"""PEP 440 version parsing, normalization and total ordering.

A :class:`Version` compares by a precomputed key tuple.  Two flavours of key
exist: :attr:`Version.key` orders full versions (local segment included) and
:attr:`Version.public_key` drops the local segment; the interval algebra works
exclusively on public keys.

Key layout (all parts are tuples of ints so plain tuple comparison works)::

    (epoch, release_without_trailing_zeros, pre, post, dev[, local])

    pre   (-1,)            dev-only release (sorts before any pre-release)
          (0, phase, n)    a=0, b=1, rc=2
          (1,)             no pre-release segment
    post  (-1,) none       (0, n) present
    dev   (0, n) present   (1,) none
"""

from __future__ import annotations

import re
from functools import total_ordering
from typing import Optional, Tuple

from ..errors import ParseError

__all__ = [
    "Version",
    "parse_version",
    "compare_versions",
    "release_floor",
    "post_ceiling",
    "earliest_prerelease",
    "post_base",
]

_VERSION_RE = re.compile(
    r"""
    ^\s*
    v?
    (?:(?P<epoch>[0-9]+)!)?
    (?P<release>[0-9]+(?:\.[0-9]+)*)
    (?P<pre>
        [-_.]?
        (?P<pre_l>alpha|a|beta|b|preview|pre|c|rc)
        [-_.]?
        (?P<pre_n>[0-9]+)?
    )?
    (?P<post>
        (?:-(?P<post_n1>[0-9]+))
        |
        (?:
            [-_.]?
            (?P<post_l>post|rev|r)
            [-_.]?
            (?P<post_n2>[0-9]+)?
        )
    )?
    (?P<dev>
        [-_.]?
        (?P<dev_l>dev)
        [-_.]?
        (?P<dev_n>[0-9]+)?
    )?
    (?:\+(?P<local>[a-z0-9]+(?:[-_.][a-z0-9]+)*))?
    \s*$
    """,
    re.VERBOSE | re.IGNORECASE,
)

_PHASES = {"a": 0, "b": 1, "rc": 2}
_PHASE_NAMES = ("a", "b", "rc")
_PHASE_ALIASES = {
    "alpha": "a",
    "a": "a",
    "beta": "b",
    "b": "b",
    "c": "rc",
    "pre": "rc",
    "preview": "rc",
    "rc": "rc",
}

Key = Tuple


def _strip_zeros(release: tuple[int, ...]) -> tuple[int, ...]:
    end = len(release)
    while end and release[end - 1] == 0:
        end -= 1
    return release[:end]


@total_ordering
class Version:
    """An immutable, normalized PEP 440 version."""

    __slots__ = (
        "epoch",
        "release",
        "pre",
        "post",
        "dev",
        "local",
        "original_text",
        "key",
        "public_key",
        "_hash",
    )

    def __init__(
        self,
        release: tuple[int, ...] | list[int],
        *,
        epoch: int = 0,
        pre: Optional[tuple[str, int]] = None,
        post: Optional[int] = None,
        dev: Optional[int] = None,
        local: Optional[tuple[int | str, ...]] = None,
        original_text: Optional[str] = None,
    ) -> None:
        release = tuple(int(x) for x in release)
        if not release:
            raise ValueError("release must have at least one component")
        if pre is not None and pre[0] not in _PHASES:
            raise ValueError(f"unknown pre-release phase {pre[0]!r}")
        set_ = object.__setattr__
        set_(self, "epoch", int(epoch))
        set_(self, "release", release)
        set_(self, "pre", pre)
        set_(self, "post", post)
        set_(self, "dev", dev)
        set_(self, "local", tuple(local) if local else None)

        if pre is None and post is None and dev is not None:
            pre_k: tuple = (-1,)
        elif pre is None:
            pre_k = (1,)
        else:
            pre_k = (0, _PHASES[pre[0]], pre[1])
        post_k = (-1,) if post is None else (0, post)
        dev_k = (1,) if dev is None else (0, dev)
        public = (self.epoch, _strip_zeros(release), pre_k, post_k, dev_k)
        if self.local is None:
            local_k: tuple = ()
        else:
            local_k = tuple(
                (1, seg, "") if isinstance(seg, int) else (0, 0, seg) for seg in self.local
            )
        set_(self, "public_key", public)
        set_(self, "key", public + (local_k,))
        set_(self, "_hash", hash(self.key))
        set_(self, "original_text", original_text if original_text is not None else str(self))

    def __setattr__(self, name, value):
        raise AttributeError("Version is immutable")

    def __reduce__(self):
        return (_rebuild, (self.release, self.epoch, self.pre, self.post, self.dev,
                           self.local, self.original_text))

    # ordering -----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self.key == other.key

    def __lt__(self, other: "Version") -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self.key < other.key

    def __hash__(self) -> int:
        return self._hash

    # classification -------------------------------------------------------

    @property
    def is_prerelease(self) -> bool:
        return self.pre is not None or self.dev is not None

    @property
    def is_postrelease(self) -> bool:
        return self.post is not None

    @property
    def is_devrelease(self) -> bool:
        return self.dev is not None

    @property
    def is_final(self) -> bool:
        """True for a plain release: no pre, post, dev or local segment."""
        return self.pre is None and self.post is None and self.dev is None and self.local is None

    @property
    def base_key(self) -> tuple:
        """Epoch and release with trailing zeros removed."""
        return self.public_key[:2]

    def public(self) -> "Version":
        if self.local is None:
            return self
        return Version(self.release, epoch=self.epoch, pre=self.pre, post=self.post, dev=self.dev)

    def base(self) -> "Version":
        return Version(self.release, epoch=self.epoch)

    # rendering ----------------------------------------------------------

    def __str__(self) -> str:
        parts = []
        if self.epoch:
            parts.append(f"{self.epoch}!")
        parts.append(".".join(str(x) for x in self.release))
        if self.pre is not None:
            parts.append(f"{self.pre[0]}{self.pre[1]}")
        if self.post is not None:
            parts.append(f".post{self.post}")
        if self.dev is not None:
            parts.append(f".dev{self.dev}")
        if self.local is not None:
            parts.append("+" + ".".join(str(s) for s in self.local))
        return "".join(parts)

    def __repr__(self) -> str:
        return f"<Version {str(self)!r}>"


def _rebuild(release, epoch, pre, post, dev, local, original_text):
    return Version(release, epoch=epoch, pre=pre, post=post, dev=dev, local=local,
                   original_text=original_text)


def parse_version(text: str) -> Version:
    """Parse *text* into a normalized :class:`Version`.

    Surrounding whitespace, a leading ``v`` and the usual spelling variants
    (``alpha``, ``c``, ``rev``, ``-1`` implicit post releases, ...) are
    accepted.  Raises :class:`ParseError` when no PEP 440 reading exists.
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseError(str(text), "empty version string")
    m = _VERSION_RE.match(text)
    if m is None:
        raise ParseError(text, "not a valid PEP 440 version")

    pre = None
    if m.group("pre_l"):
        pre = (_PHASE_ALIASES[m.group("pre_l").lower()], int(m.group("pre_n") or 0))

    post = None
    if m.group("post_n1"):
        post = int(m.group("post_n1"))
    elif m.group("post_l"):
        post = int(m.group("post_n2") or 0)

    dev = None
    if m.group("dev_l"):
        dev = int(m.group("dev_n") or 0)

    local = None
    if m.group("local"):
        local = tuple(
            int(seg) if seg.isdigit() else seg.lower()
            for seg in re.split(r"[-_.]", m.group("local"))
        )

    return Version(
        tuple(int(x) for x in m.group("release").split(".")),
        epoch=int(m.group("epoch") or 0),
        pre=pre,
        post=post,
        dev=dev,
        local=local,
        original_text=text,
    )


def compare_versions(a: Version, b: Version) -> int:
    """Return -1, 0 or 1 as *a* sorts before, equal to, or after *b*."""
    if a.key < b.key:
        return -1
    if a.key > b.key:
        return 1
    return 0


def release_floor(epoch: int, release: tuple[int, ...]) -> tuple:
    """Public key of ``<release>.dev0``, the smallest version of a release."""
    return (epoch, _strip_zeros(tuple(release)), (-1,), (-1,), (0, 0))


def post_ceiling(v: Version) -> tuple:
    """A key above every post-release of *v* and below anything else above *v*.

    Only meaningful for versions without post or dev segments.  No version has
    this key; it is used as an open interval bound.
    """
    return v.public_key[:3] + ((1,),)


def earliest_prerelease(v: Version) -> Version:
    """``v`` with a ``.dev0`` suffix: 1.2 -> 1.2.dev0, 1.2.post1 -> 1.2.post1.dev0."""
    return Version(v.release, epoch=v.epoch, pre=v.pre, post=v.post, dev=0)


def post_base(v: Version) -> Version:
    """The version *v* is a post-release of: 1.0a1.post2.dev1 -> 1.0a1."""
    return Version(v.release, epoch=v.epoch, pre=v.pre)
