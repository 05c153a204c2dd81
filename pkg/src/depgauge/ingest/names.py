"""Package name normalization for index lookups."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_SEPARATORS = re.compile(r"[-_.]+")
_VALID = re.compile(r"^([A-Z0-9]|[A-Z0-9][A-Z0-9._-]*[A-Z0-9])$", re.I)


def normalize_name(name: str) -> str:
    """Lowercase *name* and collapse every run of ``-``, ``_`` and ``.`` to ``-``."""
    return _SEPARATORS.sub("-", name).lower()


def is_valid_name(name: str) -> bool:
    return bool(_VALID.match(name))


@dataclass(frozen=True, order=True)
class PackageName:
    """A package name; equality and ordering use the normalized form only."""

    normalized: str
    original: str = field(default="", compare=False)

    @classmethod
    def of(cls, name: "str | PackageName") -> "PackageName":
        if isinstance(name, PackageName):
            return name
        return cls(normalize_name(name), name)

    def __str__(self) -> str:
        return self.normalized
