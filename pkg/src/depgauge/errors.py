"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class DepgaugeError(Exception):
    """Base class for all errors raised by depgauge."""


class ParseError(DepgaugeError, ValueError):
    """A version, specifier, requirement or marker string could not be parsed."""

    def __init__(self, text: str, reason: str, offset: int | None = None) -> None:
        self.text = text
        self.reason = reason
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"cannot parse {text!r}{where}: {reason}")


class NetworkError(DepgaugeError):
    """A request to the package index failed; callers may retry."""


class IndexFormatError(DepgaugeError):
    """The fetched page is not a simple repository index."""


class NotFound(DepgaugeError, LookupError):
    """The requested package does not exist (or is a tombstoned alias)."""


class UnknownVariable(DepgaugeError, KeyError):
    """A marker referenced a variable missing from the environment."""

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(name)

    def __str__(self) -> str:
        return f"unknown marker variable {self.name!r}"


class RecordCorrupt(DepgaugeError):
    """One line of a newline-delimited file could not be decoded."""

    def __init__(self, path: str, offset: int, reason: str) -> None:
        self.path = path
        self.offset = offset
        self.reason = reason
        super().__init__(f"{path}: corrupt record at byte {offset}: {reason}")


class SchemaError(DepgaugeError):
    """A vulnerability record is missing a field or has the wrong type."""

    def __init__(self, message: str, index: int | None = None) -> None:
        self.index = index
        prefix = f"record {index}: " if index is not None else ""
        super().__init__(prefix + message)


class RangeParseError(SchemaError):
    """A vulnerable range in the vulnerability file failed to parse."""


class SchemaMismatch(DepgaugeError):
    """An input file carries a schema tag this version cannot read."""


class MissingInput(DepgaugeError, FileNotFoundError):
    """A stage was started without the artifact produced by its predecessor."""


class EmptyEffective(DepgaugeError):
    """The intersection of all constraints on a dependency is empty."""

    def __init__(self, name: str, constraints: list[str]) -> None:
        self.name = name
        self.constraints = constraints
        super().__init__(f"constraints on {name} have empty intersection: {constraints}")


class PackageAbsent(DepgaugeError, LookupError):
    """The requested package never occurs in the dataset."""
