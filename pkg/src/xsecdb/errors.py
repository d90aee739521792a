"""Exception hierarchy shared by every xsecdb module."""

from __future__ import annotations


class XSecDBError(Exception):
    """Base class for all engine errors."""


class LabelingError(XSecDBError):
    """Invalid rational code, identifier, or code allocation request."""


class UnknownNode(LabelingError, KeyError):
    """An identifier is not present in the document being inspected."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class DocumentError(XSecDBError):
    """A fact set violates a document invariant."""


class XMLSyntaxError(DocumentError):
    """Markup could not be ingested."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class XPathSyntaxError(XSecDBError):
    """A path expression does not match the supported grammar."""

    def __init__(self, message: str, source: str, position: int):
        super().__init__(f"{message} at position {position} in {source!r}")
        self.source = source
        self.position = position


class XUpdateError(XSecDBError):
    """A modification cannot be applied to the document."""


class PolicyError(XSecDBError):
    """Malformed subject hierarchy, rule, or session."""
