"""Parser and set evaluator for the supported XPath subset.

Grammar::

    Path      := "/" | ( "/" Step | "//" Step )+
    Step      := Test Qualifier*
    Test      := NAME | "*" | "descendant-or-self::*" | "$USER"
    Qualifier := "[" RelPath "]" | "[" INTEGER "]"
    RelPath   := Test ( "/" Test )*

``$USER`` is replaced by the session user's name while parsing.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Union

from .errors import XPathSyntaxError, XSecDBError
from .labeling import DOCUMENT, Ident
from .store import Document

__all__ = [
    "Axis",
    "Step",
    "RelPath",
    "PathExpr",
    "parse_xpath",
    "select",
    "eval_xpath",
    "position",
]


class Axis(str, enum.Enum):
    CHILD = "child"
    DESCENDANT = "descendant"
    DESCENDANT_OR_SELF = "descendant-or-self"


@dataclass(frozen=True)
class RelPath:
    """A bare chain of steps used inside a ``[...]`` qualifier."""

    steps: tuple[Step, ...]

    def __str__(self) -> str:
        return "/".join(_render_test(s) for s in self.steps)


Qualifier = Union[RelPath, int]


@dataclass(frozen=True)
class Step:
    axis: Axis
    test: str | None  # None matches any label
    qualifiers: tuple[Qualifier, ...] = ()


@dataclass(frozen=True)
class PathExpr:
    steps: tuple[Step, ...]
    absolute: bool = True

    def __str__(self) -> str:
        if not self.steps:
            return "/"
        parts = []
        for step in self.steps:
            parts.append("//" if step.axis is Axis.DESCENDANT else "/")
            parts.append(_render_test(step))
            parts.extend(f"[{q}]" for q in step.qualifiers)
        return "".join(parts)


def _render_test(step: Step) -> str:
    if step.axis is Axis.DESCENDANT_OR_SELF:
        return "descendant-or-self::*"
    return "*" if step.test is None else step.test


_DOS = "descendant-or-self::*"
_NAME = re.compile(r"[^\s/\[\]$*:]+")
_INTEGER = re.compile(r"[0-9]+(?=\])")


class _Parser:
    def __init__(self, src: str, user: str | None):
        self.src = src
        self.user = user
        self.pos = 0

    def error(self, message: str) -> XPathSyntaxError:
        return XPathSyntaxError(message, self.src, self.pos)

    def peek(self, text: str) -> bool:
        return self.src.startswith(text, self.pos)

    def test(self, axis: Axis) -> tuple[Axis, str | None]:
        if self.peek(_DOS):
            self.pos += len(_DOS)
            return Axis.DESCENDANT_OR_SELF, None
        if self.peek("*"):
            self.pos += 1
            return axis, None
        if self.peek("$USER"):
            if self.user is None:
                raise self.error("$USER used without a session user")
            self.pos += len("$USER")
            return axis, self.user
        match = _NAME.match(self.src, self.pos)
        if not match:
            if self.pos < len(self.src) and self.src[self.pos] == ":":
                raise self.error("unsupported axis")
            raise self.error("expected a node test")
        if self.src.startswith(":", match.end()):
            raise self.error("unsupported axis")
        self.pos = match.end()
        return axis, match.group()

    def qualifier(self) -> Qualifier:
        self.pos += 1  # '['
        match = _INTEGER.match(self.src, self.pos)
        if match:
            value = int(match.group())
            if value < 1:
                raise self.error("positions start at 1")
            self.pos = match.end() + 1
            return value
        steps = []
        while True:
            axis, test = self.test(Axis.CHILD)
            steps.append(Step(axis, test))
            if self.peek("]"):
                self.pos += 1
                return RelPath(tuple(steps))
            if self.peek("//"):
                raise self.error("'//' is not allowed inside a qualifier")
            if self.peek("["):
                raise self.error("nested qualifiers are not supported")
            if not self.peek("/"):
                raise self.error("expected '/' or ']'")
            self.pos += 1

    def path(self) -> PathExpr:
        if not self.src:
            raise self.error("empty path")
        if self.src == "/":
            return PathExpr(())
        steps = []
        while self.pos < len(self.src):
            if self.peek("//"):
                axis = Axis.DESCENDANT
                self.pos += 2
            elif self.peek("/"):
                axis = Axis.CHILD
                self.pos += 1
            else:
                raise self.error("expected '/' or '//'")
            axis, test = self.test(axis)
            qualifiers = []
            while self.peek("["):
                qualifiers.append(self.qualifier())
            steps.append(Step(axis, test, tuple(qualifiers)))
        return PathExpr(tuple(steps))


def parse_xpath(src: str, user: str | None = None) -> PathExpr:
    return _Parser(src.strip(), user).path()


def _as_path(p: PathExpr | str, user: str | None = None) -> PathExpr:
    return parse_xpath(p, user) if isinstance(p, str) else p


def _below(doc: Document, anchors: set[Ident], include_self: bool) -> set[Ident]:
    """Nodes having an ancestor (or, optionally, themselves) in ``anchors``."""
    geometry = doc.geometry
    inside: set[Ident] = set()
    for node in geometry.preorder():
        parent = geometry.parent(node)
        if parent is not None and (parent in anchors or parent in inside):
            inside.add(node)
    if include_self:
        inside |= anchors
    inside.discard(DOCUMENT)
    return inside


def _ancestors(doc: Document, nodes: Iterable[Ident]) -> set[Ident]:
    geometry = doc.geometry
    found: set[Ident] = set()
    for node in nodes:
        parent = geometry.parent(node)
        while parent is not None and parent not in found:
            found.add(parent)
            parent = geometry.parent(parent)
    return found


def _move(doc: Document, context: set[Ident], step: Step) -> set[Ident]:
    if step.axis is Axis.CHILD:
        reached = {kid for node in context for kid in doc.children(node)}
    else:
        reached = _below(doc, context, include_self=step.axis is Axis.DESCENDANT_OR_SELF)
    if step.test is None:
        return reached
    return {node for node in reached if doc.label(node) == step.test}


def _positions(doc: Document, nodes: set[Ident]) -> dict[Ident, int]:
    # 1 + number of preceding siblings that are also in ``nodes``
    by_parent: dict[Ident | None, list[Ident]] = {}
    for node in nodes:
        by_parent.setdefault(doc.parent(node), []).append(node)
    out: dict[Ident, int] = {}
    for group in by_parent.values():
        group.sort(key=lambda n: n.local_code)
        for i, node in enumerate(group, 1):
            out[node] = i
    return out


def _qualify(doc: Document, nodes: set[Ident], step: Step) -> set[Ident]:
    for qualifier in step.qualifiers:
        if isinstance(qualifier, int):
            ranks = _positions(doc, nodes)
            nodes = {n for n in nodes if ranks[n] == qualifier}
            continue
        targets = nodes
        for inner in qualifier.steps:
            targets = _move(doc, targets, inner)
        if step.axis is Axis.DESCENDANT_OR_SELF:
            # on a descendant-or-self step the qualifier picks subtree roots
            nodes = nodes & _below(doc, targets, include_self=True)
        else:
            nodes = nodes & _ancestors(doc, targets)
    return nodes


def select(p: PathExpr | str, doc: Document, user: str | None = None) -> set[Ident]:
    """Identifiers addressed by ``p`` in ``doc``."""
    path = _as_path(p, user)
    nodes: set[Ident] = {DOCUMENT}
    for step in path.steps:
        nodes = _qualify(doc, _move(doc, nodes, step), step)
        if not nodes:
            break
    return nodes


def eval_xpath(p: PathExpr | str, doc: Document, user: str | None = None) -> frozenset[tuple[Ident, str]]:
    """The node set addressed by ``p``: ``(identifier, label)`` pairs."""
    return frozenset((n, doc.label(n)) for n in select(p, doc, user))


def position(p: PathExpr | str, n: Ident, doc: Document, user: str | None = None) -> int:
    """Rank of ``n`` among its siblings that ``p`` also addresses (1-based)."""
    nodes = select(p, doc, user)
    if n not in nodes:
        raise XSecDBError(f"node {n} is not addressed by {p}")
    if n is DOCUMENT:
        return 1
    return _positions(doc, nodes)[n]
