"""Persistent rational node identifiers and the tree geometry they encode.

Every node below the document node carries ``(level, parent_code, local_code)``
where both codes are exact rationals. Local codes are unique within a level and
increase in document order, so child and sibling relations can be decided from
two identifiers alone, and new nodes can always be given a code strictly
between two existing ones without touching anybody else's identifier.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Iterable, Iterator, Union

from .errors import DocumentError, LabelingError, UnknownNode

__all__ = [
    "Rational",
    "rational_compare",
    "DocumentId",
    "DOCUMENT",
    "NodeId",
    "Ident",
    "ROOT_ID",
    "parse_ident",
    "format_ident",
    "LabelTree",
    "Placement",
    "CodeAllocation",
    "static_number",
    "allocate_codes",
    "create_number",
    "Geometry",
]


@total_ordering
@dataclass(frozen=True)
class Rational:
    """Exact rational ``num/den`` kept in lowest terms with ``den > 0``.

    Use :meth:`of` to build from an arbitrary pair; the constructor itself only
    accepts pairs that already satisfy the invariants.
    """

    num: int
    den: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.num, int) or not isinstance(self.den, int):
            raise LabelingError(f"rational components must be integers: {self.num!r}, {self.den!r}")
        if self.den <= 0:
            raise LabelingError(f"denominator must be strictly positive: {self.den}")
        if math.gcd(self.num, self.den) != 1:
            raise LabelingError(f"({self.num}, {self.den}) is not in lowest terms")

    @classmethod
    def of(cls, num: int, den: int = 1) -> Rational:
        """Reduce ``num/den`` by the highest common factor."""
        if den == 0:
            raise LabelingError("zero denominator")
        if den < 0:
            num, den = -num, -den
        hcf = math.gcd(num, den)
        return cls(num // hcf, den // hcf)

    @classmethod
    def parse(cls, text: str) -> Rational:
        num, sep, den = text.partition("/")
        try:
            value = cls(int(num), int(den) if sep else 1)
        except ValueError:
            raise LabelingError(f"malformed rational {text!r}") from None
        return value

    def __lt__(self, other: Rational) -> bool:
        if not isinstance(other, Rational):
            return NotImplemented
        return self.num * other.den < other.num * self.den

    def __add__(self, other: Rational) -> Rational:
        return Rational.of(self.num * other.den + other.num * self.den, self.den * other.den)

    def __sub__(self, other: Rational) -> Rational:
        return Rational.of(self.num * other.den - other.num * self.den, self.den * other.den)

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"

    def __repr__(self) -> str:
        return f"Rational({self.num}, {self.den})"


def rational_compare(a: Rational, b: Rational) -> int:
    """Return -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    left, right = a.num * b.den, b.num * a.den
    return (left > right) - (left < right)


class DocumentId:
    """The identifier of the document node, rendered ``/``."""

    _instance: DocumentId | None = None

    def __new__(cls) -> DocumentId:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DOCUMENT"

    def __str__(self) -> str:
        return "/"

    def __reduce__(self):
        return (DocumentId, ())


DOCUMENT = DocumentId()


@dataclass(frozen=True)
class NodeId:
    """Identifier of an element or text node.

    ``parent_code`` is ``None`` exactly for the root element (level 0), whose
    parent is the document node.
    """

    level: int
    parent_code: Rational | None
    local_code: Rational

    def __post_init__(self) -> None:
        if self.level < 0:
            raise LabelingError(f"negative level {self.level}")
        if self.level == 0:
            if self.parent_code is not None or self.local_code != Rational(1):
                raise LabelingError("the root element identifier is (0, /, (1, 1))")
        elif self.parent_code is None:
            raise LabelingError("only level 0 may have the document node as parent")

    def __str__(self) -> str:
        parent = "/" if self.parent_code is None else str(self.parent_code)
        return f"{self.level}:{parent}:{self.local_code}"


Ident = Union[NodeId, DocumentId]
ROOT_ID = NodeId(0, None, Rational(1))


def format_ident(ident: Ident) -> str:
    return str(ident)


def parse_ident(text: str) -> Ident:
    """Inverse of :func:`format_ident` (``/`` or ``level:np/dp:n/d``)."""
    text = text.strip()
    if text == "/":
        return DOCUMENT
    parts = text.split(":")
    if len(parts) != 3:
        raise LabelingError(f"malformed node identifier {text!r}")
    level_text, parent_text, local_text = parts
    try:
        level = int(level_text)
    except ValueError:
        raise LabelingError(f"malformed level in {text!r}") from None
    parent = None if parent_text == "/" else Rational.parse(parent_text)
    return NodeId(level, parent, Rational.parse(local_text))


@dataclass(frozen=True)
class LabelTree:
    """An ordered tree of labels with no identifiers yet."""

    label: str
    children: tuple[LabelTree, ...] = ()

    def walk(self) -> Iterator[tuple[tuple[int, ...], LabelTree]]:
        """Yield ``(path, node)`` in preorder; the root has path ``()``."""
        stack: list[tuple[tuple[int, ...], LabelTree]] = [((), self)]
        while stack:
            path, node = stack.pop()
            yield path, node
            for i in range(len(node.children) - 1, -1, -1):
                stack.append((path + (i,), node.children[i]))

    def __len__(self) -> int:
        return sum(1 for _ in self.walk())


class Placement(str, enum.Enum):
    APPEND = "append"
    INSERT_BEFORE = "insert-before"
    INSERT_AFTER = "insert-after"


@dataclass(frozen=True)
class CodeAllocation:
    level: int
    codes: tuple[Rational, ...] = field(default_factory=tuple)


def static_number(tree: LabelTree) -> list[tuple[Ident, str]]:
    """Number a fresh tree; returns ``(identifier, label)`` facts in document order.

    The ``i``-th node met at a level, counting left to right across the whole
    level, gets local code ``(i, 1)``.
    """
    if not isinstance(tree, LabelTree):
        raise LabelingError("static numbering needs exactly one root element")
    facts: list[tuple[Ident, str]] = [(DOCUMENT, "/")]
    counters: dict[int, int] = {}
    stack: list[tuple[LabelTree, int, Rational | None]] = [(tree, 0, None)]
    while stack:
        node, level, parent_code = stack.pop()
        counters[level] = counters.get(level, 0) + 1
        ident = NodeId(level, parent_code, Rational(counters[level]))
        facts.append((ident, node.label))
        for child in reversed(node.children):
            stack.append((child, level + 1, ident.local_code))
    return facts


def _interior(lower: Rational, upper: Rational, k: int, parts: int) -> Rational:
    # lower + k * (upper - lower) / parts, reduced by the hcf of the pair
    num = lower.num * upper.den * parts + k * (upper.num * lower.den - lower.num * upper.den)
    den = lower.den * upper.den * parts
    hcf = math.gcd(num, den)
    return Rational(num // hcf, den // hcf)


def allocate_codes(level: int, lower: Rational | None, upper: Rational | None, m: int) -> CodeAllocation:
    """Produce ``m`` increasing local codes strictly between two neighbours.

    Missing neighbours mean the new run sits at an edge of the level: unit steps
    away from the existing neighbour, or ``1..m`` for an empty level. With both
    neighbours the gap is split into ``m + 1`` equal parts.
    """
    if m < 1:
        raise LabelingError(f"cannot allocate {m} codes")
    if lower is not None and upper is not None:
        if not lower < upper:
            raise LabelingError(f"lower code {lower} is not below upper code {upper}")
        codes = tuple(_interior(lower, upper, k, m + 1) for k in range(1, m + 1))
    elif upper is not None:
        codes = tuple(Rational.of(upper.num - k * upper.den, upper.den) for k in range(m, 0, -1))
    elif lower is not None:
        codes = tuple(Rational.of(lower.num + k * lower.den, lower.den) for k in range(1, m + 1))
    else:
        codes = tuple(Rational(k) for k in range(1, m + 1))
    return CodeAllocation(level, codes)


class Geometry:
    """Tree relations derived purely from a set of identifiers.

    ``is_child`` and ``is_preceding_sibling`` look only at the two identifiers
    involved; the indexes built here serve navigation and existence checks.
    """

    def __init__(self, idents: Iterable[Ident]):
        self._ids: set[Ident] = set()
        self._by_code: dict[tuple[int, Rational], NodeId] = {}
        self._children: dict[Ident, list[NodeId]] = {}
        self._parent: dict[NodeId, Ident] = {}
        has_document = False
        for ident in idents:
            if ident is DOCUMENT:
                has_document = True
                self._ids.add(ident)
                continue
            key = (ident.level, ident.local_code)
            if key in self._by_code:
                raise DocumentError(f"local code {ident.local_code} used twice at level {ident.level}")
            self._by_code[key] = ident
            self._ids.add(ident)
        if not has_document:
            raise DocumentError("the document node is missing")
        for ident in self._by_code.values():
            if ident.level == 0:
                parent: Ident | None = DOCUMENT
            else:
                parent = self._by_code.get((ident.level - 1, ident.parent_code))
            if parent is None:
                raise DocumentError(f"node {ident} has no parent in the document")
            self._parent[ident] = parent
            self._children.setdefault(parent, []).append(ident)
        for siblings in self._children.values():
            siblings.sort(key=lambda n: n.local_code)
        self._order: list[Ident] | None = None
        self._position: dict[Ident, int] | None = None

    def __contains__(self, ident: object) -> bool:
        return ident in self._ids

    def __len__(self) -> int:
        return len(self._ids)

    def _require(self, *idents: Ident) -> None:
        for ident in idents:
            if ident not in self._ids:
                raise UnknownNode(f"node {ident} is not in the document")

    @property
    def root(self) -> NodeId | None:
        return self._by_code.get((0, Rational(1)))

    def parent(self, x: Ident) -> Ident | None:
        self._require(x)
        return None if x is DOCUMENT else self._parent[x]

    def children(self, x: Ident) -> list[NodeId]:
        self._require(x)
        return list(self._children.get(x, ()))

    def preorder(self) -> list[Ident]:
        """Document order: depth first, siblings by ascending local code."""
        if self._order is None:
            order: list[Ident] = []
            stack: list[Ident] = [DOCUMENT]
            while stack:
                node = stack.pop()
                order.append(node)
                stack.extend(reversed(self._children.get(node, ())))
            self._order = order
            self._position = {ident: i for i, ident in enumerate(order)}
        return self._order

    def position(self, x: Ident) -> int:
        """Index of ``x`` in document order."""
        self._require(x)
        self.preorder()
        assert self._position is not None
        return self._position[x]

    def subtree(self, x: Ident) -> list[Ident]:
        """``x`` and all its descendants, in document order."""
        self._require(x)
        out: list[Ident] = []
        stack: list[Ident] = [x]
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(reversed(self._children.get(node, ())))
        return out

    def is_child(self, x: Ident, y: Ident) -> bool:
        self._require(x, y)
        if x is DOCUMENT:
            return False
        if y is DOCUMENT:
            return x.level == 0
        return x.level == y.level + 1 and x.parent_code == y.local_code

    def is_preceding_sibling(self, x: Ident, y: Ident) -> bool:
        self._require(x, y)
        if x is DOCUMENT or y is DOCUMENT:
            return False
        return (
            x.level == y.level
            and x.parent_code == y.parent_code
            and rational_compare(x.local_code, y.local_code) < 0
        )

    def is_immediate_preceding_sibling(self, x: Ident, y: Ident) -> bool:
        if not self.is_preceding_sibling(x, y):
            return False
        siblings = self._children[self._parent[y]]
        return siblings.index(y) - siblings.index(x) == 1

    def is_descendant(self, x: Ident, y: Ident) -> bool:
        self._require(x, y)
        if x is DOCUMENT:
            return False
        node: Ident = x
        while node is not DOCUMENT:
            node = self._parent[node]
            if node == y:
                return True
        return False

    def is_descendant_or_self(self, x: Ident, y: Ident) -> bool:
        self._require(x, y)
        return x == y or self.is_descendant(x, y)


def create_number(doc, target: Ident, placement: Placement | str, subtree: LabelTree) -> dict[tuple[int, ...], NodeId]:
    """Identifiers for a copy of ``subtree`` placed relative to ``target``.

    ``doc`` is a document (or a bare :class:`Geometry`). The result maps each
    subtree node, addressed by its child-index path, to its new identifier.
    Existing identifiers are never changed; for every level the new run of codes
    is squeezed between that level's neighbours in document order.
    """
    geometry: Geometry = getattr(doc, "geometry", doc)
    placement = Placement(placement)
    if target not in geometry:
        raise UnknownNode(f"node {target} is not in the document")

    if placement is Placement.APPEND:
        if target is DOCUMENT:
            if geometry.root is not None:
                raise LabelingError("the document already has a root element")
            base_level, anchor_code = 0, None
        else:
            base_level, anchor_code = target.level + 1, target.local_code
        cut = geometry.position(target) + len(geometry.subtree(target))
    else:
        if target is DOCUMENT or target.level == 0:
            raise LabelingError("the document node and the root element cannot have siblings")
        base_level, anchor_code = target.level, target.parent_code
        cut = geometry.position(target)
        if placement is Placement.INSERT_AFTER:
            cut += len(geometry.subtree(target))

    new_nodes = list(subtree.walk())
    runs: dict[int, int] = {}
    for path, _ in new_nodes:
        runs[base_level + len(path)] = runs.get(base_level + len(path), 0) + 1

    order = geometry.preorder()
    lower: dict[int, Rational] = {}
    for ident in order[:cut]:
        if ident is not DOCUMENT and ident.level in runs:
            lower[ident.level] = ident.local_code
    upper: dict[int, Rational] = {}
    for ident in order[cut:]:
        if ident is not DOCUMENT and ident.level in runs and ident.level not in upper:
            upper[ident.level] = ident.local_code

    fresh = {
        level: iter(allocate_codes(level, lower.get(level), upper.get(level), m).codes)
        for level, m in runs.items()
    }
    assigned: dict[tuple[int, ...], NodeId] = {}
    for path, _ in new_nodes:
        level = base_level + len(path)
        parent_code = anchor_code if not path else assigned[path[:-1]].local_code
        assigned[path] = NodeId(level, parent_code, next(fresh[level]))
    return assigned
