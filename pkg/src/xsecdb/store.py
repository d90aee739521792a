"""One XML document held as a set of ``(identifier, label)`` facts."""

from __future__ import annotations

import re
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple
from xml.parsers import expat
from xml.sax.saxutils import escape

from .errors import DocumentError, LabelingError, XMLSyntaxError
from .labeling import DOCUMENT, Geometry, Ident, LabelTree, NodeId, parse_ident, static_number

__all__ = [
    "NodeFact",
    "Document",
    "ingest_xml",
    "parse_tree",
    "serialize_xml",
    "document_order",
    "dump",
    "load_dump",
]

RESTRICTED = "RESTRICTED"


class NodeFact(NamedTuple):
    id: Ident
    label: str


class Document:
    """An immutable fact set describing one tree.

    ``kind`` is ``"source"`` for the database itself and ``"view"`` for a
    per-user derived copy. Every transformation returns a new instance.
    """

    def __init__(self, facts: Mapping[Ident, str] | Iterable[tuple[Ident, str]], kind: str = "source"):
        if kind not in ("source", "view"):
            raise DocumentError(f"unknown document kind {kind!r}")
        labels = dict(facts.items() if isinstance(facts, Mapping) else facts)
        if labels.get(DOCUMENT) != "/":
            raise DocumentError("the document node must be present with label '/'")
        for ident, label in labels.items():
            if not isinstance(label, str) or not label:
                raise DocumentError(f"node {ident} has an empty label")
        self._labels = labels
        self.kind = kind
        # validates level-unique codes and parent closure
        self.geometry = Geometry(labels)

    @classmethod
    def from_tree(cls, tree: LabelTree) -> Document:
        return cls(static_number(tree))

    def __contains__(self, ident: object) -> bool:
        return ident in self._labels

    def __len__(self) -> int:
        return len(self._labels)

    def __iter__(self) -> Iterator[NodeFact]:
        return iter(self.facts())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Document):
            return NotImplemented
        return self.kind == other.kind and self._labels == other._labels

    def __hash__(self) -> int:
        return hash((self.kind, frozenset(self._labels.items())))

    def __repr__(self) -> str:
        return f"<Document {self.kind} with {len(self)} facts>"

    def label(self, ident: Ident) -> str:
        try:
            return self._labels[ident]
        except KeyError:
            raise DocumentError(f"node {ident} is not in the document") from None

    def ids(self) -> frozenset[Ident]:
        return frozenset(self._labels)

    def as_dict(self) -> dict[Ident, str]:
        return dict(self._labels)

    @cached_property
    def _facts(self) -> tuple[NodeFact, ...]:
        return tuple(NodeFact(i, self._labels[i]) for i in self.geometry.preorder())

    def facts(self) -> list[NodeFact]:
        """All facts in document order."""
        return list(self._facts)

    @property
    def root(self) -> NodeId | None:
        return self.geometry.root

    def children(self, ident: Ident) -> list[NodeId]:
        return self.geometry.children(ident)

    def parent(self, ident: Ident) -> Ident | None:
        return self.geometry.parent(ident)

    def relabel(self, changes: Mapping[Ident, str]) -> Document:
        if DOCUMENT in changes:
            raise DocumentError("the document node label is structural")
        labels = dict(self._labels)
        for ident, label in changes.items():
            if ident not in labels:
                raise DocumentError(f"node {ident} is not in the document")
            labels[ident] = label
        return Document(labels, self.kind)

    def without(self, idents: Iterable[Ident]) -> Document:
        drop = set(idents)
        if DOCUMENT in drop:
            raise DocumentError("the document node cannot be removed")
        return Document({i: v for i, v in self._labels.items() if i not in drop}, self.kind)

    def extended(self, facts: Mapping[NodeId, str]) -> Document:
        labels = dict(self._labels)
        for ident, label in facts.items():
            if ident in labels:
                raise DocumentError(f"node {ident} already exists")
            labels[ident] = label
        return Document(labels, self.kind)


def document_order(doc: Document) -> list[NodeFact]:
    return doc.facts()


def parse_tree(text: str) -> LabelTree:
    """Parse simplified markup (elements and text only) into a label tree."""
    parser = expat.ParserCreate()
    stack: list[tuple[str, list[LabelTree]]] = [("", [])]
    pending: list[str] = []

    def flush() -> None:
        run = "".join(pending).strip()
        pending.clear()
        if run:
            stack[-1][1].append(LabelTree(run))

    def start(name: str, attrs: dict) -> None:
        if attrs:
            raise XMLSyntaxError(
                f"attributes are not supported (element {name!r})",
                parser.CurrentLineNumber,
                parser.CurrentColumnNumber,
            )
        flush()
        stack.append((name, []))

    def end(name: str) -> None:
        flush()
        label, children = stack.pop()
        stack[-1][1].append(LabelTree(label, tuple(children)))

    def unsupported(kind: str):
        def handler(*_args) -> None:
            raise XMLSyntaxError(f"{kind} are not supported", parser.CurrentLineNumber, parser.CurrentColumnNumber)

        return handler

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = pending.append
    parser.ProcessingInstructionHandler = unsupported("processing instructions")
    parser.CommentHandler = unsupported("comments")
    parser.StartNamespaceDeclHandler = unsupported("namespace declarations")
    try:
        parser.Parse(text, True)
    except expat.ExpatError as exc:
        message = expat.ErrorString(exc.code)
        if exc.code == expat.errors.codes[expat.errors.XML_ERROR_JUNK_AFTER_DOC_ELEMENT]:
            message = "more than one root element"
        raise XMLSyntaxError(message, exc.lineno, exc.offset) from None
    roots = stack[0][1]
    if len(roots) != 1:
        raise XMLSyntaxError("expected exactly one root element")
    return roots[0]


def ingest_xml(text: str) -> Document:
    return Document.from_tree(parse_tree(text))


_NAME = re.compile(r"[A-Za-z_][\w.\-]*\Z")


def _is_name(label: str) -> bool:
    return bool(_NAME.match(label))


def serialize_xml(doc: Document) -> str:
    """Render the document as simplified markup.

    Node types are not stored, so a leaf becomes text when its label cannot be
    an element name or when it is the only child of its parent; any other leaf
    becomes an empty element.
    """
    geometry = doc.geometry
    root = geometry.root
    if root is None:
        return ""
    out: list[str] = []

    def emit(ident: NodeId) -> None:
        label = doc.label(ident)
        kids = geometry.children(ident)
        if not _is_name(label):
            raise DocumentError(f"label {label!r} of node {ident} cannot be an element name")
        if not kids:
            out.append(f"<{label}/>")
            return
        out.append(f"<{label}>")
        previous_text = False
        for kid in kids:
            kid_label = doc.label(kid)
            as_text = not geometry.children(kid) and (len(kids) == 1 or not _is_name(kid_label))
            if as_text:
                if previous_text or kid_label != kid_label.strip():
                    raise DocumentError(f"text node {kid} cannot be serialized unambiguously")
                out.append(escape(kid_label))
            else:
                emit(kid)
            previous_text = as_text
        out.append(f"</{label}>")

    emit(root)
    return "".join(out)


_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {v[1]: k for k, v in _ESCAPES.items()}


def _escape_label(label: str) -> str:
    return "".join(_ESCAPES.get(c, c) for c in label)


def _unescape_label(text: str) -> str:
    return re.sub(r"\\(.)", lambda m: _UNESCAPES.get(m.group(1), m.group(1)), text)


def dump(doc: Document) -> str:
    """Database dump: one ``identifier<TAB>label`` line per fact, document order."""
    return "".join(f"{fact.id}\t{_escape_label(fact.label)}\n" for fact in doc.facts())


def load_dump(text: str, kind: str = "source") -> Document:
    facts: dict[Ident, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        ident_text, sep, label = line.partition("\t")
        if not sep:
            raise DocumentError(f"line {lineno}: expected 'identifier<TAB>label'")
        try:
            ident = parse_ident(ident_text)
        except LabelingError as exc:
            raise DocumentError(f"line {lineno}: {exc}") from None
        if ident in facts:
            raise DocumentError(f"line {lineno}: duplicate identifier {ident}")
        facts[ident] = _unescape_label(label)
    return Document(facts, kind)
