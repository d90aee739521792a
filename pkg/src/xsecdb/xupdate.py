"""Unsecured XUpdate operations applied straight to a source document.

The path-based ``apply_*`` functions select nodes with :mod:`xsecdb.xpath` and
then delegate to the identifier-based helpers, which the secured layer reuses
once it has decided which nodes a user may touch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .errors import LabelingError, XUpdateError
from .labeling import DOCUMENT, Ident, LabelTree, NodeId, Placement, create_number
from .store import Document, parse_tree
from .xpath import PathExpr, select

__all__ = [
    "OpKind",
    "UpdateOp",
    "apply_rename",
    "apply_update",
    "apply_insert",
    "apply_remove",
    "apply_op",
    "rename_nodes",
    "insert_copies",
    "remove_subtrees",
]


class OpKind(str, enum.Enum):
    RENAME = "rename"
    UPDATE = "update"
    APPEND = "append"
    INSERT_BEFORE = "insert-before"
    INSERT_AFTER = "insert-after"
    REMOVE = "remove"

    @property
    def placement(self) -> Placement | None:
        try:
            return Placement(self.value)
        except ValueError:
            return None


@dataclass(frozen=True)
class UpdateOp:
    kind: OpKind
    path: PathExpr | str
    new_label: str | None = None
    tree: LabelTree | None = None

    def __post_init__(self) -> None:
        kind = OpKind(self.kind)
        object.__setattr__(self, "kind", kind)
        wants_label = kind in (OpKind.RENAME, OpKind.UPDATE)
        wants_tree = kind.placement is not None
        if wants_label != (self.new_label is not None):
            raise XUpdateError(f"{kind.value} {'needs' if wants_label else 'takes no'} label")
        if wants_tree != (self.tree is not None):
            raise XUpdateError(f"{kind.value} {'needs' if wants_tree else 'takes no'} tree")
        if isinstance(self.tree, str):
            object.__setattr__(self, "tree", parse_tree(self.tree))


def rename_nodes(doc: Document, nodes: Iterable[Ident], new_label: str) -> Document:
    nodes = set(nodes)
    if DOCUMENT in nodes:
        raise XUpdateError("the document node cannot be renamed")
    if not nodes:
        return doc
    return doc.relabel({n: new_label for n in nodes})


def _check_targets(doc: Document, targets: Iterable[Ident], placement: Placement) -> list[Ident]:
    targets = sorted(set(targets), key=doc.geometry.position)
    for target in targets:
        if placement is Placement.APPEND:
            if target is DOCUMENT and doc.root is not None:
                raise XUpdateError("the document already has a root element")
        elif target is DOCUMENT or target.level == 0:
            raise XUpdateError(f"cannot {placement.value} the document node or the root element")
    return targets


def insert_copies(doc: Document, targets: Iterable[Ident], placement: Placement | str, tree: LabelTree) -> Document:
    """Insert one copy of ``tree`` per target, targets taken in document order."""
    placement = Placement(placement)
    for target in _check_targets(doc, targets, placement):
        try:
            numbers = create_number(doc, target, placement, tree)
        except LabelingError as exc:
            raise XUpdateError(str(exc)) from exc
        labels = dict(tree.walk())
        doc = doc.extended({ident: labels[path].label for path, ident in numbers.items()})
    return doc


def remove_subtrees(doc: Document, roots: Iterable[Ident]) -> Document:
    roots = set(roots)
    if DOCUMENT in roots:
        raise XUpdateError("the document node cannot be removed")
    if not roots:
        return doc
    doomed: set[Ident] = set()
    for root in roots:
        if root not in doomed:
            doomed.update(doc.geometry.subtree(root))
    return doc.without(doomed)


def apply_rename(doc: Document, path: PathExpr | str, new_label: str) -> Document:
    """Give every node addressed by ``path`` the label ``new_label``."""
    return rename_nodes(doc, select(path, doc), new_label)


def apply_update(doc: Document, path: PathExpr | str, new_label: str) -> Document:
    """Relabel every child of every node addressed by ``path``."""
    kids = {kid for node in select(path, doc) for kid in doc.children(node)}
    return rename_nodes(doc, kids, new_label)


def apply_insert(doc: Document, placement: Placement | str, path: PathExpr | str, tree: LabelTree) -> Document:
    return insert_copies(doc, select(path, doc), placement, tree)


def apply_remove(doc: Document, path: PathExpr | str) -> Document:
    """Drop every subtree whose root is addressed by ``path``."""
    return remove_subtrees(doc, select(path, doc))


def apply_op(doc: Document, op: UpdateOp) -> Document:
    if op.kind is OpKind.RENAME:
        return apply_rename(doc, op.path, op.new_label)
    if op.kind is OpKind.UPDATE:
        return apply_update(doc, op.path, op.new_label)
    if op.kind is OpKind.REMOVE:
        return apply_remove(doc, op.path)
    return apply_insert(doc, op.kind.placement, op.path, op.tree)
