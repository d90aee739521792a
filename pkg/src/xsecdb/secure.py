"""Per-user views and write operations checked against those views.

Write paths are evaluated on the session user's view, never on the source,
so an operation can only reach nodes the user is allowed to know about. The
selected identifiers are then mapped back to the source and changed there.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import AbstractSet, Iterable

from .errors import XUpdateError
from .labeling import DOCUMENT, Ident, LabelTree, Placement
from .policy import Perm, Privilege, Session
from .store import RESTRICTED, Document
from .xpath import PathExpr, select
from .xupdate import insert_copies, remove_subtrees, rename_nodes

__all__ = [
    "RESTRICTED",
    "View",
    "Outcome",
    "ReportEntry",
    "WriteReport",
    "derive_view",
    "check_view",
    "secure_rename",
    "secure_update",
    "secure_insert",
    "secure_remove",
]


class View(Document):
    """A pruned copy of the source; identifiers are the source identifiers."""

    def __init__(self, facts, owner: str):
        super().__init__(facts, kind="view")
        self.owner = owner


class Outcome(str, enum.Enum):
    APPLIED = "APPLIED"
    DENIED = "DENIED"


@dataclass(frozen=True)
class ReportEntry:
    node: Ident
    outcome: Outcome
    reason: str


@dataclass
class WriteReport:
    entries: list[ReportEntry] = field(default_factory=list)
    document: Document | None = None

    @property
    def applied(self) -> list[Ident]:
        return [e.node for e in self.entries if e.outcome is Outcome.APPLIED]

    @property
    def denied(self) -> list[Ident]:
        return [e.node for e in self.entries if e.outcome is Outcome.DENIED]

    def render(self) -> str:
        lines = [f"{e.outcome.value} {e.node} {e.reason}" for e in self.entries]
        lines.append(f"RESULT: {len(self.applied)} applied, {len(self.denied)} denied")
        return "\n".join(lines) + "\n"

    @property
    def status(self) -> int:
        """0 all applied, 2 partially applied, 3 nothing applied."""
        if self.applied and not self.denied:
            return 0
        return 2 if self.applied else 3


def _held(perms: AbstractSet[Perm], user: str):
    def has(privilege: Privilege, node: Ident) -> bool:
        return Perm(user, privilege, node) in perms

    return has


def derive_view(doc: Document, perms: AbstractSet[Perm], session: Session) -> View:
    """Top-down pruning of ``doc`` for the session user.

    A node whose parent was selected is shown with its label when the user may
    read it, as ``RESTRICTED`` when the user only holds ``position``, and is
    otherwise dropped together with everything beneath it.
    """
    has = _held(perms, session.user)
    facts: dict[Ident, str] = {DOCUMENT: "/"}
    stack: list[Ident] = [DOCUMENT]
    while stack:
        for kid in doc.children(stack.pop()):
            if has(Privilege.READ, kid):
                facts[kid] = doc.label(kid)
            elif has(Privilege.POSITION, kid):
                facts[kid] = RESTRICTED
            else:
                continue
            stack.append(kid)
    return View(facts, session.user)


def check_view(view: Document, doc: Document, perms: AbstractSet[Perm], user: str) -> None:
    """Assert the structural guarantees of a derived view (raises AssertionError)."""
    has = _held(perms, user)
    assert view.label(DOCUMENT) == "/"
    for ident, label in view.facts():
        if ident is DOCUMENT:
            continue
        assert ident in doc, f"{ident} is not a source node"
        assert view.parent(ident) == doc.parent(ident), f"{ident} moved"
        if has(Privilege.READ, ident):
            assert label == doc.label(ident), f"{ident} should show its label"
        else:
            assert has(Privilege.POSITION, ident) and label == RESTRICTED, f"{ident} should be RESTRICTED"


def _addressed(view: Document, path: PathExpr | str, session: Session) -> list[Ident]:
    nodes = select(path, view, session.user)
    if DOCUMENT in nodes:
        raise XUpdateError("the document node cannot be modified")
    return sorted(nodes, key=view.geometry.position)


def _decide(nodes: Iterable[Ident], allowed, why_not) -> tuple[list[ReportEntry], list[Ident]]:
    entries, ok = [], []
    for node in nodes:
        reason = None if allowed(node) else why_not(node)
        if reason is None:
            entries.append(ReportEntry(node, Outcome.APPLIED, "ok"))
            ok.append(node)
        else:
            entries.append(ReportEntry(node, Outcome.DENIED, reason))
    return entries, ok


def _relabel_check(has):
    def allowed(node: Ident) -> bool:
        return has(Privilege.UPDATE, node) and has(Privilege.READ, node)

    def why_not(node: Ident) -> str:
        if not has(Privilege.UPDATE, node):
            return "no update privilege"
        return "label is RESTRICTED"

    return allowed, why_not


def secure_rename(
    doc: Document, view: Document, perms: AbstractSet[Perm], session: Session, path: PathExpr | str, new_label: str
) -> WriteReport:
    """Rename view-addressed nodes the user may both update and read."""
    has = _held(perms, session.user)
    entries, ok = _decide(_addressed(view, path, session), *_relabel_check(has))
    return WriteReport(entries, rename_nodes(doc, ok, new_label))


def secure_update(
    doc: Document, view: Document, perms: AbstractSet[Perm], session: Session, path: PathExpr | str, new_label: str
) -> WriteReport:
    """Relabel the visible children of view-addressed nodes."""
    has = _held(perms, session.user)
    parents = _addressed(view, path, session)
    kids = sorted({kid for p in parents for kid in view.children(p)}, key=view.geometry.position)
    entries, ok = _decide(kids, *_relabel_check(has))
    return WriteReport(entries, rename_nodes(doc, ok, new_label))


def secure_insert(
    doc: Document,
    view: Document,
    perms: AbstractSet[Perm],
    session: Session,
    placement: Placement | str,
    path: PathExpr | str,
    tree: LabelTree,
) -> WriteReport:
    """Insert copies of ``tree`` where the user holds ``insert``.

    Appending needs the privilege on the addressed node, sibling insertion on
    its parent. Codes are allocated against the source so hidden siblings never
    collide with new nodes.
    """
    placement = Placement(placement)
    has = _held(perms, session.user)
    nodes = _addressed(view, path, session)
    if placement is Placement.APPEND:
        def anchor(node: Ident) -> Ident:
            return node
    else:
        if any(node.level == 0 for node in nodes):
            raise XUpdateError(f"cannot {placement.value} the root element")

        def anchor(node: Ident) -> Ident:
            return view.parent(node)

    entries, ok = _decide(
        nodes,
        lambda n: has(Privilege.INSERT, anchor(n)),
        lambda n: "no insert privilege" + ("" if placement is Placement.APPEND else " on parent"),
    )
    return WriteReport(entries, insert_copies(doc, ok, placement, tree))


def secure_remove(
    doc: Document, view: Document, perms: AbstractSet[Perm], session: Session, path: PathExpr | str
) -> WriteReport:
    """Delete the whole source subtree under each deletable addressed node.

    Descendants the user cannot see are deleted too; refusing would reveal
    that they exist.
    """
    has = _held(perms, session.user)
    entries, ok = _decide(
        _addressed(view, path, session),
        lambda n: has(Privilege.DELETE, n),
        lambda n: "no delete privilege",
    )
    return WriteReport(entries, remove_subtrees(doc, ok))
