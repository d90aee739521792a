"""Mutable holder for a database, its policy and the open session.

Permissions and views are recomputed from the rules for every request, so a
write that changes document content is reflected by the next one.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import PolicyError, XSecDBError
from .labeling import DOCUMENT
from .policy import (
    Perm,
    Rule,
    Session,
    SubjectGraph,
    check_rules,
    derive_perms,
    format_policy,
    format_subjects,
    parse_policy,
    parse_subjects,
)
from .secure import View, WriteReport, derive_view, secure_insert, secure_remove, secure_rename, secure_update
from .store import Document, NodeFact, dump, load_dump
from .xpath import parse_xpath, select
from .xupdate import OpKind, UpdateOp, apply_op

__all__ = ["NoSession", "EngineState"]

_SOURCE, _SUBJECTS, _POLICY, _SESSION = "source.dump", "subjects.txt", "policy.txt", "session"


class NoSession(XSecDBError):
    def __init__(self) -> None:
        super().__init__("no session: run 'login USER' first")


@dataclass
class EngineState:
    source: Document = field(default_factory=lambda: Document({DOCUMENT: "/"}))
    subjects: SubjectGraph = field(default_factory=SubjectGraph)
    rules: list[Rule] = field(default_factory=list)
    session: Session | None = None

    def set_subjects(self, graph: SubjectGraph) -> None:
        check_rules(graph, self.rules)
        if self.session is not None and self.session.user not in graph.subjects:
            self.session = None
        self.subjects = graph

    def set_rules(self, rules: list[Rule]) -> None:
        check_rules(self.subjects, rules)
        self.rules = list(rules)

    def login(self, user: str) -> Session:
        self.session = Session.open(self.subjects, user)
        return self.session

    def _session(self) -> Session:
        if self.session is None:
            raise NoSession()
        return self.session

    def perms(self) -> frozenset[Perm]:
        session = self._session()
        return derive_perms(self.subjects, self.rules, self.source, session, subjects=[session.user])

    def view(self) -> View:
        return derive_view(self.source, self.perms(), self._session())

    def query(self, path: str) -> list[NodeFact]:
        view = self.view()
        nodes = select(parse_xpath(path, self._session().user), view)
        return [fact for fact in view.facts() if fact.id in nodes]

    def write(self, op: UpdateOp) -> WriteReport:
        """Run a secured operation and publish the new source on success."""
        session = self._session()
        perms = self.perms()
        view = derive_view(self.source, perms, session)
        path = parse_xpath(op.path, session.user) if isinstance(op.path, str) else op.path
        if op.kind is OpKind.RENAME:
            report = secure_rename(self.source, view, perms, session, path, op.new_label)
        elif op.kind is OpKind.UPDATE:
            report = secure_update(self.source, view, perms, session, path, op.new_label)
        elif op.kind is OpKind.REMOVE:
            report = secure_remove(self.source, view, perms, session, path)
        else:
            report = secure_insert(self.source, view, perms, session, op.kind.placement, path, op.tree)
        self.source = report.document
        return report

    def write_unsecured(self, op: UpdateOp) -> Document:
        user = self.session.user if self.session is not None else None
        path = parse_xpath(op.path, user) if isinstance(op.path, str) else op.path
        self.source = apply_op(self.source, UpdateOp(op.kind, path, op.new_label, op.tree))
        return self.source

    def save(self, directory: str | os.PathLike) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / _SOURCE).write_text(dump(self.source), encoding="utf-8")
        (directory / _SUBJECTS).write_text(format_subjects(self.subjects), encoding="utf-8")
        (directory / _POLICY).write_text(format_policy(self.rules), encoding="utf-8")
        session_file = directory / _SESSION
        if self.session is None:
            session_file.unlink(missing_ok=True)
        else:
            session_file.write_text(self.session.user + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory: str | os.PathLike) -> EngineState:
        """Restore a saved state; missing files mean an empty database."""
        directory = Path(directory)
        state = cls()
        if (directory / _SOURCE).exists():
            state.source = load_dump((directory / _SOURCE).read_text(encoding="utf-8"))
        if (directory / _SUBJECTS).exists():
            state.subjects = parse_subjects((directory / _SUBJECTS).read_text(encoding="utf-8"))
        if (directory / _POLICY).exists():
            state.set_rules(parse_policy((directory / _POLICY).read_text(encoding="utf-8")))
        if (directory / _SESSION).exists():
            user = (directory / _SESSION).read_text(encoding="utf-8").strip()
            if user:
                try:
                    state.login(user)
                except PolicyError:
                    state.session = None
        return state

