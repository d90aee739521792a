"""Subjects, authorization rules, and derivation of effective permissions."""

from __future__ import annotations

import enum
import graphlib
from dataclasses import dataclass
from typing import Iterable

from .errors import PolicyError, XPathSyntaxError
from .labeling import Ident
from .store import Document
from .xpath import parse_xpath, select

__all__ = [
    "Sign",
    "Privilege",
    "SubjectGraph",
    "Rule",
    "Perm",
    "Session",
    "isa_closure",
    "check_rules",
    "derive_perms",
    "parse_subjects",
    "parse_policy",
    "format_subjects",
    "format_policy",
]


class Sign(str, enum.Enum):
    ACCEPT = "accept"
    DENY = "deny"


class Privilege(str, enum.Enum):
    POSITION = "position"
    READ = "read"
    INSERT = "insert"
    UPDATE = "update"
    DELETE = "delete"


@dataclass(frozen=True)
class SubjectGraph:
    """Users and roles; an edge ``(a, b)`` means ``a`` is a ``b``."""

    subjects: frozenset[str] = frozenset()
    isa_edges: frozenset[tuple[str, str]] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "subjects", frozenset(self.subjects))
        object.__setattr__(self, "isa_edges", frozenset(self.isa_edges))
        for child, parent in self.isa_edges:
            for name in (child, parent):
                if name not in self.subjects:
                    raise PolicyError(f"isa edge mentions undeclared subject {name!r}")

    def is_leaf(self, subject: str) -> bool:
        return not any(parent == subject for _, parent in self.isa_edges)


@dataclass(frozen=True)
class Rule:
    sign: Sign
    privilege: Privilege
    path: str
    subject: str
    timestamp: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "sign", Sign(self.sign))
        object.__setattr__(self, "privilege", Privilege(self.privilege))
        if isinstance(self.timestamp, bool) or not isinstance(self.timestamp, int) or self.timestamp < 1:
            raise PolicyError(f"timestamp must be a positive integer, got {self.timestamp!r}")


@dataclass(frozen=True)
class Perm:
    subject: str
    privilege: Privilege
    node: Ident


@dataclass(frozen=True)
class Session:
    user: str

    @classmethod
    def open(cls, graph: SubjectGraph, user: str) -> Session:
        if user not in graph.subjects:
            raise PolicyError(f"unknown subject {user!r}")
        if not graph.is_leaf(user):
            raise PolicyError(f"{user!r} is a role, not a user")
        return cls(user)


def isa_closure(g: SubjectGraph) -> frozenset[tuple[str, str]]:
    """Reflexive-transitive closure of the ``isa`` edges."""
    parents: dict[str, set[str]] = {s: set() for s in g.subjects}
    for child, parent in g.isa_edges:
        parents[child].add(parent)
    try:
        order = list(graphlib.TopologicalSorter(parents).static_order())
    except graphlib.CycleError as exc:
        raise PolicyError(f"cycle in subject hierarchy: {exc.args[1]}") from None
    # parents come first in ``order``, so their ancestor sets are complete
    above: dict[str, set[str]] = {}
    for subject in order:
        above[subject] = {subject}.union(*(above[p] for p in parents[subject]))
    return frozenset((s, a) for s, ancestors in above.items() for a in ancestors)


def check_rules(g: SubjectGraph, rules: Iterable[Rule]) -> None:
    seen: dict[int, Rule] = {}
    for rule in rules:
        if rule.subject not in g.subjects:
            raise PolicyError(f"rule {rule.timestamp} names undeclared subject {rule.subject!r}")
        if rule.timestamp in seen:
            raise PolicyError(f"timestamp {rule.timestamp} used by more than one rule")
        seen[rule.timestamp] = rule


def derive_perms(
    g: SubjectGraph,
    rules: Iterable[Rule],
    doc: Document,
    session: Session | None = None,
    subjects: Iterable[str] | None = None,
) -> frozenset[Perm]:
    """Effective permissions on the source document.

    An accept rule holds for a node unless a deny rule applicable to the same
    subject, privilege and node carries a later timestamp. Nothing else is
    granted. ``$USER`` is bound to the session user; ``subjects`` restricts the
    output (default: every declared subject).
    """
    rules = list(rules)
    check_rules(g, rules)
    user = session.user if session is not None else None
    closure = isa_closure(g)
    wanted = g.subjects if subjects is None else frozenset(subjects)

    addressed: dict[int, set[Ident]] = {}
    for rule in rules:
        try:
            addressed[rule.timestamp] = select(parse_xpath(rule.path, user), doc)
        except XPathSyntaxError as exc:
            raise PolicyError(f"rule {rule.timestamp}: {exc}") from exc

    perms: set[Perm] = set()
    for subject in wanted:
        if subject not in g.subjects:
            raise PolicyError(f"unknown subject {subject!r}")
        latest: dict[tuple[Privilege, Ident], tuple[int, Sign]] = {}
        for rule in rules:
            if (subject, rule.subject) not in closure:
                continue
            for node in addressed[rule.timestamp]:
                key = (rule.privilege, node)
                if key not in latest or latest[key][0] < rule.timestamp:
                    latest[key] = (rule.timestamp, rule.sign)
        perms.update(
            Perm(subject, privilege, node)
            for (privilege, node), (_, sign) in latest.items()
            if sign is Sign.ACCEPT
        )
    return frozenset(perms)


def _lines(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_subjects(text: str) -> SubjectGraph:
    """Read ``subject NAME`` and ``isa CHILD PARENT`` lines."""
    subjects: set[str] = set()
    edges: set[tuple[str, str]] = set()
    for lineno, words in _lines(text):
        if words[0] == "subject" and len(words) == 2:
            subjects.add(words[1])
        elif words[0] == "isa" and len(words) == 3:
            edges.add((words[1], words[2]))
        else:
            raise PolicyError(f"line {lineno}: expected 'subject NAME' or 'isa CHILD PARENT'")
    graph = SubjectGraph(frozenset(subjects), frozenset(edges))
    isa_closure(graph)
    return graph


def parse_policy(text: str) -> list[Rule]:
    """Read ``TIMESTAMP accept|deny PRIVILEGE PATH SUBJECT`` lines."""
    rules = []
    for lineno, words in _lines(text):
        if len(words) != 5:
            raise PolicyError(f"line {lineno}: expected 'TIMESTAMP SIGN PRIVILEGE PATH SUBJECT'")
        stamp, sign, privilege, path, subject = words
        try:
            rules.append(Rule(Sign(sign), Privilege(privilege), path, subject, int(stamp)))
        except ValueError as exc:
            raise PolicyError(f"line {lineno}: {exc}") from None
    if len({r.timestamp for r in rules}) != len(rules):
        raise PolicyError("rule timestamps must be unique")
    return rules


def format_subjects(g: SubjectGraph) -> str:
    lines = [f"subject {s}" for s in sorted(g.subjects)]
    lines += [f"isa {c} {p}" for c, p in sorted(g.isa_edges)]
    return "".join(line + "\n" for line in lines)


def format_policy(rules: Iterable[Rule]) -> str:
    return "".join(
        f"{r.timestamp} {r.sign.value} {r.privilege.value} {r.path} {r.subject}\n"
        for r in sorted(rules, key=lambda r: r.timestamp)
    )
