import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    RECORDS_FACTS,
    LABELS,
    N1,
    N2,
    N5,
    N6,
    N7,
    N8,
    N9,
    N10,
    N11,
    PRIVILEGES,
    BruteTree,
    leaves,
    nid,
    random_hierarchy,
    random_path,
    random_rule_specs,
    random_tree,
)
from xsecdb.errors import XUpdateError
from xsecdb.labeling import DOCUMENT, LabelTree
from xsecdb.policy import Rule, Session, SubjectGraph, derive_perms
from xsecdb.secure import (
    RESTRICTED,
    Outcome,
    check_view,
    derive_view,
    secure_insert,
    secure_remove,
    secure_rename,
    secure_update,
)
from xsecdb.store import Document
from xsecdb.xupdate import apply_insert, apply_remove, apply_rename, apply_update


def setup(graph, rules, doc, user):
    session = Session(user)
    perms = derive_perms(graph, rules, doc, session, subjects=[user])
    return session, perms, derive_view(doc, perms, session)


class TestViews:
    def test_secretary(self, subjects, rules, records):
        _, perms, view = setup(subjects, rules, records, "beaufort")
        expected = {**RECORDS_FACTS, N6: RESTRICTED, N11: RESTRICTED}
        assert view.as_dict() == expected
        check_view(view, records, perms, "beaufort")

    def test_robert(self, subjects, rules, records):
        _, perms, view = setup(subjects, rules, records, "robert")
        assert view.as_dict() == {
            DOCUMENT: "/",
            N1: "patients",
            N7: "robert",
            N8: "service",
            N9: "pneumology",
            N10: "diagnosis",
            N11: "penumonia",
        }
        check_view(view, records, perms, "robert")

    def test_epidemiologist(self, subjects, rules, records):
        _, perms, view = setup(subjects, rules, records, "richard")
        assert view.as_dict() == {**RECORDS_FACTS, N2: RESTRICTED, N7: RESTRICTED}

    def test_doctor_sees_everything(self, subjects, rules, records):
        _, _, view = setup(subjects, rules, records, "laporte")
        assert view.as_dict() == RECORDS_FACTS
        assert view.kind == "view" and view.owner == "laporte"

    def test_no_permissions(self, subjects, records):
        _, _, view = setup(subjects, [], records, "laporte")
        assert view.as_dict() == {DOCUMENT: "/"}

    def test_pruning_ignores_descendant_grants(self, subjects, records):
        # read on every diagnosis leaf but nothing above: still invisible
        _, _, view = setup(subjects, [Rule("accept", "read", "//diagnosis/*", "staff", 1)], records, "laporte")
        assert view.as_dict() == {DOCUMENT: "/"}


def _entries(report):
    return [(e.node, e.outcome) for e in report.entries]


class TestSecureWrites:
    def test_secretary_renames_patient(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "beaufort")
        report = secure_rename(records, view, perms, s, "/patients/franck", "francis")
        assert _entries(report) == [(N2, Outcome.APPLIED)]
        assert report.document.label(N2) == "francis"
        assert report.status == 0

    def test_secretary_cannot_rename_restricted(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "beaufort")
        report = secure_rename(records, view, perms, s, "//diagnosis/*", "flu")
        assert _entries(report) == [(N6, Outcome.DENIED), (N11, Outcome.DENIED)]
        assert report.document == records
        assert report.status == 3

    def test_update_without_visibility_addresses_nothing(self, subjects, records):
        rules = [Rule("accept", "update", "//*", "staff", 1)]
        s, perms, view = setup(subjects, rules, records, "laporte")
        report = secure_rename(records, view, perms, s, "//*", "x")
        assert report.entries == [] and report.document == records

    def test_doctor_updates_diagnosis(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "laporte")
        report = secure_update(records, view, perms, s, "/patients/franck/diagnosis", "pharyngitis")
        assert _entries(report) == [(N6, Outcome.APPLIED)]
        assert report.document.as_dict() == {**RECORDS_FACTS, N6: "pharyngitis"}

    def test_secretary_cannot_update_diagnosis(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "beaufort")
        report = secure_update(records, view, perms, s, "/patients/franck/diagnosis", "pharyngitis")
        assert _entries(report) == [(N6, Outcome.DENIED)]
        assert report.entries[0].reason == "no update privilege"
        assert report.document == records

    def test_update_on_leaves(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "laporte")
        report = secure_update(records, view, perms, s, "//diagnosis/*", "x")
        assert report.entries == [] and report.document == records

    def test_secretary_appends_medical_file(self, subjects, rules, records, albert):
        s, perms, view = setup(subjects, rules, records, "beaufort")
        report = secure_insert(records, view, perms, s, "append", "/patients", albert)
        assert _entries(report) == [(N1, Outcome.APPLIED)]
        assert len(report.document) == len(records) + 4
        assert report.document.label(report.document.children(N1)[-1]) == "albert"

    def test_doctor_append(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "laporte")
        report = secure_insert(records, view, perms, s, "append", "//diagnosis", LabelTree("note"))
        assert _entries(report) == [(N5, Outcome.APPLIED), (N10, Outcome.APPLIED)]
        report = secure_insert(records, view, perms, s, "append", "/patients", LabelTree("note"))
        assert _entries(report) == [(N1, Outcome.DENIED)]
        assert report.document == records

    def test_secretary_insert_before_robert(self, subjects, rules, records, albert):
        s, perms, view = setup(subjects, rules, records, "beaufort")
        report = secure_insert(records, view, perms, s, "insert-before", "/patients/robert", albert)
        assert _entries(report) == [(N7, Outcome.APPLIED)]
        added = {k: v for k, v in report.document.as_dict().items() if k not in RECORDS_FACTS}
        assert added == {
            nid(1, (1, 1), (3, 2)): "albert",
            nid(2, (3, 2), (7, 3)): "service",
            nid(3, (7, 3), (5, 2)): "cardiology",
            nid(2, (3, 2), (8, 3)): "diagnosis",
        }

    def test_sibling_insert_at_root(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "beaufort")
        with pytest.raises(XUpdateError):
            secure_insert(records, view, perms, s, "insert-after", "/patients", LabelTree("x"))

    def test_doctor_removes_diagnoses(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "laporte")
        report = secure_remove(records, view, perms, s, "//diagnosis/*")
        assert _entries(report) == [(N6, Outcome.APPLIED), (N11, Outcome.APPLIED)]
        assert report.document.as_dict() == {k: v for k, v in RECORDS_FACTS.items() if k not in (N6, N11)}

    def test_epidemiologist_cannot_remove(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "richard")
        report = secure_remove(records, view, perms, s, "//*")
        assert report.applied == [] and len(report.denied) == len(records) - 1
        assert report.document == records
        assert report.render().endswith("RESULT: 0 applied, 11 denied\n")

    def test_remove_takes_invisible_descendants(self, subjects, records):
        rules = [
            Rule("accept", "read", "/patients", "staff", 1),
            Rule("accept", "read", "/patients/franck", "staff", 2),
            Rule("accept", "delete", "/patients/franck", "staff", 3),
        ]
        s, perms, view = setup(subjects, rules, records, "laporte")
        assert view.ids() == {DOCUMENT, N1, N2}
        report = secure_remove(records, view, perms, s, "//franck")
        assert report.applied == [N2]
        assert report.document.ids() == set(RECORDS_FACTS) - set(records.geometry.subtree(N2))

    def test_document_node_addressed(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "laporte")
        with pytest.raises(XUpdateError):
            secure_remove(records, view, perms, s, "/")

    def test_positional_uses_view_geometry(self, subjects, records):
        # robert's file is the first visible child of patients for robert
        rules = [
            Rule("accept", "read", "/patients/descendant-or-self::*[$USER]", "patient", 1),
            Rule("accept", "read", "/patients", "patient", 2),
            Rule("accept", "update", "//*", "patient", 3),
        ]
        s, perms, view = setup(subjects, rules, records, "robert")
        report = secure_rename(records, view, perms, s, "/patients/*[1]", "bob")
        assert report.applied == [N7]

    def test_render(self, subjects, rules, records):
        s, perms, view = setup(subjects, rules, records, "beaufort")
        text = secure_rename(records, view, perms, s, "/patients/*/diagnosis/*", "x").render()
        assert text.splitlines() == [
            f"DENIED {N6} no update privilege",
            f"DENIED {N11} no update privilege",
            "RESULT: 0 applied, 2 denied",
        ]


# properties over random documents and policies ---------------------------------


def random_setup(rng):
    names, edges = random_hierarchy(rng)
    user = rng.choice(leaves(names, edges))
    doc = Document.from_tree(random_tree(rng, 15, LABELS + [user]))
    rules = [Rule(sign, priv, path, subj, stamp) for stamp, sign, priv, path, subj in random_rule_specs(rng, names)]
    graph = SubjectGraph(set(names), edges)
    return graph, rules, doc, user


def random_op(rng, doc, session, perms, view):
    path = random_path(rng)
    kind = rng.choice(["rename", "update", "append", "insert-before", "insert-after", "remove"])
    if kind == "rename":
        return secure_rename(doc, view, perms, session, path, "z")
    if kind == "update":
        return secure_update(doc, view, perms, session, path, "z")
    if kind == "remove":
        return secure_remove(doc, view, perms, session, path)
    return secure_insert(doc, view, perms, session, kind, path, LabelTree("n", (LabelTree("m"),)))


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False))
def test_covert_channel_closure(rng):
    graph, rules, doc, user = random_setup(rng)
    session, perms, view = setup(graph, rules, doc, user)
    check_view(view, doc, perms, user)
    try:
        report = random_op(rng, doc, session, perms, view)
    except XUpdateError:
        return  # document node or root sibling: refused before touching anything
    brute = BruteTree(doc.as_dict())
    removed_roots = set(report.applied) if report.document is not None and len(report.document) < len(doc) else set()
    after = report.document
    for node in doc.ids() - view.ids():
        assert node not in {e.node for e in report.entries}
        if any(a in removed_roots for a in brute.ancestors(node)):
            continue  # deleted with a visible ancestor the user may delete
        for inner in {node} | brute.descendants(node):
            assert inner in after and after.label(inner) == doc.label(inner)
            assert after.children(inner) == doc.children(inner)


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_full_privileges_match_unsecured(rng):
    doc = Document.from_tree(random_tree(rng, 20))
    graph = SubjectGraph({"u"})
    rules = [Rule("accept", priv, "//descendant-or-self::*", "u", i) for i, priv in enumerate(PRIVILEGES, 1)]
    rules.append(Rule("accept", "insert", "/", "u", 9))
    session, perms, view = setup(graph, rules, doc, "u")
    assert view == Document(doc.as_dict(), kind="view")
    path = random_path(rng)
    if path == "/":
        return
    assert secure_rename(doc, view, perms, session, path, "z").document == apply_rename(doc, path, "z")
    assert secure_update(doc, view, perms, session, path, "z").document == apply_update(doc, path, "z")
    assert secure_remove(doc, view, perms, session, path).document == apply_remove(doc, path)
    tree = LabelTree("n")
    for placement in ("append", "insert-before", "insert-after"):
        try:
            expected = apply_insert(doc, placement, path, tree)
        except XUpdateError:
            with pytest.raises(XUpdateError):
                secure_insert(doc, view, perms, session, placement, path, tree)
            continue
        assert secure_insert(doc, view, perms, session, placement, path, tree).document == expected


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_idempotent_denial(rng):
    graph, rules, doc, user = random_setup(rng)
    session, perms, view = setup(graph, rules, doc, user)
    try:
        report = random_op(rng, doc, session, perms, view)
    except XUpdateError:
        return
    assert set(report.applied).isdisjoint(report.denied)
    if not report.applied:
        assert report.document == doc


def test_views_of_random_policies():
    rng = random.Random(12)
    for _ in range(200):
        graph, rules, doc, user = random_setup(rng)
        _, perms, view = setup(graph, rules, doc, user)
        check_view(view, doc, perms, user)
        assert view.ids() <= doc.ids()
