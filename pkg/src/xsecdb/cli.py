"""Command-line front end.

Single-shot commands keep their state in a directory (``--state``, default
``.xsecdb``) between invocations; ``xsecdb repl`` reads the same commands from
standard input and keeps the state in memory.

Exit statuses: 0 success, 1 usage or parse error, 2 write partially applied,
3 write not applied at all.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from pathlib import Path
from typing import TextIO

from .engine import EngineState
from .errors import XSecDBError
from .labeling import parse_ident
from .policy import Privilege, parse_policy, parse_subjects
from .store import dump, ingest_xml, load_dump, parse_tree
from .xupdate import OpKind, UpdateOp

OK, USAGE, PARTIAL, DENIED = 0, 1, 2, 3
_WRITES = [k.value for k in OpKind]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xsecdb", description="Secure XML database with per-user views.")
    parser.add_argument("--state", default=os.environ.get("XSECDB_STATE", ".xsecdb"), help="state directory")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    load = sub.add_parser("load", help="replace the database")
    source = load.add_mutually_exclusive_group(required=True)
    source.add_argument("--xml", help="simplified XML file")
    source.add_argument("--dump", help="database dump file")

    sub.add_parser("subjects", help="load the subject hierarchy").add_argument("--file", required=True)
    sub.add_parser("policy", help="load the rule set").add_argument("--file", required=True)
    sub.add_parser("login", help="open a session").add_argument("user")
    sub.add_parser("logout", help="close the session")
    sub.add_parser("query", help="evaluate a path on the session view").add_argument("path")
    sub.add_parser("view", help="print the session view")
    perms = sub.add_parser("perms", help="print the session user's permissions")
    perms.add_argument("--node", help="only this node identifier")

    for kind in ("rename", "update"):
        cmd = sub.add_parser(kind, help=f"secured {kind}")
        cmd.add_argument("path")
        cmd.add_argument("label")
    for kind in ("append", "insert-before", "insert-after"):
        cmd = sub.add_parser(kind, help=f"secured {kind}")
        cmd.add_argument("path")
        cmd.add_argument("--xml-fragment", required=True, help="file holding the tree to insert")
    sub.add_parser("remove", help="secured remove").add_argument("path")

    save = sub.add_parser("save", help="write the source database dump")
    save.add_argument("--out", required=True)

    admin = sub.add_parser("unsecured", help="apply an operation without access control")
    admin.add_argument("--as-admin", action="store_true", required=True)
    admin.add_argument("kind", choices=_WRITES)
    admin.add_argument("path")
    admin.add_argument("label", nargs="?")
    admin.add_argument("--xml-fragment")

    sub.add_parser("repl", help="read commands interactively")
    return parser


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_op(kind: str, args: argparse.Namespace) -> UpdateOp:
    kind = OpKind(kind)
    if kind in (OpKind.RENAME, OpKind.UPDATE):
        if args.label is None:
            raise UsageError(f"{kind.value} needs a LABEL")
        return UpdateOp(kind, args.path, new_label=args.label)
    if kind is OpKind.REMOVE:
        return UpdateOp(kind, args.path)
    if not getattr(args, "xml_fragment", None):
        raise UsageError(f"{kind.value} needs --xml-fragment FILE")
    return UpdateOp(kind, args.path, tree=parse_tree(_read(args.xml_fragment)))


def execute(state: EngineState, args: argparse.Namespace, out: TextIO) -> tuple[int, bool]:
    """Run one parsed command; returns the exit status and whether state changed."""
    command = args.command
    if command == "load":
        state.source = ingest_xml(_read(args.xml)) if args.xml else load_dump(_read(args.dump))
        return OK, True
    if command == "subjects":
        state.set_subjects(parse_subjects(_read(args.file)))
        return OK, True
    if command == "policy":
        state.set_rules(parse_policy(_read(args.file)))
        return OK, True
    if command == "login":
        state.login(args.user)
        return OK, True
    if command == "logout":
        state.session = None
        return OK, True
    if command == "query":
        for fact in state.query(args.path):
            out.write(f"{fact.id}\t{fact.label}\n")
        return OK, False
    if command == "view":
        out.write(dump(state.view()))
        return OK, False
    if command == "perms":
        perms = state.perms()
        node = parse_ident(args.node) if args.node else None
        ranks = {p: i for i, p in enumerate(Privilege)}
        order = state.source.geometry.position
        for perm in sorted(perms, key=lambda p: (order(p.node), ranks[p.privilege])):
            if node is None or perm.node == node:
                out.write(f"{perm.subject}\t{perm.privilege.value}\t{perm.node}\n")
        return OK, False
    if command in _WRITES:
        report = state.write(_write_op(command, args))
        out.write(report.render())
        return report.status, bool(report.applied)
    if command == "save":
        Path(args.out).write_text(dump(state.source), encoding="utf-8")
        return OK, False
    if command == "unsecured":
        state.write_unsecured(_write_op(args.kind, args))
        return OK, True
    raise UsageError(f"unknown command {command!r}")


def repl(state: EngineState, stdin: TextIO, out: TextIO, err: TextIO) -> int:
    parser = build_parser()
    status = OK
    interactive = stdin.isatty()
    while True:
        if interactive:
            out.write("xsecdb> ")
            out.flush()
        line = stdin.readline()
        if not line:
            return status
        try:
            words = shlex.split(line, comments=True)
        except ValueError as exc:
            err.write(f"error: {exc}\n")
            status = USAGE
            continue
        if not words:
            continue
        if words[0] in ("quit", "exit"):
            return status
        try:
            args = parser.parse_args(words)
            if args.command == "repl":
                raise UsageError("already in the REPL")
            status, _ = execute(state, args, out)
        except (UsageError, XSecDBError, OSError) as exc:
            err.write(f"error: {exc}\n")
            status = USAGE


def main(argv: list[str] | None = None, stdin: TextIO | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdin = stdin or sys.stdin
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        state = EngineState.load(args.state)
        preset = os.environ.get("XSECDB_USER")
        if state.session is None and preset and preset in state.subjects.subjects:
            state.login(preset)
        if args.command == "repl":
            return repl(state, stdin, out, err)
        status, changed = execute(state, args, out)
        if changed:
            state.save(args.state)
        return status
    except (UsageError, XSecDBError, OSError) as exc:
        err.write(f"error: {exc}\n")
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
