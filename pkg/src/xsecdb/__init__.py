"""Secure XML database: rational node labels, XPath/XUpdate, and view-based access control."""

from .errors import (
    DocumentError,
    LabelingError,
    PolicyError,
    UnknownNode,
    XMLSyntaxError,
    XPathSyntaxError,
    XSecDBError,
    XUpdateError,
)
from .labeling import (
    DOCUMENT,
    ROOT_ID,
    CodeAllocation,
    Geometry,
    LabelTree,
    NodeId,
    Placement,
    Rational,
    allocate_codes,
    create_number,
    parse_ident,
    rational_compare,
    static_number,
)
from .policy import Perm, Privilege, Rule, Session, Sign, SubjectGraph, derive_perms, isa_closure
from .secure import (
    RESTRICTED,
    View,
    WriteReport,
    derive_view,
    secure_insert,
    secure_remove,
    secure_rename,
    secure_update,
)
from .store import Document, NodeFact, document_order, dump, ingest_xml, load_dump, serialize_xml
from .xpath import PathExpr, eval_xpath, parse_xpath, position, select
from .xupdate import OpKind, UpdateOp, apply_insert, apply_remove, apply_rename, apply_update

__version__ = "0.1.0"
