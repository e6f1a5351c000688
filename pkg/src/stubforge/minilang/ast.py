"""AST of minilang.

Every statement node and every non-trivial expression node (anything other
than a literal, a variable read, or ``this``) carries an instruction id.
Ids are dense integers assigned in document order by :func:`assign_ids`,
which makes them stable across re-parses of identical source.
"""

from __future__ import annotations

from dataclasses import dataclass, field


# ------------------------------------------------------------------
# Expressions
# ------------------------------------------------------------------


@dataclass
class Expr:
    line: int = field(default=0, kw_only=True)
    col: int = field(default=0, kw_only=True)
    instr_id: int | None = field(default=None, kw_only=True)
    ty: str | None = field(default=None, kw_only=True)  # filled by the typechecker


@dataclass
class IntLit(Expr):
    value: int = 0


@dataclass
class RealLit(Expr):
    value: float = 0.0


@dataclass
class BoolLit(Expr):
    value: bool = False


@dataclass
class StrLit(Expr):
    value: str = ""


@dataclass
class NullLit(Expr):
    pass


@dataclass
class VarRef(Expr):
    name: str = ""


@dataclass
class ThisRef(Expr):
    pass


@dataclass
class ArrayLit(Expr):
    items: list[Expr] = field(default_factory=list)


@dataclass
class Unary(Expr):
    op: str = ""
    operand: Expr | None = None


@dataclass
class Binary(Expr):
    op: str = ""
    left: Expr | None = None
    right: Expr | None = None


@dataclass
class FieldAccess(Expr):
    receiver: Expr | None = None
    name: str = ""


@dataclass
class Index(Expr):
    receiver: Expr | None = None
    index: Expr | None = None


@dataclass
class MethodCall(Expr):
    receiver: Expr | None = None
    method: str = ""
    args: list[Expr] = field(default_factory=list)


@dataclass
class BuiltinCall(Expr):
    name: str = ""
    args: list[Expr] = field(default_factory=list)


@dataclass
class New(Expr):
    type_name: str = ""
    args: list[Expr] = field(default_factory=list)


@dataclass
class MockCreateExpr(Expr):
    interface: str = ""


# ------------------------------------------------------------------
# Statements
# ------------------------------------------------------------------


@dataclass
class Stmt:
    line: int = field(default=0, kw_only=True)
    col: int = field(default=0, kw_only=True)
    instr_id: int | None = field(default=None, kw_only=True)


@dataclass
class Let(Stmt):
    name: str = ""
    declared_type: str | None = None
    init: Expr | None = None


@dataclass
class Assign(Stmt):
    # target is VarRef or FieldAccess
    target: Expr | None = None
    value: Expr | None = None


@dataclass
class If(Stmt):
    cond: Expr | None = None
    then_body: list[Stmt] = field(default_factory=list)
    else_body: list[Stmt] = field(default_factory=list)


@dataclass
class While(Stmt):
    cond: Expr | None = None
    body: list[Stmt] = field(default_factory=list)


@dataclass
class Return(Stmt):
    value: Expr | None = None


@dataclass
class Throw(Stmt):
    value: Expr | None = None


@dataclass
class Try(Stmt):
    body: list[Stmt] = field(default_factory=list)
    exc_type: str = ""
    exc_name: str = ""
    handler: list[Stmt] = field(default_factory=list)


@dataclass
class Break(Stmt):
    pass


@dataclass
class Continue(Stmt):
    pass


@dataclass
class ExprStmt(Stmt):
    expr: Expr | None = None


@dataclass
class MatcherNode:
    kind: str = "any"  # "any" | "eq"
    expr: Expr | None = None  # for eq


@dataclass
class StubStmt(Stmt):
    """Registers one stub entry on a mock: ``stub m.method(...) -> return/throw v;``"""

    mock: Expr | None = None  # VarRef
    method: str = ""
    matchers: list[MatcherNode] = field(default_factory=list)
    reaction_kind: str = "return"  # "return" | "throw"
    reaction: Expr | None = None


# ------------------------------------------------------------------
# Assertions
# ------------------------------------------------------------------


@dataclass
class Assertion:
    line: int = field(default=0, kw_only=True)
    col: int = field(default=0, kw_only=True)
    instr_id: int | None = field(default=None, kw_only=True)


@dataclass
class AssertEquals(Assertion):
    expected: Expr | None = None
    actual: Expr | None = None


@dataclass
class AssertTrue(Assertion):
    expr: Expr | None = None


@dataclass
class AssertNotNull(Assertion):
    expr: Expr | None = None


@dataclass
class AssertSame(Assertion):
    expected: Expr | None = None
    actual: Expr | None = None


@dataclass
class AssertThrows(Assertion):
    exc_type: str = ""
    body: list[Stmt] = field(default_factory=list)


@dataclass
class Verify(Assertion):
    mock: Expr | None = None  # VarRef
    method: str = ""
    matchers: list[MatcherNode] = field(default_factory=list)
    times: int = 0


# ------------------------------------------------------------------
# Declarations
# ------------------------------------------------------------------


@dataclass
class Param:
    name: str
    type_name: str


@dataclass
class RecordDecl:
    name: str
    fields: list[Param]
    line: int = 0


@dataclass
class ExceptionDecl:
    name: str
    line: int = 0


@dataclass
class MethodSig:
    name: str
    params: list[Param]
    return_type: str
    line: int = 0


@dataclass
class InterfaceDecl:
    name: str
    methods: list[MethodSig]
    line: int = 0


@dataclass
class MethodDecl:
    name: str
    params: list[Param]
    return_type: str
    body: list[Stmt]
    line: int = 0


@dataclass
class CtorDecl:
    params: list[Param]
    body: list[Stmt]
    line: int = 0


@dataclass
class ClassDecl:
    name: str
    fields: list[Param]
    ctor: CtorDecl | None
    methods: list[MethodDecl]
    line: int = 0


# ------------------------------------------------------------------
# Instruction numbering
# ------------------------------------------------------------------

_TRIVIAL_EXPRS = (IntLit, RealLit, BoolLit, StrLit, NullLit, VarRef, ThisRef)


def assign_ids(node: object, start: int) -> int:
    """Assign dense instruction ids in document order; returns the next free id."""
    counter = [start]

    def number(obj: object) -> None:
        if isinstance(obj, Expr):
            if not isinstance(obj, _TRIVIAL_EXPRS):
                obj.instr_id = counter[0]
                counter[0] += 1
            for child in _expr_children(obj):
                number(child)
        elif isinstance(obj, (Stmt, Assertion)):
            obj.instr_id = counter[0]
            counter[0] += 1
            for child in _node_children(obj):
                number(child)

    def walk(obj: object) -> None:
        if isinstance(obj, (Expr, Stmt, Assertion)):
            number(obj)
        elif isinstance(obj, list):
            for item in obj:
                walk(item)
        elif isinstance(obj, RecordDecl) or isinstance(obj, ExceptionDecl) or isinstance(obj, InterfaceDecl):
            pass
        elif isinstance(obj, ClassDecl):
            if obj.ctor is not None:
                walk(obj.ctor.body)
            for m in obj.methods:
                walk(m.body)

    walk(node)
    return counter[0]


def _expr_children(e: Expr) -> list[Expr]:
    if isinstance(e, ArrayLit):
        return list(e.items)
    if isinstance(e, Unary):
        return [e.operand]
    if isinstance(e, Binary):
        return [e.left, e.right]
    if isinstance(e, FieldAccess):
        return [e.receiver]
    if isinstance(e, Index):
        return [e.receiver, e.index]
    if isinstance(e, MethodCall):
        return [e.receiver, *e.args]
    if isinstance(e, BuiltinCall):
        return list(e.args)
    if isinstance(e, New):
        return list(e.args)
    return []


def _node_children(s: object) -> list[object]:
    if isinstance(s, Let):
        return [s.init]
    if isinstance(s, Assign):
        return [s.target, s.value]
    if isinstance(s, If):
        return [s.cond, *s.then_body, *s.else_body]
    if isinstance(s, While):
        return [s.cond, *s.body]
    if isinstance(s, Return):
        return [s.value] if s.value is not None else []
    if isinstance(s, Throw):
        return [s.value]
    if isinstance(s, Try):
        return [*s.body, *s.handler]
    if isinstance(s, ExprStmt):
        return [s.expr]
    if isinstance(s, StubStmt):
        out: list[object] = [s.mock]
        for m in s.matchers:
            if m.expr is not None:
                out.append(m.expr)
        out.append(s.reaction)
        return out
    if isinstance(s, AssertEquals):
        return [s.expected, s.actual]
    if isinstance(s, (AssertTrue, AssertNotNull)):
        return [s.expr]
    if isinstance(s, AssertSame):
        return [s.expected, s.actual]
    if isinstance(s, AssertThrows):
        return list(s.body)
    if isinstance(s, Verify):
        out = [s.mock]
        for m in s.matchers:
            if m.expr is not None:
                out.append(m.expr)
        return out
    return []


def collect_ids(node: object) -> set[int]:
    """All instruction ids assigned at or below *node*."""
    ids: set[int] = set()

    def walk(obj: object) -> None:
        if isinstance(obj, Expr):
            if obj.instr_id is not None:
                ids.add(obj.instr_id)
            for child in _expr_children(obj):
                walk(child)
        elif isinstance(obj, (Stmt, Assertion)):
            if obj.instr_id is not None:
                ids.add(obj.instr_id)
            for child in _node_children(obj):
                walk(child)
        elif isinstance(obj, list):
            for item in obj:
                walk(item)

    walk(node)
    return ids
