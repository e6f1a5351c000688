"""The genome: bounded stub programs with def-use tracking.

A stub program is an ordered sequence of at most 50 elements, each either a
variable definition or a stub call. References are either genome-local
variables (``IrRef``, rendered ``sv<k>``) or test-scope names (``TestRef``:
mocks and pre-stub-site lets). Element kinds stay syntactic (names, not
resolved symbols) so that obsolete stub code still parses; ``validate``
resolves everything against a program and test.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .minilang.builtins import BUILTINS
from .minilang.errors import MiniSyntaxError
from .minilang.lexer import quote_string, tokenize
from .minilang.parser import Program, TestCase
from .minilang.typecheck import assignable

LENGTH_LIMIT = 50

_IR_VAR = re.compile(r"^v\d+$")


@dataclass(frozen=True)
class IrRef:
    index: int

    def text(self) -> str:
        return f"v{self.index}"


@dataclass(frozen=True)
class TestRef:
    __test__ = False  # keep pytest from collecting this as a test class

    name: str

    def text(self) -> str:
        return self.name


Ref = IrRef | TestRef


@dataclass(frozen=True)
class LiteralExpr:
    value: object  # int | float | bool | str | None


@dataclass(frozen=True)
class ArrayExpr:
    items: tuple[Ref, ...]


@dataclass(frozen=True)
class CtorExpr:
    type_name: str
    args: tuple[Ref, ...]


@dataclass(frozen=True)
class MethodExpr:
    receiver: Ref
    method: str
    args: tuple[Ref, ...]


@dataclass(frozen=True)
class FieldExpr:
    receiver: Ref
    field: str


@dataclass(frozen=True)
class BuiltinExpr:
    name: str
    args: tuple[Ref, ...]


@dataclass(frozen=True)
class MockExpr:
    interface: str


Expr = LiteralExpr | ArrayExpr | CtorExpr | MethodExpr | FieldExpr | BuiltinExpr | MockExpr


@dataclass(frozen=True)
class AnyM:
    pass


@dataclass(frozen=True)
class EqM:
    ref: Ref


Matcher = AnyM | EqM


@dataclass(frozen=True)
class ReturnR:
    ref: Ref


@dataclass(frozen=True)
class ThrowR:
    ref: Ref


Reaction = ReturnR | ThrowR


@dataclass(frozen=True)
class VarDef:
    var: int
    expr: Expr


@dataclass(frozen=True)
class StubCall:
    target: Ref
    method: str
    matchers: tuple[Matcher, ...]
    reaction: Reaction


Elem = VarDef | StubCall


@dataclass(frozen=True)
class StubProgram:
    elements: tuple[Elem, ...] = ()

    def __len__(self) -> int:
        return len(self.elements)

    def stub_call_indices(self) -> list[int]:
        return [i for i, e in enumerate(self.elements) if isinstance(e, StubCall)]


@dataclass(frozen=True)
class Violation:
    code: str  # "length" | "redefinition" | "def-before-use" | "unknown-name" | "type"
    index: int
    message: str


# ----------------------------------------------------------------------
# Reference plumbing
# ----------------------------------------------------------------------


def refs_of(elem: Elem) -> list[Ref]:
    if isinstance(elem, VarDef):
        e = elem.expr
        if isinstance(e, (ArrayExpr, CtorExpr, BuiltinExpr)):
            return list(e.args) if not isinstance(e, ArrayExpr) else list(e.items)
        if isinstance(e, MethodExpr):
            return [e.receiver, *e.args]
        if isinstance(e, FieldExpr):
            return [e.receiver]
        return []
    refs: list[Ref] = [elem.target]
    for m in elem.matchers:
        if isinstance(m, EqM):
            refs.append(m.ref)
    refs.append(elem.reaction.ref)
    return refs


def def_positions(sp: StubProgram) -> dict[int, int]:
    """var index -> element index of its definition (first wins)."""
    pos: dict[int, int] = {}
    for i, e in enumerate(sp.elements):
        if isinstance(e, VarDef) and e.var not in pos:
            pos[e.var] = i
    return pos


# ----------------------------------------------------------------------
# Validation
# ----------------------------------------------------------------------


class _Types:
    """Resolves reference types against a (program, test) pair."""

    def __init__(self, program: Program, test: TestCase):
        self.program = program
        self.scope = test.scope_types

    def ref_type(self, ref: Ref, defs: dict[int, str]) -> str | None:
        if isinstance(ref, IrRef):
            return defs.get(ref.index)
        return self.scope.get(ref.name)

    def expr_type(self, e: Expr, defs: dict[int, str]) -> str | None:
        """Static type of an expression, or None when it does not resolve."""
        prog = self.program
        if isinstance(e, LiteralExpr):
            v = e.value
            if v is None:
                return "Null"
            if isinstance(v, bool):
                return "Bool"
            if isinstance(v, int):
                return "Int"
            if isinstance(v, float):
                return "Real"
            if isinstance(v, str):
                return "Str"
            return None
        if isinstance(e, ArrayExpr):
            return "Array"
        if isinstance(e, CtorExpr):
            return e.type_name if prog.type_exists(e.type_name) else None
        if isinstance(e, MethodExpr):
            recv = self.ref_type(e.receiver, defs)
            if recv in prog.classes:
                sig = next((m for m in prog.classes[recv].methods if m.name == e.method), None)
                return sig.return_type if sig else None
            return None
        if isinstance(e, FieldExpr):
            recv = self.ref_type(e.receiver, defs)
            fields = None
            if recv in prog.records:
                fields = prog.records[recv].fields
            elif recv in prog.classes:
                fields = prog.classes[recv].fields
            if fields is None:
                return None
            f = next((f for f in fields if f.name == e.field), None)
            return f.type_name if f else None
        if isinstance(e, BuiltinExpr):
            b = BUILTINS.get(e.name)
            return b.return_type if b else None
        if isinstance(e, MockExpr):
            return e.interface if e.interface in prog.interfaces else None
        return None


def validate(sp: StubProgram, test: TestCase, program: Program) -> list[Violation]:
    """All grammar and typing violations; an empty list means renderable."""
    violations: list[Violation] = []
    if len(sp.elements) > LENGTH_LIMIT:
        violations.append(
            Violation("length", len(sp.elements) - 1, f"{len(sp.elements)} elements exceed the limit of {LENGTH_LIMIT}")
        )
    types = _Types(program, test)
    defs: dict[int, str] = {}
    for i, elem in enumerate(sp.elements):
        def bad(code: str, message: str) -> None:
            violations.append(Violation(code, i, message))

        for ref in refs_of(elem):
            if isinstance(ref, IrRef):
                if ref.index not in defs:
                    bad("def-before-use", f"v{ref.index} used before definition")
            elif ref.name not in types.scope:
                bad("unknown-name", f"{ref.name!r} is not in the test scope")

        if isinstance(elem, VarDef):
            if elem.var in defs:
                bad("redefinition", f"v{elem.var} defined twice")
                continue
            ty = types.expr_type(elem.expr, defs)
            if ty is None:
                bad("type", f"definition of v{elem.var} does not resolve")
                defs[elem.var] = "Any"
                continue
            err = _check_expr_args(elem.expr, defs, types)
            if err is not None:
                bad("type", err)
            defs[elem.var] = ty
        else:
            err = _check_stub_call(elem, defs, types)
            if err is not None:
                bad("type", err)
    return violations


def _check_expr_args(e: Expr, defs: dict[int, str], types: _Types) -> str | None:
    prog = types.program
    if isinstance(e, LiteralExpr):
        if not isinstance(e.value, (bool, int, float, str)) and e.value is not None:
            return f"literal {e.value!r} is not a scalar"
        return None
    if isinstance(e, (ArrayExpr, MockExpr)):
        return None
    if isinstance(e, CtorExpr):
        if e.type_name in prog.records:
            params = [f.type_name for f in prog.records[e.type_name].fields]
        elif e.type_name in prog.exceptions:
            if len(e.args) not in (0, 1):
                return f"exception {e.type_name} takes zero or one argument"
            params = ["Str"] * len(e.args)
        elif e.type_name in prog.classes:
            ctor = prog.classes[e.type_name].ctor
            params = [p.type_name for p in ctor.params] if ctor else []
        else:
            return f"cannot construct {e.type_name!r}"
        return _match_args(e.args, params, defs, types, f"new {e.type_name}")
    if isinstance(e, MethodExpr):
        recv = types.ref_type(e.receiver, defs)
        if recv not in prog.classes:
            return f"method call receiver must be a class instance, got {recv!r}"
        sig = next((m for m in prog.classes[recv].methods if m.name == e.method), None)
        if sig is None:
            return f"class {recv!r} has no method {e.method!r}"
        return _match_args(e.args, [p.type_name for p in sig.params], defs, types, e.method)
    if isinstance(e, FieldExpr):
        return None  # resolution already checked via expr_type
    if isinstance(e, BuiltinExpr):
        b = BUILTINS.get(e.name)
        if b is None:
            return f"unknown function {e.name!r}"
        return _match_args(e.args, list(b.param_types), defs, types, e.name)
    return None


def _match_args(args: tuple[Ref, ...], params: list[str], defs, types: _Types, what: str) -> str | None:
    if len(args) != len(params):
        return f"{what!r} expects {len(params)} arguments, got {len(args)}"
    for ref, pty in zip(args, params):
        ty = types.ref_type(ref, defs)
        if ty is None:
            return f"argument {ref.text()} of {what!r} does not resolve"
        if not assignable(ty, pty, types.program):
            return f"argument {ref.text()} has type {ty!r}, expected {pty!r} in {what!r}"
    return None


def _check_stub_call(c: StubCall, defs: dict[int, str], types: _Types) -> str | None:
    prog = types.program
    target_ty = types.ref_type(c.target, defs)
    if target_ty not in prog.interfaces:
        return f"stub target {c.target.text()} is not a mock (type {target_ty!r})"
    sig = next((m for m in prog.interfaces[target_ty].methods if m.name == c.method), None)
    if sig is None:
        return f"interface {target_ty!r} has no method {c.method!r}"
    if len(c.matchers) != len(sig.params):
        return f"stub for {c.method!r} needs {len(sig.params)} matchers, got {len(c.matchers)}"
    for m, p in zip(c.matchers, sig.params):
        if isinstance(m, EqM):
            ty = types.ref_type(m.ref, defs)
            if ty is None or not assignable(ty, p.type_name, prog):
                return f"eq matcher {m.ref.text()} has type {ty!r}, expected {p.type_name!r}"
    rty = types.ref_type(c.reaction.ref, defs)
    if isinstance(c.reaction, ReturnR):
        if rty is None or not assignable(rty, sig.return_type, prog):
            return f"stub return {c.reaction.ref.text()} has type {rty!r}, expected {sig.return_type!r}"
    else:
        if rty not in prog.exceptions:
            return f"stub throw {c.reaction.ref.text()} must be an exception, got {rty!r}"
    return None


# ----------------------------------------------------------------------
# Rendering into a minilang arrange block
# ----------------------------------------------------------------------


def _render_literal(v: object) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return quote_string(v)


def _render_ref(ref: Ref) -> str:
    return f"sv{ref.index}" if isinstance(ref, IrRef) else ref.name


def _render_expr(e: Expr) -> str:
    if isinstance(e, LiteralExpr):
        return _render_literal(e.value)
    if isinstance(e, ArrayExpr):
        return "[" + ", ".join(_render_ref(r) for r in e.items) + "]"
    if isinstance(e, CtorExpr):
        return f"new {e.type_name}(" + ", ".join(_render_ref(r) for r in e.args) + ")"
    if isinstance(e, MethodExpr):
        return f"{_render_ref(e.receiver)}.{e.method}(" + ", ".join(_render_ref(r) for r in e.args) + ")"
    if isinstance(e, FieldExpr):
        return f"{_render_ref(e.receiver)}.{e.field}"
    if isinstance(e, BuiltinExpr):
        return f"{e.name}(" + ", ".join(_render_ref(r) for r in e.args) + ")"
    return f"mock({e.interface})"


def _render_matcher(m: Matcher) -> str:
    return "any" if isinstance(m, AnyM) else f"eq({_render_ref(m.ref)})"


def render(sp: StubProgram, test: TestCase) -> str:
    """Deterministic, injective rendering as a minilang arrange block."""
    lines: list[str] = []
    for elem in sp.elements:
        if isinstance(elem, VarDef):
            lines.append(f"let sv{elem.var} = {_render_expr(elem.expr)};")
        else:
            kind = "return" if isinstance(elem.reaction, ReturnR) else "throw"
            lines.append(
                f"stub {_render_ref(elem.target)}.{elem.method}("
                + ", ".join(_render_matcher(m) for m in elem.matchers)
                + f") -> {kind} {_render_ref(elem.reaction.ref)};"
            )
    return "\n".join(lines)


# ----------------------------------------------------------------------
# Direct AST construction (fast path equivalent to parsing render())
# ----------------------------------------------------------------------


def to_ast_block(sp: StubProgram) -> list:
    """Arrange-block AST identical to parsing ``render(sp, test)``.

    Negative number literals become unary-minus nodes, mirroring how the
    parser reads the rendered text, so instruction ids line up exactly.
    """
    import math

    from .minilang import ast
    from .minilang.values import wrap_int

    def lit(v) -> ast.Expr:
        if v is None:
            return ast.NullLit()
        if isinstance(v, bool):
            return ast.BoolLit(v)
        if isinstance(v, int):
            if v < 0:
                return ast.Unary("-", ast.IntLit(wrap_int(-v)))
            return ast.IntLit(v)
        if isinstance(v, float):
            if v < 0 or (v == 0.0 and math.copysign(1.0, v) < 0):
                return ast.Unary("-", ast.RealLit(-v))
            return ast.RealLit(v)
        return ast.StrLit(v)

    def var(ref: Ref) -> ast.VarRef:
        return ast.VarRef(_render_ref(ref))

    def expr(e: Expr) -> ast.Expr:
        if isinstance(e, LiteralExpr):
            return lit(e.value)
        if isinstance(e, ArrayExpr):
            return ast.ArrayLit([var(r) for r in e.items])
        if isinstance(e, CtorExpr):
            return ast.New(e.type_name, [var(r) for r in e.args])
        if isinstance(e, MethodExpr):
            return ast.MethodCall(var(e.receiver), e.method, [var(r) for r in e.args])
        if isinstance(e, FieldExpr):
            return ast.FieldAccess(var(e.receiver), e.field)
        if isinstance(e, BuiltinExpr):
            return ast.BuiltinCall(e.name, [var(r) for r in e.args])
        return ast.MockCreateExpr(e.interface)

    stmts: list[ast.Stmt] = []
    for elem in sp.elements:
        if isinstance(elem, VarDef):
            stmts.append(ast.Let(f"sv{elem.var}", None, expr(elem.expr)))
        else:
            matchers = [
                ast.MatcherNode("any") if isinstance(m, AnyM) else ast.MatcherNode("eq", var(m.ref))
                for m in elem.matchers
            ]
            kind = "return" if isinstance(elem.reaction, ReturnR) else "throw"
            stmts.append(
                ast.StubStmt(var(elem.target), elem.method, matchers, kind, var(elem.reaction.ref))
            )
    return stmts


# ----------------------------------------------------------------------
# Backward slicing
# ----------------------------------------------------------------------


def backward_slice(sp: StubProgram, index: int) -> StubProgram:
    """The element plus, transitively, every definition it depends on."""
    if not 0 <= index < len(sp.elements):
        raise IndexError(f"element index {index} out of range")
    positions = def_positions(sp)
    needed: set[int] = set()
    stack = [index]
    while stack:
        i = stack.pop()
        if i in needed:
            continue
        needed.add(i)
        for ref in refs_of(sp.elements[i]):
            if isinstance(ref, IrRef) and ref.index in positions:
                j = positions[ref.index]
                if j not in needed:
                    stack.append(j)
    return StubProgram(tuple(sp.elements[i] for i in sorted(needed)))


# ----------------------------------------------------------------------
# Textual serialization (external interface)
# ----------------------------------------------------------------------


def serialize_stub_text(sp: StubProgram) -> str:
    """One element per line, stable syntax. Inverse of parse_stub_text."""
    lines: list[str] = []
    for elem in sp.elements:
        if isinstance(elem, VarDef):
            lines.append(f"v{elem.var} <- {_text_expr(elem.expr)}")
        else:
            kind = "return" if isinstance(elem.reaction, ReturnR) else "throw"
            lines.append(
                f"stub {elem.target.text()}.{elem.method}("
                + ", ".join("any" if isinstance(m, AnyM) else f"eq({m.ref.text()})" for m in elem.matchers)
                + f") -> {kind} {elem.reaction.ref.text()}"
            )
    return "\n".join(lines)


def _text_expr(e: Expr) -> str:
    if isinstance(e, LiteralExpr):
        return _render_literal(e.value)
    if isinstance(e, ArrayExpr):
        return "[" + ", ".join(r.text() for r in e.items) + "]"
    if isinstance(e, CtorExpr):
        return f"new {e.type_name}(" + ", ".join(r.text() for r in e.args) + ")"
    if isinstance(e, MethodExpr):
        return f"{e.receiver.text()}.{e.method}(" + ", ".join(r.text() for r in e.args) + ")"
    if isinstance(e, FieldExpr):
        return f"{e.receiver.text()}.{e.field}"
    if isinstance(e, BuiltinExpr):
        return f"{e.name}(" + ", ".join(r.text() for r in e.args) + ")"
    return f"mock({e.interface})"


class StubTextError(Exception):
    pass


def parse_stub_text(text: str) -> StubProgram:
    """Parse the textual form. Purely syntactic: names resolve in validate()."""
    elements: list[Elem] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            tokens = tokenize(line)
        except MiniSyntaxError as exc:
            raise StubTextError(f"line {lineno}: {exc}") from exc
        parser = _TextParser(tokens, lineno)
        elements.append(parser.parse_elem())
        parser.expect_eof()
    return StubProgram(tuple(elements))


class _TextParser:
    def __init__(self, tokens, lineno: int):
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def fail(self, message: str):
        raise StubTextError(f"line {self.lineno}: {message} near {self.peek().text!r}")

    def expect_punct(self, text: str):
        t = self.advance()
        if t.kind != "punct" or t.text != text:
            self.fail(f"expected {text!r}")

    def expect_eof(self):
        if self.peek().kind != "eof":
            self.fail("trailing input")

    def parse_ref(self) -> Ref:
        t = self.advance()
        if t.kind != "ident":
            self.fail("expected a variable reference")
        if _IR_VAR.match(t.text):
            return IrRef(int(t.text[1:]))
        return TestRef(t.text)

    def parse_elem(self) -> Elem:
        t = self.peek()
        if t.kind == "keyword" and t.text == "stub":
            return self.parse_stub_call()
        if t.kind == "ident" and _IR_VAR.match(t.text):
            var = int(self.advance().text[1:])
            self.expect_punct("<-")
            return VarDef(var, self.parse_expr())
        self.fail("expected 'vN <- ...' or 'stub ...'")

    def parse_expr(self) -> Expr:
        t = self.peek()
        if t.kind in ("int", "real", "str"):
            self.advance()
            return LiteralExpr(t.value)
        if t.kind == "punct" and t.text == "-":
            self.advance()
            n = self.advance()
            if n.kind == "int":
                return LiteralExpr(-n.value)
            if n.kind == "real":
                return LiteralExpr(-n.value)
            self.fail("expected a number after '-'")
        if t.kind == "keyword" and t.text in ("true", "false"):
            self.advance()
            return LiteralExpr(t.text == "true")
        if t.kind == "keyword" and t.text == "null":
            self.advance()
            return LiteralExpr(None)
        if t.kind == "punct" and t.text == "[":
            self.advance()
            items: list[Ref] = []
            while not (self.peek().kind == "punct" and self.peek().text == "]"):
                if items:
                    self.expect_punct(",")
                items.append(self.parse_ref())
            self.advance()
            return ArrayExpr(tuple(items))
        if t.kind == "keyword" and t.text == "new":
            self.advance()
            name = self.advance()
            if name.kind != "ident":
                self.fail("expected a type name")
            return CtorExpr(name.text, self.parse_arg_refs())
        if t.kind == "keyword" and t.text == "mock":
            self.advance()
            self.expect_punct("(")
            name = self.advance()
            if name.kind != "ident":
                self.fail("expected an interface name")
            self.expect_punct(")")
            return MockExpr(name.text)
        if t.kind == "ident":
            first = self.advance()
            nxt = self.peek()
            if nxt.kind == "punct" and nxt.text == ".":
                self.advance()
                member = self.advance()
                if member.kind != "ident":
                    self.fail("expected a member name")
                receiver: Ref = IrRef(int(first.text[1:])) if _IR_VAR.match(first.text) else TestRef(first.text)
                if self.peek().kind == "punct" and self.peek().text == "(":
                    return MethodExpr(receiver, member.text, self.parse_arg_refs())
                return FieldExpr(receiver, member.text)
            if nxt.kind == "punct" and nxt.text == "(":
                return BuiltinExpr(first.text, self.parse_arg_refs())
            self.fail("a bare variable is not an expression")
        self.fail("expected an expression")

    def parse_arg_refs(self) -> tuple[Ref, ...]:
        self.expect_punct("(")
        args: list[Ref] = []
        while not (self.peek().kind == "punct" and self.peek().text == ")"):
            if args:
                self.expect_punct(",")
            args.append(self.parse_ref())
        self.advance()
        return tuple(args)

    def parse_stub_call(self) -> StubCall:
        self.advance()  # 'stub'
        target = self.parse_ref()
        self.expect_punct(".")
        method = self.advance()
        if method.kind != "ident":
            self.fail("expected a method name")
        self.expect_punct("(")
        matchers: list[Matcher] = []
        while not (self.peek().kind == "punct" and self.peek().text == ")"):
            if matchers:
                self.expect_punct(",")
            t = self.peek()
            if t.kind == "keyword" and t.text == "any":
                self.advance()
                matchers.append(AnyM())
            elif t.kind == "keyword" and t.text == "eq":
                self.advance()
                self.expect_punct("(")
                matchers.append(EqM(self.parse_ref()))
                self.expect_punct(")")
            else:
                self.fail("expected 'any' or 'eq(...)'")
        self.advance()
        self.expect_punct("->")
        t = self.advance()
        if t.kind == "keyword" and t.text == "return":
            return StubCall(target, method.text, tuple(matchers), ReturnR(self.parse_ref()))
        if t.kind == "keyword" and t.text == "throw":
            return StubCall(target, method.text, tuple(matchers), ThrowR(self.parse_ref()))
        self.fail("expected 'return' or 'throw'")
