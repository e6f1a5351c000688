"""Recursive-descent parser for minilang programs, test cases, and stub blocks.

``parse_program`` and ``parse_test`` run the typechecker before returning, so
a ``Program``/``TestCase`` in hand is always well-formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast
from .errors import MiniSyntaxError, MiniTypeError
from .lexer import Token, tokenize
from .values import wrap_int

BUILTIN_EXCEPTIONS = ("ArithmeticError", "NullError", "IndexError")

SCALAR_TYPES = ("Int", "Real", "Bool", "Str")


@dataclass
class Program:
    records: dict[str, ast.RecordDecl] = field(default_factory=dict)
    exceptions: dict[str, ast.ExceptionDecl] = field(default_factory=dict)
    interfaces: dict[str, ast.InterfaceDecl] = field(default_factory=dict)
    classes: dict[str, ast.ClassDecl] = field(default_factory=dict)
    decl_order: list[str] = field(default_factory=list)
    instruction_count: int = 0
    source: str = ""

    def type_exists(self, name: str) -> bool:
        return (
            name in SCALAR_TYPES
            or name == "Array"
            or name in self.records
            or name in self.exceptions
            or name in self.interfaces
            or name in self.classes
        )

    def is_reference_type(self, name: str) -> bool:
        return (
            name == "Array"
            or name in self.records
            or name in self.exceptions
            or name in self.interfaces
            or name in self.classes
        )


@dataclass
class TestCase:
    name: str
    mocks: list[tuple[str, str]]
    arrange: list[ast.Let]
    act: list[ast.Stmt]
    asserts: list[ast.Assertion]
    source: str
    id_base: int
    next_id: int
    e_ids: frozenset[int]
    scope_types: dict[str, str] = field(default_factory=dict)

    @property
    def mock_names(self) -> list[str]:
        return [name for name, _ in self.mocks]


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers ------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def at_kw(self, word: str) -> bool:
        return self.at("keyword", word)

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise MiniSyntaxError(f"expected {want!r}, found {t.text!r}", t.line, t.col)
        return self.advance()

    def expect_punct(self, text: str) -> Token:
        return self.expect("punct", text)

    def expect_kw(self, word: str) -> Token:
        return self.expect("keyword", word)

    def expect_name(self) -> Token:
        t = self.peek()
        if t.kind != "ident":
            raise MiniSyntaxError(f"expected identifier, found {t.text!r}", t.line, t.col)
        return self.advance()

    # -- declarations -------------------------------------------------

    def parse_declarations(self) -> Program:
        prog = Program()
        for name in BUILTIN_EXCEPTIONS:
            prog.exceptions[name] = ast.ExceptionDecl(name)
        while not self.at("eof"):
            t = self.peek()
            if self.at_kw("record"):
                d = self.parse_record()
                self._register(prog, d.name, t)
                prog.records[d.name] = d
            elif self.at_kw("exception"):
                d = self.parse_exception()
                self._register(prog, d.name, t)
                prog.exceptions[d.name] = d
            elif self.at_kw("interface"):
                d = self.parse_interface()
                self._register(prog, d.name, t)
                prog.interfaces[d.name] = d
            elif self.at_kw("class"):
                d = self.parse_class()
                self._register(prog, d.name, t)
                prog.classes[d.name] = d
            else:
                raise MiniSyntaxError(f"expected a declaration, found {t.text!r}", t.line, t.col)
        return prog

    def _register(self, prog: Program, name: str, t: Token) -> None:
        if prog.type_exists(name):
            raise MiniSyntaxError(f"duplicate type name {name!r}", t.line, t.col)
        prog.decl_order.append(name)

    def parse_type_name(self) -> str:
        t = self.peek()
        if t.kind == "ident":
            return self.advance().text
        raise MiniSyntaxError(f"expected type name, found {t.text!r}", t.line, t.col)

    def parse_record(self) -> ast.RecordDecl:
        t = self.expect_kw("record")
        name = self.expect_name().text
        self.expect_punct("{")
        fields: list[ast.Param] = []
        while not self.at("punct", "}"):
            if fields:
                self.expect_punct(",")
            fname = self.expect_name().text
            self.expect_punct(":")
            fields.append(ast.Param(fname, self.parse_type_name()))
        self.expect_punct("}")
        return ast.RecordDecl(name, fields, line=t.line)

    def parse_exception(self) -> ast.ExceptionDecl:
        t = self.expect_kw("exception")
        name = self.expect_name().text
        self.expect_punct(";")
        return ast.ExceptionDecl(name, line=t.line)

    def parse_interface(self) -> ast.InterfaceDecl:
        t = self.expect_kw("interface")
        name = self.expect_name().text
        self.expect_punct("{")
        methods: list[ast.MethodSig] = []
        while not self.at("punct", "}"):
            mt = self.expect_kw("fn")
            mname = self.expect_name().text
            params = self.parse_params()
            self.expect_punct("->")
            ret = self.parse_type_name()
            self.expect_punct(";")
            methods.append(ast.MethodSig(mname, params, ret, line=mt.line))
        self.expect_punct("}")
        return ast.InterfaceDecl(name, methods, line=t.line)

    def parse_class(self) -> ast.ClassDecl:
        t = self.expect_kw("class")
        name = self.expect_name().text
        self.expect_punct("{")
        fields: list[ast.Param] = []
        ctor: ast.CtorDecl | None = None
        methods: list[ast.MethodDecl] = []
        while not self.at("punct", "}"):
            if self.at_kw("field"):
                self.advance()
                fname = self.expect_name().text
                self.expect_punct(":")
                fields.append(ast.Param(fname, self.parse_type_name()))
                self.expect_punct(";")
            elif self.at_kw("constructor"):
                ct = self.advance()
                if ctor is not None:
                    raise MiniSyntaxError("duplicate constructor", ct.line, ct.col)
                params = self.parse_params()
                body = self.parse_block()
                ctor = ast.CtorDecl(params, body, line=ct.line)
            elif self.at_kw("fn"):
                mt = self.advance()
                mname = self.expect_name().text
                params = self.parse_params()
                self.expect_punct("->")
                ret = self.parse_type_name()
                body = self.parse_block()
                methods.append(ast.MethodDecl(mname, params, ret, body, line=mt.line))
            else:
                tk = self.peek()
                raise MiniSyntaxError(f"expected class member, found {tk.text!r}", tk.line, tk.col)
        self.expect_punct("}")
        return ast.ClassDecl(name, fields, ctor, methods, line=t.line)

    def parse_params(self) -> list[ast.Param]:
        self.expect_punct("(")
        params: list[ast.Param] = []
        while not self.at("punct", ")"):
            if params:
                self.expect_punct(",")
            pname = self.expect_name().text
            self.expect_punct(":")
            params.append(ast.Param(pname, self.parse_type_name()))
        self.expect_punct(")")
        return params

    # -- statements ---------------------------------------------------

    def parse_block(self) -> list[ast.Stmt]:
        self.expect_punct("{")
        stmts: list[ast.Stmt] = []
        while not self.at("punct", "}"):
            stmts.append(self.parse_stmt())
        self.expect_punct("}")
        return stmts

    def parse_stmt(self) -> ast.Stmt:
        t = self.peek()
        if self.at_kw("let"):
            self.advance()
            name = self.expect_name().text
            declared: str | None = None
            if self.at("punct", ":"):
                self.advance()
                declared = self.parse_type_name()
            self.expect_punct("=")
            init = self.parse_expr()
            self.expect_punct(";")
            return ast.Let(name, declared, init, line=t.line, col=t.col)
        if self.at_kw("return"):
            self.advance()
            value = None
            if not self.at("punct", ";"):
                value = self.parse_expr()
            self.expect_punct(";")
            return ast.Return(value, line=t.line, col=t.col)
        if self.at_kw("if"):
            return self.parse_if()
        if self.at_kw("while"):
            self.advance()
            self.expect_punct("(")
            cond = self.parse_expr()
            self.expect_punct(")")
            body = self.parse_block()
            return ast.While(cond, body, line=t.line, col=t.col)
        if self.at_kw("throw"):
            self.advance()
            value = self.parse_expr()
            self.expect_punct(";")
            return ast.Throw(value, line=t.line, col=t.col)
        if self.at_kw("try"):
            self.advance()
            body = self.parse_block()
            self.expect_kw("catch")
            self.expect_punct("(")
            exc_type = self.parse_type_name()
            exc_name = self.expect_name().text
            self.expect_punct(")")
            handler = self.parse_block()
            return ast.Try(body, exc_type, exc_name, handler, line=t.line, col=t.col)
        if self.at_kw("break"):
            self.advance()
            self.expect_punct(";")
            return ast.Break(line=t.line, col=t.col)
        if self.at_kw("continue"):
            self.advance()
            self.expect_punct(";")
            return ast.Continue(line=t.line, col=t.col)
        if self.at_kw("stub"):
            return self.parse_stub_stmt()
        # assignment or expression statement
        expr = self.parse_expr()
        if self.at("punct", "="):
            self.advance()
            value = self.parse_expr()
            self.expect_punct(";")
            if not isinstance(expr, (ast.VarRef, ast.FieldAccess)):
                raise MiniSyntaxError("invalid assignment target", t.line, t.col)
            return ast.Assign(expr, value, line=t.line, col=t.col)
        self.expect_punct(";")
        return ast.ExprStmt(expr, line=t.line, col=t.col)

    def parse_if(self) -> ast.Stmt:
        t = self.expect_kw("if")
        self.expect_punct("(")
        cond = self.parse_expr()
        self.expect_punct(")")
        then_body = self.parse_block()
        else_body: list[ast.Stmt] = []
        if self.at_kw("else"):
            self.advance()
            if self.at_kw("if"):
                else_body = [self.parse_if()]
            else:
                else_body = self.parse_block()
        return ast.If(cond, then_body, else_body, line=t.line, col=t.col)

    def parse_stub_stmt(self) -> ast.StubStmt:
        t = self.expect_kw("stub")
        mock_name = self.expect_name()
        mock = ast.VarRef(mock_name.text, line=mock_name.line, col=mock_name.col)
        self.expect_punct(".")
        method = self.expect_name().text
        matchers = self.parse_matchers()
        self.expect_punct("->")
        if self.at_kw("return"):
            self.advance()
            kind = "return"
        elif self.at_kw("throw"):
            self.advance()
            kind = "throw"
        else:
            tk = self.peek()
            raise MiniSyntaxError("expected 'return' or 'throw'", tk.line, tk.col)
        reaction = self.parse_expr()
        self.expect_punct(";")
        return ast.StubStmt(mock, method, matchers, kind, reaction, line=t.line, col=t.col)

    def parse_matchers(self) -> list[ast.MatcherNode]:
        self.expect_punct("(")
        matchers: list[ast.MatcherNode] = []
        while not self.at("punct", ")"):
            if matchers:
                self.expect_punct(",")
            if self.at_kw("any"):
                self.advance()
                matchers.append(ast.MatcherNode("any", None))
            elif self.at_kw("eq"):
                self.advance()
                self.expect_punct("(")
                expr = self.parse_expr()
                self.expect_punct(")")
                matchers.append(ast.MatcherNode("eq", expr))
            else:
                tk = self.peek()
                raise MiniSyntaxError("expected 'any' or 'eq(...)'", tk.line, tk.col)
        self.expect_punct(")")
        return matchers

    # -- expressions ----------------------------------------------------

    def parse_expr(self) -> ast.Expr:
        return self.parse_or()

    def _binary_level(self, ops: tuple[str, ...], next_level) -> ast.Expr:
        left = next_level()
        while self.peek().kind == "punct" and self.peek().text in ops:
            op = self.advance()
            right = next_level()
            left = ast.Binary(op.text, left, right, line=op.line, col=op.col)
        return left

    def parse_or(self) -> ast.Expr:
        return self._binary_level(("||",), self.parse_and)

    def parse_and(self) -> ast.Expr:
        return self._binary_level(("&&",), self.parse_equality)

    def parse_equality(self) -> ast.Expr:
        return self._binary_level(("==", "!="), self.parse_relational)

    def parse_relational(self) -> ast.Expr:
        return self._binary_level(("<", "<=", ">", ">="), self.parse_additive)

    def parse_additive(self) -> ast.Expr:
        return self._binary_level(("+", "-"), self.parse_multiplicative)

    def parse_multiplicative(self) -> ast.Expr:
        return self._binary_level(("*", "/", "%"), self.parse_unary)

    def parse_unary(self) -> ast.Expr:
        t = self.peek()
        if t.kind == "punct" and t.text in ("-", "!"):
            self.advance()
            operand = self.parse_unary()
            return ast.Unary(t.text, operand, line=t.line, col=t.col)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        expr = self.parse_primary()
        while True:
            t = self.peek()
            if self.at("punct", "."):
                self.advance()
                name = self.expect_name().text
                if self.at("punct", "("):
                    args = self.parse_args()
                    expr = ast.MethodCall(expr, name, args, line=t.line, col=t.col)
                else:
                    expr = ast.FieldAccess(expr, name, line=t.line, col=t.col)
            elif self.at("punct", "["):
                self.advance()
                index = self.parse_expr()
                self.expect_punct("]")
                expr = ast.Index(expr, index, line=t.line, col=t.col)
            else:
                return expr

    def parse_args(self) -> list[ast.Expr]:
        self.expect_punct("(")
        args: list[ast.Expr] = []
        while not self.at("punct", ")"):
            if args:
                self.expect_punct(",")
            args.append(self.parse_expr())
        self.expect_punct(")")
        return args

    def parse_primary(self) -> ast.Expr:
        t = self.peek()
        if t.kind == "int":
            self.advance()
            return ast.IntLit(wrap_int(t.value), line=t.line, col=t.col)
        if t.kind == "real":
            self.advance()
            return ast.RealLit(t.value, line=t.line, col=t.col)
        if t.kind == "str":
            self.advance()
            return ast.StrLit(t.value, line=t.line, col=t.col)
        if self.at_kw("true"):
            self.advance()
            return ast.BoolLit(True, line=t.line, col=t.col)
        if self.at_kw("false"):
            self.advance()
            return ast.BoolLit(False, line=t.line, col=t.col)
        if self.at_kw("null"):
            self.advance()
            return ast.NullLit(line=t.line, col=t.col)
        if self.at_kw("this"):
            self.advance()
            return ast.ThisRef(line=t.line, col=t.col)
        if self.at_kw("new"):
            self.advance()
            type_name = self.parse_type_name()
            args = self.parse_args()
            return ast.New(type_name, args, line=t.line, col=t.col)
        if self.at_kw("mock"):
            self.advance()
            self.expect_punct("(")
            iface = self.parse_type_name()
            self.expect_punct(")")
            return ast.MockCreateExpr(iface, line=t.line, col=t.col)
        if self.at("punct", "("):
            self.advance()
            expr = self.parse_expr()
            self.expect_punct(")")
            return expr
        if self.at("punct", "["):
            self.advance()
            items: list[ast.Expr] = []
            while not self.at("punct", "]"):
                if items:
                    self.expect_punct(",")
                items.append(self.parse_expr())
            self.expect_punct("]")
            return ast.ArrayLit(items, line=t.line, col=t.col)
        if t.kind == "ident":
            self.advance()
            if self.at("punct", "("):
                args = self.parse_args()
                return ast.BuiltinCall(t.text, args, line=t.line, col=t.col)
            return ast.VarRef(t.text, line=t.line, col=t.col)
        raise MiniSyntaxError(f"unexpected token {t.text!r}", t.line, t.col)

    # -- test cases -----------------------------------------------------

    def parse_test_decl(self) -> tuple[str, list[tuple[str, str]], list[ast.Let], list[ast.Stmt], list[ast.Assertion]]:
        self.expect_kw("test")
        name = self.expect_name().text
        self.expect_punct("{")
        mocks: list[tuple[str, str]] = []
        while self.at_kw("mock"):
            mt = self.advance()
            if not self.at("ident"):
                # `mock(` is the mock-create expression; `mock x:` is a declaration
                raise MiniSyntaxError("expected mock variable name", mt.line, mt.col)
            mname = self.expect_name().text
            self.expect_punct(":")
            iface = self.parse_type_name()
            self.expect_punct(";")
            mocks.append((mname, iface))
        arrange: list[ast.Let] = []
        while self.at_kw("let"):
            stmt = self.parse_stmt()
            arrange.append(stmt)  # type: ignore[arg-type]
        self.expect_kw("stub_site")
        self.expect_punct(";")
        self.expect_kw("act")
        act = self.parse_block()
        self.expect_kw("assert")
        self.expect_punct("{")
        asserts: list[ast.Assertion] = []
        while not self.at("punct", "}"):
            asserts.append(self.parse_assertion())
        self.expect_punct("}")
        self.expect_punct("}")
        return name, mocks, arrange, act, asserts

    def parse_assertion(self) -> ast.Assertion:
        t = self.peek()
        if self.at_kw("assertEquals"):
            self.advance()
            self.expect_punct("(")
            expected = self.parse_expr()
            self.expect_punct(",")
            actual = self.parse_expr()
            self.expect_punct(")")
            self.expect_punct(";")
            return ast.AssertEquals(expected, actual, line=t.line, col=t.col)
        if self.at_kw("assertTrue"):
            self.advance()
            self.expect_punct("(")
            expr = self.parse_expr()
            self.expect_punct(")")
            self.expect_punct(";")
            return ast.AssertTrue(expr, line=t.line, col=t.col)
        if self.at_kw("assertNotNull"):
            self.advance()
            self.expect_punct("(")
            expr = self.parse_expr()
            self.expect_punct(")")
            self.expect_punct(";")
            return ast.AssertNotNull(expr, line=t.line, col=t.col)
        if self.at_kw("assertSame"):
            self.advance()
            self.expect_punct("(")
            expected = self.parse_expr()
            self.expect_punct(",")
            actual = self.parse_expr()
            self.expect_punct(")")
            self.expect_punct(";")
            return ast.AssertSame(expected, actual, line=t.line, col=t.col)
        if self.at_kw("assertThrows"):
            self.advance()
            self.expect_punct("(")
            exc_type = self.parse_type_name()
            self.expect_punct(")")
            body = self.parse_block()
            return ast.AssertThrows(exc_type, body, line=t.line, col=t.col)
        if self.at_kw("verify"):
            self.advance()
            mock_tok = self.expect_name()
            mock = ast.VarRef(mock_tok.text, line=mock_tok.line, col=mock_tok.col)
            self.expect_punct(".")
            method = self.expect_name().text
            matchers = self.parse_matchers()
            self.expect_kw("times")
            times_tok = self.expect("int")
            self.expect_punct(";")
            return ast.Verify(mock, method, matchers, int(times_tok.value), line=t.line, col=t.col)
        raise MiniSyntaxError(f"expected an assertion, found {t.text!r}", t.line, t.col)


# ----------------------------------------------------------------------
# Public entry points
# ----------------------------------------------------------------------


def parse_program(source: str) -> Program:
    """Parse and typecheck a declarations file; instruction ids start at 0."""
    from .typecheck import check_program

    parser = _Parser(tokenize(source))
    prog = parser.parse_declarations()
    prog.source = source
    counter = 0
    for name in prog.decl_order:
        if name in prog.classes:
            cls = prog.classes[name]
            if cls.ctor is not None:
                counter = ast.assign_ids(cls.ctor.body, counter)
            for m in cls.methods:
                counter = ast.assign_ids(m.body, counter)
    prog.instruction_count = counter
    check_program(prog)
    return prog


# spec name for the program entry point
parse = parse_program


def parse_test(source: str, program: Program) -> TestCase:
    """Parse and typecheck a test file against *program*.

    Instruction ids continue after the program's so traces over both share
    one id space.
    """
    from .typecheck import check_test

    parser = _Parser(tokenize(source))
    name, mocks, arrange, act, asserts = parser.parse_test_decl()
    parser.expect("eof")
    base = program.instruction_count
    counter = base
    counter = ast.assign_ids(arrange, counter)
    counter = ast.assign_ids(act, counter)
    counter = ast.assign_ids(asserts, counter)
    test = TestCase(
        name=name,
        mocks=mocks,
        arrange=arrange,
        act=act,
        asserts=asserts,
        source=source,
        id_base=base,
        next_id=counter,
        e_ids=frozenset(ast.collect_ids(act)),
    )
    check_test(test, program)
    return test


def parse_stub_block(source: str, program: Program, test: TestCase) -> list[ast.Stmt]:
    """Parse and typecheck an arrange block (lets + stub statements)."""
    from .typecheck import check_stub_block

    parser = _Parser(tokenize(source))
    stmts: list[ast.Stmt] = []
    while not parser.at("eof"):
        stmts.append(parser.parse_stmt())
    ast.assign_ids(stmts, test.next_id)
    check_stub_block(stmts, program, test)
    return stmts
