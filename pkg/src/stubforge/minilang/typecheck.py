"""Static checks for minilang: name resolution, exact-type expression typing.

Annotates each expression node's ``ty`` in place. ``Any`` types only arise
from array indexing and may only be compared for (in)equality.
"""

from __future__ import annotations

from . import ast
from .builtins import BUILTINS
from .errors import MiniTypeError
from .parser import Program, TestCase, SCALAR_TYPES

_NUMERIC = ("Int", "Real")


def assignable(src: str, dst: str, program: Program) -> bool:
    if src == dst:
        return True
    return src == "Null" and program.is_reference_type(dst)


class _Scope:
    def __init__(self, parent: "_Scope | None" = None):
        self.parent = parent
        self.vars: dict[str, str] = {}

    def lookup(self, name: str) -> str | None:
        scope: _Scope | None = self
        while scope is not None:
            if name in scope.vars:
                return scope.vars[name]
            scope = scope.parent
        return None

    def declare(self, name: str, ty: str, node: ast.Stmt) -> None:
        if self.lookup(name) is not None:
            raise MiniTypeError(f"variable {name!r} already declared", node.line, node.col)
        self.vars[name] = ty

    def child(self) -> "_Scope":
        return _Scope(self)


class _Checker:
    def __init__(self, program: Program):
        self.program = program
        self.current_class: ast.ClassDecl | None = None
        self.return_type: str | None = None
        self.loop_depth = 0
        self.allow_stub = False

    # -- declarations ---------------------------------------------------

    def check_program(self) -> None:
        prog = self.program
        for rec in prog.records.values():
            for f in rec.fields:
                self._require_type(f.type_name, rec.line)
        for iface in prog.interfaces.values():
            seen: set[str] = set()
            for m in iface.methods:
                if m.name in seen:
                    raise MiniTypeError(f"duplicate method {m.name!r} in interface {iface.name!r}", m.line)
                seen.add(m.name)
                for p in m.params:
                    self._require_type(p.type_name, m.line)
                self._require_type(m.return_type, m.line)
        for cls in prog.classes.values():
            self._check_class(cls)

    def _check_class(self, cls: ast.ClassDecl) -> None:
        for f in cls.fields:
            self._require_type(f.type_name, cls.line)
        self.current_class = cls
        if cls.ctor is not None:
            scope = _Scope()
            for p in cls.ctor.params:
                self._require_type(p.type_name, cls.ctor.line)
                scope.vars[p.name] = p.type_name
            self.return_type = None
            self.check_stmts(cls.ctor.body, scope)
        seen: set[str] = set()
        for m in cls.methods:
            if m.name in seen:
                raise MiniTypeError(f"duplicate method {m.name!r} in class {cls.name!r}", m.line)
            seen.add(m.name)
            scope = _Scope()
            for p in m.params:
                self._require_type(p.type_name, m.line)
                scope.vars[p.name] = p.type_name
            self._require_type(m.return_type, m.line)
            self.return_type = m.return_type
            self.check_stmts(m.body, scope)
            self.return_type = None
        self.current_class = None

    def _require_type(self, name: str, line: int) -> None:
        if not self.program.type_exists(name):
            raise MiniTypeError(f"undeclared type {name!r}", line)

    # -- statements -----------------------------------------------------

    def check_stmts(self, stmts: list[ast.Stmt], scope: _Scope) -> None:
        for s in stmts:
            self.check_stmt(s, scope)

    def check_stmt(self, s: ast.Stmt, scope: _Scope) -> None:
        if isinstance(s, ast.Let):
            ty = self.type_of(s.init, scope)
            if s.declared_type is not None:
                self._require_type(s.declared_type, s.line)
                if not assignable(ty, s.declared_type, self.program):
                    raise MiniTypeError(
                        f"cannot initialize {s.declared_type!r} variable with {ty!r}", s.line, s.col
                    )
                scope.declare(s.name, s.declared_type, s)
            else:
                scope.declare(s.name, ty, s)
        elif isinstance(s, ast.Assign):
            value_ty = self.type_of(s.value, scope)
            target_ty = self.type_of(s.target, scope)
            if not assignable(value_ty, target_ty, self.program):
                raise MiniTypeError(f"cannot assign {value_ty!r} to {target_ty!r}", s.line, s.col)
        elif isinstance(s, ast.If):
            self._require_bool(s.cond, scope, "if condition")
            self.check_stmts(s.then_body, scope.child())
            self.check_stmts(s.else_body, scope.child())
        elif isinstance(s, ast.While):
            self._require_bool(s.cond, scope, "while condition")
            self.loop_depth += 1
            self.check_stmts(s.body, scope.child())
            self.loop_depth -= 1
        elif isinstance(s, ast.Return):
            if self.return_type is None:
                if self.current_class is not None and s.value is None:
                    return  # bare return in a constructor
                raise MiniTypeError("'return' outside of a method", s.line, s.col)
            if s.value is None:
                raise MiniTypeError("method must return a value", s.line, s.col)
            ty = self.type_of(s.value, scope)
            if not assignable(ty, self.return_type, self.program):
                raise MiniTypeError(
                    f"return type mismatch: expected {self.return_type!r}, got {ty!r}", s.line, s.col
                )
        elif isinstance(s, ast.Throw):
            ty = self.type_of(s.value, scope)
            if ty not in self.program.exceptions:
                raise MiniTypeError(f"cannot throw non-exception type {ty!r}", s.line, s.col)
        elif isinstance(s, ast.Try):
            self.check_stmts(s.body, scope.child())
            if s.exc_type not in self.program.exceptions:
                raise MiniTypeError(f"undeclared exception type {s.exc_type!r}", s.line, s.col)
            handler_scope = scope.child()
            handler_scope.vars[s.exc_name] = s.exc_type
            self.check_stmts(s.handler, handler_scope)
        elif isinstance(s, (ast.Break, ast.Continue)):
            if self.loop_depth == 0:
                raise MiniTypeError("'break'/'continue' outside of a loop", s.line, s.col)
        elif isinstance(s, ast.ExprStmt):
            self.type_of(s.expr, scope)
        elif isinstance(s, ast.StubStmt):
            if not self.allow_stub:
                raise MiniTypeError("stub statements are only allowed in the arrange block", s.line, s.col)
            self._check_stub_stmt(s, scope)
        else:
            raise MiniTypeError(f"unsupported statement {type(s).__name__}", s.line, s.col)

    def _check_stub_stmt(self, s: ast.StubStmt, scope: _Scope) -> None:
        mock_ty = self.type_of(s.mock, scope)
        iface = self.program.interfaces.get(mock_ty)
        if iface is None:
            raise MiniTypeError(f"cannot stub non-mock type {mock_ty!r}", s.line, s.col)
        sig = next((m for m in iface.methods if m.name == s.method), None)
        if sig is None:
            raise MiniTypeError(f"interface {mock_ty!r} has no method {s.method!r}", s.line, s.col)
        if len(s.matchers) != len(sig.params):
            raise MiniTypeError(
                f"stub for {s.method!r} needs {len(sig.params)} matchers, got {len(s.matchers)}",
                s.line,
                s.col,
            )
        for matcher, param in zip(s.matchers, sig.params):
            if matcher.kind == "eq":
                ty = self.type_of(matcher.expr, scope)
                if not assignable(ty, param.type_name, self.program):
                    raise MiniTypeError(
                        f"eq matcher type {ty!r} does not match parameter type {param.type_name!r}",
                        s.line,
                        s.col,
                    )
        reaction_ty = self.type_of(s.reaction, scope)
        if s.reaction_kind == "return":
            if not assignable(reaction_ty, sig.return_type, self.program):
                raise MiniTypeError(
                    f"stub return type {reaction_ty!r} does not match {sig.return_type!r}", s.line, s.col
                )
        else:
            if reaction_ty not in self.program.exceptions:
                raise MiniTypeError(f"stub throw needs an exception, got {reaction_ty!r}", s.line, s.col)

    def _require_bool(self, e: ast.Expr, scope: _Scope, what: str) -> None:
        ty = self.type_of(e, scope)
        if ty != "Bool":
            raise MiniTypeError(f"{what} must be Bool, got {ty!r}", e.line, e.col)

    # -- expressions ------------------------------------------------------

    def type_of(self, e: ast.Expr, scope: _Scope) -> str:
        ty = self._type_of(e, scope)
        e.ty = ty
        return ty

    def _type_of(self, e: ast.Expr, scope: _Scope) -> str:
        if isinstance(e, ast.IntLit):
            return "Int"
        if isinstance(e, ast.RealLit):
            return "Real"
        if isinstance(e, ast.BoolLit):
            return "Bool"
        if isinstance(e, ast.StrLit):
            return "Str"
        if isinstance(e, ast.NullLit):
            return "Null"
        if isinstance(e, ast.VarRef):
            ty = scope.lookup(e.name)
            if ty is None:
                raise MiniTypeError(f"undeclared variable {e.name!r}", e.line, e.col)
            return ty
        if isinstance(e, ast.ThisRef):
            if self.current_class is None:
                raise MiniTypeError("'this' outside of a class", e.line, e.col)
            return self.current_class.name
        if isinstance(e, ast.ArrayLit):
            for item in e.items:
                self.type_of(item, scope)
            return "Array"
        if isinstance(e, ast.Unary):
            ty = self.type_of(e.operand, scope)
            if e.op == "-":
                if ty not in _NUMERIC:
                    raise MiniTypeError(f"unary '-' needs a numeric operand, got {ty!r}", e.line, e.col)
                return ty
            if ty != "Bool":
                raise MiniTypeError(f"'!' needs a Bool operand, got {ty!r}", e.line, e.col)
            return "Bool"
        if isinstance(e, ast.Binary):
            return self._type_of_binary(e, scope)
        if isinstance(e, ast.FieldAccess):
            return self._type_of_field(e, scope)
        if isinstance(e, ast.Index):
            recv = self.type_of(e.receiver, scope)
            if recv != "Array":
                raise MiniTypeError(f"cannot index type {recv!r}", e.line, e.col)
            idx = self.type_of(e.index, scope)
            if idx != "Int":
                raise MiniTypeError(f"array index must be Int, got {idx!r}", e.line, e.col)
            return "Any"
        if isinstance(e, ast.MethodCall):
            return self._type_of_method_call(e, scope)
        if isinstance(e, ast.BuiltinCall):
            builtin = BUILTINS.get(e.name)
            if builtin is None:
                raise MiniTypeError(f"unknown function {e.name!r}", e.line, e.col)
            self._check_args(e.args, list(builtin.param_types), scope, e.name, e.line, e.col)
            return builtin.return_type
        if isinstance(e, ast.New):
            return self._type_of_new(e, scope)
        if isinstance(e, ast.MockCreateExpr):
            if e.interface not in self.program.interfaces:
                raise MiniTypeError(f"cannot mock non-interface type {e.interface!r}", e.line, e.col)
            return e.interface
        raise MiniTypeError(f"unsupported expression {type(e).__name__}", e.line, e.col)

    def _type_of_binary(self, e: ast.Binary, scope: _Scope) -> str:
        lt = self.type_of(e.left, scope)
        rt = self.type_of(e.right, scope)
        op = e.op
        if op in ("==", "!="):
            return "Bool"
        if op in ("&&", "||"):
            if lt != "Bool" or rt != "Bool":
                raise MiniTypeError(f"{op!r} needs Bool operands, got {lt!r} and {rt!r}", e.line, e.col)
            return "Bool"
        if op in ("<", "<=", ">", ">="):
            if lt == rt and lt in ("Int", "Real", "Str"):
                return "Bool"
            raise MiniTypeError(f"{op!r} cannot compare {lt!r} and {rt!r}", e.line, e.col)
        if op == "+" and lt == "Str" and rt == "Str":
            return "Str"
        if op == "%" and lt == "Int" and rt == "Int":
            return "Int"
        if op in ("+", "-", "*", "/"):
            if lt == rt and lt in _NUMERIC:
                return lt
            raise MiniTypeError(f"{op!r} cannot combine {lt!r} and {rt!r}", e.line, e.col)
        raise MiniTypeError(f"unknown operator {op!r}", e.line, e.col)

    def _type_of_field(self, e: ast.FieldAccess, scope: _Scope) -> str:
        recv = self.type_of(e.receiver, scope)
        if recv in self.program.records:
            fields = self.program.records[recv].fields
        elif recv in self.program.classes:
            fields = self.program.classes[recv].fields
        elif recv in self.program.exceptions:
            if e.name == "message":
                return "Str"
            raise MiniTypeError(f"exception type {recv!r} has no field {e.name!r}", e.line, e.col)
        else:
            raise MiniTypeError(f"type {recv!r} has no fields", e.line, e.col)
        for f in fields:
            if f.name == e.name:
                return f.type_name
        raise MiniTypeError(f"type {recv!r} has no field {e.name!r}", e.line, e.col)

    def _type_of_method_call(self, e: ast.MethodCall, scope: _Scope) -> str:
        recv = self.type_of(e.receiver, scope)
        if recv in self.program.classes:
            cls = self.program.classes[recv]
            sig = next((m for m in cls.methods if m.name == e.method), None)
        elif recv in self.program.interfaces:
            iface = self.program.interfaces[recv]
            sig = next((m for m in iface.methods if m.name == e.method), None)
        else:
            raise MiniTypeError(f"type {recv!r} has no methods", e.line, e.col)
        if sig is None:
            raise MiniTypeError(f"type {recv!r} has no method {e.method!r}", e.line, e.col)
        self._check_args(e.args, [p.type_name for p in sig.params], scope, e.method, e.line, e.col)
        return sig.return_type

    def _type_of_new(self, e: ast.New, scope: _Scope) -> str:
        name = e.type_name
        if name in self.program.records:
            params = [f.type_name for f in self.program.records[name].fields]
            self._check_args(e.args, params, scope, name, e.line, e.col)
            return name
        if name in self.program.exceptions:
            if len(e.args) not in (0, 1):
                raise MiniTypeError(f"exception {name!r} takes zero or one Str argument", e.line, e.col)
            if e.args:
                ty = self.type_of(e.args[0], scope)
                if ty != "Str":
                    raise MiniTypeError(f"exception message must be Str, got {ty!r}", e.line, e.col)
            return name
        if name in self.program.classes:
            ctor = self.program.classes[name].ctor
            params = [p.type_name for p in ctor.params] if ctor is not None else []
            self._check_args(e.args, params, scope, name, e.line, e.col)
            return name
        raise MiniTypeError(f"cannot construct type {name!r}", e.line, e.col)

    def _check_args(
        self, args: list[ast.Expr], params: list[str], scope: _Scope, what: str, line: int, col: int
    ) -> None:
        if len(args) != len(params):
            raise MiniTypeError(f"{what!r} expects {len(params)} arguments, got {len(args)}", line, col)
        for arg, pty in zip(args, params):
            ty = self.type_of(arg, scope)
            if not assignable(ty, pty, self.program):
                raise MiniTypeError(f"argument type {ty!r} does not match {pty!r} in {what!r}", line, col)


# ----------------------------------------------------------------------


def check_program(program: Program) -> None:
    _Checker(program).check_program()


def check_test(test: TestCase, program: Program) -> None:
    checker = _Checker(program)
    scope = _Scope()
    for mname, iface in test.mocks:
        if iface not in program.interfaces:
            raise MiniTypeError(f"mock {mname!r} must be of an interface type, got {iface!r}")
        if scope.lookup(mname) is not None:
            raise MiniTypeError(f"duplicate mock name {mname!r}")
        scope.vars[mname] = iface
    mock_names = set(test.mock_names)
    for let in test.arrange:
        if _references_any(let.init, mock_names):
            raise MiniTypeError(
                f"arrange statement before the stub site must not reference mocks", let.line, let.col
            )
        checker.check_stmt(let, scope)
    test.scope_types = dict(scope.vars)
    act_scope = scope.child()
    checker.check_stmts(test.act, act_scope)
    for a in test.asserts:
        _check_assertion(checker, a, act_scope, program)


def _check_assertion(checker: _Checker, a: ast.Assertion, scope: _Scope, program: Program) -> None:
    if isinstance(a, ast.AssertEquals):
        checker.type_of(a.expected, scope)
        checker.type_of(a.actual, scope)
    elif isinstance(a, ast.AssertTrue):
        ty = checker.type_of(a.expr, scope)
        if ty != "Bool":
            raise MiniTypeError(f"assertTrue needs Bool, got {ty!r}", a.line, a.col)
    elif isinstance(a, ast.AssertNotNull):
        checker.type_of(a.expr, scope)
    elif isinstance(a, ast.AssertSame):
        checker.type_of(a.expected, scope)
        checker.type_of(a.actual, scope)
    elif isinstance(a, ast.AssertThrows):
        if a.exc_type not in program.exceptions:
            raise MiniTypeError(f"undeclared exception type {a.exc_type!r}", a.line, a.col)
        checker.check_stmts(a.body, scope.child())
    elif isinstance(a, ast.Verify):
        mock_ty = checker.type_of(a.mock, scope)
        iface = program.interfaces.get(mock_ty)
        if iface is None:
            raise MiniTypeError(f"verify target must be a mock, got {mock_ty!r}", a.line, a.col)
        sig = next((m for m in iface.methods if m.name == a.method), None)
        if sig is None:
            raise MiniTypeError(f"interface {mock_ty!r} has no method {a.method!r}", a.line, a.col)
        if len(a.matchers) != len(sig.params):
            raise MiniTypeError(
                f"verify for {a.method!r} needs {len(sig.params)} matchers, got {len(a.matchers)}",
                a.line,
                a.col,
            )
        for matcher, param in zip(a.matchers, sig.params):
            if matcher.kind == "eq":
                ty = checker.type_of(matcher.expr, scope)
                if not assignable(ty, param.type_name, program):
                    raise MiniTypeError(
                        f"eq matcher type {ty!r} does not match parameter type {param.type_name!r}",
                        a.line,
                        a.col,
                    )
        if a.times < 0:
            raise MiniTypeError("verify times must be >= 0", a.line, a.col)
    else:
        raise MiniTypeError(f"unsupported assertion {type(a).__name__}", a.line, a.col)


def check_stub_block(stmts: list[ast.Stmt], program: Program, test: TestCase) -> None:
    checker = _Checker(program)
    checker.allow_stub = True
    scope = _Scope()
    scope.vars.update(test.scope_types)
    checker.check_stmts(stmts, scope)


def _references_any(e: ast.Expr | None, names: set[str]) -> bool:
    if e is None:
        return False
    if isinstance(e, ast.VarRef):
        return e.name in names
    return any(_references_any(c, names) for c in ast._expr_children(e))
