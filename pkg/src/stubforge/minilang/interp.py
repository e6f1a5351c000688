"""Tree-walking interpreter with instruction tracing and step budgets.

Executes a test case in three phases (arrange, act, assert) against a mock
runtime. Every run is deterministic for fixed inputs: no wall clock, no
ambient randomness, insertion-ordered environments.

Totality: loops carry an iteration cap, executions a global step budget and
a call-depth cap; exceeding any of them yields a ``budget_exceeded`` outcome
rather than divergence. Division by zero, null dereference and bad indexing
raise built-in minilang exceptions, which remain catchable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from . import ast
from .builtins import BUILTINS
from .errors import MiniTypeError
from .parser import Program, TestCase, parse_stub_block
from .values import (
    ExceptionValue,
    InstanceValue,
    MockRef,
    Value,
    deep_copy_value,
    values_equal,
    values_same,
    wrap_int,
)

if TYPE_CHECKING:  # pragma: no cover
    from ..mockrt import StubUsageSummary

from ..mockrt import AnyMatcher, EqMatcher, MockRuntime, Reaction

DEFAULT_STEP_BUDGET = 1_000_000
DEFAULT_LOOP_CAP = 10_000
CALL_DEPTH_CAP = 256

_FIELD_DEFAULTS = {"Int": 0, "Real": 0.0, "Bool": False, "Str": ""}


class _MiniThrow(Exception):
    def __init__(self, value: ExceptionValue):
        self.value = value


class _Budget(Exception):
    pass


class _ReturnSignal(Exception):
    def __init__(self, value: Value):
        self.value = value


class _BreakSignal(Exception):
    pass


class _ContinueSignal(Exception):
    pass


@dataclass(frozen=True)
class Outcome:
    kind: str  # "completed" | "uncaught_exception" | "budget_exceeded"
    exception: ExceptionValue | None = None

    COMPLETED = "completed"
    UNCAUGHT = "uncaught_exception"
    BUDGET = "budget_exceeded"


@dataclass(frozen=True)
class AssertionOutcome:
    kind: str  # "satisfied" | "failed_equals" | "failed" | "not_executed"
    expected: Value = None
    actual: Value = None

    SATISFIED = "satisfied"
    FAILED_EQUALS = "failed_equals"
    FAILED = "failed"
    NOT_EXECUTED = "not_executed"


@dataclass
class ExecutionReport:
    trace: list[int]
    executed_in_e: frozenset[int]
    outcome: Outcome
    assertion_outcomes: list[AssertionOutcome]
    stub_usage: "StubUsageSummary"
    steps: int

    @property
    def passed(self) -> bool:
        return self.outcome.kind == Outcome.COMPLETED and all(
            a.kind == AssertionOutcome.SATISFIED for a in self.assertion_outcomes
        )

    def to_json(self) -> str:
        from ..fitness import serialize_deep

        def enc_value(v: Value):
            return None if v is None else serialize_deep(v)

        data = {
            "trace": self.trace,
            "executed_in_e": sorted(self.executed_in_e),
            "outcome": {
                "kind": self.outcome.kind,
                "exception": None
                if self.outcome.exception is None
                else [self.outcome.exception.type_name, self.outcome.exception.message],
            },
            "assertions": [
                {"kind": a.kind, "expected": enc_value(a.expected), "actual": enc_value(a.actual)}
                for a in self.assertion_outcomes
            ],
            "stub_usage": {
                "entries": self.stub_usage.entries,
                "act_used_entries": self.stub_usage.act_used_entries,
            },
            "steps": self.steps,
        }
        return json.dumps(data, sort_keys=True, separators=(",", ":"))


class _Env:
    __slots__ = ("vars", "this")

    def __init__(self, this: InstanceValue | None = None):
        self.vars: dict[str, Value] = {}
        self.this = this


class Interpreter:
    def __init__(self, program: Program, step_budget: int = DEFAULT_STEP_BUDGET, loop_cap: int = DEFAULT_LOOP_CAP):
        self.program = program
        self.step_budget = step_budget
        self.loop_cap = loop_cap
        self.runtime = MockRuntime(program)
        self.trace: list[int] = []
        self.steps = 0
        self.phase = "arrange"
        self.call_depth = 0

    # -- bookkeeping ------------------------------------------------------

    def _step(self, node) -> None:
        iid = node.instr_id
        if iid is not None:
            self.trace.append(iid)
            self.steps += 1
            if self.steps > self.step_budget:
                raise _Budget()

    # -- statements ---------------------------------------------------------

    def exec_stmts(self, stmts: list[ast.Stmt], env: _Env) -> None:
        for s in stmts:
            self.exec_stmt(s, env)

    def exec_stmt(self, s: ast.Stmt, env: _Env) -> None:
        self._step(s)
        if isinstance(s, ast.Let):
            env.vars[s.name] = self.eval(s.init, env)
        elif isinstance(s, ast.Assign):
            value = self.eval(s.value, env)
            target = s.target
            if isinstance(target, ast.VarRef):
                env.vars[target.name] = value
            else:
                assert isinstance(target, ast.FieldAccess)
                recv = self.eval(target.receiver, env)
                self._step(target)
                if recv is None:
                    raise _MiniThrow(ExceptionValue("NullError", "field assignment on null"))
                recv.fields[target.name] = value
        elif isinstance(s, ast.If):
            if self.eval(s.cond, env) is True:
                self.exec_stmts(s.then_body, env)
            else:
                self.exec_stmts(s.else_body, env)
        elif isinstance(s, ast.While):
            iterations = 0
            while self.eval(s.cond, env) is True:
                iterations += 1
                if iterations > self.loop_cap:
                    raise _Budget()
                try:
                    self.exec_stmts(s.body, env)
                except _BreakSignal:
                    break
                except _ContinueSignal:
                    continue
                self._step(s)  # one step per loop-back edge
        elif isinstance(s, ast.Return):
            raise _ReturnSignal(None if s.value is None else self.eval(s.value, env))
        elif isinstance(s, ast.Throw):
            value = self.eval(s.value, env)
            if value is None:
                raise _MiniThrow(ExceptionValue("NullError", "throw of null"))
            raise _MiniThrow(value)
        elif isinstance(s, ast.Try):
            try:
                self.exec_stmts(s.body, env)
            except _MiniThrow as t:
                if t.value.type_name == s.exc_type:
                    env.vars[s.exc_name] = t.value
                    self.exec_stmts(s.handler, env)
                else:
                    raise
        elif isinstance(s, ast.Break):
            raise _BreakSignal()
        elif isinstance(s, ast.Continue):
            raise _ContinueSignal()
        elif isinstance(s, ast.ExprStmt):
            self.eval(s.expr, env)
        elif isinstance(s, ast.StubStmt):
            self._exec_stub(s, env)
        else:  # pragma: no cover
            raise MiniTypeError(f"cannot execute {type(s).__name__}")

    def _exec_stub(self, s: ast.StubStmt, env: _Env) -> None:
        mock = self.eval(s.mock, env)
        if not isinstance(mock, MockRef):
            raise _MiniThrow(ExceptionValue("NullError", "stub target is not a mock"))
        matchers = []
        for m in s.matchers:
            if m.kind == "any":
                matchers.append(AnyMatcher())
            else:
                matchers.append(EqMatcher(deep_copy_value(self.eval(m.expr, env))))
        value = self.eval(s.reaction, env)
        if s.reaction_kind == "throw" and value is None:
            raise _MiniThrow(ExceptionValue("NullError", "stub throws null"))
        self.runtime.register_stub(mock, s.method, matchers, Reaction(s.reaction_kind, value))

    # -- expressions --------------------------------------------------------

    def eval(self, e: ast.Expr, env: _Env) -> Value:
        self._step(e)
        if isinstance(e, ast.IntLit):
            return e.value
        if isinstance(e, ast.RealLit):
            return e.value
        if isinstance(e, ast.StrLit):
            return e.value
        if isinstance(e, ast.BoolLit):
            return e.value
        if isinstance(e, ast.NullLit):
            return None
        if isinstance(e, ast.VarRef):
            return env.vars[e.name]
        if isinstance(e, ast.ThisRef):
            return env.this
        if isinstance(e, ast.Binary):
            return self._eval_binary(e, env)
        if isinstance(e, ast.Unary):
            v = self.eval(e.operand, env)
            if e.op == "-":
                return wrap_int(-v) if isinstance(v, int) and not isinstance(v, bool) else -v
            return not v
        if isinstance(e, ast.MethodCall):
            return self._eval_method_call(e, env)
        if isinstance(e, ast.FieldAccess):
            recv = self.eval(e.receiver, env)
            if recv is None:
                raise _MiniThrow(ExceptionValue("NullError", f"field access .{e.name} on null"))
            if isinstance(recv, ExceptionValue):
                return recv.message
            return recv.fields[e.name]
        if isinstance(e, ast.Index):
            recv = self.eval(e.receiver, env)
            idx = self.eval(e.index, env)
            if recv is None:
                raise _MiniThrow(ExceptionValue("NullError", "indexing null"))
            if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx < len(recv):
                raise _MiniThrow(ExceptionValue("IndexError", f"index {idx} out of range"))
            return recv[idx]
        if isinstance(e, ast.BuiltinCall):
            args = [self.eval(a, env) for a in e.args]
            return BUILTINS[e.name].fn(*args)
        if isinstance(e, ast.New):
            return self._eval_new(e, env)
        if isinstance(e, ast.ArrayLit):
            return [self.eval(item, env) for item in e.items]
        if isinstance(e, ast.MockCreateExpr):
            return self.runtime.create_mock(e.interface)
        raise MiniTypeError(f"cannot evaluate {type(e).__name__}")  # pragma: no cover

    def _eval_binary(self, e: ast.Binary, env: _Env) -> Value:
        op = e.op
        if op == "&&":
            return self.eval(e.left, env) is True and self.eval(e.right, env) is True
        if op == "||":
            return self.eval(e.left, env) is True or self.eval(e.right, env) is True
        left = self.eval(e.left, env)
        right = self.eval(e.right, env)
        if op == "==":
            return values_equal(left, right)
        if op == "!=":
            return not values_equal(left, right)
        if op in ("<", "<=", ">", ">="):
            if op == "<":
                return left < right
            if op == "<=":
                return left <= right
            if op == ">":
                return left > right
            return left >= right
        if isinstance(left, str):
            if op != "+":
                raise _MiniThrow(ExceptionValue("ArithmeticError", f"invalid string operator {op}"))
            if not isinstance(right, str):
                raise _MiniThrow(ExceptionValue("ArithmeticError", "string concat needs strings"))
            return left + right
        if not isinstance(left, (int, float)) or not isinstance(right, (int, float)) or isinstance(
            left, bool
        ) or isinstance(right, bool):
            raise _MiniThrow(ExceptionValue("ArithmeticError", f"invalid operands for {op}"))
        is_int = isinstance(left, int) and isinstance(right, int)
        if op == "+":
            return wrap_int(left + right) if is_int else left + right
        if op == "-":
            return wrap_int(left - right) if is_int else left - right
        if op == "*":
            return wrap_int(left * right) if is_int else left * right
        if op == "/":
            if right == 0:
                raise _MiniThrow(ExceptionValue("ArithmeticError", "division by zero"))
            if is_int:
                q = abs(left) // abs(right)
                return wrap_int(q if (left < 0) == (right < 0) else -q)
            return left / right
        if op == "%":
            if right == 0:
                raise _MiniThrow(ExceptionValue("ArithmeticError", "modulo by zero"))
            q = abs(left) // abs(right)
            q = q if (left < 0) == (right < 0) else -q
            return wrap_int(left - right * q)
        raise MiniTypeError(f"unknown operator {op}")  # pragma: no cover

    def _eval_method_call(self, e: ast.MethodCall, env: _Env) -> Value:
        recv = self.eval(e.receiver, env)
        args = [self.eval(a, env) for a in e.args]
        if recv is None:
            raise _MiniThrow(ExceptionValue("NullError", f"method call .{e.method} on null"))
        if isinstance(recv, MockRef):
            reaction = self.runtime.dispatch(recv, e.method, args, self.phase)
            if reaction.kind == "throw":
                raise _MiniThrow(reaction.value)
            return reaction.value
        cls = self.program.classes[recv.type_name]
        method = next(m for m in cls.methods if m.name == e.method)
        return self._call(method.params, method.body, args, recv)

    def _call(self, params: list[ast.Param], body: list[ast.Stmt], args: list[Value], this: InstanceValue | None) -> Value:
        self.call_depth += 1
        if self.call_depth > CALL_DEPTH_CAP:
            raise _Budget()
        frame = _Env(this)
        for p, a in zip(params, args):
            frame.vars[p.name] = a
        try:
            self.exec_stmts(body, frame)
        except _ReturnSignal as r:
            return r.value
        finally:
            self.call_depth -= 1
        return None  # fall-off-the-end yields null

    def _eval_new(self, e: ast.New, env: _Env) -> Value:
        name = e.type_name
        args = [self.eval(a, env) for a in e.args]
        if name in self.program.records:
            rec = self.program.records[name]
            return InstanceValue(name, {f.name: a for f, a in zip(rec.fields, args)})
        if name in self.program.exceptions:
            return ExceptionValue(name, args[0] if args else "")
        cls = self.program.classes[name]
        inst = InstanceValue(
            name,
            {
                f.name: ([] if f.type_name == "Array" else _FIELD_DEFAULTS.get(f.type_name))
                for f in cls.fields
            },
        )
        if cls.ctor is not None:
            self._call(cls.ctor.params, cls.ctor.body, args, inst)
        return inst

    # -- assertions -----------------------------------------------------------

    def eval_assertion(self, a: ast.Assertion, env: _Env) -> AssertionOutcome:
        self._step(a)
        if isinstance(a, ast.AssertEquals):
            expected = self.eval(a.expected, env)
            actual = self.eval(a.actual, env)
            if values_equal(expected, actual):
                return AssertionOutcome(AssertionOutcome.SATISFIED)
            return AssertionOutcome(
                AssertionOutcome.FAILED_EQUALS, deep_copy_value(expected), deep_copy_value(actual)
            )
        if isinstance(a, ast.AssertTrue):
            ok = self.eval(a.expr, env) is True
            return AssertionOutcome(AssertionOutcome.SATISFIED if ok else AssertionOutcome.FAILED)
        if isinstance(a, ast.AssertNotNull):
            ok = self.eval(a.expr, env) is not None
            return AssertionOutcome(AssertionOutcome.SATISFIED if ok else AssertionOutcome.FAILED)
        if isinstance(a, ast.AssertSame):
            ok = values_same(self.eval(a.expected, env), self.eval(a.actual, env))
            return AssertionOutcome(AssertionOutcome.SATISFIED if ok else AssertionOutcome.FAILED)
        if isinstance(a, ast.AssertThrows):
            try:
                self.exec_stmts(a.body, env)
            except _MiniThrow as t:
                if t.value.type_name == a.exc_type:
                    return AssertionOutcome(AssertionOutcome.SATISFIED)
                return AssertionOutcome(AssertionOutcome.FAILED)
            return AssertionOutcome(AssertionOutcome.FAILED)
        if isinstance(a, ast.Verify):
            mock = self.eval(a.mock, env)
            matchers = []
            for m in a.matchers:
                if m.kind == "any":
                    matchers.append(AnyMatcher())
                else:
                    matchers.append(EqMatcher(deep_copy_value(self.eval(m.expr, env))))
            ok = self.runtime.verify(mock, a.method, matchers, a.times)
            return AssertionOutcome(AssertionOutcome.SATISFIED if ok else AssertionOutcome.FAILED)
        raise MiniTypeError(f"cannot evaluate assertion {type(a).__name__}")  # pragma: no cover


def execute(
    program: Program,
    test: TestCase,
    stub_block: str,
    step_budget: int = DEFAULT_STEP_BUDGET,
    loop_cap: int = DEFAULT_LOOP_CAP,
) -> ExecutionReport:
    """Run arrange (test lets + rendered stub block), act, then assert.

    All assertions are evaluated even after one fails (fail-fast off); an
    uncaught exception or exhausted budget marks the remaining ones
    ``not_executed``.
    """
    stub_stmts = parse_stub_block(stub_block, program, test)
    return _execute_core(program, test, stub_stmts, step_budget, loop_cap)


def execute_prepared(
    program: Program,
    test: TestCase,
    stub_stmts: list[ast.Stmt],
    step_budget: int = DEFAULT_STEP_BUDGET,
    loop_cap: int = DEFAULT_LOOP_CAP,
) -> ExecutionReport:
    """Like :func:`execute` but for a pre-built, known-valid arrange block.

    Skips the parse and typecheck; instruction ids are (re)assigned here so
    the report is byte-identical to the text path.
    """
    ast.assign_ids(stub_stmts, test.next_id)
    return _execute_core(program, test, stub_stmts, step_budget, loop_cap)


def _execute_core(
    program: Program,
    test: TestCase,
    stub_stmts: list[ast.Stmt],
    step_budget: int,
    loop_cap: int,
) -> ExecutionReport:
    interp = Interpreter(program, step_budget, loop_cap)
    env = _Env()
    for name, iface in test.mocks:
        env.vars[name] = interp.runtime.create_mock(iface)

    outcome = Outcome(Outcome.COMPLETED)
    assertion_outcomes: list[AssertionOutcome] = []
    try:
        interp.exec_stmts(test.arrange, env)
        interp.exec_stmts(stub_stmts, env)
        interp.phase = "act"
        interp.exec_stmts(test.act, env)
    except _MiniThrow as t:
        outcome = Outcome(Outcome.UNCAUGHT, t.value)
        assertion_outcomes = [AssertionOutcome(AssertionOutcome.NOT_EXECUTED) for _ in test.asserts]
    except _Budget:
        outcome = Outcome(Outcome.BUDGET)
        assertion_outcomes = [AssertionOutcome(AssertionOutcome.NOT_EXECUTED) for _ in test.asserts]
    else:
        interp.phase = "assert"
        for a in test.asserts:
            try:
                assertion_outcomes.append(interp.eval_assertion(a, env))
            except _MiniThrow:
                # an exception escaping one assertion fails it, the rest still run
                assertion_outcomes.append(AssertionOutcome(AssertionOutcome.FAILED))
            except _Budget:
                outcome = Outcome(Outcome.BUDGET)
                assertion_outcomes.append(AssertionOutcome(AssertionOutcome.NOT_EXECUTED))
                break
        while len(assertion_outcomes) < len(test.asserts):
            assertion_outcomes.append(AssertionOutcome(AssertionOutcome.NOT_EXECUTED))

    executed_in_e = frozenset(i for i in interp.trace if i in test.e_ids)
    return ExecutionReport(
        trace=interp.trace,
        executed_in_e=executed_in_e,
        outcome=outcome,
        assertion_outcomes=assertion_outcomes,
        stub_usage=interp.runtime.usage_summary(),
        steps=interp.steps,
    )
