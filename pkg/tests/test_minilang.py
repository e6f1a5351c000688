"""Interpreter, parser, and execution-report behavior."""

import pytest

from stubforge.minilang import (
    AssertionOutcome,
    MiniSyntaxError,
    MiniTypeError,
    Outcome,
    execute,
    parse_program,
    parse_test,
)
from stubforge.stubir import render

MINIMAL_CLASS = "class A { fn f() -> Int { return 1; } }"


def make_test(act: str, asserts: str, program_src: str = "", mocks: str = ""):
    program = parse_program(program_src)
    source = f"test t {{ {mocks} stub_site; act {{ {act} }} assert {{ {asserts} }} }}"
    return program, parse_test(source, program)


class TestParse:
    def test_minimal_class_has_dense_ids(self):
        program = parse_program(MINIMAL_CLASS)
        assert len(program.classes) == 1
        assert program.instruction_count == 1  # the return statement

    def test_reparse_assigns_identical_ids(self):
        p1 = parse_program(MINIMAL_CLASS)
        p2 = parse_program(MINIMAL_CLASS)
        assert p1.instruction_count == p2.instruction_count
        m1 = p1.classes["A"].methods[0]
        m2 = p2.classes["A"].methods[0]
        assert [s.instr_id for s in m1.body] == [s.instr_id for s in m2.body]

    def test_call_to_undeclared_method_is_a_type_error(self):
        src = "class A { fn f() -> Int { return 1; } fn g() -> Int { return this.h(); } }"
        with pytest.raises(MiniTypeError):
            parse_program(src)

    def test_syntax_error_carries_position(self):
        with pytest.raises(MiniSyntaxError) as err:
            parse_program("class A {")
        assert err.value.line >= 1

    def test_undeclared_type_rejected(self):
        with pytest.raises(MiniTypeError):
            parse_program("class A { field x: Missing; }")

    def test_duplicate_type_name_rejected(self):
        with pytest.raises(MiniSyntaxError):
            parse_program("record A { x: Int } class A { }")


class TestExecute:
    def test_trivial_act_and_assert(self):
        program, test = make_test("let r = 1;", "assertEquals(1, r);")
        report = execute(program, test, "")
        assert report.outcome.kind == Outcome.COMPLETED
        assert [a.kind for a in report.assertion_outcomes] == [AssertionOutcome.SATISFIED]
        assert report.executed_in_e == test.e_ids

    def test_stub_throw_on_first_call_aborts_act(self):
        program_src = """
        exception Boom;
        interface Dep { fn poke() -> Int; }
        class C { fn go(d: Dep) -> Int { return d.poke(); } }
        """
        program, test = make_test(
            "let c = new C(); let r = c.go(d);",
            "assertEquals(1, r);",
            program_src,
            "mock d: Dep;",
        )
        stub = "let sv0 = new Boom();\nstub d.poke() -> throw sv0;"
        report = execute(program, test, stub)
        assert report.outcome.kind == Outcome.UNCAUGHT
        assert report.outcome.exception.type_name == "Boom"
        assert [a.kind for a in report.assertion_outcomes] == [AssertionOutcome.NOT_EXECUTED]

    def test_l1_ground_truth_passes(self, l1):
        report = execute(l1.program, l1.test, render(l1.truth, l1.test))
        assert report.outcome.kind == Outcome.COMPLETED
        assert all(a.kind == AssertionOutcome.SATISFIED for a in report.assertion_outcomes)
        assert report.passed

    def test_determinism_byte_identical_reports(self, l1):
        block = render(l1.truth, l1.test)
        r1 = execute(l1.program, l1.test, block)
        r2 = execute(l1.program, l1.test, block)
        assert r1.to_json() == r2.to_json()

    def test_coverage_equals_e_ids_in_trace(self, l1):
        report = execute(l1.program, l1.test, render(l1.truth, l1.test))
        assert report.executed_in_e == frozenset(i for i in report.trace if i in l1.test.e_ids)

    def test_all_assertions_evaluated_after_a_failure(self):
        program, test = make_test(
            "let r = 1;",
            "assertEquals(2, r); assertEquals(1, r);",
        )
        report = execute(program, test, "")
        kinds = [a.kind for a in report.assertion_outcomes]
        assert kinds == [AssertionOutcome.FAILED_EQUALS, AssertionOutcome.SATISFIED]

    def test_failed_equals_carries_values(self):
        program, test = make_test("let r = 5;", "assertEquals(7, r);")
        report = execute(program, test, "")
        outcome = report.assertion_outcomes[0]
        assert outcome.expected == 7 and outcome.actual == 5


class TestBudgets:
    LOOPER = "class Loop { fn spin() -> Int { let i = 0; while (i >= 0) { i = i + 1; } return i; } }"

    def test_infinite_loop_hits_budget(self):
        program, test = make_test("let l = new Loop(); let r = l.spin();", "assertEquals(0, r);", self.LOOPER)
        report = execute(program, test, "")
        assert report.outcome.kind == Outcome.BUDGET
        assert [a.kind for a in report.assertion_outcomes] == [AssertionOutcome.NOT_EXECUTED]

    def test_budget_monotonicity_on_completed_runs(self, l1):
        block = render(l1.truth, l1.test)
        small = execute(l1.program, l1.test, block, step_budget=10_000)
        large = execute(l1.program, l1.test, block, step_budget=10_000_000)
        assert small.outcome.kind == Outcome.COMPLETED
        assert small.trace == large.trace

    def test_loop_cap_bounds_each_loop(self):
        program, test = make_test("let l = new Loop(); let r = l.spin();", "assertEquals(0, r);", self.LOOPER)
        report = execute(program, test, "", loop_cap=50)
        assert report.outcome.kind == Outcome.BUDGET


class TestNumericSemantics:
    @pytest.mark.parametrize(
        "expr, expected",
        [
            ("9223372036854775807 + 1", -9223372036854775808),  # wraps
            ("7 / 2", 3),
            ("-7 / 2", -3),  # truncates toward zero
            ("7 % 2", 1),
            ("-7 % 2", -1),
            ("2 * 3", 6),
        ],
    )
    def test_int_arithmetic(self, expr, expected):
        program, test = make_test(f"let r = {expr};", f"assertEquals({expected}, r);")
        report = execute(program, test, "")
        assert report.passed, report.assertion_outcomes

    def test_division_by_zero_raises_catchable_error(self):
        src = """
        class M { fn div(a: Int, b: Int) -> Int {
          try { return a / b; } catch (ArithmeticError e) { return -1; }
        } }
        """
        program, test = make_test("let m = new M(); let r = m.div(4, 0);", "assertEquals(-1, r);", src)
        assert execute(program, test, "").passed

    def test_uncaught_division_by_zero(self):
        program, test = make_test("let r = 4 / 0;", "assertEquals(0, r);")
        report = execute(program, test, "")
        assert report.outcome.kind == Outcome.UNCAUGHT
        assert report.outcome.exception.type_name == "ArithmeticError"


class TestAssertions:
    def test_assert_throws_satisfied_and_failed(self):
        src = "exception Kaboom; class M { fn boom() -> Int { throw new Kaboom(\"x\"); } fn calm() -> Int { return 1; } }"
        program, test = make_test(
            "let m = new M();",
            'assertThrows(Kaboom) { let x = m.boom(); } assertThrows(Kaboom) { let y = m.calm(); }',
            src,
        )
        report = execute(program, test, "")
        kinds = [a.kind for a in report.assertion_outcomes]
        assert kinds == [AssertionOutcome.SATISFIED, AssertionOutcome.FAILED]

    def test_assert_same_is_identity_for_records(self):
        src = "record P { x: Int }"
        program, test = make_test(
            "let a = new P(1); let b = new P(1); let c = a;",
            "assertSame(a, c); assertSame(a, b); assertEquals(a, b);",
            src,
        )
        report = execute(program, test, "")
        kinds = [a.kind for a in report.assertion_outcomes]
        assert kinds == [
            AssertionOutcome.SATISFIED,
            AssertionOutcome.FAILED,
            AssertionOutcome.SATISFIED,
        ]

    def test_assert_not_null(self):
        src = "record P { x: Int }"
        program, test = make_test(
            "let a = new P(1); let b: P = null;",
            "assertNotNull(a); assertNotNull(b);",
            src,
        )
        kinds = [a.kind for a in execute(program, test, "").assertion_outcomes]
        assert kinds == [AssertionOutcome.SATISFIED, AssertionOutcome.FAILED]

    def test_exception_in_one_assertion_fails_it_but_not_the_rest(self):
        src = "class M { fn div(a: Int, b: Int) -> Int { return a / b; } }"
        program, test = make_test(
            "let m = new M(); let r = m.div(4, 2);",
            "assertEquals(9, m.div(1, 0)); assertEquals(2, r);",
            src,
        )
        report = execute(program, test, "")
        kinds = [a.kind for a in report.assertion_outcomes]
        assert report.outcome.kind == Outcome.COMPLETED
        assert kinds == [AssertionOutcome.FAILED, AssertionOutcome.SATISFIED]


class TestTestCaseStructure:
    def test_arrange_before_stub_site_must_not_touch_mocks(self):
        program = parse_program("interface I { fn f() -> Int; }")
        src = "test t { mock m: I; let x = m.f(); stub_site; act { let r = 1; } assert { assertEquals(1, r); } }"
        with pytest.raises(MiniTypeError):
            parse_test(src, program)

    def test_arrange_scope_is_visible_to_act_and_stub(self):
        program = parse_program("interface I { fn f() -> Int; }")
        src = (
            "test t { mock m: I; let seed = 41; stub_site; "
            "act { let r = m.f() + seed; } assert { assertEquals(42, r); } }"
        )
        test = parse_test(src, program)
        assert test.scope_types == {"m": "I", "seed": "Int"}
        report = execute(program, test, "let sv0 = 1;\nstub m.f() -> return sv0;")
        assert report.passed

    def test_verify_arity_checked(self):
        program = parse_program("interface I { fn f(a: Int) -> Int; }")
        src = "test t { mock m: I; stub_site; act { let r = 1; } assert { verify m.f() times 0; } }"
        with pytest.raises(MiniTypeError):
            parse_test(src, program)
