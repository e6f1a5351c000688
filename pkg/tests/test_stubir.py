"""Genome representation: validation, rendering, slicing, serialization."""

import random

import pytest

from stubforge.evolve import EngineConfig, construct_symbol_pool, create_initial_population
from stubforge.minilang import execute, parse_stub_block
from stubforge.minilang.ast import StubStmt
from stubforge.minilang.interp import execute_prepared
from stubforge.stubir import (
    AnyM,
    EqM,
    IrRef,
    LiteralExpr,
    MockExpr,
    ReturnR,
    StubCall,
    StubProgram,
    TestRef,
    VarDef,
    backward_slice,
    parse_stub_text,
    refs_of,
    render,
    serialize_stub_text,
    to_ast_block,
    validate,
)


def random_genomes(entry, count: int, seed: int = 99, max_elements: int = 5):
    pool = construct_symbol_pool(entry.test, entry.program)
    rng = random.Random(seed)
    config = EngineConfig(
        population_size=count, max_generations=1, seed=seed, initial_elements_max=max_elements
    )
    return create_initial_population(pool, entry.test, entry.program, config, rng)


class TestValidate:
    def test_l1_ground_truth_is_valid(self, l1):
        assert validate(l1.truth, l1.test, l1.program) == []

    def test_def_before_use_violation(self, l1):
        sp = StubProgram(
            (StubCall(TestRef("dao"), "findUser", (EqM(IrRef(9)),), ReturnR(TestRef("user"))),)
        )
        violations = validate(sp, l1.test, l1.program)
        assert any(v.code == "def-before-use" for v in violations)

    def test_length_limit_is_fifty(self, l1):
        elems = tuple(VarDef(i, LiteralExpr(i)) for i in range(51))
        violations = validate(StubProgram(elems), l1.test, l1.program)
        assert any(v.code == "length" for v in violations)
        assert validate(StubProgram(elems[:50]), l1.test, l1.program) == []

    def test_unknown_test_name(self, l1):
        sp = parse_stub_text("stub nobody.findUser(any) -> return user")
        assert any(v.code == "unknown-name" for v in validate(sp, l1.test, l1.program))

    def test_broken_corpus_stub_fails_validation(self, l1):
        assert validate(l1.broken, l1.test, l1.program) != []

    def test_type_mismatch_on_reaction(self, l1):
        sp = parse_stub_text('v0 <- 5\nstub dao.findUser(any) -> return v0')
        assert any(v.code == "type" for v in validate(sp, l1.test, l1.program))

    def test_redefinition_rejected(self, l1):
        sp = parse_stub_text('v0 <- 1\nv0 <- 2')
        assert any(v.code == "redefinition" for v in validate(sp, l1.test, l1.program))


class TestRender:
    def test_three_line_block_structure(self, l1):
        sp = parse_stub_text(
            'v2 <- "bar"\nv3 <- sha1Hex(v2)\nstub user.getPasswordHash() -> return v3'
        )
        assert render(sp, l1.test).splitlines() == [
            'let sv2 = "bar";',
            "let sv3 = sha1Hex(sv2);",
            "stub user.getPasswordHash() -> return sv3;",
        ]

    def test_empty_program_renders_empty(self, l1):
        assert render(StubProgram(), l1.test) == ""

    def test_mock_create_then_stub_executes(self, l1):
        sp = parse_stub_text(
            "v0 <- mock(User)\nv1 <- \"h\"\nstub v0.getPasswordHash() -> return v1\n"
            "stub dao.findUser(any) -> return v0"
        )
        assert validate(sp, l1.test, l1.program) == []
        report = execute(l1.program, l1.test, render(sp, l1.test))
        assert report.outcome.kind == "completed"

    def test_rendering_is_deterministic(self, l1):
        sp = l1.truth
        assert render(sp, l1.test) == render(sp, l1.test)

    def test_roundtrip_preserves_element_order(self, l1):
        block = render(l1.truth, l1.test)
        stmts = parse_stub_block(block, l1.program, l1.test)
        methods = [s.method for s in stmts if isinstance(s, StubStmt)]
        truth_methods = [e.method for e in l1.truth.elements if isinstance(e, StubCall)]
        assert methods == truth_methods

    def test_distinct_programs_render_distinctly(self, l1):
        a = parse_stub_text("v0 <- 5")
        b = parse_stub_text("v0 <- 5.0")
        c = parse_stub_text('v0 <- "5"')
        texts = {render(x, l1.test) for x in (a, b, c)}
        assert len(texts) == 3


class TestBackwardSlice:
    def test_slice_of_password_stub_brings_both_defs(self, l1):
        sliced = backward_slice(l1.truth, 6)
        assert serialize_stub_text(sliced).splitlines() == [
            'v2 <- "bar"',
            "v3 <- sha1Hex(v2)",
            "stub user.getPasswordHash() -> return v3",
        ]

    def test_slice_of_throw_stub_brings_matcher_def(self, l1):
        sliced = backward_slice(l1.truth, 2)
        assert serialize_stub_text(sliced).splitlines() == [
            'v0 <- "foo"',
            "v1 <- new TimeoutException()",
            "stub dao.findUser(eq(v0)) -> throw v1",
        ]

    def test_literal_def_slices_to_itself(self, l1):
        sp = parse_stub_text('v0 <- "x"\nv1 <- "y"')
        assert backward_slice(sp, 0) == StubProgram((sp.elements[0],))

    def test_out_of_range_index(self, l1):
        with pytest.raises(IndexError):
            backward_slice(l1.truth, 99)

    def test_closure_and_idempotence_on_random_programs(self, l1):
        genomes = random_genomes(l1, 120, seed=5)
        for sp in genomes:
            if not sp.elements:
                continue
            for index in range(len(sp.elements)):
                sliced = backward_slice(sp, index)
                # dependency closure oracle: every used var is defined inside
                defined = {e.var for e in sliced.elements if isinstance(e, VarDef)}
                original_defs = {e.var for e in sp.elements if isinstance(e, VarDef)}
                for elem in sliced.elements:
                    for ref in refs_of(elem):
                        if isinstance(ref, IrRef) and ref.index in original_defs:
                            assert ref.index in defined
                # idempotence: re-slicing the focus element is a fixed point
                again = backward_slice(sliced, len(sliced.elements) - 1)
                focus = sp.elements[index]
                if sliced.elements[-1] == focus:
                    assert again == sliced


class TestTextFormat:
    def test_roundtrip_on_corpus_truths(self, entries):
        for entry in entries.values():
            if entry.truth is not None:
                assert parse_stub_text(serialize_stub_text(entry.truth)) == entry.truth

    def test_roundtrip_on_random_genomes(self, l1):
        for sp in random_genomes(l1, 60, seed=11):
            assert parse_stub_text(serialize_stub_text(sp)) == sp

    def test_negative_literals_roundtrip(self):
        sp = StubProgram((VarDef(0, LiteralExpr(-5)), VarDef(1, LiteralExpr(-2.5))))
        assert parse_stub_text(serialize_stub_text(sp)) == sp

    def test_all_grammar_productions_constructible(self, d1):
        text = "\n".join(
            [
                "v0 <- 7",
                "v1 <- 2.0",
                'v2 <- "s"',
                "v3 <- true",
                "v4 <- null",
                "v5 <- [v0, v2]",
                "v6 <- mock(Store)",
                "v7 <- 2",
                "v8 <- new Point(v0, v7)",
                "v9 <- v8.x",
                "v10 <- intToStr(v0)",
                "stub s.load(any) -> return v8",
                "stub s.load(eq(v0)) -> return v8",
            ]
        )
        sp = parse_stub_text(text)
        assert parse_stub_text(serialize_stub_text(sp)) == sp
        assert validate(sp, d1.test, d1.program) == []
        render(sp, d1.test)


class TestAstFastPath:
    def test_matches_text_path_on_random_genomes(self, l1):
        for sp in random_genomes(l1, 80, seed=21):
            via_text = execute(l1.program, l1.test, render(sp, l1.test))
            via_ast = execute_prepared(l1.program, l1.test, to_ast_block(sp))
            assert via_text.to_json() == via_ast.to_json()

    def test_valid_genomes_execute_without_type_errors(self, l1, d1):
        # validate(sp) == ok implies the rendered block runs without scope/type errors
        for entry in (l1, d1):
            for sp in random_genomes(entry, 60, seed=31):
                assert validate(sp, entry.test, entry.program) == []
                execute(entry.program, entry.test, render(sp, entry.test))
