"""Fitness objectives, distance, comparators, and deep serialization."""

import math
import random

import pytest

from stubforge.fitness import (
    EmptyActBlock,
    EmptyOracle,
    FitnessTriple,
    assertion_score,
    assertion_status,
    distance,
    dominates,
    exercise_coverage,
    fitness_of,
    levenshtein,
    serialize_deep,
    stub_utilization,
    weighted_sum,
)
from stubforge.minilang import execute
from stubforge.minilang.interp import AssertionOutcome
from stubforge.minilang.values import ExceptionValue, InstanceValue, MockRef
from stubforge.stubir import render

APPROX = lambda x: pytest.approx(x, abs=1e-9)  # noqa: E731


def lev_oracle(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        lev_oracle(a[1:], b) + 1,
        lev_oracle(a, b[1:]) + 1,
        lev_oracle(a[1:], b[1:]) + (a[0] != b[0]),
    )


class TestStubUtilization:
    def test_zero_used_is_zero(self):
        assert stub_utilization(0) == 0.0

    def test_matches_closed_form_at_c(self):
        assert stub_utilization(10, 10.0) == APPROX(math.tanh(1.0))

    def test_strictly_increasing(self):
        values = [stub_utilization(u, 10.0) for u in range(0, 20)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_requires_positive_c(self):
        with pytest.raises(ValueError):
            stub_utilization(1, 0.0)


class TestExerciseCoverage:
    def test_full_and_empty(self):
        assert exercise_coverage({1, 2}, {1, 2}) == 1.0
        assert exercise_coverage(set(), {1, 2}) == 0.0

    def test_fraction(self):
        assert exercise_coverage(set(range(7)), set(range(10))) == APPROX(0.7)

    def test_rejects_empty_act_block(self):
        with pytest.raises(EmptyActBlock):
            exercise_coverage(set(), set())


class TestDistance:
    def test_identical_numbers(self):
        assert distance(5, 5) == 0.0

    def test_actuator_health_case(self):
        expected, actual = "/actuator/health", "/actuator/hea"
        assert lev_oracle(expected, actual) == 3
        assert len(expected) == 16
        assert distance(expected, actual) == APPROX(math.tanh(3 / 16))

    def test_zero_denominator_fallback(self):
        assert distance(0, 7) == APPROX(math.tanh(7.0))
        assert distance("", "abc") == APPROX(math.tanh(3.0))

    def test_numeric_uses_expected_magnitude(self):
        assert distance(10, 15) == APPROX(math.tanh(0.5))
        assert distance(-4, 4) == APPROX(math.tanh(2.0))

    def test_bool_and_null(self):
        assert distance(True, True) == 0.0
        assert distance(True, False) == APPROX(math.tanh(1.0))
        assert distance(None, None) == 0.0
        assert distance(None, 3) == APPROX(math.tanh(1.0))

    def test_records_compare_via_serialization(self):
        a = InstanceValue("P", {"x": 1})
        b = InstanceValue("P", {"x": 1})
        c = InstanceValue("P", {"x": 2})
        assert distance(a, b) == 0.0
        assert distance(a, c) == APPROX(distance(serialize_deep(a), serialize_deep(c)))

    def test_mixed_types_fall_back_to_serialization(self):
        assert distance(5, "5") == APPROX(distance('"5"', "5"))

    def test_self_distance_zero_for_all_kinds(self):
        for v in (0, 1.5, True, "s", None, [1, "a"], InstanceValue("P", {"x": 1}), MockRef(0, "I")):
            assert distance(v, v) == 0.0


class TestAssertionScore:
    def test_satisfied_is_one(self):
        assert assertion_score(AssertionOutcome(AssertionOutcome.SATISFIED)) == 1.0

    def test_failing_equals_gets_distance_credit(self):
        outcome = AssertionOutcome(AssertionOutcome.FAILED_EQUALS, "abc", "abc!")
        assert lev_oracle("abc", "abc!") == 1
        assert assertion_score(outcome) == APPROX(1 - math.tanh(1 / 3))

    def test_everything_else_is_zero(self):
        assert assertion_score(AssertionOutcome(AssertionOutcome.NOT_EXECUTED)) == 0.0
        assert assertion_score(AssertionOutcome(AssertionOutcome.FAILED)) == 0.0


class TestAssertionStatus:
    @pytest.mark.parametrize(
        "scores, mean",
        [([1.0, 1.0], 1.0), ([1.0, 0.0], 0.5), ([0.2, 0.4, 0.6], 0.4)],
    )
    def test_mean(self, scores, mean):
        assert assertion_status(scores) == APPROX(mean)

    def test_rejects_empty_oracle(self):
        with pytest.raises(EmptyOracle):
            assertion_status([])


class TestComparators:
    def test_dominance_clauses(self):
        high_as = FitnessTriple(0.0, 0.1, 0.9, False)
        low_as = FitnessTriple(1.0, 1.0, 0.8, False)
        assert dominates(high_as, low_as) and not dominates(low_as, high_as)
        a = FitnessTriple(0.0, 0.5, 0.7, False)
        b = FitnessTriple(0.9, 0.4, 0.7, False)
        assert dominates(a, b)
        c = FitnessTriple(0.2, 0.4, 0.7, False)
        assert dominates(b, c)

    def test_identical_triples_do_not_dominate(self):
        f = FitnessTriple(0.5, 0.5, 0.5, False)
        assert not dominates(f, f)

    def test_weighted_sum_values(self):
        assert weighted_sum(FitnessTriple(1, 1, 1, True)) == APPROX(7.0)
        assert weighted_sum(FitnessTriple(0, 0, 0, False)) == APPROX(0.0)
        t = FitnessTriple(math.tanh(1.0), 0.5, 0.25, False)
        assert weighted_sum(t) == APPROX(math.tanh(1.0) + 2.0)

    def test_partial_order_properties_quick(self):
        rng = random.Random(7)
        triples = [
            FitnessTriple(rng.random(), rng.random(), rng.choice([0.1, 0.5, 0.9]), False)
            for _ in range(200)
        ]
        for f in triples:
            assert not dominates(f, f)
        for a, b in zip(triples, triples[1:]):
            assert not (dominates(a, b) and dominates(b, a))

    def test_pareto_consistency_sample(self):
        rng = random.Random(13)
        for _ in range(300):
            f2 = FitnessTriple(rng.random(), rng.random(), rng.random(), False)
            bump = rng.choice(["su", "ec", "as"])
            f1 = FitnessTriple(
                min(1.0, f2.su + (0.1 if bump == "su" else 0)),
                min(1.0, f2.ec + (0.1 if bump == "ec" else 0)),
                min(1.0, f2.as_score + (0.1 if bump == "as" else 0)),
                False,
            )
            assert dominates(f1, f2)
            assert weighted_sum(f1) > weighted_sum(f2)


class TestSerializeDeep:
    def test_scalars(self):
        assert serialize_deep(5) == "5"
        assert serialize_deep(5.0) == "5.0"
        assert serialize_deep(True) == "true"
        assert serialize_deep(None) == "null"
        assert serialize_deep("foo") == '"foo"'

    def test_record_format(self):
        user = InstanceValue("User", {"name": "foo"})
        assert serialize_deep(user) == 'User{name="foo"}'

    def test_nested_and_array(self):
        inner = InstanceValue("P", {"x": 1, "y": 2})
        assert serialize_deep([inner, 3]) == "[P{x=1,y=2},3]"

    def test_exception_and_mock(self):
        assert serialize_deep(ExceptionValue("Boom", "m")) == 'Boom{message="m"}'
        assert serialize_deep(MockRef(2, "Dao")) == "mock:Dao#2"

    def test_cycle_marker_once_per_back_edge(self):
        a = InstanceValue("Node", {"next": None})
        b = InstanceValue("Node", {"next": None})
        a.fields["next"] = b
        b.fields["next"] = a
        text = serialize_deep(a)
        assert text.count("<cycle>") == 1
        assert text == "Node{next=Node{next=<cycle>}}"

    def test_equal_structures_serialize_equally(self):
        a = InstanceValue("P", {"x": [1, "s"], "y": None})
        b = InstanceValue("P", {"x": [1, "s"], "y": None})
        assert serialize_deep(a) == serialize_deep(b)


class TestLevenshtein:
    @pytest.mark.parametrize(
        "a, b, expected",
        [("", "", 0), ("abc", "abc", 0), ("abc", "abc!", 1), ("kitten", "sitting", 3), ("ab", "ba", 2)],
    )
    def test_known_values(self, a, b, expected):
        assert levenshtein(a, b) == expected
        assert levenshtein(a, b) == lev_oracle(a, b)


class TestFitnessOfReports:
    def test_pass_implies_full_ec_and_as(self, l1):
        report = execute(l1.program, l1.test, render(l1.truth, l1.test))
        triple = fitness_of(report, l1.test)
        assert triple.passed
        assert triple.ec == 1.0
        assert triple.as_score == 1.0

    def test_su_counts_act_phase_entries(self, l1):
        report = execute(l1.program, l1.test, render(l1.truth, l1.test))
        triple = fitness_of(report, l1.test)
        assert triple.su == pytest.approx(math.tanh(0.3))  # 3 of 3 entries used in act
