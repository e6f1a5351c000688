"""The three-objective fitness of a candidate stub and its comparators.

Objectives, each in [0, 1]:

- stub utilization   SU = tanh(used / C), used counted over the Act phase
- exercise coverage  EC = executed act instructions / all act instructions
- assertion status   AS = mean per-assertion score

Candidates are compared lexicographically on (AS, EC, SU) ("dominance") or
by the scalar SU + 2*EC + 4*AS ("weighted sum").
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from .minilang.values import ExceptionValue, InstanceValue, MockRef, Value

if TYPE_CHECKING:  # pragma: no cover
    from .minilang.interp import ExecutionReport
    from .minilang.parser import TestCase

DEFAULT_C = 10.0

# tanh argument cap: keeps results strictly below 1.0 in float arithmetic
_TANH_CAP = 15.0


class EmptyActBlock(Exception):
    pass


class EmptyOracle(Exception):
    pass


@dataclass(frozen=True)
class FitnessTriple:
    su: float
    ec: float
    as_score: float
    passed: bool

    def key(self) -> tuple[float, float, float]:
        """Lexicographic sort key consistent with dominance."""
        return (self.as_score, self.ec, self.su)


def _tanh(x: float) -> float:
    if math.isnan(x):
        return math.tanh(1.0)
    return math.tanh(min(x, _TANH_CAP))


def stub_utilization(used: int, c: float = DEFAULT_C) -> float:
    if c <= 0:
        raise ValueError("C must be positive")
    return _tanh(used / c)


def exercise_coverage(executed_in_e: Iterable[int], e_ids: Iterable[int]) -> float:
    e_ids = frozenset(e_ids)
    if not e_ids:
        raise EmptyActBlock("act block has no instructions")
    executed = frozenset(executed_in_e)
    return len(executed & e_ids) / len(e_ids)


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Plain edit distance (insert / delete / substitute, unit costs)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


def _is_numeric(v: Value) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def distance(x: Value, y: Value) -> float:
    """Branch-distance style measure between expected *x* and actual *y*.

    Numeric: tanh(|x-y| / |x|); strings: tanh(Lev / len(x)); the denominator
    falls back to 1.0 when zero. Everything else goes through the deep
    serialization. Not symmetric by construction.
    """
    if _is_numeric(x) and _is_numeric(y):
        denominator = abs(x) if abs(x) != 0 else 1.0
        return _tanh(abs(x - y) / denominator)
    if isinstance(x, str) and isinstance(y, str):
        denominator = len(x) if len(x) != 0 else 1.0
        return _tanh(levenshtein(x, y) / denominator)
    if isinstance(x, bool) and isinstance(y, bool):
        return 0.0 if x == y else _tanh(1.0)
    if x is None or y is None:
        return 0.0 if x is None and y is None else _tanh(1.0)
    return distance(serialize_deep(x), serialize_deep(y))


def assertion_score(outcome) -> float:
    """1.0 when satisfied, partial credit for failing assertEquals, 0 otherwise."""
    from .minilang.interp import AssertionOutcome

    if outcome.kind == AssertionOutcome.SATISFIED:
        return 1.0
    if outcome.kind == AssertionOutcome.FAILED_EQUALS:
        return 1.0 - distance(outcome.expected, outcome.actual)
    return 0.0


def assertion_status(scores: Sequence[float]) -> float:
    if not scores:
        raise EmptyOracle("test has no assertions")
    return sum(scores) / len(scores)


def dominates(f1: FitnessTriple, f2: FitnessTriple) -> bool:
    if f1.as_score > f2.as_score:
        return True
    if f1.as_score == f2.as_score and f1.ec > f2.ec:
        return True
    return f1.as_score == f2.as_score and f1.ec == f2.ec and f1.su > f2.su


def weighted_sum(f: FitnessTriple) -> float:
    return f.su + 2.0 * f.ec + 4.0 * f.as_score


def fitness_of(report: "ExecutionReport", test: "TestCase", c: float = DEFAULT_C) -> FitnessTriple:
    """Fold one execution report into the fitness triple."""
    su = stub_utilization(report.stub_usage.act_used_entries, c)
    ec = exercise_coverage(report.executed_in_e, test.e_ids)
    as_score = assertion_status([assertion_score(a) for a in report.assertion_outcomes])
    return FitnessTriple(su, ec, as_score, report.passed)


# ----------------------------------------------------------------------
# Deep serialization (the distance function's str(x))
# ----------------------------------------------------------------------


def serialize_deep(x: Value) -> str:
    """Canonical deep text form; structurally equal values serialize equally.

    Cycles render as ``<cycle>`` at the repeated handle.
    """
    parts: list[str] = []
    _ser(x, parts, ())
    return "".join(parts)


def _ser(x: Value, out: list[str], path: tuple[int, ...]) -> None:
    if x is None:
        out.append("null")
    elif isinstance(x, bool):
        out.append("true" if x else "false")
    elif isinstance(x, int):
        out.append(str(x))
    elif isinstance(x, float):
        out.append(repr(x))
    elif isinstance(x, str):
        out.append('"' + x.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(x, ExceptionValue):
        out.append(f'{x.type_name}{{message="{x.message}"}}')
    elif isinstance(x, MockRef):
        out.append(f"mock:{x.interface}#{x.handle}")
    elif isinstance(x, list):
        if id(x) in path:
            out.append("<cycle>")
            return
        out.append("[")
        for i, item in enumerate(x):
            if i:
                out.append(",")
            _ser(item, out, path + (id(x),))
        out.append("]")
    elif isinstance(x, InstanceValue):
        if id(x) in path:
            out.append("<cycle>")
            return
        out.append(x.type_name)
        out.append("{")
        for i, (name, value) in enumerate(x.fields.items()):
            if i:
                out.append(",")
            out.append(name)
            out.append("=")
            _ser(value, out, path + (id(x),))
        out.append("}")
    else:  # pragma: no cover
        raise TypeError(f"not a minilang value: {x!r}")
