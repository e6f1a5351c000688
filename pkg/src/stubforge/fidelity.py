"""Fidelity of a synthesized stub against the ground truth.

Three runtime-behavior comparisons between the test run with the
synthesized stub and the run with the developer stub:

- executed production instructions (Jaccard),
- execution path over production instructions (Damerau-Levenshtein based),
- killed mutants of the class under test (Jaccard), using a small built-in
  mutator in place of an external mutation tool.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Sequence

from .minilang import ast
from .minilang.interp import ExecutionReport, Outcome, execute
from .minilang.parser import Program, TestCase, parse_test
from .stubir import StubProgram, render


class BothEmpty(Exception):
    pass


class BaselineFails(Exception):
    pass


# ----------------------------------------------------------------------
# Set and sequence similarity
# ----------------------------------------------------------------------


def instruction_jaccard(a: frozenset | set, b: frozenset | set) -> float:
    """|a & b| / |a | b|, defined as 1.0 when both sets are empty."""
    if not a and not b:
        return 1.0
    return len(set(a) & set(b)) / len(set(a) | set(b))


def damerau_levenshtein(p: Sequence, q: Sequence) -> int:
    """Optimal string alignment distance: insert, delete, substitute, and
    adjacent transposition, each at cost 1."""
    n, m = len(p), len(q)
    if n == 0:
        return m
    if m == 0:
        return n
    prev2: list[int] = []
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        current = [i] + [0] * m
        for j in range(1, m + 1):
            cost = 0 if p[i - 1] == q[j - 1] else 1
            best = min(prev[j] + 1, current[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and p[i - 1] == q[j - 2] and p[i - 2] == q[j - 1]:
                best = min(best, prev2[j - 2] + 1)
            current[j] = best
        prev2, prev = prev, current
    return prev[m]


def path_similarity(p: Sequence, q: Sequence) -> float:
    """1 - DLev(p, q) / (|p| + |q|)."""
    if not p and not q:
        raise BothEmpty("both execution paths are empty")
    return 1.0 - damerau_levenshtein(p, q) / (len(p) + len(q))


# ----------------------------------------------------------------------
# Mutant generation
# ----------------------------------------------------------------------

_ARITH_SWAP = {"+": "-", "-": "+", "*": "/", "/": "*"}
_REL_SWAP = {"<": "<=", "<=": "<", ">": ">=", ">=": ">", "==": "!=", "!=": "=="}
_NUMERIC = ("Int", "Real")


@dataclass
class Mutant:
    index: int
    description: str
    program: Program


def _class_nodes(cls: ast.ClassDecl):
    """Every statement and expression in the class bodies, pre-order."""
    def walk_expr(e: ast.Expr):
        yield e
        for child in ast._expr_children(e):
            yield from walk_expr(child)

    def walk_stmt(s):
        yield s
        for child in ast._node_children(s):
            if isinstance(child, ast.Expr):
                yield from walk_expr(child)
            else:
                yield from walk_stmt(child)

    bodies = []
    if cls.ctor is not None:
        bodies.append(cls.ctor.body)
    bodies.extend(m.body for m in cls.methods)
    for body in bodies:
        for stmt in body:
            yield from walk_stmt(stmt)


def _mutation_actions(cls: ast.ClassDecl) -> list[tuple[int, str, str]]:
    """(node position, action, description) per applicable site."""
    actions: list[tuple[int, str, str]] = []
    for pos, node in enumerate(_class_nodes(cls)):
        if isinstance(node, ast.Binary):
            if node.op in _ARITH_SWAP and node.left.ty in _NUMERIC and node.right.ty in _NUMERIC:
                actions.append((pos, "swap_op", f"'{node.op}' -> '{_ARITH_SWAP[node.op]}'"))
            elif node.op in _REL_SWAP:
                actions.append((pos, "swap_op", f"'{node.op}' -> '{_REL_SWAP[node.op]}'"))
        elif isinstance(node, (ast.If, ast.While)):
            kind = "if" if isinstance(node, ast.If) else "while"
            actions.append((pos, "negate_cond", f"negate {kind} condition"))
        elif isinstance(node, ast.IntLit):
            actions.append((pos, "const_inc", f"{node.value} -> {node.value + 1}"))
            actions.append((pos, "const_dec", f"{node.value} -> {node.value - 1}"))
    return actions


def _renumber(program: Program) -> None:
    counter = 0
    for name in program.decl_order:
        if name in program.classes:
            cls = program.classes[name]
            if cls.ctor is not None:
                counter = ast.assign_ids(cls.ctor.body, counter)
            for m in cls.methods:
                counter = ast.assign_ids(m.body, counter)
    program.instruction_count = counter


def generate_mutants(program: Program, cut_class: str) -> list[Mutant]:
    """One single-site fault per applicable operator instance in *cut_class*."""
    if cut_class not in program.classes:
        raise KeyError(f"no class {cut_class!r} in program")
    actions = _mutation_actions(program.classes[cut_class])
    mutants: list[Mutant] = []
    for index, (pos, action, description) in enumerate(actions):
        mutated = copy.deepcopy(program)
        node = None
        for i, candidate in enumerate(_class_nodes(mutated.classes[cut_class])):
            if i == pos:
                node = candidate
                break
        assert node is not None
        if action == "swap_op":
            node.op = _ARITH_SWAP.get(node.op) or _REL_SWAP[node.op]
        elif action == "negate_cond":
            node.cond = ast.Unary("!", node.cond)
        elif action == "const_inc":
            node.value = node.value + 1
        else:
            node.value = node.value - 1
        _renumber(mutated)
        mutants.append(Mutant(index, f"{cut_class}: {description}", mutated))
    return mutants


# ----------------------------------------------------------------------
# Mutant killing
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class KillResult:
    killed: frozenset[int]
    budget_kills: frozenset[int]  # killed only because the run exhausted its budget


def killed(program: Program, test: TestCase, stub: StubProgram, mutants: Sequence[Mutant]) -> KillResult:
    """Mutants on which the test (with *stub*) fails.

    A budget-exceeded run counts as a kill and is flagged separately.
    """
    baseline = execute(program, test, render(stub, test))
    if not baseline.passed:
        raise BaselineFails("test does not pass with this stub on the unmutated program")
    dead: set[int] = set()
    budget: set[int] = set()
    for mutant in mutants:
        mutated_test = parse_test(test.source, mutant.program)
        report = execute(mutant.program, mutated_test, render(stub, mutated_test))
        if not report.passed:
            dead.add(mutant.index)
            if report.outcome.kind == Outcome.BUDGET:
                budget.add(mutant.index)
    return KillResult(frozenset(dead), frozenset(budget))


# ----------------------------------------------------------------------
# Full report
# ----------------------------------------------------------------------


@dataclass
class FidelityReport:
    instructions_synth: frozenset[int]
    instructions_truth: frozenset[int]
    instruction_similarity: float
    path_synth_length: int
    path_truth_length: int
    path_distance: int
    path_sim: float
    injected_mutants: int
    killed_synth: frozenset[int]
    killed_truth: frozenset[int]
    budget_kills: frozenset[int]
    killed_similarity: float

    def to_dict(self) -> dict:
        return {
            "instructions": {
                "synthesized": len(self.instructions_synth),
                "ground_truth": len(self.instructions_truth),
                "common": len(self.instructions_synth & self.instructions_truth),
                "jaccard": self.instruction_similarity,
            },
            "path": {
                "synthesized_length": self.path_synth_length,
                "ground_truth_length": self.path_truth_length,
                "damerau_levenshtein": self.path_distance,
                "similarity": self.path_sim,
            },
            "mutants": {
                "injected": self.injected_mutants,
                "killed_synthesized": sorted(self.killed_synth),
                "killed_ground_truth": sorted(self.killed_truth),
                "budget_kills": sorted(self.budget_kills),
                "jaccard": self.killed_similarity,
            },
        }


def _production_path(report: ExecutionReport, program: Program) -> list[int]:
    return [i for i in report.trace if i < program.instruction_count]


def fidelity_report(
    program: Program,
    test: TestCase,
    synthesized: StubProgram,
    truth: StubProgram,
    cut_class: str,
) -> FidelityReport:
    """Compare the synthesized-stub run against the ground-truth run."""
    synth_run = execute(program, test, render(synthesized, test))
    truth_run = execute(program, test, render(truth, test))
    path_s = _production_path(synth_run, program)
    path_t = _production_path(truth_run, program)
    set_s, set_t = frozenset(path_s), frozenset(path_t)

    mutants = generate_mutants(program, cut_class)
    kills_s = killed(program, test, synthesized, mutants)
    kills_t = killed(program, test, truth, mutants)

    return FidelityReport(
        instructions_synth=set_s,
        instructions_truth=set_t,
        instruction_similarity=instruction_jaccard(set_s, set_t),
        path_synth_length=len(path_s),
        path_truth_length=len(path_t),
        path_distance=damerau_levenshtein(path_s, path_t),
        path_sim=path_similarity(path_s, path_t),
        injected_mutants=len(mutants),
        killed_synth=kills_s.killed,
        killed_truth=kills_t.killed,
        budget_kills=kills_s.budget_kills | kills_t.budget_kills,
        killed_similarity=instruction_jaccard(kills_s.killed, kills_t.killed),
    )
