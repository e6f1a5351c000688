"""Population-based search for test-passing stub programs.

One seeded generator drives every stochastic decision in a documented
order (selection, crossover coin flips, mutation), so runs are reproducible
bit for bit; fitness evaluations are pure and may execute in parallel
without affecting the result.
"""

from __future__ import annotations

import random
import string
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .fitness import FitnessTriple, dominates, fitness_of, weighted_sum
from .minilang.builtins import BUILTINS
from .minilang.interp import DEFAULT_LOOP_CAP, DEFAULT_STEP_BUDGET, execute_prepared
from .minilang.lexer import tokenize
from .minilang.parser import Program, TestCase
from .minilang.values import wrap_int
from .stubir import (
    AnyM,
    ArrayExpr,
    BuiltinExpr,
    CtorExpr,
    Elem,
    EqM,
    FieldExpr,
    IrRef,
    LiteralExpr,
    MethodExpr,
    MockExpr,
    Ref,
    ReturnR,
    StubCall,
    StubProgram,
    TestRef,
    ThrowR,
    VarDef,
    def_positions,
    refs_of,
    to_ast_block,
)

STRATEGIES = ("dominance", "weighted", "unguided")
MODES = ("generate", "repair")

_CHAR_ALPHABET = string.ascii_lowercase + string.ascii_uppercase + string.digits + "_-./: "
_REAL_CLAMP = 1e12
_GEN_DEPTH_CAP = 3


class NoGenerator(Exception):
    """No way to produce a value of the requested type."""


@dataclass(frozen=True)
class EngineConfig:
    population_size: int = 200
    max_generations: int = 400
    elitism_fraction: float = 0.01
    tournament_k: int = 2
    c: float = 10.0
    length_limit: int = 50
    strategy: str = "dominance"
    mode: str = "generate"
    seed: int = 1009
    step_budget: int = DEFAULT_STEP_BUDGET
    loop_cap: int = DEFAULT_LOOP_CAP
    initial_elements_max: int = 5
    workers: int = 1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population size must be >= 2")
        if self.tournament_k < 2:
            raise ValueError("tournament size must be >= 2")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def elite_count(self) -> int:
        return max(1, int(self.elitism_fraction * self.population_size))


# ----------------------------------------------------------------------
# Symbol pool
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ApiSymbol:
    kind: str  # "constructor" | "method" | "field" | "builtin"
    name: str
    owner: str | None  # receiver type for method/field, None otherwise
    param_types: tuple[str, ...]
    return_type: str


@dataclass(frozen=True)
class SymbolPool:
    literals: tuple[object, ...]
    api_symbols: tuple[ApiSymbol, ...]
    interfaces: tuple[str, ...]

    def literals_of_type(self, type_name: str) -> list[object]:
        want = {"Int": int, "Real": float, "Bool": bool, "Str": str}.get(type_name)
        if want is None:
            return []
        if want is int:
            return [v for v in self.literals if isinstance(v, int) and not isinstance(v, bool)]
        return [v for v in self.literals if isinstance(v, want)]


def _harvest_literals(source: str) -> list[object]:
    out: list[object] = []
    for token in tokenize(source):
        if token.kind in ("int", "real", "str"):
            out.append(token.value)
        elif token.kind == "keyword" and token.text in ("true", "false"):
            out.append(token.text == "true")
    return out


def _literal_key(v: object) -> tuple[str, object]:
    return (type(v).__name__, v)


def construct_symbol_pool(
    test: TestCase, program: Program, broken: StubProgram | None = None
) -> SymbolPool:
    """Literals and API symbols harvested from the test, the CUT, and (when
    repairing) the broken stub; deterministic for fixed inputs."""
    literals: list[object] = []
    seen: set[tuple[str, object]] = set()
    for value in _harvest_literals(test.source) + _harvest_literals(program.source):
        key = _literal_key(value)
        if key not in seen:
            seen.add(key)
            literals.append(value)
    if broken is not None:
        for elem in broken.elements:
            if isinstance(elem, VarDef) and isinstance(elem.expr, LiteralExpr):
                value = elem.expr.value
                if value is None:
                    continue
                key = _literal_key(value)
                if key not in seen:
                    seen.add(key)
                    literals.append(value)

    symbols: list[ApiSymbol] = []
    for name in program.decl_order:
        if name in program.records:
            rec = program.records[name]
            symbols.append(
                ApiSymbol("constructor", name, None, tuple(f.type_name for f in rec.fields), name)
            )
            for f in rec.fields:
                symbols.append(ApiSymbol("field", f.name, name, (), f.type_name))
        elif name in program.exceptions:
            symbols.append(ApiSymbol("constructor", name, None, (), name))
            symbols.append(ApiSymbol("constructor", name, None, ("Str",), name))
        elif name in program.classes:
            cls = program.classes[name]
            ctor_params = tuple(p.type_name for p in cls.ctor.params) if cls.ctor else ()
            symbols.append(ApiSymbol("constructor", name, None, ctor_params, name))
            for f in cls.fields:
                symbols.append(ApiSymbol("field", f.name, name, (), f.type_name))
            for m in cls.methods:
                symbols.append(
                    ApiSymbol("method", m.name, name, tuple(p.type_name for p in m.params), m.return_type)
                )
    for b in BUILTINS.values():
        symbols.append(ApiSymbol("builtin", b.name, None, b.param_types, b.return_type))

    interfaces = tuple(n for n in program.decl_order if n in program.interfaces)
    return SymbolPool(tuple(literals), tuple(symbols), interfaces)


# ----------------------------------------------------------------------
# Random genome construction
# ----------------------------------------------------------------------

_SCALAR_DEFAULTS = {"Int": 0, "Real": 0.0, "Bool": False, "Str": ""}


class _Builder:
    """Mutable view of a genome under construction; all draws come from rng."""

    def __init__(self, pool: SymbolPool, test: TestCase, program: Program, rng: random.Random):
        self.pool = pool
        self.test = test
        self.program = program
        self.rng = rng
        self.elements: list[Elem] = []
        self.def_types: dict[int, str] = {}
        self.next_var = 0

    @classmethod
    def from_genome(
        cls, sp: StubProgram, pool: SymbolPool, test: TestCase, program: Program, rng: random.Random
    ) -> "_Builder":
        builder = cls(pool, test, program, rng)
        builder.elements = list(sp.elements)
        builder.def_types = element_types(sp, test, program)
        builder.next_var = max(builder.def_types, default=-1) + 1
        return builder

    def genome(self) -> StubProgram:
        return StubProgram(tuple(self.elements))

    # -- variables ------------------------------------------------------

    def vars_of_type(self, type_name: str) -> list[Ref]:
        refs: list[Ref] = [
            TestRef(name) for name, ty in self.test.scope_types.items() if ty == type_name
        ]
        refs.extend(IrRef(v) for v, ty in self.def_types.items() if ty == type_name)
        return refs

    def add_def(self, type_name: str, expr) -> IrRef:
        var = self.next_var
        self.next_var += 1
        self.elements.append(VarDef(var, expr))
        self.def_types[var] = type_name
        return IrRef(var)

    def var_for_type(self, type_name: str, depth: int = 0) -> Ref:
        existing = self.vars_of_type(type_name)
        if existing and (depth >= _GEN_DEPTH_CAP or self.rng.random() < 0.5):
            return self.rng.choice(existing)
        try:
            return self.make_def(type_name, depth)
        except NoGenerator:
            if existing:
                return self.rng.choice(existing)
            raise

    def make_def(self, type_name: str, depth: int = 0) -> IrRef:
        if depth > _GEN_DEPTH_CAP:
            raise NoGenerator(type_name)
        if type_name in _SCALAR_DEFAULTS:
            # scalar values come from pool literals or from API calls returning
            # the type (e.g. a digest of another string), a coin deciding which
            generators = [s for s in self.pool.api_symbols if s.return_type == type_name]
            if generators and depth < _GEN_DEPTH_CAP and self.rng.random() < 0.5:
                symbol = self.rng.choice(generators)
                try:
                    expr = self.api_call_expr(symbol, depth)
                    return self.add_def(type_name, expr)
                except NoGenerator:
                    pass
            choices = self.pool.literals_of_type(type_name)
            value = self.rng.choice(choices) if choices else _SCALAR_DEFAULTS[type_name]
            return self.add_def(type_name, LiteralExpr(value))
        if type_name == "Array":
            pool_vars = [IrRef(v) for v in self.def_types] + [
                TestRef(n) for n in self.test.scope_types
            ]
            count = self.rng.randint(0, min(2, len(pool_vars)))
            items = tuple(self.rng.choice(pool_vars) for _ in range(count)) if count else ()
            return self.add_def("Array", ArrayExpr(items))
        expr = self.complex_expr(type_name, depth)
        return self.add_def(type_name, expr)

    def complex_expr(self, type_name: str, depth: int = 0):
        """Mocking decision for one value of a record/class/interface/exception type."""
        mockable = type_name in self.program.interfaces
        generators = [
            s
            for s in self.pool.api_symbols
            if s.return_type == type_name and s.kind in ("constructor", "method", "field")
        ]
        use_mock: bool
        if mockable and generators:
            use_mock = self.rng.random() < 0.5
        elif mockable:
            use_mock = True
        elif generators:
            use_mock = False
        else:
            raise NoGenerator(f"no generator for type {type_name!r}")
        if use_mock:
            return MockExpr(type_name)
        symbol = self.rng.choice(generators)
        return self.api_call_expr(symbol, depth)

    def api_call_expr(self, symbol: ApiSymbol, depth: int):
        if symbol.kind == "builtin":
            args = tuple(self.var_for_type(t, depth + 1) for t in symbol.param_types)
            return BuiltinExpr(symbol.name, args)
        if symbol.kind == "constructor":
            args = tuple(self.var_for_type(t, depth + 1) for t in symbol.param_types)
            return CtorExpr(symbol.name, args)
        receiver = self.var_for_type(symbol.owner, depth + 1)
        if symbol.kind == "field":
            return FieldExpr(receiver, symbol.name)
        args = tuple(self.var_for_type(t, depth + 1) for t in symbol.param_types)
        return MethodExpr(receiver, symbol.name, args)

    # -- elements -----------------------------------------------------------

    def mock_targets(self) -> list[Ref]:
        refs: list[Ref] = [TestRef(name) for name, _ in self.test.mocks]
        refs.extend(IrRef(v) for v, ty in self.def_types.items() if ty in self.program.interfaces)
        return refs

    def target_interface(self, ref: Ref) -> str:
        if isinstance(ref, TestRef):
            return self.test.scope_types[ref.name]
        return self.def_types[ref.index]

    def random_vardef(self) -> None:
        """One definition drawn from the pool: a literal, an API call, or a mock."""
        options: list[tuple[str, object]] = [("literal", v) for v in self.pool.literals]
        options.extend(("api", s) for s in self.pool.api_symbols)
        options.extend(("mock", i) for i in self.pool.interfaces)
        if not options:
            return
        kind, payload = self.rng.choice(options)
        if kind == "literal":
            value = payload
            ty = {int: "Int", float: "Real", bool: "Bool", str: "Str"}[
                bool if isinstance(value, bool) else type(value)
            ]
            self.add_def(ty, LiteralExpr(value))
        elif kind == "mock":
            self.add_def(payload, MockExpr(payload))
        else:
            symbol = payload
            try:
                expr = self.api_call_expr(symbol, 0)
            except NoGenerator:
                return
            self.add_def(symbol.return_type, expr)

    def random_stubcall(self, target: Ref | None = None) -> None:
        targets = self.mock_targets()
        if not targets:
            return
        if target is None:
            target = self.rng.choice(targets)
        iface = self.program.interfaces[self.target_interface(target)]
        if not iface.methods:
            return
        sig = self.rng.choice(iface.methods)
        matchers: list = []
        for p in sig.params:
            if self.rng.random() < 0.5:
                matchers.append(AnyM())
            else:
                try:
                    matchers.append(EqM(self.var_for_type(p.type_name)))
                except NoGenerator:
                    matchers.append(AnyM())
        throwable = sorted(self.program.exceptions)
        want_throw = bool(throwable) and self.rng.random() < 0.5
        reaction = None
        if want_throw:
            exc_type = self.rng.choice(throwable)
            try:
                reaction = ThrowR(self.var_for_type(exc_type))
            except NoGenerator:
                reaction = None
        if reaction is None:
            try:
                reaction = ReturnR(self.var_for_type(sig.return_type))
            except NoGenerator:
                return
        self.elements.append(StubCall(target, sig.name, tuple(matchers), reaction))

    def trim_to(self, size: int) -> None:
        """Drop trailing elements (a suffix drop never breaks def-before-use)."""
        while len(self.elements) > size:
            dropped = self.elements.pop()
            if isinstance(dropped, VarDef):
                self.def_types.pop(dropped.var, None)


def element_types(sp: StubProgram, test: TestCase, program: Program) -> dict[int, str]:
    """var index -> static type, for a valid genome."""
    from .stubir import _Types

    types = _Types(program, test)
    defs: dict[int, str] = {}
    for elem in sp.elements:
        if isinstance(elem, VarDef):
            ty = types.expr_type(elem.expr, defs)
            defs[elem.var] = ty if ty is not None else "Any"
    return defs


def mock_or_real(type_name: str, pool: SymbolPool, rng: random.Random, builder: _Builder | None = None):
    """Type II mocking decision: produce an expression for one value of
    *type_name*, choosing between a fresh mock and a real generator.

    Raises NoGenerator when the type is neither mockable nor constructible.
    """
    if builder is None:
        raise NoGenerator("mock_or_real needs a builder context")
    return builder.complex_expr(type_name, 0)


def create_initial_population(
    pool: SymbolPool, test: TestCase, program: Program, config: EngineConfig, rng: random.Random
) -> list[StubProgram]:
    """N genomes, each with 0..initial_elements_max elements per declared mock."""
    population: list[StubProgram] = []
    for _ in range(config.population_size):
        builder = _Builder(pool, test, program, rng)
        for name, _iface in test.mocks:
            target_count = rng.randint(0, config.initial_elements_max)
            start = len(builder.elements)
            guard = 0
            while len(builder.elements) - start < target_count and guard < 4 * target_count + 4:
                guard += 1
                if rng.random() < 0.5:
                    builder.random_vardef()
                else:
                    builder.random_stubcall(TestRef(name))
            builder.trim_to(start + target_count)
        builder.trim_to(config.length_limit)
        population.append(builder.genome())
    return population


# ----------------------------------------------------------------------
# Selection
# ----------------------------------------------------------------------


def select_parents(
    fitnesses: list[FitnessTriple],
    strategy: str,
    rng: random.Random,
    k: int = 2,
    counter: list[int] | None = None,
) -> tuple[int, int]:
    """Two parent indices. The unguided strategy never consults fitness."""
    n = len(fitnesses)
    if strategy == "unguided":
        return rng.randrange(n), rng.randrange(n)

    def read(index: int) -> FitnessTriple:
        if counter is not None:
            counter[0] += 1
        return fitnesses[index]

    def tournament() -> int:
        entrants = rng.sample(range(n), min(k, n))
        best = entrants[0]
        for other in entrants[1:]:
            if strategy == "dominance":
                if dominates(read(other), read(best)):
                    best = other
                elif dominates(read(best), read(other)):
                    pass
                elif rng.random() < 0.5:
                    best = other
            else:
                ws_other, ws_best = weighted_sum(read(other)), weighted_sum(read(best))
                if ws_other > ws_best:
                    best = other
                elif ws_other == ws_best and rng.random() < 0.5:
                    best = other
        return best

    return tournament(), tournament()


# ----------------------------------------------------------------------
# Crossover
# ----------------------------------------------------------------------


def _slice_indices(sp: StubProgram, index: int) -> list[int]:
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
                stack.append(positions[ref.index])
    return sorted(needed)


def _remap_ref(ref: Ref, mapping: dict[int, int]) -> Ref:
    if isinstance(ref, IrRef):
        return IrRef(mapping[ref.index])
    return ref


def _remap_elem(elem: Elem, mapping: dict[int, int]) -> Elem:
    if isinstance(elem, VarDef):
        e = elem.expr
        if isinstance(e, ArrayExpr):
            e = ArrayExpr(tuple(_remap_ref(r, mapping) for r in e.items))
        elif isinstance(e, CtorExpr):
            e = CtorExpr(e.type_name, tuple(_remap_ref(r, mapping) for r in e.args))
        elif isinstance(e, MethodExpr):
            e = MethodExpr(_remap_ref(e.receiver, mapping), e.method, tuple(_remap_ref(r, mapping) for r in e.args))
        elif isinstance(e, FieldExpr):
            e = FieldExpr(_remap_ref(e.receiver, mapping), e.field)
        elif isinstance(e, BuiltinExpr):
            e = BuiltinExpr(e.name, tuple(_remap_ref(r, mapping) for r in e.args))
        return VarDef(mapping[elem.var], e)
    matchers = tuple(
        m if isinstance(m, AnyM) else EqM(_remap_ref(m.ref, mapping)) for m in elem.matchers
    )
    reaction = (
        ReturnR(_remap_ref(elem.reaction.ref, mapping))
        if isinstance(elem.reaction, ReturnR)
        else ThrowR(_remap_ref(elem.reaction.ref, mapping))
    )
    return StubCall(_remap_ref(elem.target, mapping), elem.method, matchers, reaction)


def crossover(
    p1: StubProgram, p2: StubProgram, rng: random.Random, length_limit: int = 50
) -> tuple[StubProgram, StubProgram]:
    """Copy each parent stub call (with its backward slice) into each
    offspring independently with probability 1/2; shared dependencies are
    deduplicated per originating definition and variables renumbered."""
    donors: list[tuple[int, StubProgram, int]] = []
    for pid, parent in ((0, p1), (1, p2)):
        for idx in parent.stub_call_indices():
            donors.append((pid, parent, idx))

    chosen: tuple[list[tuple[int, StubProgram, int]], list[tuple[int, StubProgram, int]]] = ([], [])
    for donor in donors:
        if rng.random() < 0.5:
            chosen[0].append(donor)
        if rng.random() < 0.5:
            chosen[1].append(donor)

    def build(selection: list[tuple[int, StubProgram, int]]) -> StubProgram:
        elements: list[Elem] = []
        added: set[tuple[int, int]] = set()
        var_map: dict[tuple[int, int], int] = {}
        next_var = 0
        for pid, parent, call_idx in selection:
            for j in _slice_indices(parent, call_idx):
                key = (pid, j)
                if key in added:
                    continue
                added.add(key)
                elem = parent.elements[j]
                mapping: dict[int, int] = {}
                for ref in refs_of(elem):
                    if isinstance(ref, IrRef):
                        mapping[ref.index] = var_map[(pid, ref.index)]
                if isinstance(elem, VarDef):
                    var_map[(pid, elem.var)] = next_var
                    mapping[elem.var] = next_var
                    next_var += 1
                elements.append(_remap_elem(elem, mapping))
        return StubProgram(tuple(elements[:length_limit]))

    return build(chosen[0]), build(chosen[1])


# ----------------------------------------------------------------------
# Mutation
# ----------------------------------------------------------------------

_MUTATION_OPS = ("insert", "alter_params", "alter_literal", "swap", "drop")


def _unused_def_indices(sp: StubProgram) -> list[int]:
    used: set[int] = set()
    for elem in sp.elements:
        for ref in refs_of(elem):
            if isinstance(ref, IrRef):
                used.add(ref.index)
    return [
        i
        for i, e in enumerate(sp.elements)
        if isinstance(e, VarDef) and e.var not in used
    ]


def _param_slots(sp: StubProgram, test: TestCase, program: Program) -> list[tuple[int, str, int]]:
    """(element index, slot kind, slot position) for every variable slot."""
    slots: list[tuple[int, str, int]] = []
    for i, elem in enumerate(sp.elements):
        if isinstance(elem, VarDef):
            e = elem.expr
            if isinstance(e, ArrayExpr):
                slots.extend((i, "item", j) for j in range(len(e.items)))
            elif isinstance(e, (CtorExpr, BuiltinExpr)):
                slots.extend((i, "arg", j) for j in range(len(e.args)))
            elif isinstance(e, MethodExpr):
                slots.append((i, "receiver", 0))
                slots.extend((i, "arg", j) for j in range(len(e.args)))
            elif isinstance(e, FieldExpr):
                slots.append((i, "receiver", 0))
        else:
            slots.append((i, "target", 0))
            slots.extend((i, "matcher", j) for j, m in enumerate(elem.matchers) if isinstance(m, EqM))
            slots.append((i, "reaction", 0))
    return slots


def _slot_ref(elem: Elem, kind: str, pos: int) -> Ref:
    if isinstance(elem, VarDef):
        e = elem.expr
        if kind == "item":
            return e.items[pos]
        if kind == "receiver":
            return e.receiver
        return e.args[pos]
    if kind == "target":
        return elem.target
    if kind == "matcher":
        return elem.matchers[pos].ref
    return elem.reaction.ref


def _with_slot(elem: Elem, kind: str, pos: int, ref: Ref) -> Elem:
    if isinstance(elem, VarDef):
        e = elem.expr
        if kind == "item":
            items = list(e.items)
            items[pos] = ref
            return VarDef(elem.var, ArrayExpr(tuple(items)))
        if kind == "receiver":
            if isinstance(e, FieldExpr):
                return VarDef(elem.var, FieldExpr(ref, e.field))
            return VarDef(elem.var, MethodExpr(ref, e.method, e.args))
        args = list(e.args)
        args[pos] = ref
        if isinstance(e, CtorExpr):
            return VarDef(elem.var, CtorExpr(e.type_name, tuple(args)))
        if isinstance(e, BuiltinExpr):
            return VarDef(elem.var, BuiltinExpr(e.name, tuple(args)))
        return VarDef(elem.var, MethodExpr(e.receiver, e.method, tuple(args)))
    if kind == "target":
        return StubCall(ref, elem.method, elem.matchers, elem.reaction)
    if kind == "matcher":
        matchers = list(elem.matchers)
        matchers[pos] = EqM(ref)
        return StubCall(elem.target, elem.method, tuple(matchers), elem.reaction)
    reaction = ReturnR(ref) if isinstance(elem.reaction, ReturnR) else ThrowR(ref)
    return StubCall(elem.target, elem.method, elem.matchers, reaction)


def _ref_type(ref: Ref, defs: dict[int, str], test: TestCase) -> str | None:
    if isinstance(ref, IrRef):
        return defs.get(ref.index)
    return test.scope_types.get(ref.name)


def _alternatives(
    sp: StubProgram, index: int, current: Ref, defs: dict[int, str], test: TestCase
) -> list[Ref]:
    """In-scope refs of the same type as *current*, excluding it."""
    want = _ref_type(current, defs, test)
    if want is None:
        return []
    positions = def_positions(sp)
    refs: list[Ref] = [TestRef(n) for n, ty in test.scope_types.items() if ty == want]
    refs.extend(
        IrRef(v) for v, ty in defs.items() if ty == want and positions.get(v, len(sp.elements)) < index
    )
    return [r for r in refs if r != current]


def _repair_order(elements: list[Elem]) -> list[Elem]:
    """Stable reorder moving violated definitions ahead of their first use."""
    positions: dict[int, int] = {}
    for i, e in enumerate(elements):
        if isinstance(e, VarDef) and e.var not in positions:
            positions[e.var] = i
    emitted: list[Elem] = []
    done: set[int] = set()

    def emit(i: int) -> None:
        if i in done:
            return
        done.add(i)
        for ref in refs_of(elements[i]):
            if isinstance(ref, IrRef) and ref.index in positions:
                emit(positions[ref.index])
        emitted.append(elements[i])

    for i in range(len(elements)):
        emit(i)
    return emitted


def mutate(
    sp: StubProgram,
    pool: SymbolPool,
    test: TestCase,
    program: Program,
    rng: random.Random,
    length_limit: int = 50,
) -> StubProgram:
    """Apply exactly one of the five operators, redrawing among the
    applicable ones when the first uniform draw does not apply."""
    defs = element_types(sp, test, program)

    def applicable(op: str) -> bool:
        if op == "insert":
            return len(sp.elements) + 2 <= length_limit
        if op == "alter_params":
            return any(
                _alternatives(sp, i, _slot_ref(sp.elements[i], kind, pos), defs, test)
                for i, kind, pos in _param_slots(sp, test, program)
            )
        if op == "alter_literal":
            return any(
                isinstance(e, VarDef)
                and isinstance(e.expr, LiteralExpr)
                and e.expr.value is not None
                for e in sp.elements
            )
        if op == "swap":
            return len(sp.elements) >= 2
        return bool(sp.stub_call_indices() or _unused_def_indices(sp))

    op = _MUTATION_OPS[rng.randrange(len(_MUTATION_OPS))]
    if not applicable(op):
        candidates = [o for o in _MUTATION_OPS if applicable(o)]
        if not candidates:
            return sp
        op = rng.choice(candidates)

    if op == "insert":
        builder = _Builder.from_genome(sp, pool, test, program, rng)
        builder.random_vardef()
        builder.random_stubcall()
        builder.trim_to(length_limit)
        return builder.genome()

    if op == "alter_params":
        slots = [
            (i, kind, pos, alts)
            for i, kind, pos in _param_slots(sp, test, program)
            if (alts := _alternatives(sp, i, _slot_ref(sp.elements[i], kind, pos), defs, test))
        ]
        i, kind, pos, alts = slots[rng.randrange(len(slots))]
        replacement = rng.choice(alts)
        elements = list(sp.elements)
        elements[i] = _with_slot(elements[i], kind, pos, replacement)
        return StubProgram(tuple(elements))

    if op == "alter_literal":
        candidates = [
            i
            for i, e in enumerate(sp.elements)
            if isinstance(e, VarDef) and isinstance(e.expr, LiteralExpr) and e.expr.value is not None
        ]
        i = candidates[rng.randrange(len(candidates))]
        elem = sp.elements[i]
        elements = list(sp.elements)
        elements[i] = VarDef(elem.var, LiteralExpr(_mutated_literal(elem.expr.value, pool, rng)))
        return StubProgram(tuple(elements))

    if op == "swap":
        n = len(sp.elements)
        i = rng.randrange(n)
        j = rng.randrange(n - 1)
        if j >= i:
            j += 1
        elements = list(sp.elements)
        elements[i], elements[j] = elements[j], elements[i]
        return StubProgram(tuple(_repair_order(elements)))

    # drop
    candidates = sorted(set(sp.stub_call_indices()) | set(_unused_def_indices(sp)))
    i = candidates[rng.randrange(len(candidates))]
    elements = list(sp.elements)
    del elements[i]
    return StubProgram(tuple(elements))


def _mutated_literal(value, pool: SymbolPool, rng: random.Random):
    if isinstance(value, bool):
        return not value
    if isinstance(value, int):
        kind = rng.randrange(3)
        if kind == 0:
            delta = rng.choice((1, -1))
        elif kind == 1:
            delta = rng.choice((10, -10))
        else:
            delta = rng.randint(-5, 5)
        return wrap_int(value + delta)
    if isinstance(value, float):
        kind = rng.randrange(3)
        if kind == 0:
            delta = rng.choice((1.0, -1.0))
        elif kind == 1:
            delta = rng.choice((10.0, -10.0))
        else:
            delta = rng.uniform(-5.0, 5.0)
        return max(-_REAL_CLAMP, min(_REAL_CLAMP, value + delta))
    # string edits
    ops = ["insert"]
    if len(value) > 0:
        ops.extend(("delete", "replace_char"))
    strings = pool.literals_of_type("Str")
    if strings:
        ops.append("replace_pool")
    op = rng.choice(ops)
    if op == "insert":
        pos = rng.randint(0, len(value))
        ch = rng.choice(_CHAR_ALPHABET)
        return value[:pos] + ch + value[pos:]
    if op == "delete":
        pos = rng.randrange(len(value))
        return value[:pos] + value[pos + 1 :]
    if op == "replace_char":
        pos = rng.randrange(len(value))
        ch = rng.choice(_CHAR_ALPHABET)
        return value[:pos] + ch + value[pos + 1 :]
    return rng.choice(strings)


# ----------------------------------------------------------------------
# The engine
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class GenStats:
    generation: int
    best: FitnessTriple
    passed: bool


@dataclass
class RunResult:
    status: str  # "passed" | "exhausted"
    stub: StubProgram
    fitness: FitnessTriple
    generations: int
    evaluations: int
    wall_seconds: float
    gen_stats: list[GenStats] = field(default_factory=list)
    selection_fitness_reads: int = 0

    @property
    def passed(self) -> bool:
        return self.status == "passed"


def _best_index(fitnesses: list[FitnessTriple], strategy: str) -> int:
    if strategy == "weighted":
        return max(range(len(fitnesses)), key=lambda i: (weighted_sum(fitnesses[i]), fitnesses[i].key(), -i))
    return max(range(len(fitnesses)), key=lambda i: (fitnesses[i].key(), -i))


def run(
    test: TestCase,
    program: Program,
    config: EngineConfig,
    broken: StubProgram | None = None,
) -> RunResult:
    """One full evolutionary search; deterministic for a fixed config."""
    start = time.perf_counter()
    rng = random.Random(config.seed)
    pool = construct_symbol_pool(test, program, broken if config.mode == "repair" else None)

    cache: dict[StubProgram, FitnessTriple] = {}
    evaluations = 0
    fitness_reads = [0]

    def evaluate_one(genome: StubProgram) -> FitnessTriple:
        # genomes are valid by construction, so the prepared path (no parse,
        # no typecheck) produces the same report as rendering + execute()
        report = execute_prepared(
            program, test, to_ast_block(genome), step_budget=config.step_budget, loop_cap=config.loop_cap
        )
        return fitness_of(report, test, config.c)

    def evaluate(pop: list[StubProgram]) -> list[FitnessTriple]:
        nonlocal evaluations
        fresh: list[StubProgram] = []
        seen: set[StubProgram] = set()
        for genome in pop:
            if genome not in cache and genome not in seen:
                seen.add(genome)
                fresh.append(genome)
        if fresh:
            if config.workers > 1:
                with ThreadPoolExecutor(max_workers=config.workers) as pool_exec:
                    results = list(pool_exec.map(evaluate_one, fresh))
            else:
                results = [evaluate_one(g) for g in fresh]
            for genome, triple in zip(fresh, results):
                cache[genome] = triple
            evaluations += len(fresh)
        return [cache[g] for g in pop]

    population = create_initial_population(pool, test, program, config, rng)
    fitnesses = evaluate(population)
    generation = 1
    stats = [GenStats(1, fitnesses[_best_index(fitnesses, config.strategy)], any(f.passed for f in fitnesses))]

    while True:
        for i, f in enumerate(fitnesses):
            if f.passed:
                return RunResult(
                    "passed",
                    population[i],
                    f,
                    generation,
                    evaluations,
                    time.perf_counter() - start,
                    stats,
                    fitness_reads[0],
                )
        if generation > config.max_generations:
            best = _best_index(fitnesses, config.strategy)
            return RunResult(
                "exhausted",
                population[best],
                fitnesses[best],
                generation,
                evaluations,
                time.perf_counter() - start,
                stats,
                fitness_reads[0],
            )

        if config.strategy == "unguided":
            elite_indices = rng.sample(range(len(population)), config.elite_count)
        else:
            order = sorted(
                range(len(population)),
                key=lambda i: (fitnesses[i].key(), -i) if config.strategy == "dominance"
                else (weighted_sum(fitnesses[i]), -i),
                reverse=True,
            )
            elite_indices = order[: config.elite_count]
        next_population = [population[i] for i in elite_indices]
        while len(next_population) < config.population_size:
            i1, i2 = select_parents(fitnesses, config.strategy, rng, config.tournament_k, fitness_reads)
            o1, o2 = crossover(population[i1], population[i2], rng, config.length_limit)
            o1 = mutate(o1, pool, test, program, rng, config.length_limit)
            o2 = mutate(o2, pool, test, program, rng, config.length_limit)
            next_population.append(o1)
            next_population.append(o2)
        population = next_population[: config.population_size]
        fitnesses = evaluate(population)
        generation += 1
        stats.append(
            GenStats(
                generation,
                fitnesses[_best_index(fitnesses, config.strategy)],
                any(f.passed for f in fitnesses),
            )
        )
