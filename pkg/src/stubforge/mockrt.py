"""Mock-object runtime: stub registration, dispatch, invocation log, verify.

One ``MockRuntime`` belongs to exactly one interpreter execution. Reactions
for several entries matching the same call are consumed in registration
order, and the final entry repeats (consecutive stubbing): the k-th call
matching entry set L executes ``L[min(k, |L|) - 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .minilang.parser import Program
from .minilang.values import MockRef, Value, deep_copy_value, values_equal


class UnknownMethodError(Exception):
    pass


class ArityMismatchError(Exception):
    pass


@dataclass(frozen=True)
class AnyMatcher:
    def matches(self, arg: Value) -> bool:
        return True

    def describe(self) -> str:
        return "any"


@dataclass(frozen=True)
class EqMatcher:
    snapshot: Value  # immutable copy taken at registration time

    def matches(self, arg: Value) -> bool:
        return values_equal(self.snapshot, arg)

    def describe(self) -> str:
        return "eq"


Matcher = AnyMatcher | EqMatcher


@dataclass(frozen=True)
class Reaction:
    kind: str  # "return" | "throw"
    value: Value


@dataclass
class StubEntry:
    mock: int
    method: str
    matchers: tuple[Matcher, ...]
    reaction: Reaction
    registration_index: int
    use_count: int = 0
    act_used: bool = False


@dataclass(frozen=True)
class Invocation:
    mock: int
    method: str
    args: tuple[Value, ...]
    seq: int
    phase: str


_DEFAULTS = {"Int": 0, "Real": 0.0, "Bool": False, "Str": ""}


@dataclass
class StubUsageSummary:
    """Per-entry usage snapshot attached to an ExecutionReport."""

    entries: list[tuple[int, int, bool]] = field(default_factory=list)  # (index, use_count, act_used)
    act_used_entries: int = 0


class MockRuntime:
    def __init__(self, program: Program):
        self.program = program
        self.mocks: dict[int, str] = {}
        self.entries: list[StubEntry] = []
        self.log: list[Invocation] = []
        self._match_counters: dict[tuple[int, str, tuple[int, ...]], int] = {}
        self._next_handle = 0
        self._next_seq = 0

    # -- mock lifecycle -------------------------------------------------

    def create_mock(self, interface: str) -> MockRef:
        if interface not in self.program.interfaces:
            raise UnknownMethodError(f"cannot mock non-interface type {interface!r}")
        handle = self._next_handle
        self._next_handle += 1
        self.mocks[handle] = interface
        return MockRef(handle, interface)

    def _signature(self, handle: int, method: str):
        iface = self.program.interfaces[self.mocks[handle]]
        sig = next((m for m in iface.methods if m.name == method), None)
        if sig is None:
            raise UnknownMethodError(f"interface {iface.name!r} has no method {method!r}")
        return sig

    # -- stubbing ---------------------------------------------------------

    def register_stub(self, mock: MockRef, method: str, matchers: list[Matcher], reaction: Reaction) -> int:
        """Appends one entry; matcher snapshots must already be copies."""
        if mock.handle not in self.mocks:
            raise UnknownMethodError(f"unknown mock handle {mock.handle}")
        sig = self._signature(mock.handle, method)
        if len(matchers) != len(sig.params):
            raise ArityMismatchError(
                f"method {method!r} takes {len(sig.params)} arguments, got {len(matchers)} matchers"
            )
        index = len(self.entries)
        self.entries.append(StubEntry(mock.handle, method, tuple(matchers), Reaction(reaction.kind, reaction.value), index))
        return index

    # -- dispatch ---------------------------------------------------------

    def dispatch(self, mock: MockRef, method: str, args: list[Value], phase: str) -> Reaction:
        sig = self._signature(mock.handle, method)
        self.log.append(
            Invocation(mock.handle, method, tuple(deep_copy_value(a) for a in args), self._next_seq, phase)
        )
        self._next_seq += 1
        matching = [
            e
            for e in self.entries
            if e.mock == mock.handle
            and e.method == method
            and all(m.matches(a) for m, a in zip(e.matchers, args))
        ]
        if not matching:
            rt = sig.return_type
            if rt in _DEFAULTS:
                return Reaction("return", _DEFAULTS[rt])
            if rt == "Array":
                return Reaction("return", [])
            return Reaction("return", None)
        key = (mock.handle, method, tuple(e.registration_index for e in matching))
        k = self._match_counters.get(key, 0) + 1
        self._match_counters[key] = k
        entry = matching[min(k, len(matching)) - 1]
        entry.use_count += 1
        if phase == "act":
            entry.act_used = True
        return entry.reaction

    # -- verification -------------------------------------------------------

    def verify(self, mock: MockRef, method: str, matchers: list[Matcher], times: int) -> bool:
        count = sum(
            1
            for inv in self.log
            if inv.mock == mock.handle
            and inv.method == method
            and len(matchers) == len(inv.args)
            and all(m.matches(a) for m, a in zip(matchers, inv.args))
        )
        return count == times

    def used_count(self) -> int:
        """Entries exercised at least once during the Act phase."""
        return sum(1 for e in self.entries if e.act_used)

    def usage_summary(self) -> StubUsageSummary:
        return StubUsageSummary(
            entries=[(e.registration_index, e.use_count, e.act_used) for e in self.entries],
            act_used_entries=self.used_count(),
        )
