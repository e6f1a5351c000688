"""Runtime values of minilang.

Scalars are plain Python objects (int, float, bool, str, None) so the
interpreter stays cheap. Composite values get small wrapper classes with
explicit identity semantics:

- InstanceValue: record or class instance, mutable field map.
- ExceptionValue: declared exception type plus message.
- MockRef: handle into the mock runtime of one execution.
- arrays are Python lists of values.
"""

from __future__ import annotations

from dataclasses import dataclass, field


INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


def wrap_int(n: int) -> int:
    """Two's-complement wrap to 64 bits."""
    return (n - INT_MIN) % 2**64 + INT_MIN


class InstanceValue:
    """A record or class instance. Field order follows the declaration."""

    __slots__ = ("type_name", "fields")

    def __init__(self, type_name: str, fields: dict[str, object]):
        self.type_name = type_name
        self.fields = fields

    def __repr__(self) -> str:  # debugging only
        return f"InstanceValue({self.type_name}, {self.fields!r})"


@dataclass(frozen=True)
class ExceptionValue:
    type_name: str
    message: str = ""


@dataclass(frozen=True)
class MockRef:
    handle: int
    interface: str


Value = object  # int | float | bool | str | None | list | InstanceValue | ExceptionValue | MockRef


def type_name_of(v: Value) -> str:
    """Static-type name of a runtime value (named types by declaration)."""
    if v is None:
        return "Null"
    if isinstance(v, bool):
        return "Bool"
    if isinstance(v, int):
        return "Int"
    if isinstance(v, float):
        return "Real"
    if isinstance(v, str):
        return "Str"
    if isinstance(v, list):
        return "Array"
    if isinstance(v, InstanceValue):
        return v.type_name
    if isinstance(v, ExceptionValue):
        return v.type_name
    if isinstance(v, MockRef):
        return v.interface
    raise TypeError(f"not a minilang value: {v!r}")


def values_equal(a: Value, b: Value) -> bool:
    """Deep structural equality, strict about scalar types (1 != 1.0)."""
    return _eq(a, b, set())


def _eq(a: Value, b: Value, seen: set[tuple[int, int]]) -> bool:
    if a is None or b is None:
        return a is None and b is None
    ta, tb = type(a), type(b)
    if ta is not tb:
        return False
    if ta in (bool, int, float, str):
        return a == b
    if ta is MockRef:
        return a.handle == b.handle
    if ta is ExceptionValue:
        return a == b
    # cycle guard for containers and instances
    key = (id(a), id(b))
    if key in seen:
        return True
    seen.add(key)
    if ta is list:
        return len(a) == len(b) and all(_eq(x, y, seen) for x, y in zip(a, b))
    if ta is InstanceValue:
        if a.type_name != b.type_name or a.fields.keys() != b.fields.keys():
            return False
        return all(_eq(a.fields[k], b.fields[k], seen) for k in a.fields)
    raise TypeError(f"not a minilang value: {a!r}")


def values_same(a: Value, b: Value) -> bool:
    """Identity semantics of assertSame: handles for composites, value for scalars."""
    if isinstance(a, (list, InstanceValue)) or isinstance(b, (list, InstanceValue)):
        return a is b
    if isinstance(a, MockRef) and isinstance(b, MockRef):
        return a.handle == b.handle
    return values_equal(a, b)


def deep_copy_value(v: Value) -> Value:
    """Structural copy used for Eq-matcher snapshots (cycle-safe)."""
    return _copy(v, {})


def _copy(v: Value, memo: dict[int, Value]) -> Value:
    if isinstance(v, list):
        if id(v) in memo:
            return memo[id(v)]
        out: list = []
        memo[id(v)] = out
        out.extend(_copy(x, memo) for x in v)
        return out
    if isinstance(v, InstanceValue):
        if id(v) in memo:
            return memo[id(v)]
        inst = InstanceValue(v.type_name, {})
        memo[id(v)] = inst
        inst.fields.update({k: _copy(x, memo) for k, x in v.fields.items()})
        return inst
    return v  # scalars, None, ExceptionValue, MockRef are immutable
