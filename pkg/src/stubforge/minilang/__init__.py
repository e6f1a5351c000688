"""minilang: a small deterministic interpreted language with execution tracing."""

from .errors import MiniSyntaxError, MiniTypeError
from .interp import (
    DEFAULT_LOOP_CAP,
    DEFAULT_STEP_BUDGET,
    AssertionOutcome,
    ExecutionReport,
    Outcome,
    execute,
)
from .parser import Program, TestCase, parse, parse_program, parse_stub_block, parse_test
from .values import ExceptionValue, InstanceValue, MockRef, Value, values_equal, values_same

__all__ = [
    "MiniSyntaxError",
    "MiniTypeError",
    "AssertionOutcome",
    "ExecutionReport",
    "Outcome",
    "execute",
    "DEFAULT_STEP_BUDGET",
    "DEFAULT_LOOP_CAP",
    "Program",
    "TestCase",
    "parse",
    "parse_program",
    "parse_test",
    "parse_stub_block",
    "ExceptionValue",
    "InstanceValue",
    "MockRef",
    "Value",
    "values_equal",
    "values_same",
]
