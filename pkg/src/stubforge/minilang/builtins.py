"""Builtin functions available to minilang code and to synthesized stubs."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class Builtin:
    name: str
    param_types: tuple[str, ...]
    return_type: str
    fn: Callable


def _sha1_hex(s: str) -> str:
    return hashlib.sha1(s.encode("utf-8")).hexdigest()


BUILTINS: dict[str, Builtin] = {
    b.name: b
    for b in (
        Builtin("sha1Hex", ("Str",), "Str", _sha1_hex),
        Builtin("strLen", ("Str",), "Int", len),
        Builtin("intToStr", ("Int",), "Str", str),
        Builtin("startsWith", ("Str", "Str"), "Bool", lambda s, p: s.startswith(p)),
        Builtin("arrayLen", ("Array",), "Int", len),
    )
}
