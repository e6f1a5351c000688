"""Desk corpus: one directory per entry, loaded and checked up front.

Layout of an entry directory::

    <id>/
      program.ml0   declarations hosting the class under test
      test.ml0      one test case with a stub_site marker
      truth.stub    optional ground-truth stub (textual stub form)
      broken.stub   optional obsolete stub; may fail validation by design
      meta          JSON: {"id": ..., "notes": ...}

Loading enforces the corpus invariants: the test fails with an empty stub
(so a stub is actually required) and passes with the ground truth.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .minilang.errors import MiniSyntaxError, MiniTypeError
from .minilang.interp import execute
from .minilang.lexer import tokenize
from .minilang.parser import Program, TestCase, parse_program, parse_test
from .stubir import StubProgram, StubTextError, parse_stub_text, render, validate

# reserved for rendered stub variables / textual stub variables
_RESERVED_NAME = re.compile(r"^(sv|v)\d+$")


class CorpusError(Exception):
    pass


class ParseError(CorpusError):
    def __init__(self, entry_id: str, message: str):
        super().__init__(f"[{entry_id}] {message}")
        self.entry_id = entry_id


class InvariantViolation(CorpusError):
    def __init__(self, entry_id: str, check: str, message: str = ""):
        super().__init__(f"[{entry_id}] invariant {check!r} violated" + (f": {message}" if message else ""))
        self.entry_id = entry_id
        self.check = check


@dataclass
class CorpusEntry:
    entry_id: str
    root: Path
    program: Program
    test: TestCase
    truth: StubProgram | None
    broken: StubProgram | None
    cut_class: str = ""
    notes: str = ""

    @property
    def has_broken(self) -> bool:
        return self.broken is not None

    @property
    def has_truth(self) -> bool:
        return self.truth is not None


def _check_reserved_names(entry_id: str, source: str, filename: str) -> None:
    for token in tokenize(source):
        if token.kind == "ident" and _RESERVED_NAME.match(token.text):
            raise InvariantViolation(
                entry_id,
                "reserved-name",
                f"{filename} uses identifier {token.text!r}, reserved for stub variables",
            )


def load_entry(path: Path) -> CorpusEntry:
    entry_id = path.name
    meta_path = path / "meta"
    if not meta_path.is_file():
        raise ParseError(entry_id, "missing meta file")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(entry_id, f"bad meta file: {exc}") from exc
    entry_id = meta.get("id", entry_id)

    program_path = path / "program.ml0"
    test_path = path / "test.ml0"
    if not program_path.is_file() or not test_path.is_file():
        raise ParseError(entry_id, "missing program.ml0 or test.ml0")
    program_source = program_path.read_text()
    test_source = test_path.read_text()
    _check_reserved_names(entry_id, program_source, "program.ml0")
    _check_reserved_names(entry_id, test_source, "test.ml0")

    try:
        program = parse_program(program_source)
        test = parse_test(test_source, program)
    except (MiniSyntaxError, MiniTypeError) as exc:
        raise ParseError(entry_id, str(exc)) from exc

    if not test.e_ids:
        raise InvariantViolation(entry_id, "empty-act-block")
    if not test.asserts:
        raise InvariantViolation(entry_id, "empty-oracle")

    # a stub must be required: the bare test fails
    bare = execute(program, test, "")
    if bare.passed:
        raise InvariantViolation(entry_id, "stub-not-required", "test passes with an empty stub")

    truth = _load_stub(path / "truth.stub", entry_id)
    if truth is not None:
        violations = validate(truth, test, program)
        if violations:
            raise InvariantViolation(entry_id, "ground-truth-invalid", "; ".join(v.message for v in violations))
        report = execute(program, test, render(truth, test))
        if not report.passed:
            raise InvariantViolation(entry_id, "ground-truth-fails")

    broken = _load_stub(path / "broken.stub", entry_id)

    cut_class = meta.get("cut_class", "")
    if not cut_class:
        classes = list(program.classes)
        if len(classes) != 1:
            raise InvariantViolation(entry_id, "ambiguous-cut", "set cut_class in meta")
        cut_class = classes[0]
    elif cut_class not in program.classes:
        raise InvariantViolation(entry_id, "unknown-cut", f"no class {cut_class!r}")

    return CorpusEntry(
        entry_id=entry_id,
        root=path,
        program=program,
        test=test,
        truth=truth,
        broken=broken,
        cut_class=cut_class,
        notes=meta.get("notes", ""),
    )


def _load_stub(path: Path, entry_id: str) -> StubProgram | None:
    if not path.is_file():
        return None
    try:
        return parse_stub_text(path.read_text())
    except StubTextError as exc:
        raise ParseError(entry_id, f"{path.name}: {exc}") from exc


def load_corpus(path: Path | str) -> list[CorpusEntry]:
    """All entries under *path*, sorted by id. Raises on the first bad entry."""
    root = Path(path)
    if not root.is_dir():
        raise CorpusError(f"corpus directory {root} does not exist")
    entries = []
    for child in sorted(root.iterdir()):
        if child.is_dir() and (child / "meta").is_file():
            entries.append(load_entry(child))
    entries.sort(key=lambda e: e.entry_id)
    return entries
