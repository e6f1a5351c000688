"""Machine-readable run reports.

A report is self-verifying: it embeds the textual stub program, so the stub
can be re-parsed, re-validated, re-rendered, and re-executed from the report
file and the corpus alone. ``canonical_bytes`` excludes wall-clock timing
(the only non-deterministic field) so determinism can be checked bytewise.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .corpus import CorpusEntry, load_entry
from .evolve import RunResult
from .minilang.interp import execute
from .stubir import StubProgram, parse_stub_text, render, serialize_stub_text, validate


@dataclass
class RunReport:
    entry_id: str
    mode: str
    strategy: str
    seed: int
    population_size: int
    max_generations: int
    status: str
    generations: int
    evaluations: int
    wall_seconds: float
    stub_size: int
    stub_ir: str
    stub_rendered: str
    series: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "passed"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def canonical_bytes(self) -> bytes:
        """Deterministic serialization: everything except wall-clock timing."""
        data = self.to_dict()
        del data["wall_seconds"]
        return json.dumps(data, sort_keys=True, separators=(",", ":")).encode("utf-8")

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))


def build_report(entry: CorpusEntry, config, result: RunResult) -> RunReport:
    return RunReport(
        entry_id=entry.entry_id,
        mode=config.mode,
        strategy=config.strategy,
        seed=config.seed,
        population_size=config.population_size,
        max_generations=config.max_generations,
        status=result.status,
        generations=result.generations,
        evaluations=result.evaluations,
        wall_seconds=result.wall_seconds,
        stub_size=len(result.stub),
        stub_ir=serialize_stub_text(result.stub),
        stub_rendered=render(result.stub, entry.test),
        series=[
            {
                "generation": gs.generation,
                "su": gs.best.su,
                "ec": gs.best.ec,
                "as": gs.best.as_score,
                "passed": gs.passed,
            }
            for gs in result.gen_stats
        ],
    )


def reverify(report: RunReport, corpus_root: Path | str) -> bool:
    """Re-run a passed report's stub from the report file and corpus alone."""
    entry = load_entry(Path(corpus_root) / report.entry_id)
    stub: StubProgram = parse_stub_text(report.stub_ir)
    if validate(stub, entry.test, entry.program):
        return False
    run = execute(entry.program, entry.test, render(stub, entry.test))
    return run.passed
