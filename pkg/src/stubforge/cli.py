"""Command-line front end: generate, repair, fidelity, and bench.

Exit codes for generate/repair: 0 when a passing stub was found, 2 when the
generation budget ran out, 1 on errors. fidelity and bench exit 0/1.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from pathlib import Path

from .corpus import CorpusEntry, CorpusError, load_corpus, load_entry
from .evolve import STRATEGIES, EngineConfig, run
from .fidelity import FidelityReport, fidelity_report
from .minilang.interp import execute
from .reports import RunReport, build_report
from .stubir import StubProgram, parse_stub_text, render, validate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXHAUSTED = 2


class MissingBrokenStub(CorpusError):
    pass


class NoGroundTruth(CorpusError):
    pass


def default_seeds(count: int = 10) -> list[int]:
    """The first *count* primes >= 1000."""
    seeds: list[int] = []
    n = 1000
    while len(seeds) < count:
        if all(n % p for p in range(2, int(n**0.5) + 1)):
            seeds.append(n)
        n += 1
    return seeds


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------


def cmd_generate(entry: CorpusEntry, config: EngineConfig) -> RunReport:
    result = run(entry.test, entry.program, config)
    return build_report(entry, config, result)


def cmd_repair(entry: CorpusEntry, config: EngineConfig) -> RunReport:
    if entry.broken is None:
        raise MissingBrokenStub(f"entry {entry.entry_id!r} has no broken stub")
    result = run(entry.test, entry.program, config, broken=entry.broken)
    return build_report(entry, config, result)


def cmd_fidelity(entry: CorpusEntry, synthesized: StubProgram) -> FidelityReport:
    if entry.truth is None:
        raise NoGroundTruth(f"entry {entry.entry_id!r} has no ground-truth stub")
    violations = validate(synthesized, entry.test, entry.program)
    if violations:
        raise CorpusError(f"synthesized stub does not validate: {violations[0].message}")
    check = execute(entry.program, entry.test, render(synthesized, entry.test))
    if not check.passed:
        raise CorpusError("synthesized stub does not pass the test")
    return fidelity_report(entry.program, entry.test, synthesized, entry.truth, entry.cut_class)


def cmd_bench(
    entries: list[CorpusEntry],
    strategies: list[str],
    seeds: list[int],
    population_size: int,
    max_generations: int,
    modes: list[str] = ("generate",),
    workers: int = 1,
) -> list[RunReport]:
    reports: list[RunReport] = []
    for entry in entries:
        for mode in modes:
            if mode == "repair" and entry.broken is None:
                continue
            for strategy in strategies:
                for seed in seeds:
                    config = EngineConfig(
                        population_size=population_size,
                        max_generations=max_generations,
                        strategy=strategy,
                        mode=mode,
                        seed=seed,
                        workers=workers,
                    )
                    broken = entry.broken if mode == "repair" else None
                    result = run(entry.test, entry.program, config, broken=broken)
                    reports.append(build_report(entry, config, result))
    return reports


def summarize(reports: list[RunReport]) -> dict:
    """Purely a function of the report set: per-cell stats and the
    success-rate-versus-generation-budget series."""
    cells: dict[tuple[str, str, str], list[RunReport]] = {}
    for r in sorted(reports, key=lambda r: (r.entry_id, r.mode, r.strategy, r.seed)):
        cells.setdefault((r.entry_id, r.mode, r.strategy), []).append(r)
    table = []
    for (entry_id, mode, strategy), rs in sorted(cells.items()):
        passed = [r for r in rs if r.passed]
        table.append(
            {
                "entry": entry_id,
                "mode": mode,
                "strategy": strategy,
                "runs": len(rs),
                "successes": len(passed),
                "median_generations": statistics.median(r.generations for r in passed) if passed else None,
                "median_wall_seconds": round(statistics.median(r.wall_seconds for r in passed), 3)
                if passed
                else None,
                "median_stub_size": statistics.median(r.stub_size for r in passed) if passed else None,
            }
        )
    max_gen = max((r.max_generations for r in reports), default=0)
    by_strategy: dict[str, list[RunReport]] = {}
    for r in reports:
        by_strategy.setdefault(r.strategy, []).append(r)
    series = {}
    for strategy, rs in sorted(by_strategy.items()):
        budgets = []
        for g in range(1, max_gen + 1):
            rate = sum(1 for r in rs if r.passed and r.generations <= g) / len(rs)
            budgets.append(round(rate, 4))
        series[strategy] = budgets
    return {"cells": table, "success_rate_by_budget": series}


# ----------------------------------------------------------------------
# Argument parsing and entry point
# ----------------------------------------------------------------------


def _engine_config(args, mode: str) -> EngineConfig:
    return EngineConfig(
        population_size=args.pop,
        max_generations=args.max_gen,
        strategy=args.strategy,
        mode=mode,
        seed=args.seed,
        step_budget=args.step_budget,
        workers=args.workers,
    )


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="corpus directory")
    p.add_argument("--entry", required=True, help="corpus entry id")
    p.add_argument("--strategy", choices=STRATEGIES, default="dominance")
    p.add_argument("--seed", type=int, default=default_seeds(1)[0])
    p.add_argument("--pop", type=int, default=200, help="population size")
    p.add_argument("--max-gen", type=int, default=400, help="generation budget")
    p.add_argument("--step-budget", type=int, default=1_000_000)
    p.add_argument("--workers", type=int, default=1, help="parallel fitness evaluations")
    p.add_argument("--out", type=Path, default=None, help="write the report JSON here")


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stubforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("generate", "repair"):
        p = sub.add_parser(name, help=f"{name} stub code for one corpus entry")
        _add_run_args(p)

    p = sub.add_parser("fidelity", help="compare a synthesized stub against the ground truth")
    p.add_argument("--corpus", required=True)
    p.add_argument("--entry", required=True)
    p.add_argument("--stub", type=Path, default=None, help="stub program in textual form")
    p.add_argument("--report", type=Path, default=None, help="take the stub from a run report")
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("bench", help="run the corpus across strategies and seeds")
    p.add_argument("--corpus", required=True)
    p.add_argument("--entry", default=None, help="restrict to one entry id")
    p.add_argument("--strategies", default="dominance,weighted,unguided")
    p.add_argument("--modes", default="generate", help="comma list of generate,repair")
    p.add_argument("--seeds", default=None, help="comma list; default: first N primes >= 1000")
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--pop", type=int, default=200)
    p.add_argument("--max-gen", type=int, default=400)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=None, help="write run reports as JSON lines here")
    return parser


def _find_entry(corpus_dir: str, entry_id: str) -> CorpusEntry:
    path = Path(corpus_dir) / entry_id
    if path.is_dir():
        return load_entry(path)
    for entry in load_corpus(corpus_dir):
        if entry.entry_id == entry_id:
            return entry
    raise CorpusError(f"no corpus entry {entry_id!r} under {corpus_dir}")


def _print_run_report(report: RunReport) -> None:
    print(f"entry {report.entry_id} [{report.mode}/{report.strategy}] seed={report.seed}: {report.status}")
    print(
        f"  generations={report.generations} evaluations={report.evaluations} "
        f"wall={report.wall_seconds:.2f}s |S|={report.stub_size}"
    )
    if report.passed:
        print("  stub:")
        for line in report.stub_ir.splitlines():
            print(f"    {line}")


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        if args.command in ("generate", "repair"):
            entry = _find_entry(args.corpus, args.entry)
            config = _engine_config(args, args.command)
            report = cmd_generate(entry, config) if args.command == "generate" else cmd_repair(entry, config)
            if args.out is not None:
                args.out.write_text(report.to_json() + "\n")
            _print_run_report(report)
            return EXIT_OK if report.passed else EXIT_EXHAUSTED

        if args.command == "fidelity":
            entry = _find_entry(args.corpus, args.entry)
            if (args.stub is None) == (args.report is None):
                raise CorpusError("provide exactly one of --stub or --report")
            if args.stub is not None:
                stub = parse_stub_text(args.stub.read_text())
            else:
                stub = parse_stub_text(RunReport.from_json(args.report.read_text()).stub_ir)
            fid = cmd_fidelity(entry, stub)
            payload = json.dumps(fid.to_dict(), indent=2, sort_keys=True)
            if args.out is not None:
                args.out.write_text(payload + "\n")
            print(payload)
            return EXIT_OK

        # bench
        entries = load_corpus(args.corpus)
        if args.entry is not None:
            entries = [e for e in entries if e.entry_id == args.entry]
            if not entries:
                raise CorpusError(f"no corpus entry {args.entry!r}")
        strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
        modes = [m.strip() for m in args.modes.split(",") if m.strip()]
        seeds = (
            [int(s) for s in args.seeds.split(",")] if args.seeds else default_seeds(args.repetitions)
        )
        reports = cmd_bench(entries, strategies, seeds, args.pop, args.max_gen, modes, args.workers)
        if args.out is not None:
            with args.out.open("w") as fh:
                for r in reports:
                    fh.write(r.to_json() + "\n")
        summary = summarize(reports)
        for row in summary["cells"]:
            print(
                f"{row['entry']:6s} {row['mode']:8s} {row['strategy']:9s} "
                f"SR {row['successes']}/{row['runs']}  gen {row['median_generations']}  "
                f"time {row['median_wall_seconds']}  |S| {row['median_stub_size']}"
            )
        return EXIT_OK
    except (CorpusError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
