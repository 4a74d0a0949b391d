"""Evolutionary program search: prompt, sample, evaluate, register, repeat."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .database import ProgramDatabase, ProgramRecord
from .dispatch import dispatch
from .evaluator import DEFAULT_PENALTIES, Penalties, evaluate
from .instance import CommitmentMatrix, UcInstance
from .kernels import kernels
from .kernels.opcodes import FEATURES
from .lang import (
    DEFAULT_BUDGET,
    HeuristicProgram,
    ProgramEvaluationError,
    ProgramParseError,
    decode,
    parse,
)
from .report import SearchReport
from .samplers import Prompt, Sample, Sampler, SamplerError

SEED_PROGRAM = "-cost_rate"

GRAMMAR = """\
expr  := cmp
cmp   := sum (("<" | "<=" | ">" | ">=" | "==") sum)?
sum   := prod (("+" | "-") prod)*
prod  := unary (("*" | "/") unary)*
unary := "-" unary | atom
atom  := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
functions: min(a, b), max(a, b), abs(a), if(cond, a, b); comparisons give 1 or 0"""

FEATURE_HELP = {
    "cost_rate": "generation cost of the unit, $/MWh",
    "p_min": "minimum output when on, MW",
    "p_max": "maximum output when on, MW",
    "min_up": "minimum consecutive on periods",
    "min_down": "minimum consecutive off periods",
    "demand": "demand of the current period, MW",
    "residual_demand": "demand minus capacity already locked on this period, MW",
    "hours_in_state": "periods the unit has spent in its current state",
    "is_on": "1 if the unit was on in the previous period, else 0",
    "t": "current period index (0-based)",
    "T": "number of periods",
    "N": "number of units",
}


class SearchAborted(RuntimeError):
    """The sampler backend failed and the search cannot continue."""


@dataclass(frozen=True)
class SearchConfig:
    max_samples: int
    islands: int = 4
    island_capacity: int = 64
    prompt_k: int = 2
    time_limit: float = 5.0
    reset_interval: int | None = None
    seed: int = 0
    workers: int = 1
    budget: int = DEFAULT_BUDGET
    penalties: Penalties = field(default=DEFAULT_PENALTIES)

    def __post_init__(self) -> None:
        if self.max_samples < 0:
            raise ValueError("max_samples must be >= 0")
        for name in ("islands", "island_capacity", "prompt_k", "workers", "budget"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.prompt_k > self.island_capacity:
            raise ValueError("prompt_k must not exceed island_capacity")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if self.reset_interval is not None and self.reset_interval < 1:
            raise ValueError("reset_interval must be positive when set")

    def echo(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Evaluated:
    program: HeuristicProgram
    score: float
    evaluation_time: float
    commitment: np.ndarray


@dataclass(frozen=True)
class Discarded:
    reason: str
    detail: str
    evaluation_time: float


def instance_summary(instance: UcInstance) -> str:
    d = instance.demand
    return f"N={instance.n_units} units, T={instance.n_periods} periods, demand {min(d):g}-{max(d):g} MW"


def build_prompt(db: ProgramDatabase, island: int, k: int, instance: UcInstance | None = None) -> Prompt:
    if not 0 <= island < db.n_islands:
        raise IndexError(f"island {island} does not exist")
    shown = db.top(island, k)[::-1]  # worst to best
    lines = ["Improve a priority rule for the unit commitment problem."]
    if instance is not None:
        lines.append(f"Instance: {instance_summary(instance)}.")
    lines += [
        "Each period, units not held by their minimum up/down time are ranked by the rule (highest first)",
        "and switched on until their capacity covers demand. The schedule is scored by total cost",
        "(generation cost plus shortfall and minimum-time penalties); lower is better.",
        "",
        "Language:",
        GRAMMAR,
        "",
        "Features:",
        *(f"  {name}: {FEATURE_HELP[name]}" for name in FEATURES),
        "",
    ]
    if shown:
        lines.append("Previous programs, worst to best:")
        for v, rec in enumerate(shown):
            lines.append(f"[v{v}] total cost {rec.score:.3f}")
            lines.append(f"  {rec.program.normalized}")
        programs = tuple(rec.program.normalized for rec in shown)
    else:
        lines.append("Starting program:")
        lines.append(f"[v0] {SEED_PROGRAM}")
        programs = (SEED_PROGRAM,)
    lines += ["", "Write one improved program between <program> and </program>."]
    return Prompt("\n".join(lines), programs, island)


def _score(instance: UcInstance, u: np.ndarray, penalties: Penalties) -> float:
    return float(kernels.cost_batch(instance.arrays, u[None], penalties.demand, penalties.min_time)[0].sum())


def evaluate_candidate(
    instance: UcInstance,
    source: str,
    time_limit: float = 5.0,
    budget: int = DEFAULT_BUDGET,
    penalties: Penalties = DEFAULT_PENALTIES,
) -> Evaluated | Discarded:
    """Parse, decode, dispatch and score one candidate. Failures come back as :class:`Discarded`."""
    start = time.perf_counter()
    try:
        program = parse(source)
        u = decode(instance, program, budget).values
        score = _score(instance, u, penalties)
    except (ProgramParseError, ProgramEvaluationError) as exc:
        return Discarded(exc.reason, str(exc), time.perf_counter() - start)
    elapsed = time.perf_counter() - start
    if elapsed > time_limit:
        return Discarded("timeout", f"evaluation took {elapsed:.3f}s (limit {time_limit}s)", elapsed)
    if not np.isfinite(score):
        return Discarded("numeric-domain", "non-finite score", elapsed)
    return Evaluated(program, score, elapsed, u)


def _sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def run_search(instance: UcInstance, sampler: Sampler, config: SearchConfig) -> SearchReport:
    db = ProgramDatabase(config.islands, config.island_capacity)
    reset_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 2**31 - 1]))
    report = SearchReport(
        method="funsearch",
        config={**config.echo(), "sampler": getattr(sampler, "name", type(sampler).__name__)},
        seed=config.seed,
        instance=instance.summary(),
    )
    best_u: np.ndarray | None = None
    best_so_far: float | None = None

    def work(index: int, prompt: Prompt) -> tuple[Sample, Evaluated | Discarded]:
        try:
            sample = sampler.sample(prompt, _sample_rng(config.seed, index))
        except SamplerError as exc:
            raise SearchAborted(f"sampler failed at sample {index}: {exc}") from exc
        outcome = evaluate_candidate(instance, sample.source, config.time_limit, config.budget, config.penalties)
        return sample, outcome

    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        index = 0
        while index < config.max_samples:
            batch = range(index, min(index + config.workers, config.max_samples))
            if config.reset_interval and any(i > 0 and i % config.reset_interval == 0 for i in batch):
                db.reset_worst(reset_rng)
            jobs = [(i, build_prompt(db, i % db.n_islands, config.prompt_k, instance)) for i in batch]
            if pool is None:
                results = [work(i, p) for i, p in jobs]
            else:
                results = list(pool.map(lambda job: work(*job), jobs))
            for (i, prompt), (sample, outcome) in zip(jobs, results):
                report.n_evaluations += 1
                report.total_sampling_time += sample.sampling_time
                report.total_evaluation_time += outcome.evaluation_time
                if isinstance(outcome, Discarded):
                    report.discards[outcome.reason] = report.discards.get(outcome.reason, 0) + 1
                else:
                    report.n_valid += 1
                    record = ProgramRecord(outcome.program, outcome.score, outcome.evaluation_time,
                                           sample.sampling_time, i, prompt.island)
                    db.register(record)
                    if best_so_far is None or outcome.score < best_so_far:
                        best_so_far = outcome.score
                        best_u = outcome.commitment
                report.trajectory.append(best_so_far)
            index = batch.stop
    finally:
        if pool is not None:
            pool.shutdown()

    best = db.best_overall()
    if best is not None:
        u = best_u if best_u is not None and best.score == best_so_far else decode(instance, best.program).values
        report.best = best
        report.commitment = CommitmentMatrix(u)
        report.dispatch = dispatch(instance, u)
        report.evaluation = evaluate(instance, u, report.dispatch, config.penalties)
    return report
