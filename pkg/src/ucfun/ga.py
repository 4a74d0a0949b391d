"""Genetic-algorithm baseline over raw commitment grids."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .dispatch import as_grid, dispatch
from .evaluator import DEFAULT_PENALTIES, Penalties, evaluate
from .instance import CommitmentMatrix, UcInstance
from .kernels import kernels
from .report import SearchReport


@dataclass(frozen=True)
class GaConfig:
    population: int = 100
    generations: int = 200
    tournament: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None means 1 / (N * T)
    elitism: int = 2
    seed: int = 0
    max_evaluations: int | None = None
    penalties: Penalties = field(default=DEFAULT_PENALTIES)

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.tournament < 1:
            raise ValueError("tournament must be >= 1")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be in [0, population)")
        for name in ("crossover_rate", "mutation_rate"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.max_evaluations is not None and self.max_evaluations < self.population:
            raise ValueError("max_evaluations must cover the initial population")

    def echo(self) -> dict:
        return asdict(self)


def repair(instance: UcInstance, commitment: CommitmentMatrix | np.ndarray) -> CommitmentMatrix:
    """Sweep each unit left to right, holding its state until the minimum up/down time is served.

    The pre-horizon run from the unit's initial conditions counts towards the
    first minimum. The result has no minimum-time violations.
    """
    u = np.array(as_grid(instance, commitment), dtype=np.int8)[None]
    kernels.repair_batch(instance.arrays, u)
    return CommitmentMatrix(u[0])


def _tournament(rng: np.random.Generator, costs: np.ndarray, count: int, size: int) -> np.ndarray:
    entrants = rng.integers(costs.size, size=(count, size))
    return entrants[np.arange(count), np.argmin(costs[entrants], axis=1)]


def run_ga(instance: UcInstance, config: GaConfig = GaConfig()) -> SearchReport:
    rng = np.random.default_rng(config.seed)
    a = instance.arrays
    n, horizon = instance.n_units, instance.n_periods
    length = n * horizon
    p_mut = config.mutation_rate if config.mutation_rate is not None else 1.0 / length
    pen = config.penalties

    def cost(us: np.ndarray) -> np.ndarray:
        return kernels.cost_batch(a, us, pen.demand, pen.min_time).sum(axis=1)

    report = SearchReport(method="ga", config=config.echo(), seed=config.seed, instance=instance.summary())

    t0 = time.perf_counter()
    p_on = np.clip(a.demand / a.p_max.sum(), 0.0, 1.0) if a.p_max.sum() > 0 else np.zeros(horizon)
    pop = (rng.random((config.population, n, horizon)) < p_on[None, None, :]).astype(np.int8)
    kernels.repair_batch(a, pop)
    t1 = time.perf_counter()
    costs = cost(pop)
    t2 = time.perf_counter()
    report.total_sampling_time += t1 - t0
    report.total_evaluation_time += t2 - t1
    report.n_evaluations = config.population

    k = int(np.argmin(costs))
    best_u, best_cost = pop[k].copy(), float(costs[k])
    report.trajectory.append(best_cost)

    n_off = config.population - config.elitism
    for _ in range(config.generations):
        if config.max_evaluations is not None and report.n_evaluations + n_off > config.max_evaluations:
            break
        t0 = time.perf_counter()
        order = np.argsort(costs, kind="stable")
        elites = pop[order[: config.elitism]]
        mothers = pop[_tournament(rng, costs, n_off, config.tournament)].reshape(n_off, length)
        fathers = pop[_tournament(rng, costs, n_off, config.tournament)].reshape(n_off, length)
        cross = rng.random(n_off) < config.crossover_rate
        cut = rng.integers(1, length, n_off) if length > 1 else np.ones(n_off, dtype=np.int64)
        take_father = cross[:, None] & (np.arange(length)[None, :] >= cut[:, None])
        children = np.where(take_father, fathers, mothers)
        children ^= (rng.random((n_off, length)) < p_mut).astype(np.int8)
        children = np.ascontiguousarray(children.reshape(n_off, n, horizon))
        kernels.repair_batch(a, children)
        t1 = time.perf_counter()
        child_costs = cost(children)
        t2 = time.perf_counter()
        report.total_sampling_time += t1 - t0
        report.total_evaluation_time += t2 - t1
        report.n_evaluations += n_off

        pop = np.concatenate([elites, children])
        costs = np.concatenate([costs[order[: config.elitism]], child_costs])
        k = int(np.argmin(child_costs)) if n_off else 0
        if n_off and child_costs[k] < best_cost:
            best_u, best_cost = children[k].copy(), float(child_costs[k])
        report.trajectory.append(best_cost)

    report.n_valid = report.n_evaluations
    report.commitment = CommitmentMatrix(best_u)
    report.dispatch = dispatch(instance, best_u)
    report.evaluation = evaluate(instance, best_u, report.dispatch, pen)
    return report
