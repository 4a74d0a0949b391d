"""Penalty-based total cost of a schedule and its feasibility report.

The total is ``operating + demand_penalty + min_time_penalty``:

* operating cost: ``sum cost_rate_i * u_i^t * P_i^t * period_hours``
* demand penalty: ``1e4 * sum_t max(0, D_t - sum_i u_i^t P_i^t)``
* min-time penalty: ``1e5 * (minimum - length)`` for every run of a unit that
  is shorter than its minimum up (on runs) or down (off runs) time.

The last run of every unit is exempt because it continues past the horizon.
The first run is merged with the pre-horizon run recorded in the unit's
initial conditions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dispatch import DispatchMatrix, as_grid, dispatch
from .instance import CommitmentMatrix, UcInstance
from .kernels import SHORTFALL_TOL, kernels

DEMAND_PENALTY = 1e4
MIN_TIME_PENALTY = 1e5


@dataclass(frozen=True)
class Penalties:
    demand: float = DEMAND_PENALTY
    min_time: float = MIN_TIME_PENALTY


DEFAULT_PENALTIES = Penalties()


class Violation(NamedTuple):
    kind: str  # demand_shortfall | demand_surplus | min_up | min_down | output_bounds
    where: tuple[int, ...]
    magnitude: float


class RunSegment(NamedTuple):
    unit: int
    state: bool
    start: int
    length: int
    j: int
    effective_length: int


@dataclass(frozen=True)
class ScheduleEvaluation:
    operating_cost: float
    demand_penalty: float
    min_time_penalty: float
    violations: tuple[Violation, ...] = field(default=(), repr=False)

    @property
    def total_cost(self) -> float:
        return self.operating_cost + self.demand_penalty + self.min_time_penalty

    @property
    def feasible(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "total_cost": self.total_cost,
            "operating_cost": self.operating_cost,
            "demand_penalty": self.demand_penalty,
            "min_time_penalty": self.min_time_penalty,
            "feasible": self.feasible,
            "violations": [[v.kind, list(v.where), v.magnitude] for v in self.violations],
        }


def segments(instance: UcInstance, commitment: CommitmentMatrix | np.ndarray) -> list[list[RunSegment]]:
    """Maximal constant-state runs of every unit, in period order."""
    u = as_grid(instance, commitment)
    out = []
    for unit, row in zip(instance.units, u):
        runs: list[RunSegment] = []
        start = 0
        for t in range(1, len(row) + 1):
            if t == len(row) or row[t] != row[start]:
                state = bool(row[start])
                length = t - start
                eff = length
                if start == 0 and state == bool(unit.initial_state):
                    eff += unit.initial_duration
                runs.append(RunSegment(unit.id, state, start, length, len(runs), eff))
                start = t
        out.append(runs)
    return out


def _min_time_violations(instance: UcInstance, runs: list[list[RunSegment]]) -> list[Violation]:
    found = []
    for unit, unit_runs in zip(instance.units, runs):
        first = unit_runs[0]
        if first.state != bool(unit.initial_state):
            # switching at t=0 closes the pre-horizon run
            required = unit.min_up if unit.initial_state else unit.min_down
            if unit.initial_duration < required:
                kind = "min_up" if unit.initial_state else "min_down"
                found.append(Violation(kind, (unit.id, -unit.initial_duration), required - unit.initial_duration))
        for seg in unit_runs[:-1]:
            required = unit.min_up if seg.state else unit.min_down
            if seg.effective_length < required:
                kind = "min_up" if seg.state else "min_down"
                found.append(Violation(kind, (unit.id, seg.start), required - seg.effective_length))
    return found


def evaluate(
    instance: UcInstance,
    commitment: CommitmentMatrix | np.ndarray,
    dispatch: DispatchMatrix | np.ndarray,
    penalties: Penalties = DEFAULT_PENALTIES,
) -> ScheduleEvaluation:
    u = as_grid(instance, commitment)
    powers = dispatch.powers if isinstance(dispatch, DispatchMatrix) else np.asarray(dispatch, dtype=np.float64)
    if powers.shape != u.shape:
        raise ValueError(f"dispatch shape {powers.shape} does not match commitment {u.shape}")
    a = instance.arrays
    live = np.where(u == 1, powers, 0.0)
    operating = float((live * a.cost_rate[:, None]).sum() * a.period_hours)

    violations: list[Violation] = []
    gen = live.sum(axis=0)
    shortfall = 0.0
    for t, (d, g) in enumerate(zip(a.demand, gen)):
        if d - g > SHORTFALL_TOL:
            shortfall += d - g
            violations.append(Violation("demand_shortfall", (t,), float(d - g)))
        elif g - d > SHORTFALL_TOL:
            violations.append(Violation("demand_surplus", (t,), float(g - d)))

    for i, t in zip(*np.nonzero((u == 0) & (np.abs(powers) > SHORTFALL_TOL))):
        violations.append(Violation("output_bounds", (int(i), int(t)), float(abs(powers[i, t]))))
    low = a.p_min[:, None] - powers
    high = powers - a.p_max[:, None]
    breach = np.where(u == 1, np.maximum(low, high), 0.0)
    for i, t in zip(*np.nonzero(breach > SHORTFALL_TOL)):
        violations.append(Violation("output_bounds", (int(i), int(t)), float(breach[i, t])))

    min_time = _min_time_violations(instance, segments(instance, u))
    violations.extend(min_time)
    missing = sum(v.magnitude for v in min_time)
    return ScheduleEvaluation(
        operating_cost=operating,
        demand_penalty=float(penalties.demand * shortfall),
        min_time_penalty=float(penalties.min_time * missing),
        violations=tuple(violations),
    )


def evaluate_commitment(
    instance: UcInstance,
    commitment: CommitmentMatrix | np.ndarray,
    penalties: Penalties = DEFAULT_PENALTIES,
) -> tuple[DispatchMatrix, ScheduleEvaluation]:
    """Dispatch ``commitment`` and evaluate the result."""
    d = dispatch(instance, commitment)
    return d, evaluate(instance, commitment, d, penalties)


def batch_costs(
    instance: UcInstance, grids: np.ndarray, penalties: Penalties = DEFAULT_PENALTIES
) -> np.ndarray:
    """Dispatch and score a (B, N, T) stack of grids; columns are (C_o, P_d, P_min_t)."""
    us = np.ascontiguousarray(grids, dtype=np.int8)
    if us.ndim != 3 or us.shape[1:] != (instance.n_units, instance.n_periods):
        raise ValueError(f"grid stack shape {us.shape} does not match instance")
    return kernels.cost_batch(instance.arrays, us, penalties.demand, penalties.min_time)
