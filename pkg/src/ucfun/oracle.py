"""Exhaustive search over every commitment grid of a tiny instance."""

from __future__ import annotations

import numpy as np

from .evaluator import DEFAULT_PENALTIES, Penalties, ScheduleEvaluation, evaluate_commitment
from .instance import CommitmentMatrix, UcInstance
from .kernels import get_backend, kernels

DEFAULT_LIMIT = 2**24
TIE_EPS = 1e-9


class InstanceTooLarge(ValueError):
    pass


def grid_from_mask(mask: int, n: int, horizon: int) -> np.ndarray:
    """Bit ``n*horizon - 1 - k`` of ``mask`` is flattened entry ``k`` (unit-major)."""
    bits = n * horizon
    flat = [(mask >> (bits - 1 - k)) & 1 for k in range(bits)]
    return np.array(flat, dtype=np.int8).reshape(n, horizon)


def solve_exhaustive(
    instance: UcInstance,
    limit: int = DEFAULT_LIMIT,
    penalties: Penalties = DEFAULT_PENALTIES,
    backend: str | None = None,
) -> tuple[CommitmentMatrix, ScheduleEvaluation]:
    """Global minimum total cost over all 2**(N*T) grids.

    Dispatch is exact for linear costs, so enumerating commitments alone is
    enough. Among near-equal costs (relative 1e-9) the lexicographically
    smallest flattened grid wins.
    """
    n, horizon = instance.n_units, instance.n_periods
    if n * horizon >= 63 or 2 ** (n * horizon) > limit:
        raise InstanceTooLarge(f"2^{n * horizon} commitment grids exceed the enumeration limit {limit}")
    k = get_backend(backend) if backend else kernels
    mask, _ = k.enumerate_best(instance.arrays, penalties.demand, penalties.min_time, TIE_EPS)
    u = grid_from_mask(mask, n, horizon)
    _, evaluation = evaluate_commitment(instance, u, penalties)
    return CommitmentMatrix(u), evaluation
