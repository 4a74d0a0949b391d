"""Merit-order economic dispatch for a fixed commitment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import CommitmentMatrix, UcInstance, validate_commitment_shape
from .kernels import kernels


@dataclass(frozen=True)
class DispatchMatrix:
    """Output powers ``powers[i, t]`` in MW."""

    powers: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        p = np.array(self.powers, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "powers", p)

    @property
    def shape(self) -> tuple[int, int]:
        return self.powers.shape  # type: ignore[return-value]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DispatchMatrix) and np.array_equal(self.powers, other.powers)

    def __hash__(self) -> int:
        return hash(self.powers.tobytes())

    def tolist(self) -> list[list[float]]:
        return self.powers.tolist()


def as_grid(instance: UcInstance, commitment: CommitmentMatrix | np.ndarray) -> np.ndarray:
    values = commitment.values if isinstance(commitment, CommitmentMatrix) else commitment
    return np.ascontiguousarray(validate_commitment_shape(instance, values))


def dispatch(instance: UcInstance, commitment: CommitmentMatrix | np.ndarray) -> DispatchMatrix:
    """Give every committed unit p_min, then fill the residual demand in merit order.

    Merit order is ascending ``cost_rate`` with ties by unit id, which is the
    exact optimum for linear costs. Per period the total is ``D_t`` when the
    committed range allows it, otherwise the nearest bound (over-generation at
    ``sum p_min``, shortfall at ``sum p_max``).
    """
    u = as_grid(instance, commitment)
    return DispatchMatrix(kernels.dispatch(instance.arrays, u))


def total_generation(dispatch: DispatchMatrix | np.ndarray) -> np.ndarray:
    powers = dispatch.powers if isinstance(dispatch, DispatchMatrix) else np.asarray(dispatch, dtype=np.float64)
    return powers.sum(axis=0)
