"""Unit commitment problem data: units, demand profile, instance files."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

SCHEMA_VERSION = 1

_UNIT_KEYS = (
    "id",
    "p_min",
    "p_max",
    "cost_rate",
    "min_up",
    "min_down",
    "initial_state",
    "initial_duration",
)
_TOP_KEYS = ("version", "period_hours", "periods", "demand", "units")


class InstanceError(ValueError):
    """Raised when instance data violates an invariant."""


class InstanceParseError(InstanceError):
    """Raised when an instance file is not well-formed."""


class CommitmentShapeError(ValueError):
    """Raised when a commitment matrix does not fit its instance."""


@dataclass(frozen=True)
class UnitSpec:
    id: int
    p_min: float
    p_max: float
    cost_rate: float
    min_up: int
    min_down: int
    initial_state: bool = False
    initial_duration: int | None = None

    def __post_init__(self) -> None:
        # default boundary condition: off long enough to be free at t=0
        if self.initial_duration is None:
            object.__setattr__(self, "initial_duration", self.min_down)
        where = f"unit {self.id}"
        if not _is_int(self.id) or self.id < 0:
            raise InstanceError(f"{where}: id must be a non-negative integer")
        for name in ("p_min", "p_max", "cost_rate"):
            value = getattr(self, name)
            if not _is_real(value) or not math.isfinite(value):
                raise InstanceError(f"{where}: {name} must be a finite real, got {value!r}")
        if self.p_min < 0:
            raise InstanceError(f"{where}: p_min must be >= 0, got {self.p_min}")
        if self.p_min > self.p_max:
            raise InstanceError(f"{where}: p_min ({self.p_min}) exceeds p_max ({self.p_max})")
        if self.cost_rate < 0:
            raise InstanceError(f"{where}: cost_rate must be >= 0, got {self.cost_rate}")
        for name in ("min_up", "min_down", "initial_duration"):
            value = getattr(self, name)
            if not _is_int(value) or value < 1:
                raise InstanceError(f"{where}: {name} must be an integer >= 1, got {value!r}")
        if not isinstance(self.initial_state, (bool, np.bool_)):
            raise InstanceError(f"{where}: initial_state must be a boolean")


class InstanceArrays(NamedTuple):
    """Column-wise float64/int64 view of an instance, as fed to the kernels."""

    p_min: np.ndarray
    p_max: np.ndarray
    cost_rate: np.ndarray
    min_up: np.ndarray
    min_down: np.ndarray
    init_on: np.ndarray
    init_dur: np.ndarray
    demand: np.ndarray
    merit: np.ndarray
    period_hours: float


@dataclass(frozen=True)
class UcInstance:
    units: tuple[UnitSpec, ...]
    demand: tuple[float, ...]
    period_hours: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "demand", tuple(float(d) for d in self.demand))
        if not self.units:
            raise InstanceError("instance needs at least one unit")
        if not self.demand:
            raise InstanceError("instance needs at least one period")
        for pos, unit in enumerate(self.units):
            if not isinstance(unit, UnitSpec):
                raise InstanceError(f"units[{pos}] is not a UnitSpec")
            if unit.id != pos:
                raise InstanceError(f"units[{pos}] has id {unit.id}; ids must be exactly 0..N-1")
        for t, d in enumerate(self.demand):
            if not math.isfinite(d) or d < 0:
                raise InstanceError(f"demand[{t}] must be finite and >= 0, got {d}")
        if not _is_real(self.period_hours) or not (self.period_hours > 0) or not math.isfinite(self.period_hours):
            raise InstanceError(f"period_hours must be a positive real, got {self.period_hours!r}")

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_periods(self) -> int:
        return len(self.demand)

    @cached_property
    def arrays(self) -> InstanceArrays:
        col = lambda name, dtype: np.array([getattr(u, name) for u in self.units], dtype=dtype)  # noqa: E731
        cost_rate = col("cost_rate", np.float64)
        arrays = InstanceArrays(
            p_min=col("p_min", np.float64),
            p_max=col("p_max", np.float64),
            cost_rate=cost_rate,
            min_up=col("min_up", np.int64),
            min_down=col("min_down", np.int64),
            init_on=col("initial_state", np.int64),
            init_dur=col("initial_duration", np.int64),
            demand=np.array(self.demand, dtype=np.float64),
            merit=np.argsort(cost_rate, kind="stable").astype(np.int64),
            period_hours=float(self.period_hours),
        )
        for a in arrays[:-1]:
            a.setflags(write=False)
        return arrays

    def summary(self) -> dict[str, Any]:
        return {"N": self.n_units, "T": self.n_periods, "demand": list(self.demand)}

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": SCHEMA_VERSION,
            "period_hours": self.period_hours,
            "periods": self.n_periods,
            "demand": list(self.demand),
            "units": [
                {
                    "id": u.id,
                    "p_min": u.p_min,
                    "p_max": u.p_max,
                    "cost_rate": u.cost_rate,
                    "min_up": u.min_up,
                    "min_down": u.min_down,
                    "initial_state": bool(u.initial_state),
                    "initial_duration": u.initial_duration,
                }
                for u in self.units
            ],
        }

    @classmethod
    def from_dict(cls, doc: Any) -> UcInstance:
        if not isinstance(doc, dict):
            raise InstanceParseError("instance document must be a JSON object")
        _check_keys(doc, _TOP_KEYS, "instance", required=("version", "demand", "units"))
        if doc["version"] != SCHEMA_VERSION:
            raise InstanceError(f"unsupported instance version {doc['version']!r} (expected {SCHEMA_VERSION})")
        demand = doc["demand"]
        units = doc["units"]
        if not isinstance(demand, list) or not all(_is_real(d) for d in demand):
            raise InstanceParseError("demand must be a list of numbers")
        if not isinstance(units, list):
            raise InstanceParseError("units must be a list")
        if "periods" in doc and doc["periods"] != len(demand):
            raise InstanceError(f"demand has {len(demand)} entries but periods={doc['periods']!r} is declared")
        specs = []
        for pos, raw in enumerate(units):
            if not isinstance(raw, dict):
                raise InstanceParseError(f"units[{pos}] must be an object")
            _check_keys(raw, _UNIT_KEYS, f"units[{pos}]", required=_UNIT_KEYS[:6])
            try:
                specs.append(UnitSpec(**raw))
            except InstanceError as exc:
                raise InstanceError(f"units[{pos}]: {exc}") from None
        return cls(units=tuple(specs), demand=tuple(demand), period_hours=doc.get("period_hours", 1.0))


def _is_int(value: Any) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, (bool, np.bool_))


def _is_real(value: Any) -> bool:
    return isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, (bool, np.bool_))


def _check_keys(doc: dict, allowed: tuple[str, ...], where: str, required: tuple[str, ...]) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise InstanceParseError(f"{where}: unknown key(s) {unknown}")
    missing = [k for k in required if k not in doc]
    if missing:
        raise InstanceParseError(f"{where}: missing key(s) {missing}")


def random_instance(
    rng: np.random.Generator,
    n_units: int,
    n_periods: int,
    max_min_time: int = 3,
    load_range: tuple[float, float] = (0.2, 0.85),
) -> UcInstance:
    """Seeded random instance whose demand the full fleet can always cover.

    Every unit starts free (its initial run already meets its minimum time),
    so each period's demand is reachable from t=0.
    """
    units = []
    for i in range(n_units):
        p_max = round(float(rng.uniform(20.0, 200.0)), 1)
        p_min = round(p_max * float(rng.uniform(0.1, 0.5)), 1)
        min_up = int(rng.integers(1, max_min_time + 1))
        min_down = int(rng.integers(1, max_min_time + 1))
        on = bool(rng.integers(2))
        req = min_up if on else min_down
        units.append(
            UnitSpec(
                id=i,
                p_min=p_min,
                p_max=p_max,
                cost_rate=round(float(rng.uniform(10.0, 40.0)), 2),
                min_up=min_up,
                min_down=min_down,
                initial_state=on,
                initial_duration=req + int(rng.integers(0, 3)),
            )
        )
    fleet = sum(u.p_max for u in units)
    lo, hi = load_range
    demand = tuple(round(fleet * float(rng.uniform(lo, hi)), 1) for _ in range(n_periods))
    return UcInstance(units=tuple(units), demand=demand)


def bundled_instance_path(name: str = "ten_unit.json") -> Path:
    return Path(str(resources.files("ucfun.data").joinpath(name)))


def resolve_instance_path(path: str | Path) -> Path:
    """Return ``path`` if it exists, else a bundled instance of that file name."""
    p = Path(path)
    if p.exists():
        return p
    bundled = bundled_instance_path(p.name)
    if p.parent == Path(".") and bundled.exists():
        return bundled
    return p


def load_instance(path: str | Path) -> UcInstance:
    p = resolve_instance_path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InstanceParseError(f"cannot read instance file {p}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"{p}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return UcInstance.from_dict(doc)


def store_instance(instance: UcInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=2) + "\n")


def validate_commitment_shape(instance: UcInstance, commitment: Any) -> np.ndarray:
    """Check that ``commitment`` is an N x T binary grid; return it as int8.

    Raises :class:`CommitmentShapeError` naming the offending shape or the
    first non-binary entry as ``(unit, period)``.
    """
    u = np.asarray(commitment)
    expected = (instance.n_units, instance.n_periods)
    if u.shape != expected:
        raise CommitmentShapeError(f"commitment shape {u.shape} does not match instance {expected}")
    bad = np.argwhere((u != 0) & (u != 1))
    if bad.size:
        i, t = (int(x) for x in bad[0])
        raise CommitmentShapeError(f"non-binary commitment entry {u[i, t]!r} at ({i},{t})")
    return u.astype(np.int8)


@dataclass(frozen=True)
class CommitmentMatrix:
    """Binary on/off grid ``values[i, t]`` for unit ``i`` in period ``t``."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise CommitmentShapeError(f"commitment must be 2-D, got shape {v.shape}")
        bad = np.argwhere((v != 0) & (v != 1))
        if bad.size:
            i, t = (int(x) for x in bad[0])
            raise CommitmentShapeError(f"non-binary commitment entry {v[i, t]!r} at ({i},{t})")
        v = v.astype(np.int8)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CommitmentMatrix) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.values.shape, self.values.tobytes()))

    def tolist(self) -> list[list[int]]:
        return self.values.tolist()
