"""Island-structured store of scored programs."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .lang import HeuristicProgram


@dataclass(frozen=True)
class ProgramRecord:
    program: HeuristicProgram
    score: float
    evaluation_time: float
    sampling_time: float
    generation: int
    island: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"record score must be finite, got {self.score}")

    @property
    def sort_key(self) -> tuple[float, int, str]:
        return (self.score, self.generation, self.program.normalized)

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "source": self.program.normalized,
            "score": self.score,
            "generation": self.generation,
            "island": self.island,
        }
        if timing:
            out["evaluation_time"] = round(self.evaluation_time, 3)
            out["sampling_time"] = round(self.sampling_time, 3)
        return out


class ProgramDatabase:
    """Fixed number of islands, each capped at ``capacity`` and deduplicated by normalised source.

    A full island only accepts a record that beats its current worst, which
    is then evicted. Mutations are serialised by a lock.
    """

    def __init__(self, islands: int = 4, capacity: int = 64):
        if islands < 1 or capacity < 1:
            raise ValueError("islands and capacity must be positive")
        self.capacity = capacity
        self._islands: list[dict[str, ProgramRecord]] = [{} for _ in range(islands)]
        self._lock = threading.Lock()

    @property
    def n_islands(self) -> int:
        return len(self._islands)

    def __len__(self) -> int:
        return sum(len(isl) for isl in self._islands)

    def records(self, island: int) -> list[ProgramRecord]:
        """Records of ``island``, best first."""
        return sorted(self._islands[island].values(), key=lambda r: r.sort_key)

    def register(self, record: ProgramRecord) -> bool:
        with self._lock:
            isl = self._islands[record.island]
            key = record.program.normalized
            if key in isl:
                return False
            if len(isl) >= self.capacity:
                worst = max(isl.values(), key=lambda r: r.sort_key)
                if record.sort_key >= worst.sort_key:
                    return False
                del isl[worst.program.normalized]
            isl[key] = record
            return True

    def top(self, island: int, k: int) -> list[ProgramRecord]:
        return self.records(island)[:k]

    def island_best(self, island: int) -> ProgramRecord | None:
        recs = self._islands[island].values()
        return min(recs, key=lambda r: r.sort_key) if recs else None

    def best_overall(self) -> ProgramRecord | None:
        bests = [b for b in (self.island_best(i) for i in range(self.n_islands)) if b is not None]
        return min(bests, key=lambda r: r.sort_key) if bests else None

    def reset_worst(self, rng: np.random.Generator) -> int | None:
        """Empty the worst island and reseed it with the best record of a random other island."""
        with self._lock:
            bests = [(i, min(isl.values(), key=lambda r: r.sort_key)) for i, isl in enumerate(self._islands) if isl]
            if len(bests) < 2:
                return None
            worst, _ = max(bests, key=lambda ib: ib[1].sort_key)
            donors = [b for i, b in bests if i != worst]
            donor = donors[int(rng.integers(len(donors)))]
            seeded = ProgramRecord(donor.program, donor.score, donor.evaluation_time, donor.sampling_time,
                                   donor.generation, worst)
            self._islands[worst] = {donor.program.normalized: seeded}
            return worst
