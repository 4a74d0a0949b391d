"""Search/GA result document shared by every solver."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .database import ProgramRecord
from .dispatch import DispatchMatrix
from .evaluator import ScheduleEvaluation
from .instance import CommitmentMatrix

REPORT_VERSION = 1


class ReportError(ValueError):
    pass


@dataclass
class SearchReport:
    method: str
    config: dict[str, Any]
    seed: int | None
    instance: dict[str, Any]
    best: ProgramRecord | None = None
    evaluation: ScheduleEvaluation | None = None
    commitment: CommitmentMatrix | None = None
    dispatch: DispatchMatrix | None = None
    trajectory: list[float | None] = field(default_factory=list)
    n_evaluations: int = 0
    n_valid: int = 0
    discards: dict[str, int] = field(default_factory=dict)
    total_sampling_time: float = 0.0
    total_evaluation_time: float = 0.0
    runs: list[float | None] = field(default_factory=list)

    @property
    def score(self) -> float | None:
        return None if self.evaluation is None else self.evaluation.total_cost

    @property
    def mean_sampling_time(self) -> float:
        return self.total_sampling_time / self.n_evaluations if self.n_evaluations else 0.0

    @property
    def mean_evaluation_time(self) -> float:
        return self.total_evaluation_time / self.n_evaluations if self.n_evaluations else 0.0

    def timing(self) -> dict[str, float]:
        return {
            "sampling_time_total": round(self.total_sampling_time, 3),
            "evaluation_time_total": round(self.total_evaluation_time, 3),
            "sampling_time_mean": round(self.mean_sampling_time, 6),
            "evaluation_time_mean": round(self.mean_evaluation_time, 6),
        }

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        """JSON-ready form; with ``timing=False`` only seed-determined fields remain."""
        doc: dict[str, Any] = {
            "version": REPORT_VERSION,
            "method": self.method,
            "seed": self.seed,
            "config": self.config,
            "instance": self.instance,
            "best": None,
            "trajectory": self.trajectory,
            "n_evaluations": self.n_evaluations,
            "n_valid": self.n_valid,
            "discards": dict(sorted(self.discards.items())),
        }
        if self.evaluation is not None:
            doc["best"] = {
                "source": self.best.program.normalized if self.best else None,
                "record": self.best.to_dict(timing) if self.best else None,
                **self.evaluation.to_dict(),
                "commitment": self.commitment.tolist(),
                "dispatch": self.dispatch.tolist(),
                "total_generation": self.dispatch.powers.sum(axis=0).tolist(),
            }
        if self.runs:
            doc["runs"] = self.runs
        if timing:
            doc["timing"] = self.timing()
        return doc

    def write(self, path: str | Path, timing: bool = True) -> None:
        Path(path).write_text(json.dumps(self.to_dict(timing), indent=1) + "\n")


def load_report(path: str | Path) -> dict[str, Any]:
    """Read a report document and check the fields consumers rely on."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"cannot read report {path}: {exc}") from exc
    if not isinstance(doc, dict) or "best" not in doc or "instance" not in doc:
        raise ReportError(f"{path}: not a search report")
    best = doc["best"]
    if best is not None:
        for key in ("commitment", "dispatch"):
            if not isinstance(best.get(key), list):
                raise ReportError(f"{path}: best.{key} missing or malformed")
    return doc
