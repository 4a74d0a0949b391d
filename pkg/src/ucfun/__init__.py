"""Unit commitment by evolved priority rules, with GA and exhaustive baselines."""

from .dispatch import DispatchMatrix, dispatch
from .evaluator import DEFAULT_PENALTIES, Penalties, ScheduleEvaluation, evaluate, evaluate_commitment
from .ga import GaConfig, repair, run_ga
from .instance import CommitmentMatrix, UcInstance, UnitSpec, load_instance, random_instance
from .lang import HeuristicProgram, decode, parse
from .oracle import solve_exhaustive
from .report import SearchReport
from .search import SearchConfig, run_search

__all__ = [
    "DEFAULT_PENALTIES",
    "CommitmentMatrix",
    "DispatchMatrix",
    "GaConfig",
    "HeuristicProgram",
    "Penalties",
    "ScheduleEvaluation",
    "SearchConfig",
    "SearchReport",
    "UcInstance",
    "UnitSpec",
    "decode",
    "dispatch",
    "evaluate",
    "evaluate_commitment",
    "load_instance",
    "parse",
    "random_instance",
    "repair",
    "run_ga",
    "run_search",
    "solve_exhaustive",
]

__version__ = "0.1.0"
