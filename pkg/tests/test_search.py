import json

import numpy as np
import pytest
from conftest import tiny_instances

from ucfun.instance import random_instance
from ucfun.oracle import solve_exhaustive
from ucfun.samplers import MutationSampler, Sample, SamplerError
from ucfun.search import Discarded, Evaluated, SearchAborted, SearchConfig, evaluate_candidate, run_search


def test_evaluate_candidate_examples(ten_unit):
    ok = evaluate_candidate(ten_unit, "-cost_rate")
    assert isinstance(ok, Evaluated) and np.isfinite(ok.score)
    again = evaluate_candidate(ten_unit, "-cost_rate")
    assert again.score == ok.score
    assert evaluate_candidate(ten_unit, "min(p_max,").reason == "syntax"
    assert evaluate_candidate(ten_unit, "1/(t - t)").reason == "numeric-domain"
    assert evaluate_candidate(ten_unit, "wat").reason == "unknown-identifier"
    assert evaluate_candidate(ten_unit, "p_max + t", budget=10).reason == "budget"
    slow = evaluate_candidate(ten_unit, "p_max", time_limit=1e-9)
    assert isinstance(slow, Discarded) and slow.reason == "timeout"


def test_empty_budget(ten_unit):
    rep = run_search(ten_unit, MutationSampler(), SearchConfig(max_samples=0))
    assert rep.best is None and rep.score is None
    assert rep.to_dict()["best"] is None and rep.trajectory == []


def test_tiny_reaches_oracle():
    inst = random_instance(np.random.default_rng(42), 2, 3)
    _, opt = solve_exhaustive(inst)
    rep = run_search(inst, MutationSampler(), SearchConfig(max_samples=300, seed=1))
    assert rep.score == pytest.approx(opt.total_cost, rel=1e-9)


def test_deterministic_and_monotone(ten_unit):
    cfg = SearchConfig(max_samples=120, seed=3, reset_interval=40)
    a = run_search(ten_unit, MutationSampler(), cfg)
    b = run_search(ten_unit, MutationSampler(), cfg)
    assert json.dumps(a.to_dict(timing=False)) == json.dumps(b.to_dict(timing=False))
    traj = [x for x in a.trajectory if x is not None]
    assert len(a.trajectory) == 120 and all(x >= y for x, y in zip(traj, traj[1:]))
    assert a.score == pytest.approx(traj[-1], rel=1e-12)
    assert a.n_valid + sum(a.discards.values()) == a.n_evaluations


def test_workers_deterministic_per_count():
    inst = tiny_instances(1)[0]
    cfg = SearchConfig(max_samples=60, seed=5, workers=3)
    a = run_search(inst, MutationSampler(), cfg).to_dict(timing=False)
    b = run_search(inst, MutationSampler(), cfg).to_dict(timing=False)
    assert a == b


def test_best_score_reproducible_from_program(ten_unit):
    rep = run_search(ten_unit, MutationSampler(), SearchConfig(max_samples=80, seed=9))
    again = evaluate_candidate(ten_unit, rep.best.program.normalized)
    assert again.score == pytest.approx(rep.score, rel=1e-12)


class Broken:
    name = "broken"

    def sample(self, prompt, rng):
        raise SamplerError("endpoint unreachable")


class Fixed:
    name = "fixed"

    def __init__(self, sources):
        self.sources = list(sources)

    def sample(self, prompt, rng):
        return Sample(self.sources.pop(0), 0.0)


def test_sampler_failure_aborts(ten_unit):
    with pytest.raises(SearchAborted):
        run_search(ten_unit, Broken(), SearchConfig(max_samples=3))


def test_discards_counted(ten_unit):
    rep = run_search(ten_unit, Fixed(["min(", "1/(t-t)", "-cost_rate"]), SearchConfig(max_samples=3))
    assert rep.discards == {"numeric-domain": 1, "syntax": 1}
    assert rep.trajectory[:2] == [None, None] and rep.trajectory[2] == pytest.approx(rep.score, rel=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(max_samples=-1)
    with pytest.raises(ValueError):
        SearchConfig(max_samples=1, island_capacity=1, prompt_k=2)
