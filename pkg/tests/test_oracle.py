import numpy as np
import pytest
from conftest import make_instance, tiny_instances, unit

from ucfun.evaluator import batch_costs, evaluate_commitment
from ucfun.ga import GaConfig, repair, run_ga
from ucfun.instance import random_instance
from ucfun.lang import decode, parse
from ucfun.oracle import InstanceTooLarge, grid_from_mask, solve_exhaustive


def test_single_unit_on():
    inst = make_instance([unit(0, 10, 100, 1)], [50])
    u, ev = solve_exhaustive(inst)
    assert u.tolist() == [[1]] and ev.total_cost == 50


def test_zero_demand_all_off():
    u, ev = solve_exhaustive(make_instance([unit(0, 10, 100, 1)], [0]))
    assert u.tolist() == [[0]] and ev.total_cost == 0


def test_too_large(ten_unit):
    with pytest.raises(InstanceTooLarge):
        solve_exhaustive(ten_unit)
    with pytest.raises(InstanceTooLarge):
        solve_exhaustive(tiny_instances(1)[0], limit=8)


def test_mask_order():
    assert grid_from_mask(1, 2, 2).tolist() == [[0, 0], [0, 1]]
    assert grid_from_mask(8, 2, 2).tolist() == [[1, 0], [0, 0]]


@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_matches_brute_force_loop(backend):
    for inst in tiny_instances(5, seed=300):
        n, horizon = inst.n_units, inst.n_periods
        grids = np.stack([grid_from_mask(m, n, horizon) for m in range(2 ** (n * horizon))])
        costs = batch_costs(inst, grids).sum(axis=1)
        u, ev = solve_exhaustive(inst, backend=backend)
        assert ev.total_cost == pytest.approx(costs.min(), rel=1e-9)


def test_dominance_over_programs_and_ga():
    rng = np.random.default_rng(5)
    for k in range(5):
        inst = random_instance(np.random.default_rng(500 + k), 2, 3)
        _, opt = solve_exhaustive(inst)
        for src in ("-cost_rate", "0", "p_max", "is_on - cost_rate / 10"):
            assert opt.total_cost <= evaluate_commitment(inst, decode(inst, parse(src)))[1].total_cost + 1e-9
        for _ in range(20):
            g = repair(inst, rng.integers(0, 2, (2, 3)))
            assert opt.total_cost <= evaluate_commitment(inst, g)[1].total_cost + 1e-9
        assert opt.total_cost <= run_ga(inst, GaConfig(population=10, generations=5)).score + 1e-9
