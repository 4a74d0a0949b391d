"""The numba kernels and the numpy fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest
from conftest import make_instance, unit

from ucfun.instance import random_instance
from ucfun.kernels import get_backend
from ucfun.lang import parse

NB, NP = get_backend("numba"), get_backend("numpy")


def _instances(count, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        base = random_instance(rng, int(rng.integers(1, 8)), int(rng.integers(1, 12)), max_min_time=5,
                               load_range=(0.0, 1.2))
        units = [unit(i, s.p_min, s.p_max, s.cost_rate, s.min_up, s.min_down, bool(rng.integers(2)),
                      int(rng.integers(1, 6))) for i, s in enumerate(base.units)]
        out.append(make_instance(units, base.demand))
    return out, rng


def test_dispatch_and_costs_agree():
    insts, rng = _instances(40)
    for inst in insts:
        us = rng.integers(0, 2, (16, inst.n_units, inst.n_periods)).astype(np.int8)
        a = inst.arrays
        for u in us:
            assert np.allclose(NB.dispatch(a, u), NP.dispatch(a, u), rtol=0, atol=1e-9)
        assert np.allclose(NB.cost_batch(a, us, 1e4, 1e5), NP.cost_batch(a, us, 1e4, 1e5), rtol=1e-12, atol=1e-7)


def test_repair_agrees():
    insts, rng = _instances(40, seed=1)
    for inst in insts:
        us = rng.integers(0, 2, (16, inst.n_units, inst.n_periods)).astype(np.int8)
        x, y = us.copy(), us.copy()
        NB.repair_batch(inst.arrays, x)
        NP.repair_batch(inst.arrays, y)
        assert np.array_equal(x, y)


@pytest.mark.parametrize("refine", [False, True])
def test_decode_agrees(refine):
    insts, _ = _instances(40, seed=2)
    programs = ["-cost_rate", "0", "p_max / (cost_rate + 1)", "if(is_on, 1000, 0) - cost_rate",
                "residual_demand - p_max + hours_in_state", "1 / (t - 2)"]
    for inst in insts:
        for src in programs:
            c = parse(src).compiled
            ua, sa = NB.decode(inst.arrays, c, 10**6, refine)
            ub, sb = NP.decode(inst.arrays, c, 10**6, refine)
            assert sa == sb
            if sa == 0:
                assert np.array_equal(ua, ub), src


def test_enumeration_agrees():
    insts, _ = _instances(60, seed=3)
    for inst in insts:
        if inst.n_units * inst.n_periods > 12:
            continue
        assert NB.enumerate_best(inst.arrays, 1e4, 1e5, 1e-9) == pytest.approx(
            NP.enumerate_best(inst.arrays, 1e4, 1e5, 1e-9), rel=1e-12)


def test_env_flag_selects_numpy():
    code = "from ucfun.kernels import kernels; print(kernels.name)"
    env = dict(os.environ, UCFUN_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["UCFUN_DISABLE_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("cuda")
