"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeats 5] [--batch 2000] [--json out.json]

Each row reports the best-of-``repeats`` wall time per call after one warm-up
call (so JIT compilation is excluded) and checks that both backends return
the same result.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from ucfun.instance import load_instance, random_instance
from ucfun.kernels import get_backend
from ucfun.lang import parse


def best_time(fn, repeats: int) -> float:
    fn()
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def workloads(batch: int, seed: int):
    ten = load_instance("ten_unit.json")
    a = ten.arrays
    rng = np.random.default_rng(seed)
    grids = rng.integers(0, 2, (batch, ten.n_units, ten.n_periods)).astype(np.int8)
    prog = parse("-cost_rate + 0.1 * (p_max - p_min) + if(is_on, 5, 0)").compiled
    tiny = random_instance(np.random.default_rng(seed), 3, 5).arrays  # 2^15 grids

    yield (f"cost_batch ten_unit x{batch}",
           lambda k: k.cost_batch(a, grids, 1e4, 1e5),
           lambda x, y: np.allclose(x, y, rtol=1e-12, atol=1e-7))
    yield (f"repair_batch ten_unit x{batch}",
           lambda k: _repaired(k, a, grids),
           np.array_equal)
    yield ("decode ten_unit",
           lambda k: k.decode(a, prog, 10**6, True)[0],
           np.array_equal)
    yield ("enumerate_best 3x5",
           lambda k: k.enumerate_best(tiny, 1e4, 1e5, 1e-9),
           lambda x, y: x[0] == y[0] and abs(x[1] - y[1]) <= 1e-9 * max(1.0, abs(x[1])))


def _repaired(k, arrays, grids):
    us = grids.copy()
    k.repair_batch(arrays, us)
    return us


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--batch", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write the rows to this file")
    args = ap.parse_args()

    nb, npy = get_backend("numba"), get_backend("numpy")
    rows = []
    print(f"{'kernel':34s} {'numba (ms)':>11s} {'numpy (ms)':>11s} {'speedup':>8s}  agree")
    for name, run, same in workloads(args.batch, args.seed):
        agree = bool(same(run(nb), run(npy)))
        t_nb = best_time(lambda: run(nb), args.repeats)
        t_np = best_time(lambda: run(npy), args.repeats)
        rows.append({"kernel": name, "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb, "agree": agree})
        print(f"{name:34s} {t_nb * 1e3:11.3f} {t_np * 1e3:11.3f} {t_np / t_nb:7.1f}x  {agree}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
