"""Hot numeric kernels behind a backend switch.

``get_backend("numba")`` and ``get_backend("numpy")`` return objects exposing
the same array-level functions; :data:`kernels` is the one picked by
``UCFUN_DISABLE_NUMBA``.
"""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np

from .._accel import BACKEND, HAVE_NUMBA
from . import _numpy
from .opcodes import SHORTFALL_TOL, STATUS_BUDGET, STATUS_DOMAIN, STATUS_OK
from ._numpy import ProgramDomainError

__all__ = [
    "BACKEND",
    "ProgramDomainError",
    "SHORTFALL_TOL",
    "STATUS_BUDGET",
    "STATUS_DOMAIN",
    "STATUS_OK",
    "get_backend",
    "kernels",
]


def _numba_backend() -> SimpleNamespace:
    from . import _numba

    def dispatch(arrays, u):
        out = np.empty(u.shape)
        _numba.dispatch_into(u, arrays.p_min, arrays.p_max, arrays.demand, arrays.merit, out)
        return out

    def cost_batch(arrays, us, c_demand, c_min_time):
        out = np.empty((us.shape[0], 3))
        _numba.cost_batch(us, arrays.p_min, arrays.p_max, arrays.cost_rate, arrays.min_up, arrays.min_down,
                          arrays.init_on, arrays.init_dur, arrays.demand, arrays.merit, arrays.period_hours,
                          c_demand, c_min_time, SHORTFALL_TOL, out)
        return out

    def repair_batch(arrays, us):
        _numba.repair_batch(us, arrays.min_up, arrays.min_down, arrays.init_on, arrays.init_dur)

    def decode(arrays, compiled, budget, refine=True):
        u = np.zeros((len(arrays.p_min), len(arrays.demand)), dtype=np.int8)
        status = _numba.decode_into(compiled.code, compiled.args, compiled.consts, compiled.depth, arrays.p_min,
                                    arrays.p_max, arrays.cost_rate, arrays.min_up, arrays.min_down, arrays.init_on,
                                    arrays.init_dur, arrays.demand, arrays.merit, budget, refine, u)
        return u, int(status)

    def enumerate_best(arrays, c_demand, c_min_time, rel_eps):
        n, horizon = len(arrays.p_min), len(arrays.demand)
        mask, cost = _numba.enumerate_best(n, horizon, arrays.p_min, arrays.p_max, arrays.cost_rate, arrays.min_up,
                                           arrays.min_down, arrays.init_on, arrays.init_dur, arrays.demand,
                                           arrays.merit, arrays.period_hours, c_demand, c_min_time, SHORTFALL_TOL,
                                           rel_eps)
        return int(mask), float(cost)

    return SimpleNamespace(name="numba", dispatch=dispatch, cost_batch=cost_batch, repair_batch=repair_batch,
                           decode=decode, enumerate_best=enumerate_best)


def _numpy_backend() -> SimpleNamespace:
    def dispatch(arrays, u):
        return _numpy.dispatch_batch(u[None], arrays.p_min, arrays.p_max, arrays.demand, arrays.merit)[0]

    def cost_batch(arrays, us, c_demand, c_min_time):
        return _numpy.cost_batch(us, arrays.p_min, arrays.p_max, arrays.cost_rate, arrays.min_up, arrays.min_down,
                                 arrays.init_on, arrays.init_dur, arrays.demand, arrays.merit, arrays.period_hours,
                                 c_demand, c_min_time, SHORTFALL_TOL)

    def repair_batch(arrays, us):
        _numpy.repair_batch(us, arrays.min_up, arrays.min_down, arrays.init_on, arrays.init_dur)

    def decode(arrays, compiled, budget, refine=True):
        u = np.zeros((len(arrays.p_min), len(arrays.demand)), dtype=np.int8)
        status = _numpy.decode_into(compiled.vector_fn, compiled.node_count, arrays.p_min, arrays.p_max,
                                    arrays.cost_rate, arrays.min_up, arrays.min_down, arrays.init_on,
                                    arrays.init_dur, arrays.demand, arrays.merit, budget, refine, u)
        return u, int(status)

    def enumerate_best(arrays, c_demand, c_min_time, rel_eps):
        n, horizon = len(arrays.p_min), len(arrays.demand)
        return _numpy.enumerate_best(n, horizon, arrays.p_min, arrays.p_max, arrays.cost_rate, arrays.min_up,
                                     arrays.min_down, arrays.init_on, arrays.init_dur, arrays.demand, arrays.merit,
                                     arrays.period_hours, c_demand, c_min_time, SHORTFALL_TOL, rel_eps)

    return SimpleNamespace(name="numpy", dispatch=dispatch, cost_batch=cost_batch, repair_batch=repair_batch,
                           decode=decode, enumerate_best=enumerate_best)


_BACKENDS: dict[str, SimpleNamespace] = {}


def get_backend(name: str | None = None) -> SimpleNamespace:
    name = name or BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    if name not in _BACKENDS:
        _BACKENDS[name] = _numba_backend() if name == "numba" else _numpy_backend()
    return _BACKENDS[name]


kernels = get_backend()
