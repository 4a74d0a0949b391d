"""Vectorised numpy implementations of the kernels in ``_numba``.

Used when numba is unavailable or disabled, and as the second route in the
backend-agreement tests. Batched grids have shape (B, N, T).
"""

from __future__ import annotations

import numpy as np

from .opcodes import STATUS_BUDGET, STATUS_DOMAIN, STATUS_OK


class ProgramDomainError(ArithmeticError):
    """Raised by vectorised priority programs on zero division or non-finite values."""


def dispatch_batch(us, p_min, p_max, demand, merit):
    on = us.astype(bool)
    powers = np.where(on, p_min[None, :, None], 0.0)
    residual = demand[None, :] - powers.sum(axis=1)
    head = np.where(on[:, merit, :], (p_max - p_min)[merit][None, :, None], 0.0)
    before = np.cumsum(head, axis=1) - head
    fill = np.clip(residual[:, None, :] - before, 0.0, head)
    powers[:, merit, :] += fill
    return powers


def missing_periods_batch(us, min_up, min_down, init_on, init_dur):
    b, n, horizon = us.shape
    state = us[:, :, 0].astype(np.int64)
    changed = state != init_on[None, :]
    req = np.where(init_on == 1, min_up, min_down)[None, :]
    total = np.where(changed & (init_dur[None, :] < req), req - init_dur[None, :], 0).sum(axis=1)
    extra = np.where(changed, 0, init_dur[None, :])
    length = np.ones((b, n), dtype=np.int64)
    for t in range(1, horizon):
        cur = us[:, :, t].astype(np.int64)
        switch = cur != state
        eff = length + extra
        req = np.where(state == 1, min_up[None, :], min_down[None, :])
        total += np.where(switch & (eff < req), req - eff, 0).sum(axis=1)
        length = np.where(switch, 1, length + 1)
        extra = np.where(switch, 0, extra)
        state = cur
    return total


def score_batch(us, powers, cost_rate, min_up, min_down, init_on, init_dur, demand, hours, c_demand, c_min_time, tol):
    live = np.where(us.astype(bool), powers, 0.0)
    operating = (live * cost_rate[None, :, None]).sum(axis=(1, 2)) * hours
    gap = demand[None, :] - live.sum(axis=1)
    shortfall = np.where(gap > tol, gap, 0.0).sum(axis=1)
    missing = missing_periods_batch(us, min_up, min_down, init_on, init_dur)
    out = np.empty((us.shape[0], 3))
    out[:, 0] = operating
    out[:, 1] = c_demand * shortfall
    out[:, 2] = c_min_time * missing
    return out


def cost_batch(us, p_min, p_max, cost_rate, min_up, min_down, init_on, init_dur, demand, merit, hours, c_demand,
               c_min_time, tol):
    powers = dispatch_batch(us, p_min, p_max, demand, merit)
    return score_batch(us, powers, cost_rate, min_up, min_down, init_on, init_dur, demand, hours, c_demand,
                       c_min_time, tol)


def repair_batch(us, min_up, min_down, init_on, init_dur):
    b, n, horizon = us.shape
    state = np.broadcast_to(init_on, (b, n)).astype(np.int64)
    dur = np.broadcast_to(init_dur, (b, n)).astype(np.int64)
    for t in range(horizon):
        want = us[:, :, t].astype(np.int64)
        req = np.where(state == 1, min_up[None, :], min_down[None, :])
        switch = want != state
        blocked = switch & (dur < req)
        us[:, :, t] = np.where(blocked, state, want)
        moved = switch & ~blocked
        dur = np.where(moved, 1, dur + 1)
        state = np.where(moved, want, state)


def period_cost(col, p_min, p_max, cost_rate, d, merit):
    on = col[merit] == 1
    lo, hi = p_min[merit][on], p_max[merit][on]
    residual = d - lo.sum()
    head = hi - lo
    fill = np.clip(residual - (np.cumsum(head) - head), 0.0, head)
    cost = float((cost_rate[merit][on] * (lo + fill)).sum())
    gap = residual - fill.sum()
    return cost + 1e4 * gap if gap > 0.0 else cost


def refine_period(col, t, rest, state, p_min, p_max, cost_rate, min_down, demand, merit, fleet):
    """Post-cover pass over uncommitted free units ``rest`` (priority order); mutates ``col``."""
    horizon = demand.size
    for i in rest:
        if state[i] == 1 and (demand[t + 1 : min(horizon, t + min_down[i])] > fleet - p_max[i]).any():
            col[i] = 1
    for i in rest:
        if col[i]:
            continue
        before = period_cost(col, p_min, p_max, cost_rate, demand[t], merit)
        col[i] = 1
        after = period_cost(col, p_min, p_max, cost_rate, demand[t], merit)
        if not after < before - 1e-9 * max(1.0, abs(before)):
            col[i] = 0


def decode_into(vector_fn, node_count, p_min, p_max, cost_rate, min_up, min_down, init_on, init_dur, demand,
                merit, budget, refine, u):
    """Greedy lock-then-score decoding; ``vector_fn`` scores all free units at once."""
    n, horizon = u.shape
    state = init_on.astype(np.int64).copy()
    dur = init_dur.astype(np.int64).copy()
    ids = np.arange(n)
    fleet = p_max.sum()
    used = 0
    with np.errstate(all="ignore"):
        for t in range(horizon):
            locked_on = (state == 1) & (dur < min_up)
            locked_off = (state == 0) & (dur < min_down)
            free = ids[~(locked_on | locked_off)]
            col = locked_on.astype(np.int8)
            cap = float(p_max[locked_on].sum())
            d = demand[t]
            if free.size:
                used += node_count * free.size
                if used > budget:
                    return STATUS_BUDGET
                feats = (
                    cost_rate[free],
                    p_min[free],
                    p_max[free],
                    min_up[free].astype(np.float64),
                    min_down[free].astype(np.float64),
                    d,
                    d - cap,
                    dur[free].astype(np.float64),
                    state[free].astype(np.float64),
                    float(t),
                    float(horizon),
                    float(n),
                )
                try:
                    scores = np.broadcast_to(np.asarray(vector_fn(feats), dtype=np.float64), free.shape)
                except ProgramDomainError:
                    return STATUS_DOMAIN
                order = free[np.lexsort((free, -scores))]
                k = 0
                if cap < d:
                    covered = cap + np.cumsum(p_max[order]) >= d
                    k = int(np.argmax(covered)) + 1 if covered.any() else order.size
                    col[order[:k]] = 1
                if refine:
                    refine_period(col, t, order[k:], state, p_min, p_max, cost_rate, min_down, demand, merit, fleet)
            u[:, t] = col
            switch = col != state
            dur = np.where(switch, 1, dur + 1)
            state = np.where(switch, col, state)
    return STATUS_OK


def enumerate_best(n, horizon, p_min, p_max, cost_rate, min_up, min_down, init_on, init_dur, demand, merit, hours,
                   c_demand, c_min_time, tol, rel_eps, chunk=1 << 14):
    bits = n * horizon
    shifts = np.arange(bits - 1, -1, -1, dtype=np.int64)
    best_mask, best_cost = -1, np.inf
    total = 1 << bits
    for start in range(0, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        us = ((masks[:, None] >> shifts[None, :]) & 1).astype(np.int8).reshape(-1, n, horizon)
        costs = cost_batch(us, p_min, p_max, cost_rate, min_up, min_down, init_on, init_dur, demand, merit, hours,
                           c_demand, c_min_time, tol).sum(axis=1)
        # replay the sequential record-breaking scan so ties resolve like the loop kernel
        pos = 0
        while pos < costs.size:
            if best_mask < 0:
                hit = np.array([0])
            else:
                hit = np.flatnonzero(costs[pos:] < best_cost - rel_eps * max(1.0, abs(best_cost)))
            if hit.size == 0:
                break
            j = pos + int(hit[0])
            best_mask, best_cost = int(masks[j]), float(costs[j])
            pos = j + 1
    return best_mask, best_cost
