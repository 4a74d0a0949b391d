"""Loop kernels compiled with numba.

Every kernel works on plain arrays; ``u`` grids are int8 with shape (N, T),
batched grids are (B, N, T).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .opcodes import (
    N_FEATURES,
    OP_ABS,
    OP_ADD,
    OP_CONST,
    OP_DIV,
    OP_EQ,
    OP_FEAT,
    OP_GE,
    OP_GT,
    OP_IF,
    OP_LE,
    OP_LT,
    OP_MAX,
    OP_MIN,
    OP_MUL,
    OP_NEG,
    OP_SUB,
    STATUS_BUDGET,
    STATUS_DOMAIN,
    STATUS_OK,
)


@njit(cache=True)
def dispatch_into(u, p_min, p_max, demand, merit, out):
    n, horizon = u.shape
    for t in range(horizon):
        base = 0.0
        for i in range(n):
            if u[i, t]:
                out[i, t] = p_min[i]
                base += p_min[i]
            else:
                out[i, t] = 0.0
        residual = demand[t] - base
        if residual <= 0.0:
            continue
        for k in range(n):
            i = merit[k]
            if not u[i, t]:
                continue
            head = p_max[i] - p_min[i]
            if head >= residual:
                out[i, t] += residual
                break
            out[i, t] = p_max[i]
            residual -= head


@njit(cache=True)
def missing_periods(u, min_up, min_down, init_on, init_dur):
    """Sum over all non-final runs of (required minimum - effective length)."""
    n, horizon = u.shape
    total = 0
    for i in range(n):
        state = u[i, 0]
        if state != init_on[i]:
            # the pre-horizon run ends at t=0
            req = min_up[i] if init_on[i] == 1 else min_down[i]
            if init_dur[i] < req:
                total += req - init_dur[i]
            extra = 0
        else:
            extra = init_dur[i]
        length = 1
        for t in range(1, horizon):
            if u[i, t] == state:
                length += 1
                continue
            eff = length + extra
            req = min_up[i] if state == 1 else min_down[i]
            if eff < req:
                total += req - eff
            state = u[i, t]
            length = 1
            extra = 0
    return total


@njit(cache=True)
def score(u, powers, cost_rate, min_up, min_down, init_on, init_dur, demand, hours, c_demand, c_min_time, tol):
    n, horizon = u.shape
    operating = 0.0
    shortfall = 0.0
    for t in range(horizon):
        gen = 0.0
        for i in range(n):
            if u[i, t]:
                operating += cost_rate[i] * powers[i, t] * hours
                gen += powers[i, t]
        gap = demand[t] - gen
        if gap > tol:
            shortfall += gap
    missing = missing_periods(u, min_up, min_down, init_on, init_dur)
    return operating, c_demand * shortfall, c_min_time * missing


@njit(cache=True)
def cost_batch(us, p_min, p_max, cost_rate, min_up, min_down, init_on, init_dur, demand, merit, hours, c_demand,
               c_min_time, tol, out):
    b, n, horizon = us.shape
    powers = np.empty((n, horizon))
    for k in range(b):
        dispatch_into(us[k], p_min, p_max, demand, merit, powers)
        co, pd, pm = score(us[k], powers, cost_rate, min_up, min_down, init_on, init_dur, demand, hours, c_demand,
                           c_min_time, tol)
        out[k, 0] = co
        out[k, 1] = pd
        out[k, 2] = pm


@njit(cache=True)
def repair_into(u, min_up, min_down, init_on, init_dur):
    n, horizon = u.shape
    for i in range(n):
        state = init_on[i]
        dur = init_dur[i]
        for t in range(horizon):
            want = u[i, t]
            if want == state:
                dur += 1
                continue
            req = min_up[i] if state == 1 else min_down[i]
            if dur < req:
                u[i, t] = state
                dur += 1
            else:
                state = want
                dur = 1


@njit(cache=True)
def repair_batch(us, min_up, min_down, init_on, init_dur):
    for k in range(us.shape[0]):
        repair_into(us[k], min_up, min_down, init_on, init_dur)


@njit(cache=True)
def run_program(code, args, consts, feats, stack):
    sp = 0
    for pc in range(code.shape[0]):
        op = code[pc]
        if op == OP_CONST:
            stack[sp] = consts[args[pc]]
            sp += 1
            continue
        if op == OP_FEAT:
            stack[sp] = feats[args[pc]]
            sp += 1
            continue
        if op == OP_NEG:
            r = -stack[sp - 1]
        elif op == OP_ABS:
            r = abs(stack[sp - 1])
        elif op == OP_IF:
            c = stack[sp - 3]
            r = stack[sp - 2] if c != 0.0 else stack[sp - 1]
            sp -= 2
        else:
            a = stack[sp - 2]
            b = stack[sp - 1]
            sp -= 1
            if op == OP_ADD:
                r = a + b
            elif op == OP_SUB:
                r = a - b
            elif op == OP_MUL:
                r = a * b
            elif op == OP_DIV:
                if b == 0.0:
                    return 0.0, STATUS_DOMAIN
                r = a / b
            elif op == OP_LT:
                r = 1.0 if a < b else 0.0
            elif op == OP_LE:
                r = 1.0 if a <= b else 0.0
            elif op == OP_GT:
                r = 1.0 if a > b else 0.0
            elif op == OP_GE:
                r = 1.0 if a >= b else 0.0
            elif op == OP_EQ:
                r = 1.0 if a == b else 0.0
            elif op == OP_MIN:
                r = a if a <= b else b
            else:
                r = a if a >= b else b
        if not math.isfinite(r):
            return 0.0, STATUS_DOMAIN
        stack[sp - 1] = r
    return stack[0], STATUS_OK


@njit(cache=True)
def period_cost(u, t, p_min, p_max, cost_rate, demand, merit):
    """Merit-order generation cost of column ``t``; unserved demand is charged 1e4/MW."""
    n = u.shape[0]
    residual = demand[t]
    cost = 0.0
    for i in range(n):
        if u[i, t]:
            residual -= p_min[i]
            cost += cost_rate[i] * p_min[i]
    for k in range(n):
        if residual <= 0.0:
            break
        i = merit[k]
        if u[i, t]:
            fill = min(p_max[i] - p_min[i], residual)
            cost += cost_rate[i] * fill
            residual -= fill
    if residual > 0.0:
        cost += 1e4 * residual
    return cost


@njit(cache=True)
def refine_period(u, t, free, scores, state, p_min, p_max, cost_rate, min_down, demand, merit, fleet):
    """Post-cover pass: keep units on through min-down shortfall traps, then add units that cut cost."""
    n, horizon = u.shape
    for i in range(n):
        if not free[i] or state[i] != 1:
            continue
        for s in range(t + 1, min(horizon, t + min_down[i])):
            if demand[s] > fleet - p_max[i]:
                u[i, t] = 1
                free[i] = False
                break
    while True:
        best = -1
        for i in range(n):
            if free[i] and (best < 0 or scores[i] > scores[best]):
                best = i
        if best < 0:
            break
        free[best] = False
        before = period_cost(u, t, p_min, p_max, cost_rate, demand, merit)
        u[best, t] = 1
        after = period_cost(u, t, p_min, p_max, cost_rate, demand, merit)
        if not after < before - 1e-9 * max(1.0, abs(before)):
            u[best, t] = 0


@njit(cache=True)
def decode_into(code, args, consts, depth, p_min, p_max, cost_rate, min_up, min_down, init_on, init_dur, demand,
                merit, budget, refine, u):
    n, horizon = u.shape
    fleet = p_max.sum()
    state = init_on.copy()
    dur = init_dur.copy()
    free = np.zeros(n, dtype=np.bool_)
    scores = np.zeros(n)
    feats = np.zeros(N_FEATURES)
    stack = np.zeros(max(depth, 1))
    length = code.shape[0]
    used = 0
    for t in range(horizon):
        cap = 0.0
        for i in range(n):
            free[i] = False
            u[i, t] = 0
            if state[i] == 1 and dur[i] < min_up[i]:
                u[i, t] = 1
                cap += p_max[i]
            elif state[i] == 0 and dur[i] < min_down[i]:
                pass
            else:
                free[i] = True
        residual = demand[t] - cap
        for i in range(n):
            if not free[i]:
                continue
            used += length
            if used > budget:
                return STATUS_BUDGET
            feats[0] = cost_rate[i]
            feats[1] = p_min[i]
            feats[2] = p_max[i]
            feats[3] = min_up[i]
            feats[4] = min_down[i]
            feats[5] = demand[t]
            feats[6] = residual
            feats[7] = dur[i]
            feats[8] = state[i]
            feats[9] = t
            feats[10] = horizon
            feats[11] = n
            value, status = run_program(code, args, consts, feats, stack)
            if status != STATUS_OK:
                return status
            scores[i] = value
        while cap < demand[t]:
            best = -1
            for i in range(n):
                if free[i] and (best < 0 or scores[i] > scores[best]):
                    best = i
            if best < 0:
                break
            u[best, t] = 1
            cap += p_max[best]
            free[best] = False
        if refine:
            refine_period(u, t, free, scores, state, p_min, p_max, cost_rate, min_down, demand, merit, fleet)
        for i in range(n):
            if u[i, t] == state[i]:
                dur[i] += 1
            else:
                state[i] = u[i, t]
                dur[i] = 1
    return STATUS_OK


@njit(cache=True)
def enumerate_best(n, horizon, p_min, p_max, cost_rate, min_up, min_down, init_on, init_dur, demand, merit, hours,
                   c_demand, c_min_time, tol, rel_eps):
    """Scan all 2**(n*horizon) grids in lexicographic order of the flattened matrix."""
    bits = n * horizon
    u = np.zeros((n, horizon), dtype=np.int8)
    powers = np.empty((n, horizon))
    best_mask = -1
    best_cost = np.inf
    for mask in range(1 << bits):
        for k in range(bits):
            u[k // horizon, k % horizon] = (mask >> (bits - 1 - k)) & 1
        dispatch_into(u, p_min, p_max, demand, merit, powers)
        co, pd, pm = score(u, powers, cost_rate, min_up, min_down, init_on, init_dur, demand, hours, c_demand,
                           c_min_time, tol)
        total = co + pd + pm
        if best_mask < 0 or total < best_cost - rel_eps * max(1.0, abs(best_cost)):
            best_cost = total
            best_mask = mask
    return best_mask, best_cost
