"""Compiled event-driven kernel for the contact process on (lazily grown) trees.

The kernel keeps one rate per vertex in a complete binary sum tree: an
infected vertex carries its recovery rate, a healthy one carries its total
infection rate ``lam * F_v * sum(F_u for infected neighbours u)``.  Internal
nodes are recomputed as ``left + right`` after every leaf update, so the
aggregate never drifts.  Holding times are exponential in the aggregate
rate; under the delayed dynamics they are stretched by ``theta**-r``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .distributions import (
    FIT_CONST, FIT_EMP, FIT_PARETO, FIT_UNIF,
    OFF_DET, OFF_GEOM, OFF_POIS, OFF_POWER, OFF_TABLE,
)

# trial status codes
EXTINCT, HORIZON, EVENT_CAP, OVERFLOW, STOPPED = 0, 1, 2, 3, 4

# columns of the float output
F_TIME, F_THR_TIME, F_TARGET_TIME, F_B_TIME = range(4)
NF = 4
# columns of the integer output
(I_STATUS, I_H, I_REINF, I_TOUCHED, I_EVENTS, I_FINAL, I_ROOT_FINAL,
 I_WIN_MIN, I_TARGET_FINAL, I_B, I_NVERT, I_LEAVES_FINAL, I_TARGET_SNAP) = range(13)
NI = 13

LOG_INFECT, LOG_RECOVER, LOG_CENSOR = 0, 1, 2
NO_WINDOW = np.iinfo(np.int64).max


@njit(cache=True)
def sample_offspring_nb(rng, kind, params, table):
    if kind == OFF_DET:
        return np.int64(params[0])
    if kind == OFF_POIS:
        return np.int64(rng.poisson(params[0]))
    if kind == OFF_GEOM:
        return np.int64(rng.geometric(params[0]) - 1)
    if kind == OFF_TABLE:
        return np.int64(np.searchsorted(table, rng.random(), side="right"))
    # power law by inversion of the tail k**-alpha
    x = np.floor((1.0 - rng.random()) ** (-1.0 / params[0]))
    if x > 4.0e18:
        return np.int64(4e18)
    return np.int64(x)


@njit(cache=True)
def sample_fitness_nb(rng, kind, params, table):
    if kind == FIT_CONST:
        return params[0]
    u = rng.random()
    if kind == FIT_PARETO:
        return (1.0 - u) ** (-1.0 / params[0])
    if kind == FIT_UNIF:
        return params[0] + (params[1] - params[0]) * u
    return np.interp(u, table[0], table[1])


@njit(cache=True)
def seg_set(seg, size, i, val):
    node = i + size
    seg[node] = val
    node >>= 1
    while node >= 1:
        seg[node] = seg[2 * node] + seg[2 * node + 1]
        node >>= 1


@njit(cache=True)
def seg_pick(seg, size, u):
    node = 1
    while node < size:
        left = seg[2 * node]
        right = seg[2 * node + 1]
        if (u < left or right <= 0.0) and left > 0.0:
            node = 2 * node
        else:
            u -= left
            node = 2 * node + 1
    return node - size


@njit(cache=True)
def _pow2(n):
    size = 1
    while size < n:
        size *= 2
    return size


@njit(cache=True)
def run_block(
    rng, ntr,
    parent0, fit0, depth0, cstart0, ccount0, expanded0,
    capacity, max_gen,
    off_kind, off_params, off_table, fit_kind, fit_params, fit_table,
    lam, perm, frozen, theta, fresh_root,
    init, horizon, max_events,
    thr, stop_on_thr, win_lo, win_hi, win_thr,
    target, stop_on_target, snap_t, path_r,
    out_f, out_i,
    log_t, log_type, log_v, log_n, log_d,
):
    """Run ``ntr`` independent trials; returns the number of logged events."""
    n0 = parent0.shape[0]
    size = _pow2(capacity)
    seg = np.zeros(2 * size)
    parent = np.empty(capacity, np.int64)
    fit = np.empty(capacity)
    depth = np.empty(capacity, np.int64)
    cstart = np.empty(capacity, np.int64)
    ccount = np.empty(capacity, np.int64)
    expanded = np.empty(capacity, np.bool_)
    state = np.zeros(capacity, np.bool_)
    ever = np.zeros(capacity, np.bool_)
    press = np.zeros(capacity)
    ninb = np.zeros(capacity, np.int64)
    dcnt = np.zeros(capacity + 2, np.int64)
    offset = 1 if perm else 0
    base0 = 1.0 if perm else 0.0
    delayed = theta < 1.0
    log_cap = log_t.shape[0]
    nlog = 0
    n = 0
    dseen = dcnt.shape[0] - 1

    for trial in range(ntr):
        # reset the vertices used by the previous trial
        for v in range(n):
            if seg[v + size] != 0.0:
                seg_set(seg, size, v, 0.0)
            state[v] = False
            ever[v] = False
            press[v] = 0.0
            ninb[v] = 0
        for d in range(dseen + 1):
            dcnt[d] = 0
        dseen = 0
        n = n0
        for v in range(n0):
            parent[v] = parent0[v]
            fit[v] = fit0[v]
            depth[v] = depth0[v]
            cstart[v] = cstart0[v]
            ccount[v] = ccount0[v]
            expanded[v] = expanded0[v]
        if fresh_root:
            fit[0] = sample_fitness_nb(rng, fit_kind, fit_params, fit_table)
        press[0] = base0
        if perm:
            seg_set(seg, size, 0, lam * fit[0] * base0)

        logging = log_cap > 0 and trial == 0
        t = 0.0
        ninf = 0
        maxd = -1
        hmax = 0
        reinf = 0
        touched = 0
        events = 0
        leafcnt = 0
        status = EXTINCT
        thr_time = np.inf
        target_time = np.inf
        win_min = NO_WINDOW
        stage = 1
        bstate = 0
        b_time = np.inf
        left0 = False
        started = False
        snap = -1

        k_init = 0
        while True:
            # ---- choose vertex to infect: initial set first, then events
            if k_init < init.shape[0]:
                v = init[k_init]
                k_init += 1
                is_recovery = False
            else:
                if not started:
                    started = True
                    if ninf > 0:
                        left0 = True
                    if thr >= 0 and leafcnt >= thr:
                        thr_time = 0.0
                        if stop_on_thr:
                            status = STOPPED
                            break
                if ninf == 0 and (left0 or not perm):
                    status = EXTINCT
                    if t <= win_hi:
                        win_min = 0
                    if snap < 0 and target >= 0 and t <= snap_t:
                        snap = 0
                    break
                total = seg[1]
                if total <= 0.0:
                    status = EXTINCT
                    break
                dt = rng.standard_exponential() / total
                if delayed and ninf > 0:
                    dt *= theta ** (-(maxd + offset))
                tn = t + dt
                if win_thr >= 0 and t <= win_hi and min(tn, horizon) >= win_lo:
                    if leafcnt < win_min:
                        win_min = leafcnt
                    if win_min <= win_thr:
                        status = STOPPED
                        break
                if snap < 0 and target >= 0 and t <= snap_t and (tn > snap_t or tn > horizon):
                    if snap_t <= horizon:
                        snap = 1 if state[target] else 0
                if tn > horizon:
                    t = horizon
                    status = HORIZON
                    if logging and nlog < log_cap:
                        log_t[nlog] = t
                        log_type[nlog] = LOG_CENSOR
                        log_v[nlog] = -1
                        log_n[nlog] = ninf
                        log_d[nlog] = -1
                        nlog += 1
                    break
                if events >= max_events:
                    status = EVENT_CAP
                    break
                t = tn
                events += 1
                v = seg_pick(seg, size, rng.random() * total)
                is_recovery = state[v]

            if is_recovery:
                state[v] = False
                ninf -= 1
                d = depth[v]
                dcnt[d] -= 1
                while maxd >= 0 and dcnt[maxd] == 0:
                    maxd -= 1
                if parent[v] == 0:
                    leafcnt -= 1
                seg_set(seg, size, v, lam * fit[v] * press[v])
                fv = fit[v]
                p = parent[v]
                if p >= 0:
                    ninb[p] -= 1
                    press[p] = press[p] - fv if ninb[p] > 0 else (base0 if p == 0 else 0.0)
                    if not state[p]:
                        seg_set(seg, size, p, lam * fit[p] * press[p])
                for w in range(cstart[v], cstart[v] + ccount[v]):
                    ninb[w] -= 1
                    press[w] = press[w] - fv if ninb[w] > 0 else 0.0
                    if not state[w]:
                        seg_set(seg, size, w, lam * fit[w] * press[w])
                if path_r > 0 and bstate == 0 and v == stage - 1:
                    bstate = -1
                if logging and nlog < log_cap:
                    log_t[nlog] = t
                    log_type[nlog] = LOG_RECOVER
                    log_v[nlog] = v
                    log_n[nlog] = ninf
                    log_d[nlog] = depth[v]
                    nlog += 1
            else:
                if state[v]:
                    continue  # duplicate entry in the initial set
                if not expanded[v]:
                    expanded[v] = True
                    cstart[v] = n
                    ccount[v] = 0
                    if depth[v] < max_gen:
                        k = sample_offspring_nb(rng, off_kind, off_params, off_table)
                        if k > capacity - n:
                            status = OVERFLOW
                            break
                        for j in range(k):
                            w = n + j
                            parent[w] = v
                            fit[w] = sample_fitness_nb(rng, fit_kind, fit_params, fit_table)
                            depth[w] = depth[v] + 1
                            cstart[w] = 0
                            ccount[w] = 0
                            expanded[w] = False
                        ccount[v] = k
                        n += k
                state[v] = True
                ninf += 1
                if not ever[v]:
                    ever[v] = True
                    touched += 1
                if v == 0 and started:
                    reinf += 1
                d = depth[v]
                dcnt[d] += 1
                if d > maxd:
                    maxd = d
                    if d > dseen:
                        dseen = d
                if maxd + offset > hmax:
                    hmax = maxd + offset
                if parent[v] == 0:
                    leafcnt += 1
                fv = fit[v]
                p = parent[v]
                if p >= 0:
                    ninb[p] += 1
                    press[p] += fv
                    if not state[p]:
                        seg_set(seg, size, p, lam * fit[p] * press[p])
                for w in range(cstart[v], cstart[v] + ccount[v]):
                    ninb[w] += 1
                    press[w] += fv
                    if not state[w]:
                        seg_set(seg, size, w, lam * fit[w] * press[w])
                if v == target and target_time == np.inf:
                    target_time = t
                    if stop_on_target:
                        status = STOPPED
                        break
                if path_r > 0 and bstate == 0 and v == stage:
                    stage += 1
                    if stage > path_r:
                        bstate = 1
                        b_time = t
                if logging and nlog < log_cap:
                    log_t[nlog] = t
                    log_type[nlog] = LOG_INFECT
                    log_v[nlog] = v
                    log_n[nlog] = ninf
                    log_d[nlog] = depth[v]
                    nlog += 1
            # recovery rate of v (infected) or of the root (frozen dynamics)
            if state[v]:
                rec = 1.0
                if v == 0 and frozen and ninf > 1:
                    rec = 0.0
                seg_set(seg, size, v, rec)
            if frozen and state[0] and v != 0:
                seg_set(seg, size, 0, 1.0 if ninf == 1 else 0.0)
            if started:
                if ninf > 0:
                    left0 = True
                if thr >= 0 and thr_time == np.inf and leafcnt >= thr:
                    thr_time = t
                    if stop_on_thr:
                        status = STOPPED
                        break

        out_f[trial, F_TIME] = t
        out_f[trial, F_THR_TIME] = thr_time
        out_f[trial, F_TARGET_TIME] = target_time
        out_f[trial, F_B_TIME] = b_time
        out_i[trial, I_STATUS] = status
        out_i[trial, I_H] = hmax
        out_i[trial, I_REINF] = reinf
        out_i[trial, I_TOUCHED] = touched
        out_i[trial, I_EVENTS] = events
        out_i[trial, I_FINAL] = ninf
        out_i[trial, I_ROOT_FINAL] = 1 if state[0] else 0
        out_i[trial, I_WIN_MIN] = win_min
        out_i[trial, I_TARGET_FINAL] = 1 if (target >= 0 and target < n and state[target]) else 0
        out_i[trial, I_B] = bstate
        out_i[trial, I_NVERT] = n
        out_i[trial, I_LEAVES_FINAL] = leafcnt
        out_i[trial, I_TARGET_SNAP] = snap
    return nlog


# level outcome codes for the coupled multi-level kernel
LV_DEAD, LV_ALIVE, LV_CENSORED = 0, 1, 2


@njit(cache=True)
def run_levels(
    rng, ntr,
    parent0, fit0, depth0, cstart0, ccount0, expanded0,
    capacity, max_gen,
    off_kind, off_params, off_table, fit_kind, fit_params, fit_table,
    fresh_root, lams, expos, init, horizon, max_events,
    out_alive, out_root,
):
    """Several contact processes driven by one graphical representation.

    Level ``j`` has intensity ``lams[j]`` and uses fitness ``F**expos[j]``.
    Clocks run at the dominating rate ``lam_star * F_u * F_v`` with
    ``lam_star = max(lams)``; an arrow ``u -> w`` with uniform mark ``U``
    infects ``w`` in level ``j`` iff ``u`` is infected there and
    ``U < lams[j] * (F_u F_w)**expos[j] / (lam_star * F_u F_w)``.  Recovery
    marks act on every level.  If the acceptance probabilities are ordered
    across levels, the infected sets are nested at all times.  Levels still
    infected when the vertex budget or the event cap is hit are reported as
    censored.
    """
    m = lams.shape[0]
    lam_star = lams.max()
    n0 = parent0.shape[0]
    size = _pow2(capacity)
    seg = np.zeros(2 * size)
    parent = np.empty(capacity, np.int64)
    fit = np.empty(capacity)
    depth = np.empty(capacity, np.int64)
    cstart = np.empty(capacity, np.int64)
    ccount = np.empty(capacity, np.int64)
    expanded = np.empty(capacity, np.bool_)
    st = np.zeros((capacity, m), np.bool_)
    cnt = np.zeros(capacity, np.int64)
    nbsum = np.zeros(capacity)
    alive = np.zeros(m, np.int64)
    n = 0
    for trial in range(ntr):
        for v in range(n):
            if seg[v + size] != 0.0:
                seg_set(seg, size, v, 0.0)
            for j in range(m):
                st[v, j] = False
            cnt[v] = 0
        n = n0
        for v in range(n0):
            parent[v] = parent0[v]
            fit[v] = fit0[v]
            depth[v] = depth0[v]
            cstart[v] = cstart0[v]
            ccount[v] = ccount0[v]
            expanded[v] = expanded0[v]
        if fresh_root:
            fit[0] = sample_fitness_nb(rng, fit_kind, fit_params, fit_table)
        for j in range(m):
            alive[j] = 0
        overflow = False
        t = 0.0
        events = 0
        nactive = 0
        # initial infection in every level
        for q in range(init.shape[0]):
            v = init[q]
            for j in range(m):
                if not st[v, j]:
                    st[v, j] = True
                    cnt[v] += 1
                    alive[j] += 1
        pending = init.copy()
        for q in range(pending.shape[0]):
            v = pending[q]
            if cnt[v] > 0 and seg[v + size] == 0.0:
                if not expanded[v]:
                    expanded[v] = True
                    cstart[v] = n
                    ccount[v] = 0
                    if depth[v] < max_gen:
                        k = sample_offspring_nb(rng, off_kind, off_params, off_table)
                        if k > capacity - n:
                            overflow = True
                            break
                        for i in range(k):
                            w = n + i
                            parent[w] = v
                            fit[w] = sample_fitness_nb(rng, fit_kind, fit_params, fit_table)
                            depth[w] = depth[v] + 1
                            cstart[w] = 0
                            ccount[w] = 0
                            expanded[w] = False
                        ccount[v] = k
                        n += k
                s = 0.0
                for w in range(cstart[v], cstart[v] + ccount[v]):
                    s += fit[w]
                if parent[v] >= 0:
                    s += fit[parent[v]]
                nbsum[v] = s
                seg_set(seg, size, v, 1.0 + lam_star * fit[v] * s)
                nactive += 1
        while not overflow:
            if nactive == 0:
                break
            total = seg[1]
            tn = t + rng.standard_exponential() / total
            if tn > horizon:
                t = horizon
                break
            if events >= max_events:
                overflow = True
                break
            t = tn
            events += 1
            u = seg_pick(seg, size, rng.random() * total)
            fu = fit[u]
            x = rng.random() * (1.0 + lam_star * fu * nbsum[u])
            if x < 1.0:
                for j in range(m):
                    if st[u, j]:
                        st[u, j] = False
                        alive[j] -= 1
                cnt[u] = 0
                seg_set(seg, size, u, 0.0)
                nactive -= 1
                continue
            # arrow target chosen proportionally to its fitness
            y = (x - 1.0) / (lam_star * fu)
            w = -1
            p = parent[u]
            if p >= 0:
                if y < fit[p]:
                    w = p
                else:
                    y -= fit[p]
            if w < 0:
                last = -1
                for c in range(cstart[u], cstart[u] + ccount[u]):
                    last = c
                    if y < fit[c]:
                        w = c
                        break
                    y -= fit[c]
                if w < 0:
                    w = last if last >= 0 else p
            fw = fit[w]
            mark = rng.random()
            newly = False
            for j in range(m):
                if st[u, j] and not st[w, j]:
                    a = expos[j]
                    acc = lams[j] * (fu * fw) ** a / (lam_star * fu * fw)
                    if mark < acc:
                        st[w, j] = True
                        alive[j] += 1
                        if cnt[w] == 0:
                            newly = True
                        cnt[w] += 1
            if newly:
                if not expanded[w]:
                    expanded[w] = True
                    cstart[w] = n
                    ccount[w] = 0
                    if depth[w] < max_gen:
                        k = sample_offspring_nb(rng, off_kind, off_params, off_table)
                        if k > capacity - n:
                            overflow = True
                            break
                        for i in range(k):
                            z = n + i
                            parent[z] = w
                            fit[z] = sample_fitness_nb(rng, fit_kind, fit_params, fit_table)
                            depth[z] = depth[w] + 1
                            cstart[z] = 0
                            ccount[z] = 0
                            expanded[z] = False
                        ccount[w] = k
                        n += k
                s = 0.0
                for z in range(cstart[w], cstart[w] + ccount[w]):
                    s += fit[z]
                if parent[w] >= 0:
                    s += fit[parent[w]]
                nbsum[w] = s
                seg_set(seg, size, w, 1.0 + lam_star * fw * s)
                nactive += 1
        for j in range(m):
            if alive[j] == 0:
                out_alive[trial, j] = LV_DEAD
            elif overflow:
                out_alive[trial, j] = LV_CENSORED
            else:
                out_alive[trial, j] = LV_ALIVE
            out_root[trial, j] = 1 if st[0, j] else 0
    return 0
