"""Compiled inner loops for batch simulation.

Each kernel advances one run by a block of steps. Randomness comes in as a
pre-drawn ``(n_agents, n_steps)`` array of uniforms, one per agent per step,
taken from that agent's own stream. The object engine consumes the same
uniforms in the same order, so both paths produce identical traces.

Layout of the ``stats`` int64 vector shared by the kernels:

0 first aligned episode with full utilization and no collision (-1 if none)
1 first start of a K-step window with mean utilization >= goal (-1 if none)
2 largest number of successes any agent had in one episode
3 collisions in the current episode
4 steps with full utilization in the current episode
5 strategy changes in the current episode (convention agents)
6 running sum of successful resources over the trailing window
"""
import math

import numpy as np
from numba import njit

CONV = 0
FRAC = 1
MAX_EP = 2
EP_COLL = 3
EP_FULL = 4
EP_CHANGED = 5
WIN = 6
N_STATS = 7

TINY = 1e-300
BIG = 1e200


def new_stats():
    s = np.zeros(N_STATS, dtype=np.int64)
    s[CONV] = -1
    s[FRAC] = -1
    return s


@njit(cache=True)
def _weight(t, delta, t_ind):
    if t <= t_ind:
        return 1.0
    return delta ** (t - t_ind)


@njit(cache=True)
def _close_step(t, K, R, n_succ_res, n_coll_res, stats, ring, frac_goal,
                util_acc, coll_acc):
    util_acc[t] += n_succ_res / R
    coll_acc[t] += n_coll_res
    stats[EP_COLL] += n_coll_res
    if n_succ_res == R:
        stats[EP_FULL] += 1
    slot = t % K
    stats[WIN] += n_succ_res - ring[slot]
    ring[slot] = n_succ_res
    if stats[FRAC] < 0 and t >= K - 1:
        if stats[WIN] >= frac_goal * R * K - 1e-9:
            stats[FRAC] = t - K + 1


@njit(cache=True)
def _close_episode(t, K, ep_succ, stats):
    m = 0
    for n in range(ep_succ.shape[0]):
        if ep_succ[n] > m:
            m = ep_succ[n]
        ep_succ[n] = 0
    if m > stats[MAX_EP]:
        stats[MAX_EP] = m
    done = stats[EP_FULL] == K and stats[EP_COLL] == 0 and stats[EP_CHANGED] == 0
    if done and stats[CONV] < 0:
        stats[CONV] = t - K + 1
    stats[EP_COLL] = 0
    stats[EP_FULL] = 0
    stats[EP_CHANGED] = 0
    return done


@njit(cache=True)
def convention_block(g, accessed, ep_succ, u, t0, T, R, K, p, zeta, delta, t_ind,
                     payoff, payoff_star, succ, util_acc, coll_acc, stats, ring,
                     frac_goal, stop_on_convergence):
    """Advance convention agents from step ``t0``; returns the next step."""
    N = g.shape[0]
    counts = np.zeros(R, dtype=np.int64)
    act = np.empty(N, dtype=np.int64)
    mon = np.empty(N, dtype=np.int64)
    nsteps = min(u.shape[1], T - t0)
    for i in range(nsteps):
        t = t0 + i
        k = t % K
        w = _weight(t, delta, t_ind)
        counts[:] = 0
        for n in range(N):
            a = g[n, k]
            if a > 0 and not accessed[n]:
                act[n] = a
                counts[a - 1] += 1
            elif a == 0:
                act[n] = 0
                m = int(u[n, i] * R) + 1
                mon[n] = m if m <= R else R
            else:
                act[n] = -1
        n_succ_res = 0
        n_coll_res = 0
        for r in range(R):
            if counts[r] == 1:
                n_succ_res += 1
            elif counts[r] >= 2:
                n_coll_res += 1
        for n in range(N):
            a = act[n]
            if a > 0:
                if counts[a - 1] == 1:
                    payoff[n] += w
                    payoff_star[n] += w
                    accessed[n] = True
                    succ[n] += 1
                    ep_succ[n] += 1
                else:
                    payoff[n] += zeta * w
                    payoff_star[n] += zeta * w
                    if u[n, i] < p:
                        g[n, k] = 0
                        stats[EP_CHANGED] += 1
            elif a == 0:
                payoff_star[n] += zeta * w
                if counts[mon[n] - 1] == 0:
                    g[n, k] = mon[n]
                    stats[EP_CHANGED] += 1
        _close_step(t, K, R, n_succ_res, n_coll_res, stats, ring, frac_goal,
                    util_acc, coll_acc)
        if k == K - 1:
            for n in range(N):
                accessed[n] = False
            done = _close_episode(t, K, ep_succ, stats)
            if done and stop_on_convergence:
                return t + 1
    return t0 + nsteps


@njit(cache=True)
def bandit_block(variant, w, tot, ep_succ, u, t0, T, R, K, zeta, delta, t_ind,
                 gamma, p_min, bonus, refused_occupy,
                 payoff, succ, util_acc, coll_acc, stats, ring, frac_goal):
    """Advance bandit agents from step ``t0``; returns the next step.

    ``variant``: 0 EXP3/CEXP3 (``w`` is ``(N, C, R+1)`` arm weights, ``C`` 1
    or K), 2 EXP4, 3 EXP4.P (``w`` is ``(N, K, R)`` weights of the single-slot
    experts, ``tot`` the per-context sums).

    Arms are drawn by inverse CDF in the order Y, A_1..A_R, falling back to
    the last arm if rounding leaves ``u`` above the accumulated mass.
    """
    N = w.shape[0]
    A = R + 1
    counts = np.zeros(R, dtype=np.int64)
    blocked = np.zeros(R, dtype=np.int64)
    act = np.empty(N, dtype=np.int64)
    adm = np.empty(N, dtype=np.bool_)
    pch = np.empty(N)
    py = np.empty(N)
    wts = np.empty(N)
    probs = np.empty(A)
    nsteps = min(u.shape[1], T - t0)
    expert = variant >= 2
    if variant == 3:
        mix = 1.0 - A * p_min
        floor = p_min
    else:
        mix = 1.0 - gamma
        floor = gamma / A
    C = w.shape[1]
    for i in range(nsteps):
        t = t0 + i
        k = t % K
        w_t = _weight(t, delta, t_ind)
        counts[:] = 0
        blocked[:] = 0
        for n in range(N):
            x = u[n, i]
            a = A - 1
            if expert:
                wt = 0.0
                for c in range(K):
                    wt += tot[n, c]
                p = mix * max(wt - tot[n, k], 0.0) / wt + floor
                py[n] = p
                acc = p
                if x < acc:
                    a = 0
                else:
                    for r in range(R - 1):
                        p = mix * w[n, k, r] / wt + floor
                        acc += p
                        if x < acc:
                            a = r + 1
                            break
                    else:
                        p = mix * w[n, k, R - 1] / wt + floor
            else:
                ci = k if C > 1 else 0
                wt = tot[n, ci]
                acc = 0.0
                for b in range(A - 1):
                    p = mix * w[n, ci, b] / wt + floor
                    acc += p
                    if x < acc:
                        a = b
                        break
                else:
                    p = mix * w[n, ci, A - 1] / wt + floor
            act[n] = a
            pch[n] = p
            wts[n] = wt
            if a > 0:
                if ep_succ[n] == 0:
                    adm[n] = True
                    counts[a - 1] += 1
                else:
                    adm[n] = False
                    if refused_occupy:
                        blocked[a - 1] += 1
            else:
                adm[n] = False
        n_succ_res = 0
        n_coll_res = 0
        for r in range(R):
            if counts[r] == 1 and blocked[r] == 0:
                n_succ_res += 1
            elif counts[r] + blocked[r] >= 2:
                n_coll_res += 1
        for n in range(N):
            a = act[n]
            if a > 0:
                busy = counts[a - 1] + blocked[a - 1]
                if adm[n]:
                    if busy == 1:
                        reward = 1.0
                        succ[n] += 1
                        ep_succ[n] += 1
                    else:
                        reward = zeta
                    payoff[n] += reward * w_t
                else:
                    # refused: learns from occupancy, earns nothing
                    other = busy - (1 if refused_occupy else 0)
                    reward = 1.0 if other == 0 else zeta
            else:
                reward = 0.0
            x = (reward - zeta) / (1.0 - zeta)
            pa = pch[n]
            if not expert:
                ci = k if C > 1 else 0
                w[n, ci, a] *= math.exp(gamma * x / (pa * A))
                s = 0.0
                for b in range(A):
                    s += w[n, ci, b]
                if s > BIG:
                    for b in range(A):
                        w[n, ci, b] = max(w[n, ci, b] / s, TINY)
                    s = 0.0
                    for b in range(A):
                        s += w[n, ci, b]
                tot[n, ci] = s
                continue
            if variant == 2:
                f = gamma * x / (pa * A)
                if a > 0:
                    w[n, k, a - 1] *= math.exp(f)
                else:
                    e = math.exp(-f)
                    for r in range(R):
                        w[n, k, r] *= e
            else:
                wt = wts[n]
                p0 = py[n]
                e_y = 0.5 * p_min * (bonus / p0)
                if a == 0:
                    e_y += 0.5 * p_min * x / p0
                for r in range(R):
                    pr = mix * w[n, k, r] / wt + floor
                    probs[r] = pr
                for r in range(R):
                    pr = probs[r]
                    e_r = 0.5 * p_min * (bonus / pr)
                    if a == r + 1:
                        e_r += 0.5 * p_min * x / pr
                    w[n, k, r] *= math.exp(e_r - e_y)
            s = 0.0
            for r in range(R):
                s += w[n, k, r]
            tot[n, k] = s
            wt = 0.0
            for c in range(K):
                wt += tot[n, c]
            if wt > BIG or wt < 1.0 / BIG:
                for c in range(K):
                    s = 0.0
                    for r in range(R):
                        w[n, c, r] = max(w[n, c, r] / wt, TINY)
                        s += w[n, c, r]
                    tot[n, c] = s
        _close_step(t, K, R, n_succ_res, n_coll_res, stats, ring, frac_goal,
                    util_acc, coll_acc)
        if k == K - 1:
            _close_episode(t, K, ep_succ, stats)
    return t0 + nsteps
