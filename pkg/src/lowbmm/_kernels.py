"""Compiled inner loops for the Mallows and lowBMM Metropolis-Hastings chains.

Every kernel consumes a pre-drawn block of uniforms so the Python
reference implementations can replay the exact same stream.  Uniform
layout per iteration:

* Mallows chain: ``[pick, target, accept]``
* lowBMM chain:  ``[pick, target, accept_rho, out_1..out_L, in_1..in_L, accept_set]``
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def support_size(r, m, l):
    """Number of admissible target ranks for an item currently at rank ``r``."""
    return min(m, r + l) - max(1, r - l)


@njit(cache=True, nogil=True)
def leap_target(r, m, l, u):
    lo = max(1, r - l)
    size = min(m, r + l) - lo
    k = int(u * size)
    if k >= size:
        k = size - 1
    t = lo + k
    if t >= r:
        t += 1
    return t


@njit(cache=True, nogil=True)
def leap_log_masses(r, t, m, l):
    """Log proposal mass of moving rank ``r`` to ``t`` and of the reverse move.

    An adjacent transposition is generated by two (item, target) pairs and
    its mass is the same in both directions.
    """
    s_r = support_size(r, m, l)
    s_t = support_size(t, m, l)
    if abs(t - r) == 1:
        p = 1.0 / (m * s_r) + 1.0 / (m * s_t)
        return math.log(p), math.log(p)
    return -math.log(m * s_r), -math.log(m * s_t)


@njit(cache=True, nogil=True)
def _shift_apply(pos, inv, mover, old, t):
    # pos[x] is the rank of x, inv[rank] the element holding it (inv is 1-based)
    if t > old:
        for q in range(old + 1, t + 1):
            x = inv[q]
            pos[x] = q - 1
            inv[q - 1] = x
    else:
        for q in range(old - 1, t - 1, -1):
            x = inv[q]
            pos[x] = q + 1
            inv[q + 1] = x
    pos[mover] = t
    inv[t] = mover


# --------------------------------------------------------------------------
# Mallows chain on P_m with footrule distance


@njit(cache=True, nogil=True)
def mallows_block(r, inv, rho, alpha, l, uniforms, step0, burn_in, thin, out, n_out):
    """Advance a Mallows(rho, alpha) chain over ``len(uniforms)`` steps.

    ``r`` and ``inv`` (1-based, length m + 1) are updated in place.  States
    at steps ``s > burn_in`` with ``(s - burn_in) % thin == 0`` are copied
    into ``out``.  Returns ``(n_out, accepted)``.
    """
    m = r.shape[0]
    scale = alpha / m
    accepted = 0
    for b in range(uniforms.shape[0]):
        step = step0 + b + 1
        if m > 1:
            old = int(uniforms[b, 0] * m) + 1
            if old > m:
                old = m
            mover = inv[old]
            t = leap_target(old, m, l, uniforms[b, 1])
            delta = abs(t - rho[mover]) - abs(old - rho[mover])
            if t > old:
                for q in range(old + 1, t + 1):
                    x = inv[q]
                    delta += abs(q - 1 - rho[x]) - abs(q - rho[x])
            else:
                for q in range(t, old):
                    x = inv[q]
                    delta += abs(q + 1 - rho[x]) - abs(q - rho[x])
            lf, lb = leap_log_masses(old, t, m, l)
            if uniforms[b, 2] < math.exp((lb - lf) - scale * delta):
                _shift_apply(r, inv, mover, old, t)
                accepted += 1
        if step > burn_in and (step - burn_in) % thin == 0 and n_out < out.shape[0]:
            out[n_out, :] = r
            n_out += 1
    return n_out, accepted


# --------------------------------------------------------------------------
# lowBMM chain over (rho, A*)


@njit(cache=True, nogil=True)
def fenwick_add(tree, i, v):
    n = tree.shape[0] - 1
    i += 1
    while i <= n:
        tree[i] += v
        i += i & (-i)


@njit(cache=True, nogil=True)
def fenwick_kth(tree, k):
    """0-based index of the (k+1)-th marked position."""
    n = tree.shape[0] - 1
    step = 1
    while step * 2 <= n:
        step *= 2
    pos = 0
    rem = k + 1
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] < rem:
            pos = nxt
            rem -= tree[nxt]
        step //= 2
    return pos


@njit(cache=True, nogil=True)
def fenwick_build(mask):
    n = mask.shape[0]
    tree = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        if mask[i]:
            fenwick_add(tree, i, 1)
    return tree


@njit(cache=True, nogil=True)
def _kth_remaining(chosen, n_chosen, k):
    # k-th (0-based) value of {0, 1, ...} that is not in chosen[:n_chosen];
    # chosen is kept sorted ascending
    c = k
    for i in range(n_chosen):
        if chosen[i] <= c:
            c += 1
    # insert keeping order
    j = n_chosen
    while j > 0 and chosen[j - 1] > c:
        chosen[j] = chosen[j - 1]
        j -= 1
    chosen[j] = c
    return c


@njit(cache=True, nogil=True)
def distance_total(RT, aset, rho, rr):
    total = 0
    n_star, N = rr.shape
    for s in range(n_star):
        rs = rho[s]
        for j in range(N):
            total += abs(rr[s, j] - rs)
    return total


@njit(cache=True, nogil=True)
def restricted_ranks(RT, aset):
    """``rr[s, j]``: rank of item ``aset[s]`` among the set, for assessor ``j``."""
    n_star = aset.shape[0]
    N = RT.shape[1]
    rr = np.ones((n_star, N), dtype=np.int64)
    for s in range(n_star):
        xs = RT[aset[s]]
        for q in range(n_star):
            xq = RT[aset[q]]
            for j in range(N):
                if xq[j] < xs[j]:
                    rr[s, j] += 1
    return rr


@njit(cache=True, nogil=True)
def lowbmm_block(RT, aset, rho, inv, rr, dist, tree, alpha, l, L,
                 uniforms, it0, burn_in, thin, orders, iters, n_out, trace, counts):
    """Run ``len(uniforms)`` iterations of the two-step lowBMM sampler.

    State (updated in place):
      aset[s]  item in slot s;  rho[s] its rank in 1..n*;  inv[k] slot holding rank k
      rr[s,j]  restricted rank of slot s for assessor j;  dist[0] total distance
      tree     Fenwick tree marking items outside the set
    ``counts`` accumulates [rho proposals, rho accepts, set proposals, set accepts].
    Returns the updated ``n_out``.
    """
    n_star, N = rr.shape
    scale = alpha / n_star
    out_rank = np.empty(L, dtype=np.int64)
    out_slot = np.empty(L, dtype=np.int64)
    out_item = np.empty(L, dtype=np.int64)
    in_item = np.empty(L, dtype=np.int64)
    chosen_r = np.empty(L, dtype=np.int64)
    is_out = np.zeros(n_star, dtype=np.bool_)
    new_rr = np.empty_like(rr)
    new_rho = np.empty_like(rho)
    cnt = np.empty(N, dtype=np.int64)
    do_trace = trace.shape[0] > 0

    for b in range(uniforms.shape[0]):
        it = it0 + b + 1
        u = uniforms[b]

        # ---- consensus update: leap-and-shift on rho
        if n_star > 1:
            old = int(u[0] * n_star) + 1
            if old > n_star:
                old = n_star
            mover = inv[old]
            t = leap_target(old, n_star, l, u[1])
            delta = 0
            for j in range(N):
                delta += abs(rr[mover, j] - t) - abs(rr[mover, j] - old)
            if t > old:
                for q in range(old + 1, t + 1):
                    s = inv[q]
                    for j in range(N):
                        delta += abs(rr[s, j] - (q - 1)) - abs(rr[s, j] - q)
            else:
                for q in range(t, old):
                    s = inv[q]
                    for j in range(N):
                        delta += abs(rr[s, j] - (q + 1)) - abs(rr[s, j] - q)
            lf, lb = leap_log_masses(old, t, n_star, l)
            counts[0] += 1
            if u[2] < math.exp((lb - lf) - scale * delta):
                _shift_apply(rho, inv, mover, old, t)
                dist[0] += delta
                counts[1] += 1

        # ---- relevant-set update: swap L members with L non-members
        n_out_items = tree.shape[0] - 1 - n_star
        if n_out_items > 0:
            for i in range(L):
                k = int(u[3 + i] * (n_star - i))
                if k >= n_star - i:
                    k = n_star - i - 1
                rk = _kth_remaining(chosen_r, i, k) + 1
                out_rank[i] = rk
                out_slot[i] = inv[rk]
                out_item[i] = aset[inv[rk]]
            for i in range(L):
                k = int(u[3 + L + i] * (n_out_items - i))
                if k >= n_out_items - i:
                    k = n_out_items - i - 1
                item = fenwick_kth(tree, k)
                in_item[i] = item
                fenwick_add(tree, item, -1)
            for i in range(L):
                fenwick_add(tree, in_item[i], 1)

            for s in range(n_star):
                is_out[s] = False
                new_rho[s] = rho[s]
            for i in range(L):
                is_out[out_slot[i]] = True

            new_dist = 0
            for s in range(n_star):
                if is_out[s]:
                    continue
                xs = RT[aset[s]]
                rs = new_rho[s]
                for j in range(N):
                    c = rr[s, j]
                    x = xs[j]
                    for i in range(L):
                        if RT[out_item[i], j] < x:
                            c -= 1
                        if RT[in_item[i], j] < x:
                            c += 1
                    new_rr[s, j] = c
                    new_dist += abs(c - rs)
            for i in range(L):
                s_in = out_slot[i]
                xb = RT[in_item[i]]
                for j in range(N):
                    cnt[j] = 1
                for s in range(n_star):
                    if is_out[s]:
                        continue
                    xs = RT[aset[s]]
                    for j in range(N):
                        if xs[j] < xb[j]:
                            cnt[j] += 1
                for i2 in range(L):
                    if i2 == i:
                        continue
                    xo = RT[in_item[i2]]
                    for j in range(N):
                        if xo[j] < xb[j]:
                            cnt[j] += 1
                rs = out_rank[i]
                for j in range(N):
                    new_rr[s_in, j] = cnt[j]
                    new_dist += abs(cnt[j] - rs)

            counts[2] += 1
            if u[3 + 2 * L] < math.exp(-scale * (new_dist - dist[0])):
                for i in range(L):
                    s_in = out_slot[i]
                    aset[s_in] = in_item[i]
                    fenwick_add(tree, in_item[i], -1)
                    fenwick_add(tree, out_item[i], 1)
                    # rho[s_in] keeps the vacated rank: incoming item i takes out_rank[i]
                rr[:, :] = new_rr
                dist[0] = new_dist
                counts[3] += 1

        if do_trace:
            trace[it - 1] = dist[0]
        if it > burn_in and (it - burn_in) % thin == 0 and n_out < orders.shape[0]:
            for k in range(1, n_star + 1):
                orders[n_out, k - 1] = aset[inv[k]]
            iters[n_out] = it
            n_out += 1
    return n_out
