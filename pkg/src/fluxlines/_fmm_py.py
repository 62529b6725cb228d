"""Pure-Python fast-marching kernel (reference implementation).

Solves the first-order upwind discretization of |grad u| = f on a regular
2-d grid by marching outward from seeded cells with a lazy-deletion binary
heap.  Semantics match ``_fmm_cy`` exactly; this module is the fallback
selected when the compiled extension is unavailable.
"""
from __future__ import annotations

import heapq
import math

import numpy as np

FAR, TRIAL, KNOWN, SEED = 0, 1, 2, 3


def march(f, h0, h1, seed_i, seed_j, seed_u):
    """March |grad u| = f outward from seeds.

    Parameters
    ----------
    f : (n0, n1) float array, nonnegative right-hand side at grid nodes.
    h0, h1 : grid spacings along axis 0 and axis 1.
    seed_i, seed_j, seed_u : seeded node indices and their fixed values.

    Returns
    -------
    u : (n0, n1) arrival values.
    order : (n0, n1) int64 acceptance ranks (0 = first accepted).
    """
    f = np.asarray(f, dtype=float)
    n0, n1 = f.shape
    u = np.full((n0, n1), np.inf)
    status = np.zeros((n0, n1), dtype=np.uint8)
    order = np.full((n0, n1), -1, dtype=np.int64)

    heap: list[tuple[float, int]] = []
    for i, j, val in zip(seed_i, seed_j, seed_u):
        i, j = int(i), int(j)
        u[i, j] = float(val)
        status[i, j] = SEED
        heapq.heappush(heap, (float(val), i * n1 + j))

    p = 1.0 / (h0 * h0)
    q = 1.0 / (h1 * h1)
    rank = 0

    while heap:
        _, idx = heapq.heappop(heap)
        ci, cj = divmod(idx, n1)
        if status[ci, cj] == KNOWN:
            continue
        status[ci, cj] = KNOWN
        order[ci, cj] = rank
        rank += 1

        for ni, nj in ((ci - 1, cj), (ci + 1, cj), (ci, cj - 1), (ci, cj + 1)):
            if not (0 <= ni < n0 and 0 <= nj < n1):
                continue
            st = status[ni, nj]
            if st == KNOWN or st == SEED:
                continue
            t = _update(u, status, f[ni, nj], ni, nj, n0, n1, h0, h1, p, q)
            if t < u[ni, nj]:
                u[ni, nj] = t
                status[ni, nj] = TRIAL
                heapq.heappush(heap, (t, ni * n1 + nj))

    return u, order


def _update(u, status, fc, i, j, n0, n1, h0, h1, p, q):
    ua = math.inf
    if i > 0 and status[i - 1, j] >= KNOWN:
        ua = u[i - 1, j]
    if i < n0 - 1 and status[i + 1, j] >= KNOWN and u[i + 1, j] < ua:
        ua = u[i + 1, j]
    ub = math.inf
    if j > 0 and status[i, j - 1] >= KNOWN:
        ub = u[i, j - 1]
    if j < n1 - 1 and status[i, j + 1] >= KNOWN and u[i, j + 1] < ub:
        ub = u[i, j + 1]

    if fc < 0.0:
        fc = 0.0

    if ua < math.inf and ub < math.inf:
        # two-sided Godunov update: (p+q) t^2 - 2(p ua + q ub) t + ... = 0
        s = p + q
        b = p * ua + q * ub
        c = p * ua * ua + q * ub * ub - fc * fc
        disc = b * b - s * c
        if disc >= 0.0:
            t = (b + math.sqrt(disc)) / s
            if t >= ua and t >= ub:
                return t
    return min(ua + fc * h0, ub + fc * h1)
