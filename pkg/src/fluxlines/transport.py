"""Discrete metric transportation problem over sources x sinks.

Solved exactly by the transportation simplex (network simplex on the
bipartite supply/demand graph) with Bland's anti-cycling rule; instance
sizes here are tiny, so exactness and dual extraction matter more than
speed.  ``brute_force_transport`` enumerates the vertices of the feasible
polytope and serves as the independent oracle.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import TooLarge, Unbalanced

__all__ = [
    "CostMatrix",
    "TransportPlan",
    "DualPotentials",
    "solve_transport",
    "brute_force_transport",
    "check_complementary_slackness",
    "dual_feasibility_defect",
]

BRUTE_FORCE_CAP = 12


@dataclass(frozen=True)
class CostMatrix:
    """Costs over sources x sinks, plus the symmetric all-pairs distance
    table among every problem point (used to certify dual feasibility
    beyond the source-sink rectangle)."""

    entries: np.ndarray  # (m, n) nonnegative
    source_ids: np.ndarray  # global point indices of the rows
    sink_ids: np.ndarray  # global point indices of the columns
    all_pairs: Optional[np.ndarray] = None  # (n_total, n_total) symmetric


@dataclass(frozen=True)
class TransportPlan:
    A: np.ndarray  # (m, n) nonnegative
    W: float
    support: tuple[tuple[int, int], ...]  # local (row, col) with A > 0


@dataclass(frozen=True)
class DualPotentials:
    """Node potentials over all problem points.

    ``phi`` satisfies sum(lambda * phi) = W; when an all-pairs table is
    available it is additionally repaired to be 1-Lipschitz with respect to
    that table (up to the table's own triangle-inequality defect).
    """

    phi: np.ndarray  # (n_total,)
    row: np.ndarray  # (m,) LP row potentials u
    col: np.ndarray  # (n,) LP column potentials v


def _check_balance(a: np.ndarray, b: np.ndarray) -> None:
    scale = max(float(np.abs(a).max(initial=0.0)), float(np.abs(b).max(initial=0.0)))
    if scale == 0.0 or abs(a.sum() - b.sum()) > 1e-9 * scale:
        raise Unbalanced(
            f"marginals do not balance: supply {a.sum():.12g} vs demand {b.sum():.12g}"
        )


def _northwest_corner(a, b):
    m, n = len(a), len(b)
    A = np.zeros((m, n))
    basis = []
    a = a.copy()
    b = b.copy()
    i = j = 0
    while len(basis) < m + n - 1:
        basis.append((i, j))
        move = min(a[i], b[j])
        A[i, j] = move
        a[i] -= move
        b[j] -= move
        if i == m - 1 and j == n - 1:
            break
        # on ties advance the row, keeping the basis a spanning tree
        if a[i] <= b[j] and i < m - 1:
            i += 1
        else:
            j += 1
    return A, basis


def _tree_potentials(c, basis, m, n):
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    adj_row = [[] for _ in range(m)]
    adj_col = [[] for _ in range(n)]
    for i, j in basis:
        adj_row[i].append(j)
        adj_col[j].append(i)
    u[0] = 0.0
    stack = [("r", 0)]
    while stack:
        kind, k = stack.pop()
        if kind == "r":
            for j in adj_row[k]:
                if np.isnan(v[j]):
                    v[j] = c[k, j] - u[k]
                    stack.append(("c", j))
        else:
            for i in adj_col[k]:
                if np.isnan(u[i]):
                    u[i] = c[i, k] - v[k]
                    stack.append(("r", i))
    return u, v


def _find_cycle(basis, enter, m, n):
    """Alternating path through the basis tree joining the entering cell's
    row node to its column node; returned as the edge list of the cycle."""
    ei, ej = enter
    adj = {("r", i): [] for i in range(m)}
    adj.update({("c", j): [] for j in range(n)})
    for i, j in basis:
        adj[("r", i)].append(("c", j))
        adj[("c", j)].append(("r", i))
    # DFS from the entering row node to the entering column node
    start, goal = ("r", ei), ("c", ej)
    parent = {start: None}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for nxt in adj[node]:
            if nxt not in parent:
                parent[nxt] = node
                stack.append(nxt)
    path_nodes = [goal]
    while path_nodes[-1] != start:
        path_nodes.append(parent[path_nodes[-1]])
    path_nodes.reverse()  # r(ei) ... c(ej)
    edges = []
    for a, b in zip(path_nodes[:-1], path_nodes[1:]):
        (ka, va), (kb, vb) = a, b
        edges.append((va, vb) if ka == "r" else (vb, va))
    return edges


def _simplex(c, a, b):
    m, n = c.shape
    A, basis = _northwest_corner(a, b)
    tol = 1e-12 * (1.0 + float(np.abs(c).max()))
    max_iter = 200 * (m + n) * max(m, n)

    for _ in range(max_iter):
        u, v = _tree_potentials(c, basis, m, n)
        reduced = c - u[:, None] - v[None, :]
        basis_set = set(basis)
        enter = None
        for flat in range(m * n):  # Bland: lowest-index entering variable
            i, j = divmod(flat, n)
            if (i, j) not in basis_set and reduced[i, j] < -tol:
                enter = (i, j)
                break
        if enter is None:
            return A, basis, u, v
        path = _find_cycle(basis, enter, m, n)
        # entering edge gets +theta; path edges alternate -, +, ... from the row end
        minus = path[0::2]
        theta = min(A[e] for e in minus)
        leave = min((e for e in minus if A[e] <= theta), key=lambda e: e[0] * n + e[1])
        A[enter] += theta
        sign = -1.0
        for e in path:
            A[e] += sign * theta
            sign = -sign
        A[leave] = 0.0
        basis[basis.index(leave)] = enter
    raise RuntimeError("transportation simplex failed to terminate")  # pragma: no cover


def _repair_duals(phi: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Tightest majorant of phi that is 1-Lipschitz w.r.t. the table."""
    return np.min(phi[None, :] + table, axis=1)


def solve_transport(cost: CostMatrix, supplies, demands) -> tuple[TransportPlan, DualPotentials]:
    """Exact optimal plan, cost, and Kantorovich dual potentials.

    ``supplies``/``demands`` are positive magnitudes (source outflows and
    sink inflows).  The duals are read off the optimal spanning-tree basis
    and, when the cost matrix carries the all-pairs table, repaired to be
    feasible over every point pair.
    """
    a = np.asarray(supplies, dtype=float)
    b = np.asarray(demands, dtype=float)
    c = np.asarray(cost.entries, dtype=float)
    if c.shape != (len(a), len(b)):
        raise ValueError(f"cost shape {c.shape} does not match marginals {len(a)}x{len(b)}")
    _check_balance(a, b)

    A, basis, u, v = _simplex(c, a, b)
    W = float(np.sum(A * c))
    support = tuple((i, j) for i, j in sorted(basis) if A[i, j] > 0.0)

    n_total = len(a) + len(b)
    phi = np.empty(n_total)
    phi[cost.source_ids] = u
    phi[cost.sink_ids] = -v
    if cost.all_pairs is not None:
        phi = _repair_duals(phi, cost.all_pairs)
    duals = DualPotentials(phi=phi, row=u, col=v)
    plan = TransportPlan(A=A, W=W, support=support)
    return plan, duals


def brute_force_transport(cost: CostMatrix, supplies, demands) -> TransportPlan:
    """Exact optimum by enumerating the basic feasible solutions (spanning
    trees of the bipartite graph).  Oracle only; capped at m*n <= 12."""
    a = np.asarray(supplies, dtype=float)
    b = np.asarray(demands, dtype=float)
    c = np.asarray(cost.entries, dtype=float)
    m, n = c.shape
    if m * n > BRUTE_FORCE_CAP:
        raise TooLarge(f"brute force capped at {BRUTE_FORCE_CAP} cells, got {m * n}")
    _check_balance(a, b)

    cells = [(i, j) for i in range(m) for j in range(n)]
    best_W = np.inf
    best_A = None
    for subset in combinations(cells, m + n - 1):
        A = _solve_tree_flows(subset, a, b, m, n)
        if A is None:
            continue
        W = float(np.sum(A * c))
        if W < best_W - 1e-15:
            best_W = W
            best_A = A
    if best_A is None:  # pragma: no cover - balanced instances always have a vertex
        raise RuntimeError("no feasible spanning tree found")
    support = tuple(
        (i, j) for i in range(m) for j in range(n) if best_A[i, j] > 0.0
    )
    return TransportPlan(A=best_A, W=best_W, support=support)


def _solve_tree_flows(edges, a, b, m, n):
    """Flows on a candidate spanning tree via leaf stripping; None when the
    edge set is not a tree or the flows go negative."""
    deg = np.zeros(m + n, dtype=int)  # rows 0..m-1, cols m..m+n-1
    for i, j in edges:
        deg[i] += 1
        deg[m + j] += 1
    if np.any(deg == 0):
        return None

    A = np.zeros((m, n))
    rem_a = a.copy()
    rem_b = b.copy()
    alive = set(edges)
    incident = {k: [] for k in range(m + n)}
    for i, j in edges:
        incident[i].append((i, j))
        incident[m + j].append((i, j))

    for _ in range(len(edges)):
        leaf = next((k for k in range(m + n) if deg[k] == 1), None)
        if leaf is None:
            return None  # cycle remains: not a tree
        edge = next(e for e in incident[leaf] if e in alive)
        i, j = edge
        flow = rem_a[i] if leaf < m else rem_b[j]
        if flow < -1e-12 * (1.0 + np.abs(a).max()):
            return None
        A[i, j] = max(flow, 0.0)
        rem_a[i] -= flow
        rem_b[j] -= flow
        alive.remove(edge)
        deg[i] -= 1
        deg[m + j] -= 1
    return A


def check_complementary_slackness(
    plan: TransportPlan, duals: DualPotentials, cost: CostMatrix, lp_tol: float = 1e-9
) -> float:
    """Max defect |(phi_i - phi_j) - c_ij| over carrying cells A_ij > lp_tol."""
    worst = 0.0
    phi = duals.phi
    for i, j in zip(*np.nonzero(plan.A > lp_tol)):
        gi = cost.source_ids[i]
        gj = cost.sink_ids[j]
        worst = max(worst, abs((phi[gi] - phi[gj]) - cost.entries[i, j]))
    return worst


def dual_feasibility_defect(duals: DualPotentials, table: np.ndarray) -> float:
    """Largest positive part of |phi_j - phi_k| - table[j, k] over all pairs."""
    phi = duals.phi
    gap = np.abs(phi[:, None] - phi[None, :]) - table
    return float(max(gap.max(), 0.0))
