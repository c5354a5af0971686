"""Exact branch-and-bound searches on small weighted graphs.

Vertex sets are Python ints used as bitmasks; graphs are boolean
adjacency matrices with no self-loops.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .errors import CoverBudgetExceeded


def _neighbor_masks(adj):
    adj = np.array(adj, dtype=bool)
    np.fill_diagonal(adj, False)
    return [sum(1 << int(j) for j in np.flatnonzero(row)) for row in adj]


def _bits(mask):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def max_weight_clique(adj, weights):
    """Heaviest clique of a vertex-weighted graph.

    Returns ``(weight, members)`` with ``members`` a sorted list.
    Vertices are branched in decreasing weight order; a branch is cut
    when its weight plus every remaining candidate cannot beat the best.
    """
    w = [float(x) for x in weights]
    n = len(w)
    if n == 0:
        return 0.0, []
    nbr = _neighbor_masks(adj)
    order = sorted(range(n), key=lambda v: -w[v])
    best = [0.0, 0]

    def mass(mask):
        return sum(w[v] for v in _bits(mask))

    def expand(clique, cw, cand):
        if cw > best[0]:
            best[0], best[1] = cw, clique
        if cw + mass(cand) <= best[0]:
            return
        for v in order:
            if not cand >> v & 1:
                continue
            if cw + mass(cand) <= best[0]:
                return
            expand(clique | 1 << v, cw + w[v], cand & nbr[v])
            cand &= ~(1 << v)

    expand(0, 0.0, (1 << n) - 1)
    return best[0], sorted(_bits(best[1]))


def greedy_clique(adj, weights):
    """Greedy heavy clique: a quick lower bound on the clique weight."""
    w = np.asarray(weights, dtype=float)
    adj = np.array(adj, dtype=bool)
    np.fill_diagonal(adj, False)
    best = (0.0, [])
    for start in np.argsort(-w):
        members = [int(start)]
        cand = adj[start].copy()
        while cand.any():
            v = int(np.flatnonzero(cand)[np.argmax(w[cand])])
            members.append(v)
            cand &= adj[v]
        total = float(w[members].sum())
        if total > best[0]:
            best = (total, sorted(members))
    return best


def _edge_packing(edges, residual):
    """Bar-Yehuda/Even edge packing.  Returns the packing value (a lower
    bound on the cover weight) and the tight vertices (a cover of weight
    at most twice the optimum)."""
    r = dict(residual)
    paid = 0.0
    for u, v in edges:
        if r[u] > 0 and r[v] > 0:
            p = min(r[u], r[v])
            r[u] -= p
            r[v] -= p
            paid += p
    tight = {v for v, x in r.items() if x <= 0}
    return paid, tight


def min_weight_vertex_cover(adj, weights, node_limit=200_000):
    """Exact minimum-weight vertex cover.

    Branches on a maximum-degree vertex ``v``: either ``v`` joins the
    cover or all of its neighbors do.  The edge-packing bound prunes and
    its 2-approximate cover seeds the incumbent.

    Returns ``(weight, cover)``.  Raises :class:`CoverBudgetExceeded`
    once more than ``node_limit`` search nodes were expanded.
    """
    w = [float(x) for x in weights]
    nbr = _neighbor_masks(adj)
    n = len(w)
    alive = (1 << n) - 1

    def edges_of(mask):
        return [(u, v) for u in _bits(mask) for v in _bits(nbr[u] & mask) if u < v]

    edges = edges_of(alive)
    if not edges:
        return 0.0, []
    _, tight = _edge_packing(edges, {v: w[v] for v in range(n)})
    cover0 = {v for v in tight if any(v in e for e in edges)}
    best = [sum(w[v] for v in cover0), sorted(cover0)]
    nodes = [0]

    def search(mask, chosen, cost):
        nodes[0] += 1
        if nodes[0] > node_limit:
            raise CoverBudgetExceeded(
                f"vertex cover search exceeded {node_limit} nodes", size=n, limit=node_limit)
        es = edges_of(mask)
        if not es:
            if cost < best[0]:
                best[0], best[1] = cost, sorted(_bits(chosen))
            return
        lb, _ = _edge_packing(es, {v: w[v] for v in _bits(mask)})
        if cost + lb >= best[0] - 1e-15:
            return
        deg = {}
        for u, v in es:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        v = max(deg, key=lambda x: (deg[x], -w[x]))
        # v in the cover
        search(mask & ~(1 << v), chosen | 1 << v, cost + w[v])
        # v outside: every live neighbor is in
        nb = nbr[v] & mask
        search(mask & ~nb & ~(1 << v), chosen | nb, cost + sum(w[u] for u in _bits(nb)))

    search(alive, 0, 0.0)
    return best[0], best[1]


def vertex_cover_bounds(adj, weights):
    """LP relaxation lower bound and rounded upper bound ``(lo, hi, cover)``
    for the minimum-weight vertex cover."""
    w = np.asarray(weights, dtype=float)
    adj = np.asarray(adj, dtype=bool)
    edges = np.argwhere(np.triu(adj, 1))
    if len(edges) == 0:
        return 0.0, 0.0, []
    a = np.zeros((len(edges), w.size))
    a[np.arange(len(edges)), edges[:, 0]] = -1
    a[np.arange(len(edges)), edges[:, 1]] = -1
    res = linprog(w, A_ub=a, b_ub=-np.ones(len(edges)), bounds=(0, 1), method="highs")
    cover = sorted(int(v) for v in np.flatnonzero(res.x >= 0.5 - 1e-9))
    return float(res.fun), float(w[cover].sum()), cover
