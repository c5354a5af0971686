"""Box distance between step kernels and its alignment-minimized version
between spaces.

A kernel lives on a grid of cells with masses; cell entries are reals
in [0, 1] or distributions on [0, 1].  The box distance is the least
``eps`` such that, after deleting a set of cells of total mass at most
``eps``, the two kernels differ by at most ``eps`` on every remaining
pair of cells (``d_ext`` for distribution entries).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .combinatorics import min_weight_vertex_cover, vertex_cover_bounds
from .core import (
    DELTA0,
    TOL,
    DiscreteDistribution,
    FiniteMMSpace,
    QMMSpace,
    Space,
    _check_weights,
    d_ext,
    effective_lower,
)
from .errors import (
    CoverBudgetExceeded,
    DimensionMismatch,
    GridMismatch,
    NonSymmetric,
    RefinementTooLarge,
)
from .sampling import GSystem

#: largest grid solved by exact vertex cover inside box1
COVER_LIMIT = 30


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridKernel:
    """Symmetric step kernel with zero diagonal on cells of given masses.

    ``cells`` is a float array (mm case) or an n x n tuple of
    :class:`DiscreteDistribution` (qmm case).
    """

    cells: object
    cell_weights: np.ndarray

    def __post_init__(self):
        w = _check_weights(self.cell_weights)
        w.setflags(write=False)
        object.__setattr__(self, "cell_weights", w)
        n = w.size
        if isinstance(self.cells, np.ndarray) and self.cells.dtype != object:
            c = np.array(self.cells, dtype=float)
            if c.shape != (n, n):
                raise DimensionMismatch(f"cells have shape {c.shape}, expected {(n, n)}")
            if np.any(c < 0) or np.any(c > 1) or np.any(np.diag(c) != 0):
                raise ValueError("cells must lie in [0, 1] with zero diagonal")
            if not np.array_equal(c, c.T):
                i, j = np.argwhere(c != c.T)[0]
                raise NonSymmetric(int(i), int(j))
            c.setflags(write=False)
            object.__setattr__(self, "cells", c)
        else:
            rows = tuple(tuple(self.cells[i][j] for j in range(n)) for i in range(n))
            if len(self.cells) != n:
                raise DimensionMismatch("cells must be n x n")
            for i in range(n):
                if rows[i][i] != DELTA0:
                    raise ValueError("diagonal cells must be the point mass at 0")
                for j in range(i):
                    if rows[i][j] != rows[j][i]:
                        raise NonSymmetric(i, j)
            object.__setattr__(self, "cells", rows)

    @property
    def n(self) -> int:
        return self.cell_weights.size

    @property
    def weights(self) -> np.ndarray:
        return self.cell_weights

    @property
    def is_distributional(self) -> bool:
        return not isinstance(self.cells, np.ndarray)

    def expectation_matrix(self, f) -> np.ndarray:
        """Cellwise ``<cell, f>``; lets moment functionals run on kernels."""
        if self.is_distributional:
            return np.array([[e.expect(f) for e in row] for row in self.cells])
        return f(self.cells)

    def entry(self, i, j) -> DiscreteDistribution:
        if self.is_distributional:
            return self.cells[i][j]
        return DiscreteDistribution.point_mass(self.cells[i, j])


def kernel_from_space(space: Space) -> GridKernel:
    if isinstance(space, QMMSpace):
        return GridKernel(space.dstar, space.weights)
    return GridKernel(np.asarray(space.dist), space.weights)


def deviation_matrix(f: GridKernel, g: GridKernel) -> np.ndarray:
    """Cellwise ``|f - g|`` (``d_ext`` when either kernel holds distributions)."""
    if f.n != g.n:
        raise GridMismatch(f"grid sizes differ: {f.n} vs {g.n}")
    if not np.array_equal(f.cell_weights, g.cell_weights):
        raise GridMismatch("cell weights differ; align the kernels on a common refinement first")
    if not (f.is_distributional or g.is_distributional):
        return np.abs(f.cells - g.cells)
    n = f.n
    dev = np.zeros((n, n))
    for i, j in combinations(range(n), 2):
        dev[i, j] = dev[j, i] = d_ext(f.entry(i, j), g.entry(i, j))
    return dev


# ---------------------------------------------------------------------------
# box distance
# ---------------------------------------------------------------------------

class Box1Result(NamedTuple):
    value: float
    cover: list  # deleted cells
    lo: float
    hi: float
    exact: bool


def _box1_from_deviation(dev, w, cover_limit=COVER_LIMIT, node_limit=200_000):
    n = w.size
    cands = np.unique(np.concatenate([[0.0], dev[np.triu_indices(n, 1)]]))
    exact = n <= cover_limit

    def cover_at(t, solver):
        adj = dev > t
        if solver == "exact":
            wt, cov = min_weight_vertex_cover(adj, w, node_limit=node_limit)
            return math.fsum(w[cov]), cov
        lo, hi, cov = vertex_cover_bounds(adj, w)
        return (lo, cov) if solver == "lp_lo" else (math.fsum(w[cov]), cov)

    def least_eps(solver):
        # first candidate index k with cover(cand_k) <= cand_k
        lo, hi = 0, cands.size - 1
        covers = {}
        while lo < hi:
            mid = (lo + hi) // 2
            covers[mid] = cover_at(cands[mid], solver)
            if covers[mid][0] <= cands[mid]:
                hi = mid
            else:
                lo = mid + 1
        k = lo
        if k not in covers:
            covers[k] = cover_at(cands[k], solver)
        if k == 0:
            return float(cands[0]), covers[0][1]
        if k - 1 not in covers:
            covers[k - 1] = cover_at(cands[k - 1], solver)
        prev_cost, prev_cov = covers[k - 1]
        if prev_cost < cands[k]:
            return float(prev_cost), prev_cov
        return float(cands[k]), covers[k][1]

    if exact:
        try:
            value, cover = least_eps("exact")
            return Box1Result(value, [int(c) for c in cover], value, value, True)
        except CoverBudgetExceeded:
            pass
    lo, _ = least_eps("lp_lo")
    hi, cover = least_eps("lp_hi")
    return Box1Result(hi, [int(c) for c in cover], lo, hi, False)


def box1_result(f: GridKernel, g: GridKernel, cover_limit: int = COVER_LIMIT,
                node_limit: int = 200_000) -> Box1Result:
    """Box distance with its deleted-cell witness.

    Up to ``cover_limit`` cells (and ``node_limit`` search nodes) the
    vertex cover at each threshold is solved exactly; beyond, the LP
    relaxation gives an interval ``[lo, hi]`` and ``exact`` is False.
    """
    dev = deviation_matrix(f, g)
    return _box1_from_deviation(dev, f.cell_weights, cover_limit, node_limit)


def box1(f: GridKernel, g: GridKernel) -> float:
    """Exact box distance.

    Raises
    ------
    GridMismatch
        when the grids or cell weights differ.
    CoverBudgetExceeded
        when only LP bounds are available (see :func:`box1_result`).
    """
    res = box1_result(f, g)
    if not res.exact:
        err = CoverBudgetExceeded(f"box1 only bounded to [{res.lo!r}, {res.hi!r}]",
                                  size=f.n, limit=COVER_LIMIT)
        err.interval = (res.lo, res.hi)
        raise err
    return res.value


# ---------------------------------------------------------------------------
# alignment search
# ---------------------------------------------------------------------------

@dataclass
class Alignment:
    """Coupling of two point sets: cell ``k`` pairs point ``cells[k][0]``
    of X with point ``cells[k][1]`` of Y and carries mass ``cells[k][2]``.
    ``order`` is the Y relabeling used by annealing (None in exact mode)."""

    cells: List[Tuple[int, int, float]]
    order: Optional[List[int]] = None
    mode: str = "exact"

    def to_dict(self):
        return {"mode": self.mode, "order": self.order,
                "cells": [[int(a), int(b), float(m)] for a, b, m in self.cells]}


class UnderlineBox1(NamedTuple):
    upper_bound: float
    alignment: Alignment
    exact: bool


@dataclass(frozen=True)
class AnnealBudget:
    iterations: int = 2000
    t_start: float = 0.05
    t_end: float = 1e-4
    cell_cap: int = 60


def _coupled_kernels(x: Space, y: Space, cells):
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    w = np.array([c[2] for c in cells])
    w = w / w.sum()
    dist = isinstance(x, QMMSpace) or isinstance(y, QMMSpace)

    def pull(space, idx):
        if isinstance(space, QMMSpace):
            return tuple(tuple(space.dstar[a][b] for b in idx) for a in idx)
        d = np.asarray(space.dist)[np.ix_(idx, idx)]
        if dist:
            return tuple(tuple(DiscreteDistribution.point_mass(v) for v in row) for row in d)
        return d

    return GridKernel(pull(x, xs), w), GridKernel(pull(y, ys), w)


def _coupling_value(x, y, cells, cover_limit=COVER_LIMIT):
    f, g = _coupled_kernels(x, y, cells)
    return box1_result(f, g, cover_limit=cover_limit)


def monotone_coupling(a, b):
    """Coupling of two weight vectors obtained by laying both out on [0, 1]
    in index order and intersecting the intervals."""
    ca = np.concatenate([[0.0], np.cumsum(a)])
    cb = np.concatenate([[0.0], np.cumsum(b)])
    ca[-1] = cb[-1] = 1.0
    cells = []
    i = j = 0
    lo = 0.0
    while i < len(a) and j < len(b):
        hi = min(ca[i + 1], cb[j + 1])
        if hi - lo > 1e-15:
            cells.append((i, j, hi - lo))
        lo = hi
        if ca[i + 1] <= hi:
            i += 1
        if cb[j + 1] <= hi:
            j += 1
    return cells


def vertex_couplings(a, b, limit=200_000):
    """Yield every vertex of the transport polytope of margins ``a`` and ``b``.

    Each vertex arises from repeatedly saturating some cell with the
    smaller of its row and column residuals.  Vertices come out lazily,
    the monotone (north-west corner) coupling first, each once, with
    cells sorted by (row, column).  Raises :class:`RefinementTooLarge`
    after ``limit`` partial couplings.
    """
    na, nb = len(a), len(b)
    seen = set()
    emitted = set()
    stack = [(tuple(float(x) for x in a), tuple(float(x) for x in b), frozenset())]
    while stack:
        ra, rb, assigned = stack.pop()
        if assigned in seen:
            continue
        seen.add(assigned)
        if len(seen) > limit:
            raise RefinementTooLarge(f"more than {limit} partial couplings explored",
                                     size=len(seen), limit=limit)
        rows = [i for i in range(na) if ra[i] > 1e-13]
        cols = [j for j in range(nb) if rb[j] > 1e-13]
        if not rows or not cols:
            cells = tuple(sorted(assigned))
            key = tuple((i, j, round(m, 12)) for i, j, m in cells)
            if key not in emitted:
                emitted.add(key)
                yield list(cells)
            continue
        children = []
        for i in rows:
            for j in cols:
                m = min(ra[i], rb[j])
                na_, nb_ = list(ra), list(rb)
                na_[i] = 0.0 if na_[i] - m <= 1e-13 else na_[i] - m
                nb_[j] = 0.0 if nb_[j] - m <= 1e-13 else nb_[j] - m
                children.append((tuple(na_), tuple(nb_), assigned | {(i, j, m)}))
        stack.extend(reversed(children))


def _orientation_key(space):
    return (space.n, tuple(np.asarray(space.weights).tolist()),
            tuple(effective_lower(space).ravel().tolist()), type(space).__name__)


def underline_box1(x: Space, y: Space, mode: str = "exact", budget: Optional[AnnealBudget] = None,
                   seed=0, exact_points: int = 8, vertex_limit: int = 200_000) -> UnderlineBox1:
    """Upper bound on the box distance minimized over measure-preserving
    alignments of the two spaces.

    ``mode="exact"`` minimizes over every vertex of the transport polytope
    of the two weight vectors (at most ``exact_points`` points per side
    and ``vertex_limit`` explored partial couplings); every coupling is
    dominated by such a vertex, so the result is the exact minimum.  The
    pair is processed in a canonical order, so swapping X and Y gives the
    same value bit for bit.  ``mode="anneal"`` runs simulated annealing
    over relabelings of Y, each scored on the monotone coupling.
    """
    if mode not in ("exact", "anneal"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and _orientation_key(y) < _orientation_key(x):
        res = underline_box1(y, x, mode, budget, seed, exact_points, vertex_limit)
        cells = [(j, i, m) for i, j, m in res.alignment.cells]
        return UnderlineBox1(res.upper_bound, Alignment(cells, None, "exact"), True)
    a = np.asarray(x.weights, dtype=float)
    b = np.asarray(y.weights, dtype=float)
    if mode == "exact":
        if max(a.size, b.size) > exact_points:
            raise RefinementTooLarge(
                f"exact alignment limited to {exact_points} points per space; "
                "quantize the weights or use mode='anneal'", size=max(a.size, b.size),
                limit=exact_points)
        best = None
        for cells in vertex_couplings(a, b, limit=vertex_limit):
            res = _coupling_value(x, y, cells)
            if best is None or res.value < best[0]:
                best = (res.value, list(cells))
                if res.value == 0.0:
                    break
        return UnderlineBox1(best[0], Alignment(best[1], None, "exact"), True)

    budget = budget or AnnealBudget()
    if a.size + b.size - 1 > budget.cell_cap:
        raise RefinementTooLarge(
            f"common refinement may reach {a.size + b.size - 1} cells (cap {budget.cell_cap}); "
            "quantize the weights first", size=a.size + b.size - 1, limit=budget.cell_cap)
    rng = np.random.default_rng(seed)

    def score(order):
        cells = [(i, int(order[j]), m) for i, j, m in monotone_coupling(a, b[order])]
        return _coupling_value(x, y, cells).value, cells

    order = np.arange(b.size)
    cur, cells = score(order)
    best = (cur, cells, order.copy())
    if b.size > 1:
        for it in range(budget.iterations):
            if best[0] == 0.0:
                break
            frac = it / max(1, budget.iterations - 1)
            temp = budget.t_start * (budget.t_end / budget.t_start) ** frac
            i, j = rng.choice(b.size, size=2, replace=False)
            cand = order.copy()
            cand[i], cand[j] = cand[j], cand[i]
            val, cand_cells = score(cand)
            if val <= cur or rng.random() < math.exp(-(val - cur) / temp):
                order, cur = cand, val
                if val < best[0]:
                    best = (val, cand_cells, cand.copy())
    return UnderlineBox1(best[0], Alignment(best[1], best[2].tolist(), "anneal"), False)


# ---------------------------------------------------------------------------
# moment continuity
# ---------------------------------------------------------------------------

def moment_discrepancy_bound(g: GSystem, eps: float, cover_mass: float,
                             lipschitz_K: Optional[float] = None) -> float:
    """Upper bound on ``|t(g, f1) - t(g, f2)|`` for kernels that are
    ``eps``-close outside a deleted set of mass ``cover_mass``.

    Two parts: tuples touching a bad pair (probability at most
    ``C(r+1, 2)`` times the mass ``1 - (1 - cover_mass)^2`` of the bad
    pairs), where the two products differ by at most ``2 c_g``; and the
    rest, where each factor moves by at most ``K eps`` and the products
    differ by at most ``K eps`` times the sum over pairs of the product of
    the other sup-norms.  ``lipschitz_K`` overrides the per-pair Lipschitz
    constants of ``g``.
    """
    if eps < 0 or not 0 <= cover_mass <= 1:
        raise ValueError("need eps >= 0 and cover_mass in [0, 1]")
    r = g.r
    pairs = g.pairs
    sups = np.array([g.func(a, b).sup_norm for a, b in pairs])
    lips = np.array([g.func(a, b).lipschitz if lipschitz_K is None else lipschitz_K
                     for a, b in pairs])
    diag = abs(g.diagonal_factor)
    bad_mass = 1.0 - (1.0 - cover_mass) ** 2
    measure_term = 2.0 * g.c_g * math.comb(r + 1, 2) * bad_mass
    others = np.array([np.prod(np.delete(sups, k)) for k in range(len(pairs))])
    close_term = float(eps * np.dot(lips, others)) if len(pairs) else 0.0
    return diag * (measure_term + close_term)
