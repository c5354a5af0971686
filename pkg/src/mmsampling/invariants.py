"""Partial diameter, observable diameter, separation distance and
1-Lipschitz maps for finite mm- and qmm-spaces.

For a qmm-space every check uses the lower matrix (entrywise infimum of
the support of the length distributions); on finite atoms the essential
infimum is the plain minimum.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.sparse.csgraph import connected_components

from .combinatorics import greedy_clique, max_weight_clique
from .core import (
    INTERVAL,
    TOL,
    DiscreteDistribution,
    FiniteMetric,
    FiniteMMSpace,
    PushforwardMeasure,
    QMMSpace,
    Space,
    Target,
    effective_lower,
)
from .errors import (
    BadTarget,
    CliqueSearchBudgetExceeded,
    DimensionMismatch,
    ExactBudgetExceeded,
    InfeasibleKappas,
    NotLipschitz,
    TooLarge,
)

#: largest support handled by the exact clique search
CLIQUE_LIMIT = 24
#: largest point count handled by exact separation
SEPARATION_LIMIT = 18
#: largest number of maps enumerated by obs_diam_exact_small
EXACT_MAPS_LIMIT = 10**7


# ---------------------------------------------------------------------------
# partial diameter
# ---------------------------------------------------------------------------

class PartialDiameter(NamedTuple):
    value: float
    approximate: bool
    support: list  # atoms (interval) or point indices (finite Y) of the optimal set


def _interval_pdiam(values, weights, kappa):
    order = np.argsort(values, kind="stable")
    v = np.asarray(values, dtype=float)[order]
    w = np.asarray(weights, dtype=float)[order]
    need = 1.0 - kappa - TOL
    if need <= 0:
        return 0.0, 0, 0
    pre = np.concatenate([[0.0], np.cumsum(w)])
    # ends[i]: smallest j+1 with mass(v[i..j]) >= need
    ends = np.searchsorted(pre, pre[:-1] + need, side="left")
    ok = ends <= v.size
    if not ok.any():
        return float(v[-1] - v[0]), 0, v.size - 1
    starts = np.flatnonzero(ok)
    widths = v[ends[starts] - 1] - v[starts]
    best = int(np.argmin(widths))
    i = int(starts[best])
    return float(widths[best]), i, int(ends[i] - 1)


def partial_diameter_result(measure: PushforwardMeasure, kappa: float, *,
                            strict: bool = False) -> PartialDiameter:
    """Smallest diameter of a set carrying mass at least ``1 - kappa``.

    Interval carrier: a minimal window over the sorted atoms.  Finite
    carrier: the smallest candidate distance whose threshold graph has a
    clique of mass at least ``1 - kappa``, found by exact clique search
    when the support has at most ``CLIQUE_LIMIT`` points and by a greedy
    clique (an upper bound, flagged approximate) otherwise, unless
    ``strict`` asks for an error instead.
    """
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    if isinstance(measure.measure, DiscreteDistribution):
        dist = measure.measure
        width, i, j = _interval_pdiam(dist.value_array, dist.weight_array, kappa)
        return PartialDiameter(width, False, list(dist.values[i:j + 1]))
    y = measure.carrier
    w = np.asarray(measure.measure, dtype=float)
    support = np.flatnonzero(w > 0)
    ws = w[support]
    d = y.dist[np.ix_(support, support)]
    need = 1.0 - kappa - TOL
    exact = support.size <= CLIQUE_LIMIT
    if not exact and strict:
        raise CliqueSearchBudgetExceeded(
            f"support of {support.size} points exceeds the exact limit {CLIQUE_LIMIT}",
            size=support.size, limit=CLIQUE_LIMIT)
    clique = max_weight_clique if exact else greedy_clique
    cands = np.unique(np.concatenate([[0.0], d[np.triu_indices(support.size, 1)]]))

    def feasible(D):
        mass, members = clique(d <= D + TOL, ws)
        return mass >= need, members

    lo, hi = 0, cands.size - 1
    ok, members = feasible(cands[hi])
    best = (cands[hi], members)
    while lo < hi:
        mid = (lo + hi) // 2
        ok, members = feasible(cands[mid])
        if ok:
            hi, best = mid, (cands[mid], members)
        else:
            lo = mid + 1
    return PartialDiameter(float(best[0]), not exact, [int(support[k]) for k in best[1]])


def partial_diameter(measure: PushforwardMeasure, kappa: float, *, strict: bool = False) -> float:
    return partial_diameter_result(measure, kappa, strict=strict).value


# ---------------------------------------------------------------------------
# Lipschitz maps and pushforwards
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class LipschitzWitness:
    """A map from the points of a space into a target.

    ``values`` holds target point indices (finite target) or reals in
    [0, 1] (interval).  ``slack`` is filled by :func:`lipschitz_check`.
    """

    target: Target
    values: np.ndarray
    slack: Optional[float] = None

    def __post_init__(self):
        v = np.asarray(self.values)
        self.values = v.astype(float) if self.target == INTERVAL else v.astype(int)

    def image_distances(self) -> np.ndarray:
        if self.target == INTERVAL:
            return np.abs(self.values[:, None] - self.values[None, :])
        return self.target.dist[np.ix_(self.values, self.values)]

    def to_dict(self):
        return {
            "target": ("interval" if self.target == INTERVAL
                       else {"dist": self.target.dist.tolist()}),
            "values": self.values.tolist(),
            "slack": self.slack,
        }


def lipschitz_check(space: Space, witness: LipschitzWitness):
    """Whether the witness map is 1-Lipschitz from the lower distances.

    Returns ``(ok, slack)`` where ``slack`` is the least
    ``lower(x_i, x_j) - d_Y(f(x_i), f(x_j))`` over pairs ``i < j``
    (``inf`` for a one-point space).
    """
    if witness.values.shape != (space.n,):
        raise DimensionMismatch(f"witness has {witness.values.size} values for {space.n} points")
    if witness.target != INTERVAL:
        if witness.values.min() < 0 or witness.values.max() >= witness.target.n:
            raise DimensionMismatch("witness labels out of range for the target")
    low = effective_lower(space)
    gap = low - witness.image_distances()
    iu = np.triu_indices(space.n, 1)
    slack = float(gap[iu].min()) if iu[0].size else float("inf")
    witness.slack = slack
    return slack >= -TOL, slack


def pushforward(space: Space, witness: LipschitzWitness,
                certified: bool = False) -> PushforwardMeasure:
    """Image of the space's measure under the witness map."""
    if certified:
        ok, slack = lipschitz_check(space, witness)
        if not ok:
            raise NotLipschitz(f"map is not 1-Lipschitz (slack {slack!r})")
    w = np.asarray(space.weights, dtype=float)
    if witness.target == INTERVAL:
        return PushforwardMeasure(INTERVAL, DiscreteDistribution.from_atoms(witness.values, w))
    masses = np.bincount(witness.values, weights=w, minlength=witness.target.n)
    return PushforwardMeasure(witness.target, masses / masses.sum())


# ---------------------------------------------------------------------------
# observable diameter
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchBudget:
    """Local-search effort for :func:`obs_diam`."""

    iterations: int = 300
    anchors: int = 64  # distance-to-point maps tried as starting points


class ObsDiamResult(NamedTuple):
    lower_bound: float
    witness: LipschitzWitness


def _check_target(target):
    if target == INTERVAL:
        return
    if not isinstance(target, FiniteMetric):
        raise BadTarget("target must be 'interval' or a FiniteMetric")
    if target.diameter > 1 + TOL:
        raise BadTarget(f"target diameter {target.diameter!r} exceeds 1")


def path_closure(d) -> np.ndarray:
    """Shortest-path metric below ``d`` (Floyd-Warshall)."""
    c = np.array(d, dtype=float)
    for k in range(c.shape[0]):
        np.minimum(c, c[:, k, None] + c[None, k, :], out=c)
    return c


def _interval_objective(f, w, kappa):
    return _interval_pdiam(f, w, kappa)[0]


def _obs_interval(space, kappa, budget, rng):
    w = np.asarray(space.weights, dtype=float)
    n = space.n
    low = effective_lower(space)
    dhat = path_closure(low) if isinstance(space, QMMSpace) else low
    anchors = np.arange(n)
    if n > budget.anchors:
        anchors = np.sort(rng.choice(n, size=budget.anchors, replace=False))
    best_f, best_v = np.zeros(n), 0.0
    for p in anchors:
        f = np.clip(dhat[p], 0.0, 1.0)
        v = _interval_objective(f, w, kappa)
        if v > best_v + 1e-15:
            best_f, best_v = f, v
    f, v = best_f.copy(), best_v
    for _ in range(budget.iterations):
        raise_ = rng.integers(2) == 0
        x = rng.integers(n)
        step = rng.uniform(0.0, 0.5)
        g = f.copy()
        # move one value, then take the smallest Lipschitz majorant
        # (raising) or the largest Lipschitz minorant (lowering)
        if raise_:
            g[x] = min(1.0, g[x] + step)
            g = np.max(g[None, :] - dhat, axis=1)
        else:
            g[x] = max(0.0, g[x] - step)
            g = np.min(g[None, :] + dhat, axis=1)
        g = np.clip(g, 0.0, 1.0)
        gv = _interval_objective(g, w, kappa)
        if gv >= v:
            f, v = g, gv
    return f, v


def _finite_objective(labels, w, target, kappa, cache):
    masses = np.bincount(labels, weights=w, minlength=target.n)
    key = tuple(np.round(masses, 12))
    if key not in cache:
        cache[key] = partial_diameter(PushforwardMeasure(target, masses), kappa)
    return cache[key]


def _obs_finite(space, target, kappa, budget, rng):
    w = np.asarray(space.weights, dtype=float)
    n, m = space.n, target.n
    low = effective_lower(space)
    dy = target.dist
    cache = {}
    labels = np.zeros(n, dtype=int)
    v = _finite_objective(labels, w, target, kappa, cache)
    dhat = path_closure(low)
    anchors = np.arange(n)
    if n > budget.anchors:
        anchors = np.sort(rng.choice(n, size=budget.anchors, replace=False))
    # two-label threshold maps around anchor points
    for p in anchors:
        order = np.argsort(dhat[p], kind="stable")
        for a in range(m):
            for b in range(m):
                if a == b:
                    continue
                for cut in (n // 2, max(1, n // 4), max(1, 3 * n // 4)):
                    cand = np.full(n, b)
                    cand[order[:cut]] = a
                    gap = low - dy[np.ix_(cand, cand)]
                    if gap[np.triu_indices(n, 1)].min(initial=1.0) < -TOL:
                        continue
                    cv = _finite_objective(cand, w, target, kappa, cache)
                    if cv > v:
                        labels, v = cand, cv
    for _ in range(budget.iterations):
        cand = labels.copy()
        y = rng.integers(m)
        if rng.random() < 0.5:
            cand[rng.integers(n)] = y
        else:
            p = rng.integers(n)
            radius = rng.uniform(0.0, 1.0)
            cand[dhat[p] <= radius] = y
        changed = np.flatnonzero(cand != labels)
        if changed.size == 0:
            continue
        if np.any(low[changed] - dy[np.ix_(cand[changed], cand)] < -TOL):
            continue
        cv = _finite_objective(cand, w, target, kappa, cache)
        if cv >= v:
            labels, v = cand, cv
    return labels, v


def obs_diam(space: Space, target: Target, kappa: float,
             budget: Optional[SearchBudget] = None, seed=0) -> ObsDiamResult:
    """Certified lower bound on the observable diameter.

    Starts from distance-to-point maps and improves them by local search
    (moves projected back onto the 1-Lipschitz maps for the interval,
    label changes that keep the map 1-Lipschitz for a finite target).
    The returned witness always passes :func:`lipschitz_check`, so the
    value is a partial diameter actually attained by a 1-Lipschitz map.
    The search for a given seed is a prefix of the search with a larger
    ``iterations`` budget, so the bound cannot decrease with the budget.
    """
    _check_target(target)
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    budget = budget or SearchBudget()
    rng = np.random.default_rng(seed)
    if space.n == 1:
        values = np.zeros(1)
        witness = LipschitzWitness(target, values if target == INTERVAL else values.astype(int))
        lipschitz_check(space, witness)
        return ObsDiamResult(0.0, witness)
    if target == INTERVAL:
        values, v = _obs_interval(space, kappa, budget, rng)
    else:
        values, v = _obs_finite(space, target, kappa, budget, rng)
    witness = LipschitzWitness(target, values)
    ok, _ = lipschitz_check(space, witness)
    if not ok:  # pragma: no cover - guarded by construction
        raise NotLipschitz("search produced a non-Lipschitz witness")
    return ObsDiamResult(partial_diameter(pushforward(space, witness), kappa), witness)


def obs_diam_exact_small(space: Space, target: FiniteMetric, kappa: float,
                         limit: int = EXACT_MAPS_LIMIT, return_witness: bool = False):
    """Exact observable diameter into a finite target by enumerating all
    ``|Y|**n`` maps and keeping the 1-Lipschitz ones."""
    _check_target(target)
    if target == INTERVAL:
        raise BadTarget("exact enumeration needs a finite target")
    n, m = space.n, target.n
    if m ** n > limit:
        raise TooLarge(f"{m}^{n} maps exceed the enumeration limit {limit}",
                       size=m ** n, limit=limit)
    w = np.asarray(space.weights, dtype=float)
    low = effective_lower(space)
    dy = target.dist
    iu, ju = np.triu_indices(n, 1)
    powers = m ** np.arange(n)
    cache = {}
    best_v, best_labels = -1.0, None
    batch = 1 << 16
    for start in range(0, m ** n, batch):
        codes = np.arange(start, min(start + batch, m ** n))
        labels = (codes[:, None] // powers[None, :]) % m
        ok = np.ones(codes.size, dtype=bool)
        for i, j in zip(iu, ju):
            ok &= dy[labels[:, i], labels[:, j]] <= low[i, j] + TOL
        labels = labels[ok]
        if labels.size == 0:
            continue
        masses = np.stack([(labels == y) @ w for y in range(m)], axis=1)
        keys, first = np.unique(np.round(masses, 12), axis=0, return_index=True)
        for key, k in zip(map(tuple, keys), first):
            if key not in cache:
                image = PushforwardMeasure(target, masses[k])
                cache[key] = partial_diameter(image, kappa, strict=True)
            if cache[key] > best_v:
                best_v, best_labels = cache[key], labels[k]
    if return_witness:
        witness = LipschitzWitness(target, best_labels)
        lipschitz_check(space, witness)
        return best_v, witness
    return best_v


# ---------------------------------------------------------------------------
# separation distance
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SeparationWitness:
    """Class label per point: 0 discards the point, ``1..N`` name classes."""

    assignment: np.ndarray
    delta: float
    masses: List[float] = field(default_factory=list)

    def to_dict(self):
        return {"assignment": self.assignment.tolist(), "delta": self.delta,
                "masses": list(self.masses)}


class SeparationResult(NamedTuple):
    delta: float
    witness: SeparationWitness
    mode: str


def _check_kappas(kappas):
    k = np.asarray(kappas, dtype=float)
    if k.ndim != 1 or k.size < 2:
        raise ValueError("need at least two kappas")
    if np.any(k <= 0) or np.any(k >= 1):
        raise ValueError("every kappa must lie in (0, 1)")
    if k.sum() > 1 + TOL:
        raise InfeasibleKappas(f"kappas sum to {float(k.sum())!r} > 1")
    return k


def _witness(labels, w, kappas, low, delta):
    masses = [float(w[labels == c + 1].sum()) for c in range(kappas.size)]
    return SeparationWitness(np.asarray(labels, dtype=int), float(delta), masses)


def check_separation_witness(space: Space, kappas, witness: SeparationWitness) -> bool:
    """Recheck class masses and cross-class distances against raw data."""
    k = np.asarray(kappas, dtype=float)
    low = effective_lower(space)
    w = np.asarray(space.weights, dtype=float)
    a = witness.assignment
    if a.shape != (space.n,) or a.min() < 0 or a.max() > k.size:
        return False
    for c in range(k.size):
        if w[a == c + 1].sum() < k[c] - TOL:
            return False
    cross = (a[:, None] != a[None, :]) & (a[:, None] > 0) & (a[None, :] > 0)
    return not np.any(low[cross] < witness.delta - TOL)


def _exact_feasible(low, w, kappas, delta):
    """Branch and bound over assignments; returns labels or None."""
    n, nc = w.size, kappas.size
    order = sorted(range(n), key=lambda i: -w[i])
    close = [sum(1 << j for j in range(n) if j != i and low[i, j] < delta - TOL) for i in range(n)]
    suffix = np.concatenate([np.cumsum(w[order][::-1])[::-1], [0.0]])
    labels = np.zeros(n, dtype=int)
    mass = np.zeros(nc)
    blocked = [0] * nc
    used = [False] * nc
    # equal kappas are interchangeable: open them in index order only
    twin = [next((d for d in range(c) if kappas[d] == kappas[c]), None) for c in range(nc)]

    def deficit():
        return float(np.maximum(kappas - mass, 0.0).sum())

    def go(pos):
        need = deficit()
        if need <= TOL * nc:
            return True
        if need > suffix[pos] + TOL * nc or pos == n:
            return False
        x = order[pos]
        classes = sorted(range(nc), key=lambda c: -(kappas[c] - mass[c]))
        for c in classes:
            if blocked[c] >> x & 1:
                continue
            if not used[c] and twin[c] is not None and not used[twin[c]]:
                continue
            saved = blocked[:]
            was_used = used[c]
            for d in range(nc):
                if d != c:
                    blocked[d] |= close[x]
            labels[x] = c + 1
            mass[c] += w[x]
            used[c] = True
            if go(pos + 1):
                return True
            mass[c] -= w[x]
            labels[x] = 0
            used[c] = was_used
            blocked[:] = saved
        return go(pos + 1)

    return labels.copy() if go(0) else None


def _greedy_cover(comps, cw, kappas):
    """Assign whole components to classes; returns component labels or None."""
    deficit = kappas.copy()
    lab = np.zeros(len(cw), dtype=int)
    free = set(range(len(cw)))
    while True:
        open_ = np.flatnonzero(deficit > TOL)
        if open_.size == 0:
            return lab
        c = int(open_[np.argmax(deficit[open_])])
        if not free:
            return None
        enough = [k for k in free if cw[k] >= deficit[c] - TOL]
        k = min(enough, key=lambda k: cw[k]) if enough else max(free, key=lambda k: cw[k])
        lab[k] = c + 1
        deficit[c] -= cw[k]
        free.discard(k)


def _heuristic_feasible(low, w, kappas, delta):
    n = w.size
    keep = np.ones(n, dtype=bool)

    def attempt(mask):
        idx = np.flatnonzero(mask)
        adj = (low[np.ix_(idx, idx)] < delta - TOL)
        ncomp, comp = connected_components(adj, directed=False)
        cw = np.bincount(comp, weights=w[idx], minlength=ncomp)
        lab = _greedy_cover(None, cw, kappas)
        if lab is None:
            return None
        labels = np.zeros(n, dtype=int)
        labels[idx] = lab[comp]
        return labels

    labels = attempt(keep)
    if labels is not None:
        return labels
    # local search: discard single points that glue components together
    for x in np.argsort(w):
        keep[x] = False
        labels = attempt(keep)
        if labels is not None:
            return labels
        keep[x] = True
    return None


def separation(space: Space, kappas: Sequence[float], mode: str = "exact",
               limit: int = SEPARATION_LIMIT) -> SeparationResult:
    """Largest ``delta`` admitting disjoint classes of masses at least
    ``kappas`` whose cross-class distances are all at least ``delta``.

    Candidates are 0 and the pairwise (lower) distances; the supremum is
    attained among them.  ``mode="exact"`` binary-searches the candidates
    with an exact feasibility search (at most ``limit`` points);
    ``mode="heuristic"`` uses component merging and greedy covering, so
    its value is a certified lower bound.

    Raises
    ------
    InfeasibleKappas
        when no assignment works even at ``delta = 0``.
    ExactBudgetExceeded
        in exact mode above ``limit`` points.
    """
    k = _check_kappas(kappas)
    if mode not in ("exact", "heuristic"):
        raise ValueError(f"unknown mode {mode!r}")
    low = effective_lower(space)
    w = np.asarray(space.weights, dtype=float)
    n = space.n
    if mode == "exact" and n > limit:
        raise ExactBudgetExceeded(f"exact separation limited to {limit} points, got {n}",
                                  size=n, limit=limit)
    cands = np.unique(np.concatenate([[0.0], low[np.triu_indices(n, 1)]]))
    feasible = _exact_feasible if mode == "exact" else _heuristic_feasible
    base = feasible(low, w, k, 0.0)
    if base is None and mode == "heuristic" and n <= limit:
        base = _exact_feasible(low, w, k, 0.0)
    if base is None:
        raise InfeasibleKappas("no disjoint classes reach the requested masses")
    lo, hi = 0, cands.size - 1
    best = (0.0, base)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        labels = feasible(low, w, k, cands[mid])
        if labels is not None:
            lo, best = mid, (cands[mid], labels)
        else:
            hi = mid - 1
    delta, labels = best
    return SeparationResult(float(delta), _witness(labels, w, k, low, delta), mode)
