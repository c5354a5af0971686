"""Finite metric measure spaces, quantum (distribution-valued) variants,
and the elementary metrics on them.

All containers are immutable: numpy arrays held by them are flagged
read-only, and operations return new objects.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence, Union

import numpy as np

from .errors import (
    BadDistance,
    BadDistribution,
    BadWeights,
    DimensionMismatch,
    NonSymmetric,
    SelfLoop,
    TriangleViolation,
    ZeroMultiplicity,
)

#: absolute tolerance for every metric axiom check
TOL = 1e-12
#: atoms closer than this are merged by canonicalization
MERGE_TOL = 1e-12
#: atoms lighter than this are dropped by canonicalization
DROP_TOL = 1e-15
# accepted drift of user-supplied weight sums before renormalizing
_INPUT_SUM_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _check_weights(weights):
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise BadWeights(0, "weights must be a non-empty 1-d sequence")
    bad = np.flatnonzero(~(w > 0) | ~np.isfinite(w))
    if bad.size:
        raise BadWeights(int(bad[0]))
    if abs(w.sum() - 1.0) > _INPUT_SUM_TOL:
        raise BadWeights(int(w.size - 1), f"weights sum to {float(w.sum())!r}, not 1")
    # leave already-normalized input untouched so validation is idempotent
    return w if abs(w.sum() - 1.0) <= TOL else w / w.sum()


# ---------------------------------------------------------------------------
# distributions on [0, 1]
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely supported probability measure on [0, 1].

    Always held in canonical form: values strictly increasing, atoms
    closer than ``MERGE_TOL`` merged, atoms lighter than ``DROP_TOL``
    dropped and the rest renormalized.  Two distributions compare equal
    iff their canonical atom lists coincide.
    """

    values: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.values) != len(self.weights) or not self.values:
            raise BadDistribution("values and weights must be non-empty and of equal length")

    @classmethod
    def from_atoms(cls, values, weights=None) -> "DiscreteDistribution":
        v = np.atleast_1d(np.asarray(values, dtype=float))
        if weights is None:
            w = np.full(v.shape, 1.0 / v.size)
        else:
            w = np.atleast_1d(np.asarray(weights, dtype=float))
        if v.shape != w.shape or v.ndim != 1 or v.size == 0:
            raise BadDistribution("values and weights must be non-empty 1-d arrays of equal length")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
            raise BadDistribution("non-finite atom")
        if np.any(v < -TOL) or np.any(v > 1 + TOL):
            raise BadDistribution("atom values must lie in [0, 1]")
        if np.any(w < 0):
            raise BadDistribution("atom weights must be non-negative")
        if abs(w.sum() - 1.0) > _INPUT_SUM_TOL:
            raise BadDistribution(f"atom weights sum to {float(w.sum())!r}, not 1")
        v = np.clip(v, 0.0, 1.0)
        order = np.argsort(v, kind="stable")
        v, w = v[order], w[order]
        vals, wts = [], []
        for x, p in zip(v, w):
            if vals and x - vals[-1] <= MERGE_TOL:
                wts[-1] += p
            else:
                vals.append(float(x))
                wts.append(float(p))
        keep = [i for i, p in enumerate(wts) if p >= DROP_TOL]
        if not keep:
            raise BadDistribution("all atoms dropped")
        total = sum(wts[i] for i in keep)
        if abs(total - 1.0) <= TOL:
            total = 1.0
        return cls(tuple(vals[i] for i in keep), tuple(wts[i] / total for i in keep))

    @classmethod
    def point_mass(cls, x: float) -> "DiscreteDistribution":
        return cls.from_atoms([x], [1.0])

    @property
    def atoms(self):
        return list(zip(self.values, self.weights))

    @property
    def value_array(self) -> np.ndarray:
        return np.asarray(self.values)

    @property
    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights)

    @property
    def lower(self) -> float:
        """Infimum of the support."""
        return self.values[0]

    @property
    def upper(self) -> float:
        """Supremum of the support."""
        return self.values[-1]

    @property
    def is_point_mass(self) -> bool:
        return len(self.values) == 1

    def expect(self, func) -> float:
        """Exact integral of a vectorized function against the measure."""
        return float(np.dot(self.weight_array, func(self.value_array)))

    def mean(self) -> float:
        return float(np.dot(self.weights, self.values))

    def cdf(self, t):
        c = np.cumsum(self.weights)
        idx = np.searchsorted(self.values, t, side="right")
        return np.where(idx > 0, c[np.maximum(idx - 1, 0)], 0.0)

    def sample(self, rng: np.random.Generator, size=None):
        return rng.choice(self.value_array, size=size, p=self.weight_array)


DELTA0 = DiscreteDistribution.point_mass(0.0)


def d_ext(mu: DiscreteDistribution, nu: DiscreteDistribution) -> float:
    """Kantorovich-Rubinstein distance of two distributions on [0, 1].

    Equal to the integral over [0, 1] of ``|F_mu - F_nu|``; both CDFs
    are step functions so the integral is a finite sum.
    """
    grid = np.union1d(mu.value_array, nu.value_array)
    if grid.size < 2:
        return 0.0
    gap = np.abs(mu.cdf(grid[:-1]) - nu.cdf(grid[:-1]))
    return float(np.dot(gap, np.diff(grid)))


# ---------------------------------------------------------------------------
# finite mm-spaces
# ---------------------------------------------------------------------------

def _first_triangle_violation(d, tol=TOL):
    n = d.shape[0]
    for i in range(n):
        # bad[j, k] <=> d[i, k] > d[i, j] + d[j, k]
        bad = d[i][None, :] > d[i][:, None] + d + tol
        if bad.any():
            j, k = np.argwhere(bad)[0]
            return i, int(j), int(k)
    return None


def _check_distance_matrix(dist, n, pseudometric):
    d = np.asarray(dist, dtype=float)
    if d.shape != (n, n):
        raise DimensionMismatch(f"distance matrix has shape {d.shape}, expected {(n, n)}")
    if not np.all(np.isfinite(d)):
        i, j = np.argwhere(~np.isfinite(d))[0]
        raise BadDistance(int(i), int(j), "non-finite distance")
    out = (d < -TOL) | (d > 1 + TOL)
    if out.any():
        i, j = np.argwhere(out)[0]
        raise BadDistance(int(i), int(j), "distance outside [0, 1]")
    diag = np.flatnonzero(np.abs(np.diag(d)) > TOL)
    if diag.size:
        raise BadDistance(int(diag[0]), int(diag[0]), "nonzero diagonal")
    asym = np.abs(d - d.T) > TOL
    if asym.any():
        i, j = np.argwhere(asym)[0]
        raise NonSymmetric(int(i), int(j))
    if not pseudometric:
        zero = (d <= TOL) & ~np.eye(n, dtype=bool)
        if zero.any():
            i, j = np.argwhere(zero)[0]
            raise BadDistance(int(i), int(j), "zero distance between distinct points")
    tri = _first_triangle_violation(d)
    if tri is not None:
        raise TriangleViolation(*tri)
    d = np.clip((d + d.T) / 2, 0.0, 1.0)
    np.fill_diagonal(d, 0.0)
    return d


@dataclass(frozen=True, eq=False)
class FiniteMMSpace:
    """Weighted finite metric space of diameter at most one.

    ``pseudometric`` spaces may have zero distance between distinct
    points (blow-ups and sampled matrices produce these).
    """

    weights: np.ndarray
    dist: np.ndarray
    pseudometric: bool = False

    @property
    def n(self) -> int:
        return self.weights.size

    def __eq__(self, other):
        if not isinstance(other, FiniteMMSpace):
            return NotImplemented
        return (self.pseudometric == other.pseudometric
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.dist, other.dist))

    __hash__ = None


def new_finite_mm(weights, dist, pseudometric: bool = False) -> FiniteMMSpace:
    """Validate and build a :class:`FiniteMMSpace`.

    Raises
    ------
    BadWeights, BadDistance, NonSymmetric, TriangleViolation
        naming the first offending index (set).
    """
    w = _check_weights(weights)
    d = _check_distance_matrix(dist, w.size, pseudometric)
    return FiniteMMSpace(_frozen(w), _frozen(d), pseudometric)


def from_graph(adjacency) -> FiniteMMSpace:
    """mm-space of a finite simple graph: adjacent vertices at distance 1/2,
    all other distinct pairs at distance 1, uniform measure."""
    a = np.asarray(adjacency).astype(bool)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionMismatch("adjacency must be a non-empty square matrix")
    loops = np.flatnonzero(np.diag(a))
    if loops.size:
        raise SelfLoop(int(loops[0]))
    asym = a != a.T
    if asym.any():
        i, j = np.argwhere(asym)[0]
        raise NonSymmetric(int(i), int(j))
    n = a.shape[0]
    d = np.where(a, 0.5, 1.0)
    np.fill_diagonal(d, 0.0)
    return new_finite_mm(np.full(n, 1.0 / n), d)


def graph_adjacency(n: int, edges) -> np.ndarray:
    a = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        if i == j:
            raise SelfLoop(int(i))
        a[i, j] = a[j, i] = True
    return a


def complete_graph_space(n: int) -> FiniteMMSpace:
    return from_graph(~np.eye(n, dtype=bool))


def sphere_space(points) -> FiniteMMSpace:
    """Uniformly weighted point cloud on a unit sphere, geodesic distance
    scaled by 1/pi so the sphere has diameter 1.

    Points are normalized first.  Angles use ``2 atan2(|u-v|, |u+v|)``,
    which stays accurate near 0 and near pi.
    """
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[0] < 1:
        raise DimensionMismatch("points must be a (count, dim+1) array")
    p = p / np.linalg.norm(p, axis=1, keepdims=True)
    n = p.shape[0]
    d = np.empty((n, n))
    for i in range(n):
        diff = np.linalg.norm(p - p[i], axis=1)
        summ = np.linalg.norm(p + p[i], axis=1)
        d[i] = 2.0 * np.arctan2(diff, summ) / np.pi
    d = np.clip((d + d.T) / 2, 0.0, 1.0)
    np.fill_diagonal(d, 0.0)
    pseudo = bool(np.any((d <= TOL) & ~np.eye(n, dtype=bool)))
    return new_finite_mm(np.full(n, 1.0 / n), d, pseudometric=pseudo)


def sphere_empirical(dim: int, count: int, seed: int) -> FiniteMMSpace:
    """``count`` i.i.d. uniform points on the ``dim``-sphere in R^(dim+1)."""
    if dim < 1 or count < 2:
        raise ValueError("need dim >= 1 and count >= 2")
    rng = np.random.default_rng(seed)
    return sphere_space(rng.standard_normal((count, dim + 1)))


# ---------------------------------------------------------------------------
# quantum mm-spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QMMSpace:
    """Weighted point set whose pairwise lengths are distributions on [0, 1]."""

    weights: np.ndarray
    dstar: tuple  # n x n tuple of tuples of DiscreteDistribution

    @property
    def n(self) -> int:
        return self.weights.size

    def __eq__(self, other):
        if not isinstance(other, QMMSpace):
            return NotImplemented
        return np.array_equal(self.weights, other.weights) and self.dstar == other.dstar

    __hash__ = None


def new_qmm(weights, dstar, require_triangle: bool = True) -> QMMSpace:
    """Validate and build a :class:`QMMSpace`.

    With ``require_triangle`` the almost-sure triangle inequality is
    enforced through :func:`validate_qmm`.
    """
    w = _check_weights(weights)
    n = w.size
    if len(dstar) != n or any(len(row) != n for row in dstar):
        raise DimensionMismatch(f"dstar must be {n} x {n}")
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            e = dstar[i][j]
            if not isinstance(e, DiscreteDistribution):
                e = DiscreteDistribution.from_atoms(*zip(*e))
            row.append(e)
        rows.append(tuple(row))
    for i in range(n):
        if rows[i][i] != DELTA0:
            raise BadDistance(i, i, "diagonal entry must be the point mass at 0")
        for j in range(i + 1, n):
            if rows[i][j] != rows[j][i]:
                raise NonSymmetric(i, j)
    q = QMMSpace(_frozen(w), tuple(rows))
    if require_triangle:
        p = validate_qmm(q)
        if p > TOL:
            i, j, k = _first_bad_triple(q)
            raise TriangleViolation(i, j, k)
    return q


def embed_mm(space: FiniteMMSpace) -> QMMSpace:
    """View an mm-space as a qmm-space with point-mass lengths."""
    n = space.n
    rows = tuple(
        tuple(DELTA0 if i == j else DiscreteDistribution.point_mass(space.dist[i, j])
              for j in range(n))
        for i in range(n))
    return QMMSpace(space.weights, rows)


def lower_matrix(q: QMMSpace) -> np.ndarray:
    """Entrywise infimum of the support of ``d*``."""
    return np.array([[e.lower for e in row] for row in q.dstar])


def upper_matrix(q: QMMSpace) -> np.ndarray:
    """Entrywise supremum of the support of ``d*``."""
    return np.array([[e.upper for e in row] for row in q.dstar])


def _triple_violation(a, b, c):
    """Probability that independent draws from the three lengths of a
    triangle (ab, bc, ac) break some triangle inequality."""
    x = a.value_array[:, None, None]
    y = b.value_array[None, :, None]
    z = c.value_array[None, None, :]
    bad = (x > y + z + TOL) | (y > x + z + TOL) | (z > x + y + TOL)
    p = (a.weight_array[:, None, None] * b.weight_array[None, :, None]
         * c.weight_array[None, None, :])
    return float(p[bad].sum())


def _first_bad_triple(q):
    for i, j, k in combinations(range(q.n), 3):
        if _triple_violation(q.dstar[i][j], q.dstar[j][k], q.dstar[i][k]) > 0:
            return i, j, k
    return None


def validate_qmm(q: QMMSpace) -> float:
    """Exact probability that a mu^3-random triple of points with
    independently drawn lengths violates the triangle inequality.

    Triples with a repeated point never violate (their self-lengths are
    the point mass at 0), so only distinct triples contribute; each
    unordered triple is counted with its 6 orderings.
    """
    w = q.weights
    total = 0.0
    for i, j, k in combinations(range(q.n), 3):
        p = _triple_violation(q.dstar[i][j], q.dstar[j][k], q.dstar[i][k])
        if p:
            total += 6.0 * w[i] * w[j] * w[k] * p
    return total


# ---------------------------------------------------------------------------
# refinements and relabelings
# ---------------------------------------------------------------------------

Space = Union[FiniteMMSpace, QMMSpace]


def blow_up(space: Space, multiplicities: Sequence[int]) -> Space:
    """Split point ``i`` into ``multiplicities[i]`` copies of equal weight.

    Copies sit at distance 0 from each other (the point mass at 0 for a
    qmm-space), so an mm result is flagged pseudometric whenever some
    multiplicity exceeds one.
    """
    m = list(multiplicities)
    if len(m) != space.n:
        raise DimensionMismatch(f"expected {space.n} multiplicities, got {len(m)}")
    for i, k in enumerate(m):
        if int(k) != k or k < 1:
            raise ZeroMultiplicity(i)
    src = np.repeat(np.arange(space.n), m)
    w = np.repeat(space.weights / np.asarray(m, dtype=float), m)
    if isinstance(space, QMMSpace):
        rows = tuple(tuple(space.dstar[a][b] for b in src) for a in src)
        return QMMSpace(_frozen(w), rows)
    d = space.dist[np.ix_(src, src)]
    pseudo = space.pseudometric or any(k > 1 for k in m)
    return FiniteMMSpace(_frozen(w), _frozen(d), pseudo)


def permute(space: Space, perm: Sequence[int]) -> Space:
    """Relabel points: point ``k`` of the result is point ``perm[k]``."""
    p = np.asarray(perm)
    if sorted(p.tolist()) != list(range(space.n)):
        raise DimensionMismatch("perm must be a permutation of range(n)")
    w = space.weights[p]
    if isinstance(space, QMMSpace):
        return QMMSpace(_frozen(w), tuple(tuple(space.dstar[a][b] for b in p) for a in p))
    return FiniteMMSpace(_frozen(w), _frozen(space.dist[np.ix_(p, p)]), space.pseudometric)


def effective_lower(space: Space) -> np.ndarray:
    """Distances seen by Lipschitz and separation checks: the plain
    distance matrix of an mm-space, the lower matrix of a qmm-space."""
    if isinstance(space, QMMSpace):
        return lower_matrix(space)
    return np.asarray(space.dist)


# ---------------------------------------------------------------------------
# targets and pushforwards
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteMetric:
    """Finite target metric space Y (no measure)."""

    dist: np.ndarray

    @classmethod
    def from_matrix(cls, dist) -> "FiniteMetric":
        d = np.asarray(dist, dtype=float)
        n = d.shape[0] if d.ndim == 2 else 0
        d = _check_distance_matrix(d, n, pseudometric=True)
        return cls(_frozen(d))

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0


INTERVAL = "interval"
Target = Union[str, FiniteMetric]


@dataclass(frozen=True, eq=False)
class PushforwardMeasure:
    """Image measure on the interval (a :class:`DiscreteDistribution`) or
    on a finite metric space (a weight vector over its points)."""

    carrier: Target
    measure: Union[DiscreteDistribution, np.ndarray] = field(repr=False)

    @property
    def total_mass(self) -> float:
        if isinstance(self.measure, DiscreteDistribution):
            return float(sum(self.measure.weights))
        return float(np.sum(self.measure))
