"""Sampling distributions and moment functionals.

A test system ``g`` assigns a function on [0, 1] to every pair of the
``r`` tuple positions.  The moment ``t(g, X)`` is the expectation, over
``r`` i.i.d. mu-random points (repetition allowed), of the product of
``<d*(x_a, x_b), g_ab>`` over the pairs ``a < b``; with
``include_diagonal`` the constant factors ``g_aa(0)`` are multiplied in
as well.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from typing import Dict, Mapping, Tuple, Union

import numpy as np

from .core import FiniteMMSpace, QMMSpace
from .errors import DimensionMismatch, NonPositiveDelta, NonPositiveEpsilon, TooLarge

#: largest number of r-tuples t_exact will enumerate
EXACT_LIMIT = 10**8
#: tuples per Monte-Carlo chunk; fixed so results do not depend on workers
CHUNK = 8192


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Monomial:
    """``t -> t**power``."""

    power: int = 0

    def __post_init__(self):
        if self.power < 0 or int(self.power) != self.power:
            raise ValueError("power must be a non-negative integer")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.ones_like(t) if self.power == 0 else t ** self.power

    @property
    def sup_norm(self) -> float:
        return 1.0

    @property
    def lipschitz(self) -> float:
        return float(self.power)

    @property
    def label(self) -> str:
        return f"t^{self.power}"


@dataclass(frozen=True)
class PiecewiseLinear:
    """Linear interpolation through ``(x, y)`` breakpoints covering [0, 1]."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or len(self.xs) < 2:
            raise ValueError("need at least two breakpoints")
        if self.xs[0] != 0.0 or self.xs[-1] != 1.0 or any(
                b <= a for a, b in zip(self.xs, self.xs[1:])):
            raise ValueError("breakpoints must increase strictly from 0 to 1")

    @classmethod
    def from_points(cls, points) -> "PiecewiseLinear":
        xs, ys = zip(*points)
        return cls(tuple(float(x) for x in xs), tuple(float(y) for y in ys))

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.xs, self.ys)

    @property
    def sup_norm(self) -> float:
        return float(max(abs(y) for y in self.ys))

    @property
    def lipschitz(self) -> float:
        return float(max(abs((y1 - y0) / (x1 - x0)) for x0, x1, y0, y1 in
                         zip(self.xs, self.xs[1:], self.ys, self.ys[1:])))

    @property
    def label(self) -> str:
        return "pl[" + ";".join(f"{x!r},{y!r}" for x, y in zip(self.xs, self.ys)) + "]"


TestFunction = Union[Monomial, PiecewiseLinear]
ONE = Monomial(0)


@dataclass(frozen=True)
class GSystem:
    """Symmetric family of test functions indexed by pairs of ``range(r)``.

    ``funcs`` maps ``(a, b)`` with ``a <= b`` to a test function; absent
    pairs are the constant 1.
    """

    r: int
    funcs: Mapping[Tuple[int, int], TestFunction] = field(default_factory=dict)
    include_diagonal: bool = False

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be at least 1")
        clean = {}
        for (a, b), f in dict(self.funcs).items():
            a, b = min(a, b), max(a, b)
            if not (0 <= a and b < self.r):
                raise DimensionMismatch(f"pair {(a, b)} out of range for r={self.r}")
            clean[(a, b)] = f
        object.__setattr__(self, "funcs", clean)

    @classmethod
    def monomials(cls, r: int, powers, include_diagonal: bool = False) -> "GSystem":
        """Monomial system; ``powers`` is a mapping on pairs or a sequence in
        ``combinations(range(r), 2)`` order."""
        if not isinstance(powers, Mapping):
            pairs = list(combinations(range(r), 2))
            powers = list(powers)
            if len(powers) != len(pairs):
                raise DimensionMismatch(f"expected {len(pairs)} powers for r={r}")
            powers = dict(zip(pairs, powers))
        return cls(r, {p: Monomial(int(k)) for p, k in powers.items()}, include_diagonal)

    @classmethod
    def constant(cls, r: int) -> "GSystem":
        return cls(r, {})

    def func(self, a: int, b: int) -> TestFunction:
        return self.funcs.get((min(a, b), max(a, b)), ONE)

    @property
    def pairs(self):
        return list(combinations(range(self.r), 2))

    @property
    def diagonal_factor(self) -> float:
        if not self.include_diagonal:
            return 1.0
        return float(np.prod([self.func(a, a)(0.0) for a in range(self.r)]))

    @property
    def c_g(self) -> float:
        """Product of the sup-norms of the off-diagonal functions."""
        return float(np.prod([self.func(a, b).sup_norm for a, b in self.pairs]))

    @property
    def lipschitz(self) -> float:
        return max([self.func(a, b).lipschitz for a, b in self.pairs], default=0.0)

    @property
    def sup_norm(self) -> float:
        return max([self.func(a, b).sup_norm for a, b in self.pairs], default=1.0)

    @property
    def label(self) -> str:
        parts = [f"{a}{b}:{self.func(a, b).label}" for a, b in self.pairs]
        if self.include_diagonal:
            parts += [f"{a}{a}:{self.func(a, a).label}" for a in range(self.r)]
        return f"r={self.r}|" + ",".join(parts)


# ---------------------------------------------------------------------------
# sample matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """One draw from the sampling distribution: a symmetric, zero-diagonal
    matrix with entries in [0, 1], plus the indices of the drawn points."""

    entries: np.ndarray
    points: np.ndarray = None

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise DimensionMismatch("sample matrix must be square")
        if np.any(np.diag(e) != 0) or not np.array_equal(e, e.T):
            raise ValueError("sample matrix must be symmetric with zero diagonal")
        if np.any(e < 0) or np.any(e > 1):
            raise ValueError("sample matrix entries must lie in [0, 1]")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n, 1.0 / self.n)


Sampleable = Union[FiniteMMSpace, QMMSpace, SampleMatrix]


def _padded_atoms(q: QMMSpace):
    """Arrays ``vals, cum`` of shape (n, n, A): atom values (padded by the
    last value) and cumulative weights (padded by 1)."""
    n = q.n
    a = max(len(e.values) for row in q.dstar for e in row)
    vals = np.empty((n, n, a))
    wts = np.zeros((n, n, a))
    for i in range(n):
        for j in range(n):
            e = q.dstar[i][j]
            k = len(e.values)
            vals[i, j, :k] = e.values
            vals[i, j, k:] = e.values[-1]
            wts[i, j, :k] = e.weights
    return vals, wts


def _draw_lengths(vals, cum, xa, xb, u):
    k = (u[:, None] >= cum[xa, xb]).sum(axis=1)
    k = np.minimum(k, vals.shape[2] - 1)
    return vals[xa, xb, k]


def sample_matrix(space: Sampleable, n: int, seed) -> SampleMatrix:
    """Pick ``n`` mu-random points independently and record their pairwise
    lengths; for a qmm-space each length with ``i < j`` is drawn
    independently from ``d*`` at the drawn pair."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    idx = rng.choice(space.n, size=n, p=space.weights)
    if isinstance(space, QMMSpace):
        vals, wts = _padded_atoms(space)
        cum = np.cumsum(wts, axis=2)
        iu, ju = np.triu_indices(n, 1)
        u = rng.random(iu.size)
        e = np.zeros((n, n))
        e[iu, ju] = _draw_lengths(vals, cum, idx[iu], idx[ju], u)
        e = e + e.T
    elif isinstance(space, SampleMatrix):
        e = space.entries[np.ix_(idx, idx)]
    else:
        e = np.asarray(space.dist)[np.ix_(idx, idx)]
    return SampleMatrix(e, idx)


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

def _expectation_matrix(space: Sampleable, f: TestFunction) -> np.ndarray:
    if hasattr(space, "expectation_matrix"):
        return space.expectation_matrix(f)
    if isinstance(space, QMMSpace):
        vals, wts = _padded_atoms(space)
        return (wts * f(vals)).sum(axis=2)
    if isinstance(space, SampleMatrix):
        return f(space.entries)
    return f(space.dist)


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def t_exact(g: GSystem, space: Sampleable, limit: int = EXACT_LIMIT) -> float:
    """Exact moment ``t(g, X)``: weighted sum over all r-tuples of points.

    Raises
    ------
    TooLarge
        when ``n**r`` exceeds ``limit``.
    """
    n, r = space.n, g.r
    if n ** r > limit:
        raise TooLarge(f"t_exact would enumerate {n}^{r} tuples", size=n ** r, limit=limit)
    w = np.asarray(space.weights, dtype=float)
    operands, subs = [], []
    for a in range(r):
        operands.append(w)
        subs.append(_LETTERS[a])
    cache = {}
    for a, b in g.pairs:
        f = g.func(a, b)
        if f == ONE:
            continue
        if f not in cache:
            cache[f] = _expectation_matrix(space, f)
        operands.append(cache[f])
        subs.append(_LETTERS[a] + _LETTERS[b])
    expr = ",".join(subs) + "->"
    value = float(np.einsum(expr, *operands, optimize="greedy"))
    return value * g.diagonal_factor


def _entropy(seed):
    """Flatten a possibly nested tuple seed into a list of ints."""
    if isinstance(seed, (tuple, list)):
        return [v for s in seed for v in _entropy(s)]
    return [int(seed)]


def _chunk_rng(seed, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=_entropy(seed), spawn_key=(chunk,)))


def _tuple_products(gs, space, m, rng):
    """Products for ``m`` random r-tuples, one column per system in ``gs``
    (all systems share the same r and the same draws)."""
    r = gs[0].r
    idx = rng.choice(space.n, size=(m, r), p=np.asarray(space.weights))
    if isinstance(space, QMMSpace):
        vals, wts = _padded_atoms(space)
        cum = np.cumsum(wts, axis=2)
    lengths = {}
    for a, b in combinations(range(r), 2):
        xa, xb = idx[:, a], idx[:, b]
        if isinstance(space, QMMSpace):
            lengths[a, b] = _draw_lengths(vals, cum, xa, xb, rng.random(m))
        elif isinstance(space, SampleMatrix):
            lengths[a, b] = space.entries[xa, xb]
        else:
            lengths[a, b] = space.dist[xa, xb]
    out = np.ones((m, len(gs)))
    for c, g in enumerate(gs):
        for a, b in g.pairs:
            f = g.func(a, b)
            if f != ONE:
                out[:, c] *= f(lengths[a, b])
        out[:, c] *= g.diagonal_factor
    return out


def _mc_products(gs, space, samples, seed, workers=1):
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)

    def run(c):
        return _tuple_products(gs, space, sizes[c], _chunk_rng(seed, c))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(c) for c in range(len(sizes))]
    return np.concatenate(parts, axis=0)


def _mean_stderr(x):
    m = x.shape[0]
    est = x.mean(axis=0)
    err = x.std(axis=0, ddof=1) / math.sqrt(m) if m > 1 else np.zeros_like(est)
    return est, err


def t_monte_carlo(g: GSystem, space: Sampleable, samples: int, seed, workers: int = 1):
    """Monte-Carlo moment estimate from ``samples`` independent r-tuples.

    Returns ``(estimate, stderr)`` with the plug-in standard error.  The
    draws are split into fixed chunks seeded from ``(seed, chunk index)``,
    so the result does not depend on ``workers``.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    x = _mc_products([g], space, samples, seed, workers)
    est, err = _mean_stderr(x)
    return float(est[0]), float(err[0])


# ---------------------------------------------------------------------------
# concentration bounds
# ---------------------------------------------------------------------------

def azuma_bound(g, epsilon: float, n: int) -> float:
    """``min(1, 2 exp(-eps^2 n / (2 c_g)))``: bound on the probability that
    the moment of an n-point sample deviates from ``t(g, X)`` by at least
    ``epsilon``.  ``g`` is a :class:`GSystem` or the constant ``c_g``."""
    if not epsilon > 0:
        raise NonPositiveEpsilon("epsilon must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    c_g = g.c_g if isinstance(g, GSystem) else float(g)
    return min(1.0, 2.0 * math.exp(-epsilon ** 2 * n / (2.0 * c_g)))


def chernoff_bound(delta: float, m: int) -> float:
    """``min(1, 2 exp(-delta^2 m / 2))`` for the mean of ``m`` independent
    [0, 1]-valued variables."""
    if not delta > 0:
        raise NonPositiveDelta("delta must be positive")
    if m < 1:
        raise ValueError("m must be at least 1")
    return min(1.0, 2.0 * math.exp(-delta ** 2 * m / 2.0))


# ---------------------------------------------------------------------------
# moment signatures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentEntry:
    estimate: float
    stderr: float
    samples: int
    exact: bool


@dataclass
class MomentSignature:
    """Moments keyed by ``(r, powers)``, ``powers`` listed in
    ``combinations(range(r), 2)`` order in canonical (relabeling-minimal)
    form."""

    entries: Dict[Tuple[int, tuple], MomentEntry]
    seed: object = None
    samples: int = 0
    mode: str = "auto"

    def __getitem__(self, key):
        return self.entries[key]

    def keys(self):
        return self.entries.keys()

    @staticmethod
    def key_label(key) -> str:
        r, powers = key
        return f"r{r}:" + ",".join(str(k) for k in powers)

    def to_dict(self):
        return {
            "seed": self.seed,
            "samples": self.samples,
            "mode": self.mode,
            "moments": [
                {"key": self.key_label(k), "r": k[0], "powers": list(k[1]),
                 "estimate": e.estimate, "stderr": e.stderr,
                 "samples": e.samples, "mode": "exact" if e.exact else "mc"}
                for k, e in self.entries.items()
            ],
        }


def canonical_powers(r: int, powers) -> tuple:
    """Smallest relabeling of a power assignment on the pairs of ``range(r)``."""
    pairs = list(combinations(range(r), 2))
    lookup = dict(zip(pairs, powers))
    best = None
    for s in permutations(range(r)):
        cand = tuple(lookup[tuple(sorted((s[a], s[b])))] for a, b in pairs)
        if best is None or cand < best:
            best = cand
    return best


def monomial_keys(r: int, k_max: int):
    """Canonical power assignments with every power in ``0..k_max``."""
    npairs = r * (r - 1) // 2
    seen = set()
    for powers in product(range(k_max + 1), repeat=npairs):
        seen.add(canonical_powers(r, powers))
    return sorted(seen)


def moment_signature(space: Sampleable, r_max: int, k_max: int, samples: int = 100_000,
                     seed=0, mode: str = "auto", workers: int = 1,
                     exact_limit: int = EXACT_LIMIT) -> MomentSignature:
    """Monomial moments for every ``2 <= r <= r_max`` and canonical power
    assignment with powers up to ``k_max``.

    ``mode`` is ``"exact"``, ``"mc"`` or ``"auto"`` (exact whenever
    ``n**r <= exact_limit``).  Monte-Carlo entries of one ``r`` share the
    same tuple draws.
    """
    if r_max < 2 or k_max < 1:
        raise ValueError("need r_max >= 2 and k_max >= 1")
    if mode not in ("auto", "exact", "mc"):
        raise ValueError(f"unknown mode {mode!r}")
    entries = {}
    for r in range(2, r_max + 1):
        keys = monomial_keys(r, k_max)
        systems = [GSystem.monomials(r, p) for p in keys]
        exact = mode == "exact" or (mode == "auto" and space.n ** r <= exact_limit)
        if exact:
            limit = max(exact_limit, EXACT_LIMIT)
            for p, g in zip(keys, systems):
                entries[(r, p)] = MomentEntry(t_exact(g, space, limit=limit), 0.0,
                                              space.n ** r, True)
        else:
            x = _mc_products(systems, space, samples, (seed, r), workers)
            est, err = _mean_stderr(x)
            for c, p in enumerate(keys):
                entries[(r, p)] = MomentEntry(float(est[c]), float(err[c]), samples, False)
    return MomentSignature(entries, seed, samples, mode)
