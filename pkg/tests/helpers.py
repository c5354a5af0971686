"""Random instance generators and brute-force oracles shared by the tests.

The oracles deliberately avoid the library's algorithms: they enumerate
subsets, labelings or tuples directly, or solve an LP.
"""
from itertools import combinations, product

import numpy as np
from scipy.optimize import linprog

from mmsampling import DiscreteDistribution, new_finite_mm, new_qmm


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def random_weights(rng, n):
    w = rng.random(n) + 0.05
    return w / w.sum()


def random_metric(rng, n):
    """Euclidean points in the plane scaled to diameter <= 1, or random
    lengths in [1/2, 1] (always a metric)."""
    if rng.random() < 0.5:
        p = rng.random((n, 2))
        d = np.linalg.norm(p[:, None] - p[None, :], axis=2)
        d = d / max(d.max(), 1e-9) * rng.uniform(0.5, 1.0)
    else:
        d = rng.uniform(0.5, 1.0, (n, n))
        d = np.triu(d, 1)
        d = d + d.T
    d = np.round(d, 6)
    np.fill_diagonal(d, 0.0)
    return d


def random_space(rng, n=None, nmax=6):
    n = n or int(rng.integers(1, nmax + 1))
    return new_finite_mm(random_weights(rng, n), random_metric(rng, n))


def random_distribution(rng, lo=0.0, hi=1.0, kmax=4):
    k = int(rng.integers(1, kmax + 1))
    w = rng.random(k) + 0.1
    return DiscreteDistribution.from_atoms(np.round(rng.uniform(lo, hi, k), 4), w / w.sum())


def random_qmm(rng, n=None, nmax=5):
    """Off-diagonal atoms in [1/2, 1], so the triangle inequality holds surely."""
    n = n or int(rng.integers(2, nmax + 1))
    dstar = [[None] * n for _ in range(n)]
    for i in range(n):
        dstar[i][i] = DiscreteDistribution.point_mass(0.0)
        for j in range(i + 1, n):
            dstar[i][j] = dstar[j][i] = random_distribution(rng, 0.5, 1.0, 3)
    return new_qmm(random_weights(rng, n), dstar)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def transport_lp(mu, nu):
    """Wasserstein-1 on the line as a transport LP."""
    x, a = mu.value_array, mu.weight_array
    y, b = nu.value_array, nu.weight_array
    m, n = x.size, y.size
    cost = np.abs(x[:, None] - y[None, :]).ravel()
    a_eq = np.zeros((m + n, m * n))
    for i in range(m):
        a_eq[i, i * n:(i + 1) * n] = 1
    for j in range(n):
        a_eq[m + j, j::n] = 1
    res = linprog(cost, A_eq=a_eq, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    return float(res.fun)


def tuple_moment(g, dist, w):
    """t(g, X) by looping over every r-tuple."""
    n = len(w)
    total = 0.0
    for tup in product(range(n), repeat=g.r):
        term = np.prod([w[i] for i in tup])
        for a, b in g.pairs:
            term *= float(g.func(a, b)(dist[tup[a], tup[b]]))
        total += term
    return total * g.diagonal_factor


def box1_subsets(dev, w):
    """min over deleted cell sets S of max(w(S), largest deviation off S)."""
    n = len(w)
    best = np.inf
    for mask in range(1 << n):
        keep = [i for i in range(n) if not mask >> i & 1]
        cost = sum(w[i] for i in range(n) if mask >> i & 1)
        worst = max((dev[i, j] for i, j in combinations(keep, 2)), default=0.0)
        best = min(best, max(cost, worst))
    return best


def pdiam_subsets(d, w, kappa, tol=1e-12):
    """Least diameter of a point set of mass >= 1 - kappa, over every subset.

    Diameters and masses are built up mask by mask from the mask without
    its lowest point."""
    n = len(w)
    diam = [0.0] * (1 << n)
    mass = [0.0] * (1 << n)
    best = np.inf
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        far = max((d[low, j] for j in range(low + 1, n) if rest >> j & 1), default=0.0)
        diam[mask] = max(diam[rest], far)
        mass[mask] = mass[rest] + w[low]
        if mass[mask] >= 1 - kappa - tol:
            best = min(best, diam[mask])
    return best


def separation_labelings(d, w, kappas, tol=1e-12):
    """Largest least cross-class distance over every labeling with classes
    of the required masses; None if no labeling qualifies."""
    n, k = len(w), len(kappas)
    best = None
    for lab in product(range(k + 1), repeat=n):
        lab = np.array(lab)
        if any(w[lab == c + 1].sum() < kappas[c] - tol for c in range(k)):
            continue
        cross = [d[i, j] for i, j in combinations(range(n), 2)
                 if lab[i] and lab[j] and lab[i] != lab[j]]
        v = min(cross, default=1.0)
        best = v if best is None else max(best, v)
    return best
