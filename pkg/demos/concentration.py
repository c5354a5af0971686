"""
How fast sample moments settle
==============================

Draw n random points of a fixed six-point space, compute the mean
pairwise distance of the sample, and count how often it misses the true
value by at least eps.  The martingale bound 2 exp(-eps^2 n / 2 c_g)
caps that frequency; in practice it is far from tight.
"""

import numpy as np

from mmsampling import GSystem, azuma_bound, new_finite_mm, sample_matrix, t_exact

rng = np.random.default_rng(2024)
pts = rng.random((6, 2))
d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
d = np.round(d / d.max(), 6)
w = rng.random(6) + 0.1
x = new_finite_mm(w / w.sum(), d)

# g(t) = t on the single pair of a 2-tuple: the mean distance
g = GSystem.monomials(2, [1])
truth = t_exact(g, x)
print(f"t(g, X) = {truth:.5f}, c_g = {g.c_g}")

trials = 2000
print(f"{'n':>5} {'eps':>6} {'frequency':>10} {'bound':>8}")
for n in (25, 50, 100, 200, 400):
    est = np.array([t_exact(g, sample_matrix(x, n, s)) for s in range(trials)])
    for eps in (0.05, 0.1, 0.2):
        freq = np.mean(np.abs(est - truth) >= eps)
        print(f"{n:>5} {eps:>6} {freq:>10.4f} {azuma_bound(g, eps, n):>8.4f}")
