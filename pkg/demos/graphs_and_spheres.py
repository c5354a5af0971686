"""
Complete graphs and high-dimensional spheres
============================================

Complete graphs with distance 1/2 between distinct vertices and round
spheres of growing dimension look alike when sampled: in both, almost
every pair of random points sits at distance about 1/2.  This script
tracks their moments, separation distance and observable diameter.
"""

import numpy as np

from mmsampling import (INTERVAL, MomentSignature, complete_graph_space, obs_diam, separation,
                        sphere_empirical)
from mmsampling.convergence import SequenceSpec, compare_limits, converge_test

# moments of K_n along n = 10, 20, 40, 80: exact, since n^r is small
rep = converge_test(SequenceSpec("complete", [10, 20, 40, 80]), r_max=2, k_max=2)
print("complete graphs")
for key in rep.keys:
    row = "  ".join(f"{e.estimate:.5f}" for _, e in rep.trajectory(key))
    print(f"  {MomentSignature.key_label(key)}: {row}")
print("  converged:", rep.converged)

# the same moments on 400 random points of S^dim
rep = converge_test(SequenceSpec("spheres", [4, 16, 64], count=400), r_max=2, k_max=2)
print("spheres")
for key in rep.keys:
    row = "  ".join(f"{e.estimate:.5f}" for _, e in rep.trajectory(key))
    print(f"  {MomentSignature.key_label(key)}: {row}")

# do both sequences end up with the same moments?
cmp = compare_limits(SequenceSpec("complete", [40, 80]), SequenceSpec("spheres", [32, 64]),
                     r_max=3, k_max=2, tol=0.05)
print("same limit:", cmp.verdict, " largest gap:", round(max(cmp.gaps.values()), 4))

# two classes of mass 0.3 in K_n can never be closer than 1/2
print("Sep(K_n; 0.3, 0.3):", [separation(complete_graph_space(n), [0.3, 0.3]).delta
                              for n in range(4, 13)])

# spheres concentrate: 1-Lipschitz functions are nearly constant
for dim in (2, 8, 32):
    res = obs_diam(sphere_empirical(dim, 400, 0), INTERVAL, 0.1, seed=0)
    print(f"ObsDiam(S^{dim}, 0.1) >= {res.lower_bound:.4f}")

# the mean distance is 1/2 in every dimension; its spread shrinks
for dim in (2, 8, 32, 128):
    x = sphere_empirical(dim, 400, 1)
    d = x.dist[np.triu_indices(x.n, 1)]
    print(f"S^{dim}: mean {d.mean():.4f}, std {d.std():.4f}")
