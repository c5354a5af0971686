"""
Box distance between kernels and spaces
=======================================

Two kernels on the same weighted grid are eps-close in the box sense
when, after deleting cells of total weight at most eps, every remaining
entry differs by at most eps.  Between spaces the grid is not given, so
we also search over couplings of the two weight vectors.
"""

import numpy as np

from mmsampling import (GridKernel, GSystem, blow_up, box1_result, complete_graph_space,
                        kernel_from_space, moment_discrepancy_bound, new_finite_mm, t_exact,
                        underline_box1)

rng = np.random.default_rng(0)
n = 8
w = np.full(n, 1 / n)
c = np.triu(rng.random((n, n)), 1)
f = GridKernel(c + c.T, w)

# a small perturbation everywhere plus one badly corrupted cell
noise = np.triu(rng.normal(0, 0.02, (n, n)), 1)
bad = np.clip(f.cells + noise + noise.T, 0, 1)
bad[0, 1:] = bad[1:, 0] = 1.0 - bad[0, 1:]
g = GridKernel(bad, w)

res = box1_result(f, g)
print(f"box1 = {res.value:.4f}, deleted cells {list(res.cover)}, exact {res.exact}")

# the moment gap is controlled by the witness
for powers in ([1], [1, 1, 1], [2, 0, 1]):
    r = 2 if len(powers) == 1 else 3
    sys_ = GSystem.monomials(r, powers)
    gap = abs(t_exact(sys_, f) - t_exact(sys_, g))
    bound = moment_discrepancy_bound(sys_, res.value, float(w[res.cover].sum()))
    print(f"powers {powers}: |t(f) - t(g)| = {gap:.4f} <= {bound:.4f}")

# between spaces: a blow-up is at distance 0, K_2 and a two-point space are not
x = new_finite_mm([0.2, 0.3, 0.5], [[0, 0.4, 0.7], [0.4, 0, 0.5], [0.7, 0.5, 0]])
print("X vs blow-up:", underline_box1(x, blow_up(x, [2, 1, 2])).upper_bound)
two = new_finite_mm([0.5, 0.5], [[0, 1], [1, 0]])
res = underline_box1(complete_graph_space(2), two)
print("K_2 vs two points at distance 1:", res.upper_bound)
print("alignment cells:", res.alignment.to_dict()["cells"])
print("same grid:", box1_result(kernel_from_space(complete_graph_space(2)),
                                kernel_from_space(two)).value)
