import math

import numpy as np
import pytest

from mmsampling import (AnnealBudget, GridKernel, GSystem, blow_up, box1, box1_result,
                        complete_graph_space, d_ext, deviation_matrix, kernel_from_space,
                        moment_discrepancy_bound, moment_signature, new_finite_mm, permute,
                        t_exact, underline_box1)
from mmsampling.distances import monotone_coupling, vertex_couplings
from mmsampling.errors import CoverBudgetExceeded, GridMismatch, RefinementTooLarge

from helpers import box1_subsets, random_metric, random_qmm, random_space, random_weights


def _kernel(rng, n, w=None):
    c = np.round(rng.random((n, n)), 3)
    c = np.triu(c, 1)
    return GridKernel(c + c.T, random_weights(rng, n) if w is None else w)


# -- box1 ------------------------------------------------------------------------

def test_box1_identity():
    f = _kernel(np.random.default_rng(0), 5)
    assert box1(f, f) == 0.0


def test_box1_constant_offset_matches_oracle():
    for n in (3, 5, 8):
        w = np.full(n, 1 / n)
        for c in (0.05, 0.2, 0.6):
            g = np.full((n, n), c)
            np.fill_diagonal(g, 0)
            f0, fc = GridKernel(np.zeros((n, n)), w), GridKernel(g, w)
            assert box1(f0, fc) == pytest.approx(box1_subsets(np.abs(g), w), abs=1e-15)


def test_box1_uniform_small_offset():
    w = np.full(4, 0.25)
    g = np.full((4, 4), 0.3)
    np.fill_diagonal(g, 0)
    assert box1(GridKernel(np.zeros((4, 4)), w), GridKernel(g, w)) == 0.3


def test_box1_single_row():
    rng = np.random.default_rng(1)
    for _ in range(10):
        n = 5
        w = random_weights(rng, n)
        g = np.zeros((n, n))
        g[0, 1:] = g[1:, 0] = 1.0
        assert box1(GridKernel(np.zeros((n, n)), w), GridKernel(g, w)) == pytest.approx(
            min(w[0], 1.0), abs=1e-15)


def test_box1_matches_subset_oracle():
    rng = np.random.default_rng(2)
    for _ in range(60):
        n = int(rng.integers(2, 10))
        w = random_weights(rng, n)
        f, g = _kernel(rng, n, w), _kernel(rng, n, w)
        res = box1_result(f, g)
        assert res.exact
        assert res.value == pytest.approx(box1_subsets(deviation_matrix(f, g), w), abs=1e-12)
        # the witness cover really works
        keep = np.setdiff1d(np.arange(n), res.cover)
        dev = deviation_matrix(f, g)[np.ix_(keep, keep)]
        assert w[res.cover].sum() <= res.value + 1e-12
        assert np.all(dev <= res.value + 1e-12)


def test_box1_is_pseudometric():
    rng = np.random.default_rng(3)
    for _ in range(60):
        n = int(rng.integers(2, 8))
        w = random_weights(rng, n)
        f, g, h = (_kernel(rng, n, w) for _ in range(3))
        assert box1(f, g) == box1(g, f)
        assert box1(f, h) <= box1(f, g) + box1(g, h) + 1e-9


def test_box1_qmm_uses_d_ext():
    rng = np.random.default_rng(4)
    q1 = random_qmm(rng, n=3)
    q2 = random_qmm(rng, n=3)
    f, g = GridKernel(q1.dstar, q1.weights), GridKernel(q2.dstar, q1.weights)
    dev = deviation_matrix(f, g)
    assert dev[0, 1] == d_ext(q1.dstar[0][1], q2.dstar[0][1])
    assert box1(f, g) == pytest.approx(box1_subsets(dev, q1.weights), abs=1e-12)


def test_box1_grid_mismatch():
    rng = np.random.default_rng(5)
    with pytest.raises(GridMismatch):
        box1(_kernel(rng, 3), _kernel(rng, 4))
    with pytest.raises(GridMismatch):
        box1(_kernel(rng, 3), _kernel(rng, 3))


def test_box1_large_grid_interval():
    rng = np.random.default_rng(6)
    n = 40
    w = np.full(n, 1 / n)
    f, g = _kernel(rng, n, w), _kernel(rng, n, w)
    res = box1_result(f, g)
    assert not res.exact and res.lo <= res.hi
    with pytest.raises(CoverBudgetExceeded) as err:
        box1(f, g)
    assert err.value.interval == (res.lo, res.hi)


def test_kernel_validation():
    with pytest.raises(ValueError):
        GridKernel(np.array([[0.0, 0.2], [0.3, 0.0]]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        GridKernel(np.array([[0.1, 0.2], [0.2, 0.0]]), np.array([0.5, 0.5]))


# -- couplings and alignments -----------------------------------------------------------

def test_monotone_coupling_marginals():
    a, b = np.array([0.5, 0.3, 0.2]), np.array([0.25, 0.75])
    cells = monotone_coupling(a, b)
    pi = np.zeros((3, 2))
    for i, j, m in cells:
        pi[i, j] += m
    assert np.allclose(pi.sum(1), a) and np.allclose(pi.sum(0), b)


def test_vertex_couplings_are_vertices():
    a, b = np.array([0.5, 0.5]), np.array([0.5, 0.5])
    supports = {tuple(sorted((i, j) for i, j, _ in c)) for c in vertex_couplings(a, b)}
    assert supports == {((0, 0), (1, 1)), ((0, 1), (1, 0))}


def test_underline_self_zero():
    x = random_space(np.random.default_rng(7), n=4)
    res = underline_box1(x, x)
    assert res.upper_bound == 0.0 and res.exact


def test_underline_blow_up_zero():
    x = random_space(np.random.default_rng(8), n=3)
    assert underline_box1(x, blow_up(x, [2, 1, 3])).upper_bound == 0.0
    assert underline_box1(blow_up(x, [2, 1, 3]), x).upper_bound == 0.0


def test_underline_complete_vs_two_point():
    two = new_finite_mm([0.5, 0.5], [[0, 1], [1, 0]])
    assert underline_box1(complete_graph_space(2), two).upper_bound == 0.5


def test_underline_symmetric_exact():
    rng = np.random.default_rng(9)
    for _ in range(10):
        x, y = random_space(rng, nmax=4), random_space(rng, nmax=4)
        assert underline_box1(x, y).upper_bound == underline_box1(y, x).upper_bound


def test_underline_zero_implies_equal_signatures():
    rng = np.random.default_rng(10)
    for _ in range(5):
        x = random_space(rng, n=4)
        for y in (permute(x, rng.permutation(4)), blow_up(x, rng.integers(1, 3, 4))):
            assert underline_box1(x, y).upper_bound == 0.0
            a = moment_signature(x, 3, 2, mode="exact")
            b = moment_signature(y, 3, 2, mode="exact")
            for k in a.keys():
                assert abs(a[k].estimate - b[k].estimate) <= 1e-12


def test_anneal_is_upper_bound():
    rng = np.random.default_rng(11)
    for s in range(8):
        x, y = random_space(rng, n=4), random_space(rng, n=4)
        exact = underline_box1(x, y).upper_bound
        anneal = underline_box1(x, y, mode="anneal", budget=AnnealBudget(iterations=300), seed=s)
        assert anneal.upper_bound >= exact - 1e-12
        assert not anneal.exact


def test_anneal_deterministic():
    rng = np.random.default_rng(12)
    x, y = random_space(rng, n=6), random_space(rng, n=5)
    a = underline_box1(x, y, mode="anneal", seed=3)
    b = underline_box1(x, y, mode="anneal", seed=3)
    assert a.upper_bound == b.upper_bound and a.alignment.to_dict() == b.alignment.to_dict()


def test_underline_refinement_cap():
    with pytest.raises(RefinementTooLarge):
        underline_box1(complete_graph_space(12), complete_graph_space(3))


def test_alignment_serializes():
    x = random_space(np.random.default_rng(13), n=3)
    doc = underline_box1(x, x).alignment.to_dict()
    assert doc["mode"] == "exact"
    assert math.isclose(sum(c[2] for c in doc["cells"]), 1.0)


# -- moment continuity ------------------------------------------------------------------------

def test_bound_eps_zero_is_cover_term():
    g = GSystem.monomials(2, [1])
    assert moment_discrepancy_bound(g, 0.0, 0.1) == pytest.approx(2 * 1 * 3 * (1 - 0.81))
    assert moment_discrepancy_bound(g, 0.0, 0.0) == 0.0


def test_bound_identical_kernels():
    rng = np.random.default_rng(14)
    f = _kernel(rng, 4)
    g = GSystem.monomials(3, [1, 2, 1])
    res = box1_result(f, f)
    assert t_exact(g, f) == t_exact(g, f)
    assert moment_discrepancy_bound(g, res.value, float(f.cell_weights[res.cover].sum())) == 0.0


def test_bound_holds_on_random_pairs():
    rng = np.random.default_rng(15)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        w = random_weights(rng, n)
        f = _kernel(rng, n, w)
        noise = np.triu(rng.normal(0, 0.05, (n, n)), 1)
        g = GridKernel(np.clip(f.cells + noise + noise.T, 0, 1), w)
        r = int(rng.integers(2, 4))
        sys = GSystem.monomials(r, rng.integers(0, 3, r * (r - 1) // 2))
        res = box1_result(f, g)
        bound = moment_discrepancy_bound(sys, res.value, float(w[res.cover].sum()))
        assert abs(t_exact(sys, f) - t_exact(sys, g)) <= bound + 1e-12


def test_kernel_from_space_round_trip():
    x = random_space(np.random.default_rng(16), n=4)
    k = kernel_from_space(x)
    assert np.array_equal(k.cells, x.dist) and np.array_equal(k.weights, x.weights)
    assert t_exact(GSystem.monomials(2, [1]), k) == t_exact(GSystem.monomials(2, [1]), x)
