import csv
import io

import numpy as np
import pytest

from mmsampling import (GSystem, complete_graph_space, from_graph, t_exact)
from mmsampling.convergence import (SequenceSpec, compare_limits, converge_test, generate)
from mmsampling.errors import NotConverged, UnknownFamily


def _empty(n):
    return from_graph(np.zeros((n, n), dtype=bool))


def test_complete_graphs_converge():
    rep = converge_test(SequenceSpec("complete_graphs", [10, 20, 40, 80]), tol=0.02)
    assert rep.converged
    assert all(rep.verdicts.values())


def test_complete_graph_entries_are_exact():
    rep = converge_test(SequenceSpec("complete", [5, 9]), r_max=3, k_max=2)
    for n in (5, 9):
        x = complete_graph_space(n)
        for key in rep.keys:
            r, powers = key
            expected = t_exact(GSystem.monomials(r, powers), x)
            entry = rep.signatures[n][key]
            assert entry.exact and abs(entry.estimate - expected) <= 1e-12


def test_complete_graph_first_moment_values():
    rep = converge_test(SequenceSpec("complete", [10, 20]))
    traj = dict(rep.trajectory((2, (1,))))
    # diagonal pairs count with distance 0
    assert traj[10].estimate == pytest.approx(0.45, abs=1e-12)
    assert traj[20].estimate == pytest.approx(0.475, abs=1e-12)
    assert not rep.verdicts["r2:1"]


def test_spheres_concentrate_at_one_half():
    rep = converge_test(SequenceSpec("spheres", [4, 16, 64], count=200), samples=20_000)
    first = [e.estimate for _, e in rep.trajectory((2, (1,)))]
    second = [e.estimate for _, e in rep.trajectory((2, (2,)))]
    assert all(abs(m - 0.5) < 0.01 for m in first)
    spread = [s - m * m for m, s in zip(first, second)]
    assert spread[0] > spread[1] > spread[2]


def test_alternating_sequence_does_not_converge():
    spaces = [complete_graph_space(4), _empty(8), complete_graph_space(16), _empty(32)]
    rep = converge_test(SequenceSpec("user_files", [4, 8, 16, 32], spaces=spaces))
    assert not rep.converged
    assert not rep.verdicts["r2:1"]


def test_complete_vs_empty_limits_differ():
    a = SequenceSpec("user_files", [40, 80], spaces=[complete_graph_space(40),
                                                      complete_graph_space(80)])
    b = SequenceSpec("user_files", [40, 80], spaces=[_empty(40), _empty(80)])
    cmp = compare_limits(a, b)
    assert not cmp.verdict
    assert cmp.gaps["r2:1"] == pytest.approx(0.49375, abs=1e-12)


def test_sequence_shares_limit_with_itself():
    spec = SequenceSpec("complete", [40, 80])
    cmp = compare_limits(spec, spec)
    assert cmp.verdict
    assert max(cmp.gaps.values()) == 0.0


def test_not_converged_names_sequence():
    good = SequenceSpec("complete", [40, 80])
    bad = SequenceSpec("user_files", [16, 32],
                       spaces=[complete_graph_space(16), _empty(32)])
    with pytest.raises(NotConverged) as err:
        compare_limits(good, bad)
    assert err.value.which == "b"
    with pytest.raises(NotConverged) as err:
        compare_limits(bad, good)
    assert err.value.which == "a"


def test_workers_do_not_change_results():
    spec = SequenceSpec("spheres", [3, 6], count=60)
    a = converge_test(spec, samples=20_000, mode="mc", workers=1, seed=4)
    b = converge_test(spec, samples=20_000, mode="mc", workers=3, seed=4)
    assert a.to_dict() == b.to_dict()


def test_random_graphs_p_one_is_complete():
    spec = SequenceSpec("random_graphs", [5, 9], p=1.0)
    for n in (5, 9):
        assert generate(spec, n) == complete_graph_space(n)


def test_random_graphs_deterministic():
    spec = SequenceSpec("random-graph", [30], p=0.3, seed=7)
    assert generate(spec, 30) == generate(SequenceSpec("random_graphs", [30], p=0.3, seed=7), 30)


def test_unknown_family():
    with pytest.raises(UnknownFamily):
        SequenceSpec("cubes", [1, 2])


@pytest.mark.parametrize("kwargs", [
    {"family": "complete", "indices": [4, 4]},
    {"family": "random_graphs", "indices": [4, 5]},
    {"family": "random_graphs", "indices": [4, 5], "p": 1.5},
    {"family": "user_files", "indices": [4, 5], "spaces": [complete_graph_space(4)]},
])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SequenceSpec(**kwargs)


def test_single_index_rejected():
    with pytest.raises(ValueError):
        converge_test(SequenceSpec("complete", [4]))


def test_csv_layout():
    rep = converge_test(SequenceSpec("complete", [4, 8]), r_max=3, k_max=1)
    text = rep.to_csv()
    assert text.endswith("\r\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["moment", "r", "powers", "index", "estimate", "stderr", "mode"]
    assert len(rows) == 1 + 2 * len(rep.keys)
    row = next(r for r in rows[1:] if r[0] == "r3:0,1,1")
    assert row[1] == "3" and row[2] == "0 1 1" and row[6] == "exact"
    assert float(row[4]) == rep.signatures[int(row[3])][(3, (0, 1, 1))].estimate


def test_report_dict_has_note_and_trajectories():
    doc = converge_test(SequenceSpec("complete", [4, 8])).to_dict()
    assert "not a proof" in doc["note"]
    assert [p["index"] for p in doc["trajectories"]["r2:1"]] == [4, 8]
