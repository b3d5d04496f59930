import pytest

from nibblecolor import (
    FinisherConfig,
    ListAssignment,
    MemberGraph,
    UnionInstance,
    finish,
    resample_pass,
    verify_coloring,
)
from nibblecolor.finisher import PreconditionError
from nibblecolor.lab import exhaustive_list_chromatic


def k4():
    verts = [f"v{i}" for i in range(4)]
    g = MemberGraph.build("g", verts, [(a, b) for i, a in enumerate(verts) for b in verts[i + 1 :]])
    return UnionInstance([g], 1)


def test_edgeless_instance_first_sample_wins():
    inst = UnionInstance([MemberGraph.build("g", ["a", "b", "c"], [])], 1)
    lists = ListAssignment({v: [1, 2] for v in "abc"})
    res = finish(inst, lists, seed=0)
    assert res.success and res.passes_used == 0 and res.method == "resampling"
    assert verify_coloring(inst, lists, res.coloring).ok


def test_k4_with_8x_lists():
    inst = k4()
    lists = ListAssignment({v: range(24) for v in inst.vertex_registry})
    res = finish(inst, lists, seed=1)
    assert res.success
    assert res.precondition_met
    assert verify_coloring(inst, lists, res.coloring).ok


def test_refusal_without_force_then_exact_decision():
    inst = k4()
    # lists exactly at the color degree: precondition fails loudly
    lists = ListAssignment({v: [1, 2, 3] for v in inst.vertex_registry})
    with pytest.raises(PreconditionError, match="force"):
        finish(inst, lists, seed=0)
    res = finish(inst, lists, seed=0, force=True, config=FinisherConfig(max_resample_passes=30))
    # K4 with 3 colors is uncolorable; the fallback must refute it exactly
    assert not res.success
    assert res.method == "backtracking"
    assert not exhaustive_list_chromatic(inst, lists).colorable

    lists4 = ListAssignment({v: [1, 2, 3, 4] for v in inst.vertex_registry})
    res4 = finish(inst, lists4, seed=0, force=True, config=FinisherConfig(max_resample_passes=30))
    assert res4.success
    assert exhaustive_list_chromatic(inst, lists4).colorable
    assert verify_coloring(inst, lists4, res4.coloring).ok


def test_failure_report_shape_without_fallback():
    inst = k4()
    lists = ListAssignment({v: [1, 2, 3] for v in inst.vertex_registry})
    res = finish(
        inst, lists, seed=3, force=True,
        config=FinisherConfig(max_resample_passes=12, fallback="none"),
    )
    assert not res.success
    assert res.passes_used == 12
    assert len(res.conflict_counts) == 12
    assert all(c >= 1 for c in res.conflict_counts)
    hist = res.conflict_histogram()
    assert sum(hist.values()) == 12
    report = res.report()
    assert report["success"] is False and report["conflict_counts"] == res.conflict_counts


def test_resample_pass_fixpoint():
    inst = k4()
    lists = ListAssignment({v: [v_i] for v_i, v in enumerate(inst.vertex_registry)})
    psi = {v: lists[v][0] for v in inst.vertex_registry}
    out, conflicts = resample_pass(inst, lists, psi, seed=5)
    assert conflicts == 0 and out == psi


def test_resample_pass_touches_only_conflicted():
    g = MemberGraph.build("g", ["a", "b", "c", "d"], [("a", "b"), ("c", "d")])
    inst = UnionInstance([g], 1)
    lists = ListAssignment({v: [1, 2, 3] for v in "abcd"})
    psi = {"a": 1, "b": 1, "c": 2, "d": 3}
    for seed in range(20):
        out, conflicts = resample_pass(inst, lists, psi, seed=seed)
        assert conflicts == 1
        assert out["c"] == 2 and out["d"] == 3  # conflict-free pair untouched


def test_resampling_reaches_zero_conflicts_100_of_100():
    inst = k4()
    lists = ListAssignment({v: range(24) for v in inst.vertex_registry})
    for seed in range(100):
        res = finish(inst, lists, seed=seed, config=FinisherConfig(max_resample_passes=500))
        assert res.success and res.method == "resampling", seed


def test_determinism_per_seed():
    inst = k4()
    lists = ListAssignment({v: range(24) for v in inst.vertex_registry})
    a = finish(inst, lists, seed=11)
    b = finish(inst, lists, seed=11)
    assert a.coloring.assignment == b.coloring.assignment
    assert a.conflict_counts == b.conflict_counts


def test_dp_identity_reduction_through_finisher(two_triangles_shared):
    from nibblecolor import identity_matchings

    inst, lists = two_triangles_shared
    big = ListAssignment({v: range(32) for v in inst.vertex_registry})
    dp = identity_matchings(inst, big.lists)
    for seed in range(5):
        a = finish(inst, big, seed=seed)
        b = finish(inst, dp, seed=seed)
        assert a.coloring.assignment == b.coloring.assignment
