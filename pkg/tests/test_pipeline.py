import numpy as np
import pytest

from nibblecolor import (
    ListAssignment,
    MemberGraph,
    UnionInstance,
    identity_matchings,
    verify_coloring,
)
from nibblecolor.lab import (
    Hypergraph,
    block_design_instance,
    exhaustive_list_chromatic,
    random_linear_hypergraph,
)
from nibblecolor.pipeline import (
    NonLinearError,
    edge_color_hypergraph,
    line_graph_union,
    run_pipeline,
)

from conftest import triangle


def test_edgeless_instance_trivial():
    inst = UnionInstance([MemberGraph.build("g", ["a", "b"], [])], 1)
    lists = ListAssignment({"a": [1], "b": [1]})
    run = run_pipeline(inst, lists, eps=0.5, seed=0)
    assert run.success
    assert run.rounds == []
    assert run.coloring.assignment == {"a": 1, "b": 1}


def test_two_triangles_cross_checked(two_triangles_shared):
    inst, lists = two_triangles_shared
    run = run_pipeline(inst, lists, eps=0.5, seed=2)
    assert run.success
    assert verify_coloring(inst, lists, run.coloring).ok
    assert exhaustive_list_chromatic(inst, lists).colorable


def test_rounds_extend_coloring_and_lists_exclude_neighbor_colors(two_triangles_shared):
    inst, lists = two_triangles_shared
    run = run_pipeline(inst, lists, eps=0.5, seed=5)
    assert run.success
    adj = inst.union_adjacency()
    phi = run.coloring.assignment
    for u, v in inst.union_edges():
        assert phi[u] != phi[v]
    del adj


def test_invalid_instance_refused():
    bad = UnionInstance(
        [
            MemberGraph.build("g1", ["x", "y", "z"], [("x", "y")]),
            MemberGraph.build("g2", ["x", "y"], []),
        ],
        2,
    )
    with pytest.raises(ValueError, match="invalid instance"):
        run_pipeline(bad, ListAssignment({v: [1, 2] for v in "xyz"}), eps=0.5)


def test_hypothesis_refusal_names_vertex(two_triangles_shared):
    inst, _ = two_triangles_shared
    short = ListAssignment(
        {v: ([1, 2, 3] if v != "a" else [1, 2]) for v in inst.vertex_registry}
    )
    with pytest.raises(ValueError, match="'a'"):
        run_pipeline(inst, short, eps=0.5)


def test_dp_identity_pipeline_bit_identical(two_triangles_shared):
    inst, lists = two_triangles_shared
    for seed in range(10):
        a = run_pipeline(inst, lists, eps=0.5, seed=seed)
        b = run_pipeline(inst, lists, eps=0.5, dp=True, seed=seed)
        assert a.success and b.success
        assert a.coloring.assignment == b.coloring.assignment
        assert [(r.kept, r.vertices_before) for r in a.rounds] == [
            (r.kept, r.vertices_before) for r in b.rounds
        ]
        assert a.stop_reason == b.stop_reason


def test_pipeline_deterministic(two_triangles_shared):
    inst, lists = two_triangles_shared
    a = run_pipeline(inst, lists, eps=0.5, seed=4)
    b = run_pipeline(inst, lists, eps=0.5, seed=4)
    assert a.coloring.assignment == b.coloring.assignment


def test_strict_mode_downgrades_and_records(two_triangles_shared):
    # desk-scale degree bound: the strict window is empty, so round 0 fails,
    # the downgrade is recorded, and the practical path completes the coloring
    inst, lists = two_triangles_shared
    run = run_pipeline(inst, lists, eps=0.5, mode="strict", seed=1, activation=0.1)
    assert run.success
    assert run.downgraded
    assert "strict round 0 failed" in run.stop_reason


def test_strict_mode_round_zero_on_normalized_instance():
    # K7 with 9-color lists admits a window-legal strict round; the shrunken
    # remainder stops being exactly regular, so round 1 downgrades, and the
    # schedule's truncation leaves a remainder only the from-scratch retry
    # can color
    from nibblecolor.lab import clique_instance

    inst, lists = clique_instance(6, 9)
    run = run_pipeline(
        inst, lists, eps=0.5, mode="strict", seed=11, activation=0.5, max_resamples=4000
    )
    assert run.rounds and run.rounds[0].mode == "strict"
    assert run.downgraded
    assert run.success
    assert run.retried_whole
    assert verify_coloring(inst, lists, run.coloring).ok


def test_empty_list_failure_is_structured():
    # two vertices joined by an edge, singleton identical lists: nibble cannot
    # help and the finisher cannot either; expect a clean failure, not a crash
    inst = UnionInstance([MemberGraph.build("g", ["u", "v"], [("u", "v")])], 1)
    lists = ListAssignment({"u": [1], "v": [1]})
    with pytest.raises(ValueError):
        # hypothesis check refuses: lists of size 1 vs (1+eps) * degree 1
        run_pipeline(inst, lists, eps=0.5, seed=0)


def test_summary_table_renders(two_triangles_shared):
    inst, lists = two_triangles_shared
    run = run_pipeline(inst, lists, eps=0.5, seed=0)
    text = run.summary_table()
    assert "success=True" in text


# ---------------------------------------------------------------------------
# line graphs and edge coloring


def test_line_graph_triangle():
    h = Hypergraph(("a", "b", "c"), (("a", "b"), ("a", "c"), ("b", "c")))
    inst, names = line_graph_union(h)
    assert len(inst.vertex_registry) == 3
    assert len(inst.union_edges()) == 3  # line graph of a triangle is a triangle
    assert len(inst.member_graphs) == 3
    assert inst.validate().ok
    assert inst.c_bound == 2


def test_line_graph_star():
    h = Hypergraph(("c", "l1", "l2", "l3"), (("c", "l1"), ("c", "l2"), ("c", "l3")))
    inst, _ = line_graph_union(h)
    # one K3 at the center plus singleton cliques at the leaves
    sizes = sorted(len(g.vertices) for g in inst.member_graphs)
    assert sizes == [1, 1, 1, 3]
    assert inst.validate().ok


def test_line_graph_rejects_nonlinear():
    h = Hypergraph(("a", "b", "c"), (("a", "b", "c"), ("a", "b")))
    with pytest.raises(NonLinearError):
        line_graph_union(h)


@pytest.mark.parametrize("seed", range(20))
def test_line_graph_union_valid_on_random_hypergraphs(seed):
    h = random_linear_hypergraph(30, 3, 5, seed)
    inst, _ = line_graph_union(h)
    assert inst.validate().ok
    for v in inst.vertex_registry:
        assert len(inst.membership[v]) <= 3


def test_edge_color_single_hyperedge():
    h = Hypergraph(("a", "b", "c"), (("a", "b", "c"),))
    res = edge_color_hypergraph(h, eps=0.5, seed=0)
    assert res.success and res.colors_used == 1


def test_edge_color_plain_graph_vizing_regime():
    h = random_linear_hypergraph(24, 2, 5, seed=3)
    res = edge_color_hypergraph(h, eps=0.5, seed=0)
    assert res.success
    bound = int(np.ceil(1.5 * h.max_degree()))
    assert res.colors_used <= bound
    # proper on the hypergraph: no two touching edges share a color
    for i, e in enumerate(h.edges):
        for f in h.edges[i + 1 :]:
            if set(e) & set(f):
                assert res.edge_colors[e] != res.edge_colors[f]


FANO = Hypergraph(
    tuple("1234567"),
    (
        ("1", "2", "3"),
        ("1", "4", "5"),
        ("1", "6", "7"),
        ("2", "4", "6"),
        ("2", "5", "7"),
        ("3", "4", "7"),
        ("3", "5", "6"),
    ),
)


def test_edge_color_fano_needs_seven_colors():
    # all seven lines pairwise intersect: the line graph is K7, so the slack
    # must push the palette to 7 before any coloring exists
    linear, _ = FANO.is_linear()
    assert linear
    res = edge_color_hypergraph(FANO, eps=4 / 3, seed=2)
    assert res.success
    assert res.colors_used <= int(np.ceil((1 + 4 / 3) * FANO.max_degree()))
    assert res.colors_used == 7


def test_edge_color_fano_small_palette_fails_with_refutation():
    res = edge_color_hypergraph(FANO, eps=0.5, seed=2)
    assert not res.success
    assert "refuted" in res.run.failure


def test_pipeline_success_cross_checked_by_oracle_on_small_instances():
    # every small pipeline success must be confirmed colorable by the oracle
    cases = []
    inst1, lists1 = block_design_instance(2, 1, 3)
    cases.append((inst1, lists1))
    g1 = triangle("g1", ["x", "a", "b"])
    g2 = triangle("g2", ["x", "c", "d"])
    inst2 = UnionInstance([g1, g2], 2)
    cases.append((inst2, ListAssignment({v: [1, 2, 3] for v in inst2.vertex_registry})))
    for inst, lists in cases:
        run = run_pipeline(inst, lists, eps=0.5, seed=9)
        if run.success:
            assert exhaustive_list_chromatic(inst, lists).colorable
