import io
import math

import pytest

from nibblecolor import (
    ListAssignment,
    MemberGraph,
    UnionInstance,
    identity_matchings,
)
from nibblecolor.lab import (
    LabBudgetError,
    block_design_instance,
    clique_instance,
    check_bound_15i,
    construct_thm15ii,
    exact_expectations,
    exhaustive_list_chromatic,
    member_chromatic_numbers,
    monte_carlo,
    random_linear_hypergraph,
)

from conftest import triangle


def test_exact_single_vertex():
    inst = UnionInstance([MemberGraph.build("g", ["a"], [])], 1)
    rep = exact_expectations(inst, ListAssignment({"a": [1]}), 0.5)
    assert rep.ell["a"].exact == pytest.approx(1.0, abs=1e-12)
    assert rep.weight_sum == pytest.approx(1.0, abs=1e-12)


def test_exact_single_edge_survive_prob():
    inst = UnionInstance([MemberGraph.build("g", ["u", "v"], [("u", "v")])], 1)
    rep = exact_expectations(inst, ListAssignment({"u": [1], "v": [1]}), 0.5)
    # one neighbor, one color: survives iff the neighbor is inactive
    assert rep.survive_prob[("v", 1)].exact == pytest.approx(0.5, abs=1e-12)
    assert rep.normalized and rep.degree_bound == 1 and rep.list_size == 1
    assert rep.max_abs_diff() < 1e-12


@pytest.mark.parametrize(
    "c,d,lam,p",
    [(1, 2, 2, 0.25), (1, 2, 3, 0.4), (2, 1, 2, 0.5), (2, 1, 3, 0.3), (1, 1, 2, 0.6)],
)
def test_exact_matches_closed_forms_on_normalized(c, d, lam, p):
    if c == 1:
        inst, lists = clique_instance(d, lam)
    else:
        inst, lists = block_design_instance(c, d, lam)
    rep = exact_expectations(inst, lists, p)
    assert rep.normalized
    assert rep.max_abs_diff() < 1e-9


def test_exact_dp_identity_matches_closed_forms():
    inst, lists = block_design_instance(2, 1, 2)
    dp = identity_matchings(inst, lists.lists)
    rep = exact_expectations(inst, dp, 0.5)
    assert rep.normalized
    assert rep.max_abs_diff() < 1e-9


def test_exact_budget_refusal():
    verts = [f"v{i}" for i in range(30)]
    inst = UnionInstance([MemberGraph.build("g", verts, [])], 1)
    with pytest.raises(LabBudgetError) as exc:
        exact_expectations(inst, ListAssignment({v: [1, 2] for v in verts}), 0.5)
    assert exc.value.size > 10_000_000


def test_exact_non_normalized_reports_without_formula():
    inst = UnionInstance([MemberGraph.build("g", ["u", "v"], [("u", "v")])], 1)
    rep = exact_expectations(inst, ListAssignment({"u": [1, 2], "v": [1]}), 0.5)
    assert not rep.normalized
    assert rep.ell["u"].formula is None


def test_monte_carlo_agrees_with_exact():
    inst, lists = block_design_instance(2, 1, 2)
    p = 0.5
    exact = exact_expectations(inst, lists, p)
    mc = monte_carlo(inst, lists, p, trials=20_000, seed=7)
    assert mc.eq41_violations == 0
    for v, est in mc.ell.items():
        assert est.within(exact.ell[v].exact, 4), v
    for key, est in mc.a.items():
        assert est.within(exact.a[key].exact, 4), key
    for key, est in mc.k.items():
        assert est.within(exact.k[key].exact, 4), key
    for key, est in mc.survive_prob.items():
        assert est.within(exact.survive_prob[key].exact, 4), key
    for key, est in mc.member_no_conflict_prob.items():
        assert est.within(exact.member_no_conflict_prob[key].exact, 4), key


def test_monte_carlo_p_zero_degenerate():
    inst, lists = clique_instance(2, 2)
    mc = monte_carlo(inst, lists, 0.0, trials=1000, seed=0)
    for est in mc.ell.values():
        assert est.mean == 2.0 and est.se == 0.0
    for est in mc.a.values():
        assert est.mean == 0.0 and est.se == 0.0


def test_monte_carlo_stream_and_trial_floor():
    inst, lists = clique_instance(1, 2)
    buf = io.StringIO()
    monte_carlo(inst, lists, 0.3, trials=1000, seed=1, stream=buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0].startswith("trial,")
    assert len(lines) == 1001
    with pytest.raises(ValueError):
        monte_carlo(inst, lists, 0.3, trials=10, seed=1)


def test_monte_carlo_tail_measurement_fields():
    inst, lists = clique_instance(3, 4)
    mc = monte_carlo(inst, lists, 0.4, trials=2000, seed=3)
    assert mc.tail_threshold == pytest.approx(math.log(3))
    assert mc.tail_bound == pytest.approx(11 ** 3 * 3 ** 5 * math.log(3) ** (-math.log(3)))
    assert all(0.0 <= f <= 1.0 for f in mc.tail_freq.values())
    # one-sided consistency: only meaningful when the bound is itself testable
    if mc.tail_bound >= 10 / mc.trials:
        if mc.tail_bound < 1.0:
            assert all(f <= mc.tail_bound for f in mc.tail_freq.values())
        else:
            # desk scale: the bound is vacuous; the measurement is the data
            assert mc.tail_bound > 1.0


def test_chi_oracle_limits():
    verts = [f"v{i}" for i in range(17)]
    inst = UnionInstance([MemberGraph.build("g", verts, [])], 1)
    with pytest.raises(LabBudgetError):
        exhaustive_list_chromatic(inst)


def test_chi_of_union(two_triangles_shared):
    inst, lists = two_triangles_shared
    w = exhaustive_list_chromatic(inst)
    assert w.chi == 3
    verdict = exhaustive_list_chromatic(inst, lists)
    assert verdict.colorable


def test_construct_thm15ii_shape():
    inst = construct_thm15ii(3)
    assert inst.validate().ok
    assert len(inst.member_graphs) == 3
    assert len(inst.vertex_registry) == 2 * 3 + 1
    members = member_chromatic_numbers(inst)
    assert members["g1"].chi == 3
    assert members["g2"].chi == 3
    assert members["g3"].chi == 2


@pytest.mark.parametrize("n", [2, 3, 4])
def test_construct_thm15ii_union_needs_extra_color(n):
    inst = construct_thm15ii(n)
    members = member_chromatic_numbers(inst)
    assert all(w.chi <= n for w in members.values())
    w = exhaustive_list_chromatic(inst)
    assert w.chi == n + 1


def test_construct_thm15ii_rejects_small_n():
    with pytest.raises(ValueError):
        construct_thm15ii(1)


def test_check_bound_15i_rows():
    rows = check_bound_15i([construct_thm15ii(2), construct_thm15ii(3)])
    for row in rows:
        assert row.holds and not row.skipped
        assert row.chi_union == row.bound  # tight at m = 3
    # m = 1 genuinely breaks the bound: recorded, not raised
    single = UnionInstance([triangle("g", ["a", "b", "c"])], 1)
    row = check_bound_15i([single])[0]
    assert row.m == 1 and row.n == 3 and row.chi_union == 3
    assert not row.holds


def test_check_bound_15i_budget_skip():
    verts = [f"v{i}" for i in range(13)]
    inst = UnionInstance([MemberGraph.build("g", verts, [])], 1)
    row = check_bound_15i([inst])[0]
    assert row.skipped


def test_random_linear_hypergraph_invariants():
    for seed in range(20):
        h = random_linear_hypergraph(40, 3, 6, seed)
        linear, _ = h.is_linear()
        assert linear
        assert h.max_degree() <= 6
        assert all(len(e) == 3 for e in h.edges)
    # determinism
    assert random_linear_hypergraph(40, 3, 6, 5) == random_linear_hypergraph(40, 3, 6, 5)


def test_random_linear_hypergraph_pairs_are_graphs():
    h = random_linear_hypergraph(30, 2, 4, seed=1)
    assert all(len(e) == 2 for e in h.edges)
    assert h.max_degree() <= 4


def test_random_linear_hypergraph_rejects_tiny_edges():
    with pytest.raises(ValueError):
        random_linear_hypergraph(10, 1, 3, seed=0)
