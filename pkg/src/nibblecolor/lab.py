"""Oracles and experiments.

Everything here recomputes quantities from first principles (python sets and
dicts, full enumeration, exhaustive search) so that the array engine always
has an independent reference to be checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .compiled import compile_instance
from .exactsolve import ChromaticWitness, SolveResult, chromatic_number, solve_list_coloring
from .instance import (
    Assignment,
    ListAssignment,
    MemberGraph,
    UnionInstance,
    _pairs_at,
    color_degree,
)
from .nibble import derive_rng, sample_arrays

ENUMERATION_BUDGET = 10_000_000


class LabBudgetError(ValueError):
    def __init__(self, message: str, size: int):
        super().__init__(message)
        self.size = size


# ---------------------------------------------------------------------------
# definitional statistics (the oracle twin of the kernels)


def outcome_statistics(
    instance: UnionInstance,
    assignment: Assignment,
    activated: frozenset[str] | set[str],
    tentative: Mapping[str, int],
):
    """All round statistics of one outcome (A, psi), straight from the
    definitions.  Returns a dict with survivors, kept, ell, t, a, k, d and the
    per-triple no-member-conflict indicator."""
    adj = instance.union_adjacency()

    def hits(u: str, v: str, c: int) -> bool:
        """Does psi(u) conflict with color c at v along edge uv?"""
        psi_u = tentative[u]
        return any(cu == psi_u and cv == c for cu, cv in _pairs_at(assignment, u, v))

    survivors: dict[str, tuple[int, ...]] = {}
    for v in instance.vertex_registry:
        survivors[v] = tuple(
            c
            for c in assignment[v]
            if not any(u in activated and hits(u, v, c) for u in adj[v])
        )
    kept = frozenset(
        v for v in activated if tentative[v] in survivors[v]
    )

    ell = {v: len(survivors[v]) for v in instance.vertex_registry}
    t: dict = {}
    a: dict = {}
    k: dict = {}
    d: dict = {}
    no_conflict: dict = {}
    for g in instance.member_graphs:
        gadj = g.adjacency()
        for v in sorted(g.vertices):
            for c in assignment[v]:
                key = (v, c, g.graph_id)
                partners = [
                    (u, cu)
                    for u in gadj[v]
                    for cu, cv in _pairs_at(assignment, u, v)
                    if cv == c
                ]
                t[key] = sum(1 for u, cu in partners if tentative[u] == cu)
                a[key] = sum(
                    1 for u, _ in partners if u in activated and u not in kept
                )
                k[key] = sum(
                    1
                    for u, cu in partners
                    if u not in activated
                    and not _excluded(instance, assignment, adj, activated, tentative, u, cu, g)
                )
                d[key] = sum(
                    1
                    for u, cu in partners
                    if u not in kept and cu in survivors[u]
                )
                no_conflict[key] = not any(
                    u in activated and tentative[u] == cu for u, cu in partners
                )
    return {
        "survivors": survivors,
        "kept": kept,
        "ell": ell,
        "t": t,
        "a": a,
        "k": k,
        "d": d,
        "no_member_conflict": no_conflict,
    }


def _excluded(instance, assignment, adj, activated, tentative, u, cu, g) -> bool:
    """Is (u, cu) knocked out by an activated vertex outside the member graph?"""
    for w in adj[u]:
        if w in activated and w not in g.vertices:
            psi_w = tentative[w]
            for cw, cu2 in _pairs_at(assignment, w, u):
                if cw == psi_w and cu2 == cu:
                    return True
    return False


# ---------------------------------------------------------------------------
# exact enumeration


@dataclass(frozen=True)
class QuantityRow:
    exact: float
    formula: float | None
    abs_diff: float | None


@dataclass
class ExactExpectationReport:
    activation: float
    weight_sum: float
    normalized: bool
    list_size: int | None
    degree_bound: int | None
    ell: dict[str, QuantityRow]
    a: dict[tuple[str, int, str], QuantityRow]
    k: dict[tuple[str, int, str], QuantityRow]
    survive_prob: dict[tuple[str, int], QuantityRow]          # P[c in L_{A,psi}(v)]
    member_no_conflict_prob: dict[tuple[str, int, str], QuantityRow]

    def max_abs_diff(self) -> float:
        worst = 0.0
        for table in (self.ell, self.a, self.k, self.survive_prob, self.member_no_conflict_prob):
            for row in table.values():
                if row.abs_diff is not None:
                    worst = max(worst, row.abs_diff)
        return worst


def uniform_parameters(instance: UnionInstance, assignment: Assignment):
    """(Lambda, D) when lists, membership and member color degrees are all
    uniform and membership equals the C bound; None otherwise."""
    sizes = {len(assignment[v]) for v in instance.vertex_registry}
    if len(sizes) != 1:
        return None
    memberships = {len(instance.membership[v]) for v in instance.vertex_registry}
    if memberships != {instance.c_bound}:
        return None
    degrees = set()
    for g in instance.member_graphs:
        for v in sorted(g.vertices):
            for c in assignment[v]:
                degrees.add(color_degree(instance, assignment, g.graph_id, v, c))
    if len(degrees) != 1:
        return None
    return sizes.pop(), degrees.pop()


def exact_expectations(
    instance: UnionInstance, assignment: Assignment, p: float
) -> ExactExpectationReport:
    """Exact expectations of every round statistic by full enumeration of the
    (A, psi) space, weighted p^|A| (1-p)^(n-|A|) * prod 1/|L(v)|."""
    verts = list(instance.vertex_registry)
    n = len(verts)
    size = 2 ** n
    for v in verts:
        size *= max(len(assignment[v]), 1)
        if size > ENUMERATION_BUDGET:
            raise LabBudgetError(
                f"enumeration space exceeds budget {ENUMERATION_BUDGET}", size
            )

    uniform = uniform_parameters(instance, assignment)
    acc_ell: dict[str, float] = {v: 0.0 for v in verts}
    acc_a: dict = {}
    acc_k: dict = {}
    acc_surv: dict = {}
    acc_nc: dict = {}
    weight_sum = 0.0
    lists = [assignment[v] for v in verts]
    for abits in product((False, True), repeat=n):
        activated = frozenset(v for v, b in zip(verts, abits) if b)
        na = len(activated)
        w_act = (p ** na) * ((1 - p) ** (n - na))
        if w_act == 0.0:
            continue
        for combo in product(*lists):
            tentative = dict(zip(verts, combo))
            w = w_act
            for cs in lists:
                w /= len(cs)
            weight_sum += w
            stats = outcome_statistics(instance, assignment, activated, tentative)
            for v in verts:
                acc_ell[v] += w * stats["ell"][v]
                for c in assignment[v]:
                    acc_surv[(v, c)] = acc_surv.get((v, c), 0.0) + (
                        w if c in stats["survivors"][v] else 0.0
                    )
            for key, val in stats["a"].items():
                acc_a[key] = acc_a.get(key, 0.0) + w * val
            for key, val in stats["k"].items():
                acc_k[key] = acc_k.get(key, 0.0) + w * val
            for key, val in stats["no_member_conflict"].items():
                acc_nc[key] = acc_nc.get(key, 0.0) + (w if val else 0.0)

    if abs(weight_sum - 1.0) > 1e-12:
        raise RuntimeError(f"enumeration weights sum to {weight_sum!r}, not 1")

    if uniform is not None:
        lam, dbound = uniform
        c = instance.c_bound
        surv_one = (1 - p / lam) ** dbound if lam else 1.0
        surv_all = surv_one ** c
        f_ell = surv_all * lam
        f_a = p * (1 - surv_all) * dbound
        f_k = (1 - p) * surv_one ** (c - 1) * dbound
    else:
        lam = dbound = None

    def row(exact, formula):
        if uniform is None:
            return QuantityRow(exact, None, None)
        return QuantityRow(exact, formula, abs(exact - formula))

    return ExactExpectationReport(
        activation=p,
        weight_sum=weight_sum,
        normalized=uniform is not None,
        list_size=lam,
        degree_bound=dbound,
        ell={v: row(x, f_ell if uniform else None) for v, x in acc_ell.items()},
        a={key: row(x, f_a if uniform else None) for key, x in acc_a.items()},
        k={key: row(x, f_k if uniform else None) for key, x in acc_k.items()},
        survive_prob={key: row(x, surv_all if uniform else None) for key, x in acc_surv.items()},
        member_no_conflict_prob={
            key: row(x, surv_one if uniform else None) for key, x in acc_nc.items()
        },
    )


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float

    def within(self, target: float, sigmas: float) -> bool:
        if self.se == 0.0:
            return abs(self.mean - target) < 1e-12
        return abs(self.mean - target) <= sigmas * self.se


@dataclass
class MonteCarloReport:
    trials: int
    activation: float
    degree_bound: float
    ell: dict[str, Estimate]
    a: dict[tuple[str, int, str], Estimate]
    k: dict[tuple[str, int, str], Estimate]
    survive_prob: dict[tuple[str, int], Estimate]
    member_no_conflict_prob: dict[tuple[str, int, str], Estimate]
    pooled: dict[str, Estimate]
    eq41_violations: int
    tail_threshold: float
    tail_freq: dict[tuple[str, str], float]   # (vertex, graph) -> freq of a big-t ball event
    tail_bound: float                          # 11^3 C^3 D^5 (log D)^(-log D)


def monte_carlo(
    instance: UnionInstance,
    assignment: Assignment,
    p: float,
    trials: int,
    seed: int,
    degree_bound: float | None = None,
    stream=None,
) -> MonteCarloReport:
    """Seeded Monte Carlo estimates of every round statistic.

    Trial streams derive from (seed, trial index), so runs are reproducible
    and can be sharded.  ``stream`` takes per-trial CSV rows when given.
    """
    if trials < 1000:
        raise ValueError("need at least 1000 trials for meaningful errors")
    ci = compile_instance(instance, assignment)
    n, n_triples, total_list = ci.n, ci.n_triples, int(ci.list_indptr[-1])
    if degree_bound is None:
        degree_bound = float(ci.member_cd.max()) if n_triples else 0.0

    # static index maps for the indicator statistics
    tri_vc = np.zeros(n_triples, dtype=np.int64)
    tri_slot = np.zeros(n_triples, dtype=np.int64)
    pos = 0
    for v in range(n):
        cnt = int(ci.mem_cnt[v])
        for j in range(int(ci.list_sizes[v])):
            for s in range(cnt):
                tri_vc[pos] = ci.list_indptr[v] + j
                tri_slot[pos] = s
                pos += 1

    sums = {
        name: np.zeros(dim, dtype=np.float64)
        for name, dim in (
            ("ell", n), ("a", n_triples), ("k", n_triples),
            ("surv", total_list), ("nc", n_triples),
        )
    }
    sqs = {name: np.zeros_like(arr) for name, arr in sums.items()}
    pooled_names = ("ell", "a", "k", "surv", "nc")
    pooled_sum = {name: 0.0 for name in pooled_names}
    pooled_sq = {name: 0.0 for name in pooled_names}

    log_d = math.log(degree_bound) if degree_bound > 1 else float("nan")
    tail_counts: dict[tuple[str, str], int] = {}
    balls = _radius2_balls(instance)
    tri_index_by_vg: dict[tuple[str, str], list[int]] = {}
    for vertex, color, graph_id, idx in ci.iter_triples():
        tri_index_by_vg.setdefault((vertex, graph_id), []).append(idx)
    ball_triples: dict[tuple[str, str], np.ndarray] = {}
    for (v, gname), ball in balls.items():
        ids: list[int] = []
        for u in ball:
            ids.extend(tri_index_by_vg.get((u, gname), []))
        ball_triples[(v, gname)] = np.array(ids, dtype=np.int64)
        tail_counts[(v, gname)] = 0

    eq41_violations = 0
    if stream is not None:
        stream.write("trial,mean_ell,mean_a,mean_k,frac_survive,frac_no_conflict\n")

    for trial in range(trials):
        active, psi_pos = sample_arrays(ci, p, derive_rng(seed, trial))
        acthit, excl, in_x, ell, t, a, k, d = kernels.round_kernel(ci, active, psi_pos)
        if n_triples and not bool(np.all(d <= a + k)):
            eq41_violations += 1
        surv = (acthit == 0).astype(np.float64)
        nc = (((acthit[tri_vc] >> tri_slot) & 1) == 0).astype(np.float64)
        values = {
            "ell": ell.astype(np.float64),
            "a": a.astype(np.float64),
            "k": k.astype(np.float64),
            "surv": surv,
            "nc": nc,
        }
        for name, arr in values.items():
            sums[name] += arr
            sqs[name] += arr * arr
            m = float(arr.mean()) if arr.size else 0.0
            pooled_sum[name] += m
            pooled_sq[name] += m * m
        if not math.isnan(log_d):
            big = t >= log_d
            if big.any():
                for key, ids in ball_triples.items():
                    if ids.size and bool(big[ids].any()):
                        tail_counts[key] += 1
        if stream is not None:
            stream.write(
                f"{trial},{values['ell'].mean()},{values['a'].mean()},"
                f"{values['k'].mean()},{values['surv'].mean()},{values['nc'].mean()}\n"
            )

    def finish(name):
        mean = sums[name] / trials
        var = np.maximum(sqs[name] / trials - mean * mean, 0.0)
        se = np.sqrt(var / trials)
        return mean, se

    est: dict[str, tuple[np.ndarray, np.ndarray]] = {name: finish(name) for name in sums}

    def pooled_est(name):
        m = pooled_sum[name] / trials
        var = max(pooled_sq[name] / trials - m * m, 0.0)
        return Estimate(m, math.sqrt(var / trials))

    ell_est = {
        ci.vertex_ids[v]: Estimate(float(est["ell"][0][v]), float(est["ell"][1][v]))
        for v in range(n)
    }
    a_est, k_est, nc_est = {}, {}, {}
    for vertex, color, graph_id, idx in ci.iter_triples():
        key = (vertex, color, graph_id)
        a_est[key] = Estimate(float(est["a"][0][idx]), float(est["a"][1][idx]))
        k_est[key] = Estimate(float(est["k"][0][idx]), float(est["k"][1][idx]))
        nc_est[key] = Estimate(float(est["nc"][0][idx]), float(est["nc"][1][idx]))
    surv_est = {}
    for vertex, color, vc in ci.iter_vcs():
        surv_est[(vertex, color)] = Estimate(
            float(est["surv"][0][vc]), float(est["surv"][1][vc])
        )

    c = instance.c_bound
    if degree_bound > 1:
        tail_bound = (11 ** 3) * (c ** 3) * degree_bound ** 5 * log_d ** (-log_d)
    else:
        tail_bound = float("inf")
    return MonteCarloReport(
        trials=trials,
        activation=p,
        degree_bound=degree_bound,
        ell=ell_est,
        a=a_est,
        k=k_est,
        survive_prob=surv_est,
        member_no_conflict_prob=nc_est,
        pooled={name: pooled_est(name) for name in pooled_names},
        eq41_violations=eq41_violations,
        tail_threshold=log_d,
        tail_freq={key: cnt / trials for key, cnt in tail_counts.items()},
        tail_bound=tail_bound,
    )


def _radius2_balls(instance: UnionInstance) -> dict[tuple[str, str], set[str]]:
    balls: dict[tuple[str, str], set[str]] = {}
    for g in instance.member_graphs:
        adj = g.adjacency()
        for v in sorted(g.vertices):
            ball = {v} | adj[v]
            for u in adj[v]:
                ball |= adj[u]
            balls[(v, g.graph_id)] = ball
    return balls


# ---------------------------------------------------------------------------
# exhaustive coloring oracles


@dataclass(frozen=True)
class ColorabilityVerdict:
    colorable: bool
    coloring: dict[str, int] | None
    nodes_explored: int


def exhaustive_list_chromatic(
    instance: UnionInstance,
    assignment: Assignment | None = None,
    node_budget: int | None = None,
):
    """With an assignment: decide list/DP colorability exactly.  Without one:
    the chromatic number of the union graph (uniform lists by definition)."""
    n = len(instance.vertex_registry)
    if assignment is None:
        if n > 16:
            raise LabBudgetError(f"chromatic search limited to 16 vertices, got {n}", n)
        return chromatic_number(
            instance.vertex_registry, instance.union_edges(), node_budget
        )
    if n > 16:
        size = 1
        for v in instance.vertex_registry:
            size *= max(len(assignment[v]), 1)
            if size > ENUMERATION_BUDGET:
                raise LabBudgetError(
                    f"search space exceeds budget {ENUMERATION_BUDGET}", size
                )
    res: SolveResult = solve_list_coloring(instance, assignment, node_budget)
    if res.status == "budget":
        raise LabBudgetError("node budget exhausted before a decision", res.nodes)
    return ColorabilityVerdict(res.status == "colorable", res.coloring, res.nodes)


def member_chromatic_numbers(instance: UnionInstance, node_budget=None) -> dict[str, ChromaticWitness]:
    return {
        g.graph_id: chromatic_number(sorted(g.vertices), sorted(g.edges), node_budget)
        for g in instance.member_graphs
    }


# ---------------------------------------------------------------------------
# constructions


def construct_thm15ii(n: int) -> UnionInstance:
    """Three nearly disjoint graphs, each n-chromatic, whose union needs n+1
    colors: two complete graphs on n+1 vertices sharing one vertex, each minus
    an edge at the shared vertex, plus the single edge joining the two freed
    vertices."""
    if n < 2:
        raise ValueError("construction needs n >= 2")
    shared = "v"
    left = [f"a{i}" for i in range(1, n + 1)]
    right = [f"b{i}" for i in range(1, n + 1)]
    u, w = left[0], right[0]

    def clique_minus(vertices, missing):
        edges = []
        for i in range(len(vertices)):
            for j in range(i + 1, len(vertices)):
                e = tuple(sorted((vertices[i], vertices[j])))
                if e != missing:
                    edges.append(e)
        return edges

    g1 = MemberGraph.build("g1", [shared] + left, clique_minus([shared] + left, tuple(sorted((u, shared)))))
    g2 = MemberGraph.build("g2", [shared] + right, clique_minus([shared] + right, tuple(sorted((w, shared)))))
    g3 = MemberGraph.build("g3", [u, w], [(u, w)])
    return UnionInstance([g1, g2, g3], 2)


@dataclass(frozen=True)
class BoundCheckRow:
    m: int
    n: int
    chi_union: int
    bound: int
    holds: bool
    skipped: bool = False
    note: str = ""


def check_bound_15i(
    instances: Sequence[UnionInstance], node_budget: int | None = None
) -> list[BoundCheckRow]:
    """chi(union) <= m + n - 2 where n = max member chromatic number.

    Violations are recorded, not raised: the bound is only claimed for large
    m + n, and tiny families (m = 1, say) genuinely break it.
    """
    rows = []
    for inst in instances:
        if len(inst.vertex_registry) > 12:
            rows.append(BoundCheckRow(0, 0, 0, 0, False, True, "beyond oracle budget"))
            continue
        members = member_chromatic_numbers(inst, node_budget)
        n = max(w.chi for w in members.values())
        m = len(inst.member_graphs)
        chi_u = chromatic_number(inst.vertex_registry, inst.union_edges(), node_budget).chi
        bound = m + n - 2
        rows.append(BoundCheckRow(m, n, chi_u, bound, chi_u <= bound))
    return rows


# ---------------------------------------------------------------------------
# instance generators


@dataclass(frozen=True)
class Hypergraph:
    vertices: tuple[str, ...]
    edges: tuple[tuple[str, ...], ...]

    def degree(self, v: str) -> int:
        return sum(1 for e in self.edges if v in e)

    def max_degree(self) -> int:
        return max((self.degree(v) for v in self.vertices), default=0)

    def is_linear(self) -> tuple[bool, tuple | None]:
        for i in range(len(self.edges)):
            for j in range(i + 1, len(self.edges)):
                if len(set(self.edges[i]) & set(self.edges[j])) > 1:
                    return False, (self.edges[i], self.edges[j])
        return True, None


def random_linear_hypergraph(
    n_vertices: int, k: int, target_degree: int, seed: int, density: float = 1.0
) -> Hypergraph:
    """Greedy random k-uniform linear hypergraph with max degree <= target.

    Repeatedly samples k-sets and rejects any that would share two vertices
    with an existing edge or push a vertex over the degree cap.  May land
    below the density target; the construction invariants always hold.
    """
    if k < 2:
        raise ValueError("edges need at least 2 vertices")
    rng = derive_rng(seed)
    width = len(str(max(n_vertices - 1, 1)))
    names = [f"u{str(i).zfill(width)}" for i in range(n_vertices)]
    degrees = {v: 0 for v in names}
    covered: set[tuple[str, str]] = set()
    edges: list[tuple[str, ...]] = []
    target_edges = int(density * n_vertices * target_degree / k)
    attempts = 0
    max_attempts = 80 * max(target_edges, 1)
    while len(edges) < target_edges and attempts < max_attempts:
        attempts += 1
        pick = rng.choice(n_vertices, size=k, replace=False)
        edge = tuple(sorted(names[i] for i in pick))
        if any(degrees[v] >= target_degree for v in edge):
            continue
        pairs = [
            (edge[i], edge[j]) for i in range(k) for j in range(i + 1, k)
        ]
        if any(pr in covered for pr in pairs):
            continue
        edges.append(edge)
        covered.update(pairs)
        for v in edge:
            degrees[v] += 1
    return Hypergraph(tuple(names), tuple(sorted(edges)))


def clique_instance(degree: int, list_size: int) -> tuple[UnionInstance, ListAssignment]:
    """Single complete graph on degree+1 vertices with one shared list: the
    smallest uniformly normalized instance with overlap bound 1."""
    verts = [f"v{i}" for i in range(degree + 1)]
    edges = [(a, b) for i, a in enumerate(verts) for b in verts[i + 1 :]]
    inst = UnionInstance([MemberGraph.build("g", verts, edges)], 1)
    return inst, ListAssignment({v: range(list_size) for v in verts})


def _next_prime(x: int) -> int:
    def is_prime(q):
        if q < 2:
            return False
        f = 2
        while f * f <= q:
            if q % f == 0:
                return False
            f += 1
        return True

    q = max(x, 2)
    while not is_prime(q):
        q += 1
    return q


def block_design_instance(
    overlap: int, degree: int, list_size: int
) -> tuple[UnionInstance, ListAssignment]:
    """A uniformly normalized instance: membership exactly C, member color
    degree exactly D for every color, all lists {0..Lambda-1}.

    Built from prime-field blocks {(i, a*i+b mod N) : i < C} over a in
    {0..D}; any two blocks share at most one point, so the point cliques are
    nearly disjoint, and every point lies in exactly D+1 blocks.
    """
    if overlap < 1 or degree < 0 or list_size < 1:
        raise ValueError("need C >= 1, D >= 0, Lambda >= 1")
    colors = list(range(list_size))
    if degree == 0:
        graphs = [
            MemberGraph.build(f"g{i}", ["x"], []) for i in range(overlap)
        ]
        return UnionInstance(graphs, overlap), ListAssignment({"x": colors})
    n_field = _next_prime(max(overlap, degree + 1))
    blocks: dict[tuple[int, int], str] = {}
    wid = len(str(n_field - 1))
    for a in range(degree + 1):
        for b in range(n_field):
            blocks[(a, b)] = f"e{a}_{str(b).zfill(wid)}"
    cliques = []
    for i in range(overlap):
        for y in range(n_field):
            members = [blocks[(a, (y - a * i) % n_field)] for a in range(degree + 1)]
            edges = [
                (members[s], members[tt])
                for s in range(len(members))
                for tt in range(s + 1, len(members))
            ]
            cliques.append(MemberGraph.build(f"p{i}_{str(y).zfill(wid)}", members, edges))
    instance = UnionInstance(cliques, overlap)
    lists = ListAssignment({v: colors for v in instance.vertex_registry})
    return instance, lists
