"""Embedding an instance into one where every quantity is exact: membership
equals C, every list has size Lambda, and every member color degree equals D.

Two phases. The degree phase processes one member graph at a time: for each
color still short of degree D somewhere in the graph, the graph is replaced by
2D disjoint copies of itself (vertex set V x [2D], privately per graph, the
all-ones copy keeping the original vertices) and a regular "filler" graph is
laid over each vertex fiber whose degree makes up exactly the missing color
degree.  Colors are re-tagged per copy so the filler edges join same-color
holders while plain copies stay independent.

The membership phase then raises every vertex to exactly C member graphs.
Vertices with the same list are pooled; each pool gets a fresh block design
(prime-field lines {(i, a*i+b)} over C parallel classes, so any two blocks
share at most one point and every point lies in exactly C blocks) whose blocks
become member graphs carrying a D-regular circulant.  A deficient vertex is
attached to one otherwise untouched block per missing membership; blocks of
one parallel class are pairwise disjoint, so all attachments ride the first
class without ever putting two vertices of an existing graph, or the same
vertex pair, into two common graphs.  When D is odd, regular graphs need an
even vertex count, so attachments travel in pairs (deficient vertex, fresh pad
of the same list); the pads are sized to absorb the remainder.  The one
genuinely unreachable corner is D odd with C even and an odd number of missing
memberships in some pool: every member graph restricted to one list pool must
be D-regular, which forces each pool's attachment count to be even.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Mapping

from .instance import (
    Assignment,
    CorrespondenceAssignment,
    ListAssignment,
    MemberGraph,
    UnionInstance,
    color_degree,
)

DEFAULT_VERTEX_CAP = 1_000_000


class NormalizeUnsupportedError(ValueError):
    pass


class NormalizeCapError(ValueError):
    def __init__(self, message: str, projected: int):
        super().__init__(message)
        self.projected = projected


def _next_prime(x: int) -> int:
    q = max(x, 2)
    while any(q % f == 0 for f in range(2, int(math.isqrt(q)) + 1)):
        q += 1
    return q


def _regular_circulant(vertices: list[str], degree: int) -> list[tuple[str, str]]:
    """Degree-regular graph on the given vertices (ring offsets 1..k, plus the
    antipode when the degree is odd, which then needs an even count)."""
    n = len(vertices)
    if degree >= n:
        raise ValueError(f"cannot build a {degree}-regular graph on {n} vertices")
    if degree % 2 == 1 and n % 2 == 1:
        raise ValueError(f"no {degree}-regular graph on an odd count {n}")
    edges = []
    for off in range(1, degree // 2 + 1):
        for i in range(n):
            edges.append((vertices[i], vertices[(i + off) % n]))
    if degree % 2 == 1:
        for i in range(n // 2):
            edges.append((vertices[i], vertices[i + n // 2]))
    return edges


@dataclass(frozen=True)
class GraphStagePlan:
    graph_id: str
    stage_colors: tuple[int, ...]                      # colors needing filler, ascending
    filler_degree: dict[tuple[int, str], int]          # (stage index, vertex) -> D - d(v, c)

    @property
    def n_stages(self) -> int:
        return len(self.stage_colors)


@dataclass(frozen=True)
class EmbeddingPlan:
    color_enumeration: tuple[int, ...]
    blowup: int                       # 2D copies per stage
    degree_bound: int
    list_size: int
    per_graph: tuple[GraphStagePlan, ...]
    projected_vertices: int

    @property
    def is_identity(self) -> bool:
        return all(g.n_stages == 0 for g in self.per_graph)


@dataclass(frozen=True)
class RelabelMaps:
    vertex_to_original: dict[str, str]     # every product vertex -> base vertex
    color_to_original: dict[int, int]      # every output color -> base color
    plan: EmbeddingPlan

    def restrict_coloring(self, coloring: Mapping[str, int], originals) -> dict[str, int]:
        """Pull a coloring of the normalized instance back to the originals."""
        out = {}
        for v in originals:
            out[v] = self.color_to_original[coloring[v]]
        return out


def pad_lists(assignment: ListAssignment | CorrespondenceAssignment, list_size: int):
    """Append globally fresh colors until every list has the target size.

    Fresh colors appear in one list only, so no color degree changes.
    """
    lists = {v: list(cs) for v, cs in assignment.lists.items()}
    too_long = [v for v, cs in lists.items() if len(cs) > list_size]
    if too_long:
        raise ValueError(
            f"list of {too_long[0]!r} already longer than {list_size}"
        )
    nxt = max((c for cs in lists.values() for c in cs), default=-1) + 1
    for v in sorted(lists):
        while len(lists[v]) < list_size:
            lists[v].append(nxt)
            nxt += 1
    if isinstance(assignment, CorrespondenceAssignment):
        return CorrespondenceAssignment(lists, assignment.matchings)
    return ListAssignment(lists)


def build_regularizer(j: int, vertex: str, degree: int, degree_bound: int):
    """A degree-regular graph on the fiber {vertex} x [2D]^j whose
    neighborhoods only vary the last coordinate.

    Realized as (2D)^(j-1) disjoint copies of a circulant bipartite graph
    between the low half {1..D} and the high half {D+1..2D} of the last
    coordinate.
    """
    if degree < 0 or degree > degree_bound:
        raise ValueError(
            f"filler degree {degree} for {vertex!r} outside [0, {degree_bound}]"
        )
    if j < 1:
        raise ValueError("stage index starts at 1")
    edges = []
    if degree == 0:
        return edges
    d = degree_bound
    span = range(1, 2 * d + 1)
    for prefix in product(span, repeat=j - 1):
        for s in range(1, d + 1):
            for t in range(degree):
                partner = d + ((s - 1 + t) % d) + 1
                edges.append(
                    ((vertex, *prefix, s), (vertex, *prefix, partner))
                )
    return edges


def _pad_pairing(total_units: int, c_bound: int, max_deficit: int):
    """Pad bookkeeping for odd-degree attachment blocks.

    Every attachment block carries exactly two new vertices, one deficient
    vertex plus one pad (or two pads), so each block keeps an even vertex
    count.  Returns (pad count, pad index per unit, pad-pad pairs).
    """
    if total_units == 0:
        return 0, [], []
    for n_pads in range(1, total_units + 2 * c_bound + 4):
        if n_pads * c_bound < total_units:
            continue
        if (total_units + n_pads * c_bound) % 2:
            continue
        surplus = n_pads * c_bound - total_units
        if surplus and n_pads < 2:
            continue
        if n_pads < max_deficit:
            continue
        unit_pads = [i % n_pads for i in range(total_units)]
        leftovers = [c_bound - unit_pads.count(k) for k in range(n_pads)]
        pairs = _pair_leftovers(leftovers)
        if pairs is None:
            continue
        return n_pads, unit_pads, pairs
    raise NormalizeUnsupportedError(
        "odd degree bound with an even overlap bound and an odd number of "
        "missing memberships in one list pool: every member graph restricted "
        "to the pool must be regular of odd degree, so the pool's attachment "
        "count cannot come out even"
    )


def _pair_leftovers(leftovers: list[int]):
    """Pair pads into distinct (pad, pad) blocks so pad k appears in
    leftovers[k] of them: a simple b-matching on the pads, built greedily
    largest-first.  None when the counts are not realizable."""
    if sum(leftovers) % 2:
        return None
    remaining = {k: v for k, v in enumerate(leftovers) if v > 0}
    used = set()
    pairs = []
    while remaining:
        k = max(remaining, key=lambda x: (remaining[x], -x))
        need = remaining.pop(k)
        partners = sorted(
            (x for x in remaining if (min(k, x), max(k, x)) not in used),
            key=lambda x: (-remaining[x], x),
        )
        if len(partners) < need:
            return None
        for x in partners[:need]:
            pairs.append((min(k, x), max(k, x)))
            used.add((min(k, x), max(k, x)))
            remaining[x] -= 1
            if remaining[x] == 0:
                del remaining[x]
    return pairs


def _fresh_prefix(base: str, taken: set[str]) -> str:
    prefix = base
    while any(name.startswith(prefix) for name in taken):
        prefix = "_" + prefix
    return prefix


def _membership_gadgets(
    interim: UnionInstance,
    lists_of: Mapping[str, tuple],
    degree_bound: int,
    dp: bool,
):
    """Member graphs raising every deficient vertex to exactly C memberships.

    Returns (graphs, lists, matchings, n_new_vertices).  Deficient vertices
    are pooled by their exact list; each pool gets its own prime-field block
    design plus a D-regular graph per block.
    """
    c_bound = interim.c_bound
    pools: dict[tuple, list[tuple[str, int]]] = {}
    for v in interim.vertex_registry:
        deficit = c_bound - len(interim.membership[v])
        if deficit > 0:
            pools.setdefault(tuple(lists_of[v]), []).append((v, deficit))

    taken = set(interim.vertex_registry) | set(interim.graph_ids)
    graphs: list[MemberGraph] = []
    lists: dict[str, list[int]] = {}
    matchings: dict[tuple[str, str], list[tuple[int, int]]] = {}
    n_new = 0
    for pool_idx, colors in enumerate(sorted(pools)):
        units: list[str] = []
        max_deficit = 0
        for v, deficit in sorted(pools[colors]):
            units.extend([v] * deficit)
            max_deficit = max(max_deficit, deficit)
        total = len(units)
        prefix = _fresh_prefix(f"mq{pool_idx}", taken)
        taken.add(prefix)

        if degree_bound % 2 == 0:
            n_pads, unit_pads, pad_pairs = 0, [None] * total, []
        else:
            n_pads, unit_pads, pad_pairs = _pad_pairing(total, c_bound, max_deficit)
        pads = [f"{prefix}x{j}" for j in range(n_pads)]
        attachment_blocks: list[list[str]] = [
            [units[i]] + ([pads[unit_pads[i]]] if n_pads else []) for i in range(total)
        ]
        attachment_blocks += [[pads[a], pads[b]] for a, b in pad_pairs]

        span = degree_bound + 1  # points per line; every base block is D-regular
        n_field = _next_prime(max(c_bound, span, len(attachment_blocks)))
        wid = len(str(n_field - 1))

        def point(i, y):
            return f"{prefix}p{i}_{str(y).zfill(wid)}"

        for name in pads:
            lists[name] = list(colors)
        for i in range(span):
            for y in range(n_field):
                lists[point(i, y)] = list(colors)
        n_new += n_pads + span * n_field

        for a in range(c_bound):
            for b in range(n_field):
                members = [point(i, (a * i + b) % n_field) for i in range(span)]
                if a == 0 and b < len(attachment_blocks):
                    members = members + attachment_blocks[b]
                edges = _regular_circulant(members, degree_bound)
                gid = f"{prefix}c{a}_{str(b).zfill(wid)}"
                graphs.append(MemberGraph.build(gid, members, edges))
                if dp:
                    for u, v in edges:
                        e = (u, v) if u < v else (v, u)
                        matchings[e] = [(c, c) for c in colors]
    return graphs, lists, matchings, n_new


def plan_embedding(
    instance: UnionInstance,
    assignment: Assignment,
    degree_bound: int,
    list_size: int,
) -> EmbeddingPlan:
    sizes = {v: len(assignment[v]) for v in instance.vertex_registry}
    wrong = [v for v, s in sizes.items() if s != list_size]
    if wrong:
        raise ValueError(
            f"list of {wrong[0]!r} has size {sizes[wrong[0]]}, expected {list_size}; "
            "pad lists first"
        )
    colors = tuple(sorted({c for v in instance.vertex_registry for c in assignment[v]}))
    per_graph = []
    projected = 0
    for g in instance.member_graphs:
        fillers: dict[tuple[int, str], int] = {}
        stage_colors: list[int] = []
        for c in colors:
            needed = {}
            for v in sorted(g.vertices):
                if c in assignment[v]:
                    d = color_degree(instance, assignment, g.graph_id, v, c)
                    if d > degree_bound:
                        raise ValueError(
                            f"color degree of ({v!r}, {c}) in {g.graph_id!r} is {d} > "
                            f"{degree_bound}"
                        )
                    if d < degree_bound:
                        needed[v] = degree_bound - d
            if needed:
                idx = len(stage_colors)
                stage_colors.append(c)
                for v, r in needed.items():
                    fillers[(idx, v)] = r
        per_graph.append(GraphStagePlan(g.graph_id, tuple(stage_colors), fillers))
        projected += len(g.vertices) * (2 * degree_bound) ** len(stage_colors)
    return EmbeddingPlan(
        color_enumeration=colors,
        blowup=2 * degree_bound,
        degree_bound=degree_bound,
        list_size=list_size,
        per_graph=tuple(per_graph),
        projected_vertices=projected,
    )


def normalize(
    instance: UnionInstance,
    assignment: Assignment,
    degree_bound: int,
    list_size: int,
    vertex_cap: int = DEFAULT_VERTEX_CAP,
) -> tuple[UnionInstance, Assignment, RelabelMaps]:
    """Embed the instance so membership, list sizes and member color degrees
    are all exact.  Preserves the original vertices, their lists (up to the
    recorded relabeling) and near-disjointness.
    """
    report = instance.validate()
    if not report.ok:
        raise ValueError(f"invalid instance: {report.first.message}")
    plan = plan_embedding(instance, assignment, degree_bound, list_size)

    membership_exact = all(
        len(instance.membership[v]) == instance.c_bound for v in instance.vertex_registry
    )
    if plan.is_identity and membership_exact:
        maps = RelabelMaps(
            {v: v for v in instance.vertex_registry},
            {c: c for v in instance.vertex_registry for c in assignment[v]},
            plan,
        )
        return instance, assignment, maps

    if degree_bound == 0:
        # a zero degree bound admits no conflict pairs at all (the planner
        # rejected anything else), so singleton member graphs settle membership
        from .instance import pad_membership

        padded = pad_membership(instance)
        maps = RelabelMaps(
            {v: v for v in instance.vertex_registry},
            {c: c for v in instance.vertex_registry for c in assignment[v]},
            plan,
        )
        return padded, assignment, maps

    if plan.projected_vertices > vertex_cap:
        raise NormalizeCapError(
            f"projected {plan.projected_vertices} vertices exceeds cap {vertex_cap}",
            plan.projected_vertices,
        )

    dp = isinstance(assignment, CorrespondenceAssignment)
    span = range(1, plan.blowup + 1)
    new_graphs: list[MemberGraph] = []
    new_lists: dict[str, list[int]] = {}
    new_matchings: dict[tuple[str, str], list[tuple[int, int]]] = {}
    vertex_to_original: dict[str, str] = {}
    color_to_original: dict[int, int] = {}
    fresh_color = max(plan.color_enumeration, default=-1) + 1
    interned: dict[tuple, int] = {}

    for g, gplan in zip(instance.member_graphs, plan.per_graph):
        k = gplan.n_stages
        designated = (1,) * k

        def vname(v: str, coords: tuple[int, ...]) -> str:
            # copies are private to this member graph's closure, so shared
            # vertices fan out into per-graph fibers through the original
            if coords == designated:
                return v
            return f"{v}@{g.graph_id}." + ".".join(str(x) for x in coords)

        def intern(tag: tuple, base_color: int, coords_designated: bool) -> int:
            nonlocal fresh_color
            if coords_designated:
                color_to_original.setdefault(base_color, base_color)
                return base_color
            key = (g.graph_id, tag)
            if key not in interned:
                interned[key] = fresh_color
                color_to_original[fresh_color] = base_color
                fresh_color += 1
            return interned[key]

        stage_of = {c: i for i, c in enumerate(gplan.stage_colors)}
        off_designated = (1,) * max(k - 1, 0)
        for v in g.sorted_vertices():
            for coords in product(span, repeat=k):
                name = vname(v, coords)
                vertex_to_original[name] = v
                if dp:
                    new_lists[name] = list(assignment[v])
                else:
                    tagged = []
                    for c in assignment[v]:
                        if c in stage_of:
                            # copies that differ only in the staged coordinate
                            # share this color: that is what the filler joins
                            j = stage_of[c]
                            off = coords[:j] + coords[j + 1 :]
                            tagged.append(intern(("s", c, off), c, off == off_designated))
                        else:
                            tagged.append(intern(("f", c, coords), c, coords == designated))
                    new_lists[name] = tagged

        edges: set[tuple[str, str]] = set()
        for coords in product(span, repeat=k):
            for (a, b) in sorted(g.edges):
                ea, eb = vname(a, coords), vname(b, coords)
                e = (ea, eb) if ea < eb else (eb, ea)
                edges.add(e)
                if dp:
                    pairs = assignment.matching_of((a, b))
                    if (ea, eb) != e:
                        pairs = tuple((cb, ca) for ca, cb in pairs)
                    new_matchings[e] = list(pairs)

        for j, c in enumerate(gplan.stage_colors):
            suffix_len = k - j - 1
            for v in g.sorted_vertices():
                r = gplan.filler_degree.get((j, v), 0)
                if r == 0:
                    continue
                base_edges = build_regularizer(j + 1, v, r, plan.degree_bound)
                for (_, *xa), (_, *xb) in base_edges:
                    for suffix in product(span, repeat=suffix_len):
                        ea = vname(v, tuple(xa) + suffix)
                        eb = vname(v, tuple(xb) + suffix)
                        e = (ea, eb) if ea < eb else (eb, ea)
                        edges.add(e)
                        if dp:
                            new_matchings[e] = [(c, c)]

        vertices = {
            vname(v, coords)
            for v in g.vertices
            for coords in product(span, repeat=k)
        }
        new_graphs.append(
            MemberGraph(g.graph_id, frozenset(vertices), frozenset(edges))
        )

    interim = UnionInstance(new_graphs, instance.c_bound)
    lists_of = {v: tuple(new_lists[v]) for v in interim.vertex_registry}
    gadget_graphs, gadget_lists, gadget_matchings, n_gadget = _membership_gadgets(
        interim, lists_of, degree_bound, dp
    )
    if plan.projected_vertices + n_gadget > vertex_cap:
        raise NormalizeCapError(
            f"projected {plan.projected_vertices + n_gadget} vertices exceeds "
            f"cap {vertex_cap}",
            plan.projected_vertices + n_gadget,
        )
    new_graphs.extend(gadget_graphs)
    for v, colors in gadget_lists.items():
        new_lists[v] = colors
        vertex_to_original.setdefault(v, v)
    new_matchings.update(gadget_matchings)
    for colors in new_lists.values():
        for c in colors:
            color_to_original.setdefault(c, c)

    out_instance = UnionInstance(new_graphs, instance.c_bound)
    out_assignment: Assignment
    if dp:
        out_assignment = CorrespondenceAssignment(new_lists, new_matchings)
    else:
        out_assignment = ListAssignment(new_lists)
    _self_check(out_instance, out_assignment, degree_bound, list_size)
    return out_instance, out_assignment, RelabelMaps(vertex_to_original, color_to_original, plan)


def _self_check(out, out_assignment, degree_bound: int, list_size: int) -> None:
    """Hard post-construction sweep; any miss means a construction defect."""
    from .compiled import compile_instance, is_uniformly_normalized

    wrong = [v for v in out.vertex_registry if len(out_assignment[v]) != list_size]
    if wrong:
        raise RuntimeError(f"embedding defect: list of {wrong[0]!r} has a wrong size")
    ci = compile_instance(out, out_assignment)  # validates near-disjointness
    if not is_uniformly_normalized(ci, degree_bound):
        raise RuntimeError("embedding defect: membership or color degrees not exact")
