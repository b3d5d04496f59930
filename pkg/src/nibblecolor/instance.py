"""Nearly disjoint graph unions with list / correspondence assignments.

A *union instance* is a family of simple graphs G_1, ..., G_m together with a
bound C on how many member graphs may contain any single vertex.  The family
is *nearly disjoint* when every two member graphs share at most one vertex.
Vertices and graphs are identified by strings; colors are opaque non-negative
integers.  All iteration orders are sorted-id order so that runs reproduce.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

Edge = tuple[str, str]
MatchPair = tuple[int, int]


def norm_edge(u: str, v: str) -> Edge:
    """Undirected edge key with endpoints in sorted order."""
    if u == v:
        raise ValueError(f"self-loop at vertex {u!r}")
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class MemberGraph:
    graph_id: str
    vertices: frozenset[str]
    edges: frozenset[Edge]

    def __post_init__(self):
        for u, v in self.edges:
            if u >= v:
                raise ValueError(f"edge {(u, v)} of {self.graph_id!r} is not normalized")
            if u not in self.vertices or v not in self.vertices:
                raise ValueError(
                    f"edge {(u, v)} of {self.graph_id!r} has an endpoint outside the graph"
                )

    @staticmethod
    def build(graph_id: str, vertices: Iterable[str], edges: Iterable[tuple[str, str]]) -> "MemberGraph":
        return MemberGraph(graph_id, frozenset(vertices), frozenset(norm_edge(u, v) for u, v in edges))

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def sorted_vertices(self) -> tuple[str, ...]:
        return tuple(sorted(self.vertices))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    witness: tuple


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...] = ()

    @property
    def first(self) -> Violation | None:
        return self.violations[0] if self.violations else None


class UnionInstance:
    """Immutable family of member graphs plus the membership bound C."""

    def __init__(self, member_graphs: Iterable[MemberGraph], c_bound: int):
        graphs = tuple(sorted(member_graphs, key=lambda g: g.graph_id))
        ids = [g.graph_id for g in graphs]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate member graph ids")
        if c_bound < 1:
            raise ValueError("C bound must be at least 1")
        self.member_graphs: tuple[MemberGraph, ...] = graphs
        self.c_bound: int = int(c_bound)
        membership: dict[str, list[str]] = {}
        for g in graphs:
            for v in g.vertices:
                membership.setdefault(v, []).append(g.graph_id)
        self.membership: dict[str, tuple[str, ...]] = {
            v: tuple(sorted(gs)) for v, gs in membership.items()
        }
        self.vertex_registry: tuple[str, ...] = tuple(sorted(membership))
        self._by_id = {g.graph_id: g for g in graphs}

    # -- basic accessors -------------------------------------------------

    @property
    def graph_ids(self) -> tuple[str, ...]:
        return tuple(g.graph_id for g in self.member_graphs)

    def member(self, graph_id: str) -> MemberGraph:
        try:
            return self._by_id[graph_id]
        except KeyError:
            raise KeyError(f"unknown graph id {graph_id!r}") from None

    def union_edges(self) -> tuple[Edge, ...]:
        return tuple(sorted({e for g in self.member_graphs for e in g.edges}))

    def edge_owner(self) -> dict[Edge, str]:
        """Graph id owning each union edge.

        Well defined only on valid instances: near-disjointness forces every
        union edge into exactly one member graph.
        """
        owner: dict[Edge, str] = {}
        for g in self.member_graphs:
            for e in g.edges:
                owner.setdefault(e, g.graph_id)
        return owner

    def union_adjacency(self) -> dict[str, tuple[str, ...]]:
        adj: dict[str, set[str]] = {v: set() for v in self.vertex_registry}
        for u, v in self.union_edges():
            adj[u].add(v)
            adj[v].add(u)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    def __repr__(self):
        return (
            f"UnionInstance(m={len(self.member_graphs)}, n={len(self.vertex_registry)}, "
            f"C={self.c_bound})"
        )

    # -- validation ------------------------------------------------------

    def validate(self) -> ValidationReport:
        violations: list[Violation] = []
        # two graphs intersect in >= 2 vertices exactly when some graph pair
        # appears in the membership of >= 2 vertices; counting pairs per vertex
        # keeps this linear in total membership instead of quadratic in m
        shared_by_pair: dict[tuple[str, str], list[str]] = {}
        for v in self.vertex_registry:
            gs = self.membership[v]
            for x in range(len(gs)):
                for y in range(x + 1, len(gs)):
                    shared_by_pair.setdefault((gs[x], gs[y]), []).append(v)
        for (ga, gb), verts in sorted(shared_by_pair.items()):
            if len(verts) > 1:
                violations.append(
                    Violation(
                        "intersection",
                        f"graphs {ga!r} and {gb!r} share {len(verts)} vertices",
                        (ga, gb, tuple(sorted(verts))),
                    )
                )
        for v in self.vertex_registry:
            k = len(self.membership[v])
            if k > self.c_bound:
                violations.append(
                    Violation(
                        "membership",
                        f"vertex {v!r} lies in {k} member graphs, bound is {self.c_bound}",
                        (v, k),
                    )
                )
        return ValidationReport(not violations, tuple(violations))


def validate(instance: UnionInstance) -> ValidationReport:
    return instance.validate()


# ---------------------------------------------------------------------------
# color assignments


class ListAssignment:
    """Per-vertex lists of permitted colors, kept in sorted order."""

    mode = "list"

    def __init__(self, lists: Mapping[str, Sequence[int]]):
        out: dict[str, tuple[int, ...]] = {}
        for v, colors in lists.items():
            colors = tuple(int(c) for c in colors)
            if len(set(colors)) != len(colors):
                raise ValueError(f"duplicate colors in the list of vertex {v!r}")
            if any(c < 0 for c in colors):
                raise ValueError(f"negative color id in the list of vertex {v!r}")
            out[v] = tuple(sorted(colors))
        self.lists: dict[str, tuple[int, ...]] = out

    def __getitem__(self, v: str) -> tuple[int, ...]:
        return self.lists[v]

    def __contains__(self, v: str) -> bool:
        return v in self.lists

    def restrict(self, new_lists: Mapping[str, Sequence[int]]) -> "ListAssignment":
        return ListAssignment(new_lists)

    def matching_of(self, edge: Edge) -> tuple[MatchPair, ...]:
        """Implicit identity matching: shared colors conflict with themselves."""
        u, v = edge
        common = set(self.lists[u]) & set(self.lists[v])
        return tuple((c, c) for c in sorted(common))


class CorrespondenceAssignment:
    """Lists plus per-edge matchings between the endpoint lists (DP mode)."""

    mode = "dp"

    def __init__(
        self,
        lists: Mapping[str, Sequence[int]],
        matchings: Mapping[tuple[str, str], Sequence[tuple[int, int]]],
    ):
        base = ListAssignment(lists)
        self.lists = base.lists
        norm: dict[Edge, tuple[MatchPair, ...]] = {}
        for (u, v), pairs in matchings.items():
            e = norm_edge(u, v)
            flip = (u, v) != e
            fixed = tuple(
                (int(cv), int(cu)) if flip else (int(cu), int(cv)) for cu, cv in pairs
            )
            a, b = e
            left = [p[0] for p in fixed]
            right = [p[1] for p in fixed]
            if len(set(left)) != len(left) or len(set(right)) != len(right):
                raise ValueError(f"matching on edge {e} reuses a color on one side")
            for cu, cv in fixed:
                if cu not in self.lists.get(a, ()):  # noqa: SIM118 - tuple membership
                    raise ValueError(f"matched color {cu} not in the list of {a!r}")
                if cv not in self.lists.get(b, ()):
                    raise ValueError(f"matched color {cv} not in the list of {b!r}")
            norm[e] = tuple(sorted(fixed))
        self.matchings: dict[Edge, tuple[MatchPair, ...]] = norm

    def __getitem__(self, v: str) -> tuple[int, ...]:
        return self.lists[v]

    def __contains__(self, v: str) -> bool:
        return v in self.lists

    def matching_of(self, edge: Edge) -> tuple[MatchPair, ...]:
        return self.matchings.get(norm_edge(*edge), ())

    def restrict(self, new_lists: Mapping[str, Sequence[int]]) -> "CorrespondenceAssignment":
        fresh = {v: tuple(cs) for v, cs in new_lists.items()}
        kept = {}
        for e, pairs in self.matchings.items():
            u, v = e
            if u not in fresh or v not in fresh:
                continue
            lu, lv = set(fresh[u]), set(fresh[v])
            pruned = tuple(p for p in pairs if p[0] in lu and p[1] in lv)
            kept[e] = pruned
        return CorrespondenceAssignment(fresh, kept)


Assignment = Union[ListAssignment, CorrespondenceAssignment]


def identity_matchings(instance: UnionInstance, lists: Mapping[str, Sequence[int]]) -> CorrespondenceAssignment:
    """DP assignment equivalent to plain list coloring on this instance."""
    base = ListAssignment(lists)
    matchings = {}
    for e in instance.union_edges():
        matchings[e] = base.matching_of(e)
    return CorrespondenceAssignment(lists, matchings)


def check_assignment(instance: UnionInstance, assignment: Assignment) -> None:
    for v in instance.vertex_registry:
        if v not in assignment:
            raise ValueError(f"vertex {v!r} has no color list")
    if isinstance(assignment, CorrespondenceAssignment):
        edges = set(instance.union_edges())
        for e in assignment.matchings:
            if e not in edges:
                raise ValueError(f"matching given for non-edge {e}")


# ---------------------------------------------------------------------------
# color degrees


def color_degree(
    instance: UnionInstance, assignment: Assignment, graph_id: str, v: str, c: int
) -> int:
    """Number of conflict partners of (v, c) inside one member graph.

    List mode counts neighbors whose list contains c; DP mode counts matched
    pairs (u, c') over the member edges at v.
    """
    g = instance.member(graph_id)
    if v not in g.vertices:
        raise ValueError(f"vertex {v!r} not in graph {graph_id!r}")
    if c not in assignment[v]:
        raise ValueError(f"color {c} not in the list of {v!r}")
    count = 0
    for u in g.adjacency()[v]:
        for cv, cu in _pairs_at(assignment, v, u):
            if cv == c:
                count += 1
    return count


def _pairs_at(assignment: Assignment, v: str, u: str):
    """Conflict pairs on edge vu oriented as (color-of-v, color-of-u)."""
    e = norm_edge(v, u)
    pairs = assignment.matching_of(e)
    if e[0] == v:
        return pairs
    return tuple((cv, cu) for cu, cv in pairs)


def max_color_degree(instance: UnionInstance, assignment: Assignment, graph_id: str) -> int:
    g = instance.member(graph_id)
    best = 0
    adj = g.adjacency()
    for v in g.sorted_vertices():
        tally: dict[int, int] = {}
        for u in adj[v]:
            for cv, _ in _pairs_at(assignment, v, u):
                tally[cv] = tally.get(cv, 0) + 1
        if tally:
            best = max(best, max(tally.values()))
    return best


def union_color_degree(instance: UnionInstance, assignment: Assignment, v: str, c: int) -> int:
    """Color degree of (v, c) over the whole union graph."""
    count = 0
    for u in instance.union_adjacency()[v]:
        for cv, _ in _pairs_at(assignment, v, u):
            if cv == c:
                count += 1
    return count


def max_union_color_degree(instance: UnionInstance, assignment: Assignment) -> int:
    adj = instance.union_adjacency()
    best = 0
    for v in instance.vertex_registry:
        tally: dict[int, int] = {}
        for u in adj[v]:
            for cv, _ in _pairs_at(assignment, v, u):
                tally[cv] = tally.get(cv, 0) + 1
        if tally:
            best = max(best, max(tally.values()))
    return best


# ---------------------------------------------------------------------------
# structural rewrites


def prune_edges(instance: UnionInstance, assignment: Assignment) -> UnionInstance:
    """Drop edges whose endpoints can never conflict.

    Color degrees and coloring verdicts are unchanged: removed edges carry no
    conflict pairs at all.
    """
    new_graphs = []
    for g in instance.member_graphs:
        kept = frozenset(e for e in g.edges if assignment.matching_of(e))
        new_graphs.append(MemberGraph(g.graph_id, g.vertices, kept))
    return UnionInstance(new_graphs, instance.c_bound)


def pad_membership(instance: UnionInstance) -> UnionInstance:
    """Add singleton member graphs until every vertex lies in exactly C graphs."""
    graphs = list(instance.member_graphs)
    for v in instance.vertex_registry:
        deficit = instance.c_bound - len(instance.membership[v])
        for j in range(deficit):
            graphs.append(MemberGraph(f"_pad_{v}_{j}", frozenset({v}), frozenset()))
    return UnionInstance(graphs, instance.c_bound)


@dataclass(frozen=True)
class UnionGraph:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    adjacency: dict[str, tuple[str, ...]] = field(compare=False)

    def degree(self, v: str) -> int:
        return len(self.adjacency[v])


def build_union_graph(instance: UnionInstance) -> UnionGraph:
    return UnionGraph(
        vertices=instance.vertex_registry,
        edges=instance.union_edges(),
        adjacency=instance.union_adjacency(),
    )


# ---------------------------------------------------------------------------
# colorings


@dataclass(frozen=True)
class PartialColoring:
    assignment: dict[str, int]

    @property
    def colored_set(self) -> frozenset[str]:
        return frozenset(self.assignment)

    def extended(self, more: Mapping[str, int]) -> "PartialColoring":
        overlap = set(self.assignment) & set(more)
        if overlap:
            raise ValueError(f"vertices colored twice: {sorted(overlap)[:3]}")
        merged = dict(self.assignment)
        merged.update(more)
        return PartialColoring(merged)


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    kind: str = ""
    witness: tuple = ()

    def __bool__(self):
        return self.ok


def verify_coloring(
    instance: UnionInstance,
    assignment: Assignment,
    coloring: PartialColoring | Mapping[str, int],
    mode: str | None = None,
) -> VerificationReport:
    """Check a partial coloring: colors come from the original lists and no
    edge carries a conflicting pair.

    In list mode a conflict is two equal endpoint colors; in DP mode it is a
    matched pair.  A color outside the vertex list is reported as a violation
    rather than raised.
    """
    phi = coloring.assignment if isinstance(coloring, PartialColoring) else dict(coloring)
    registry = set(instance.vertex_registry)
    unknown = set(phi) - registry
    if unknown:
        raise ValueError(f"coloring mentions unknown vertices: {sorted(unknown)[:3]}")
    if mode is None:
        mode = assignment.mode
    for v in sorted(phi):
        if phi[v] not in assignment[v]:
            return VerificationReport(False, "color-outside-list", (v, phi[v]))
    for u, v in instance.union_edges():
        if u in phi and v in phi:
            if mode == "list":
                conflict = phi[u] == phi[v] and phi[u] in assignment[u] and phi[v] in assignment[v]
            else:
                conflict = (phi[u], phi[v]) in assignment.matching_of((u, v))
            if conflict:
                return VerificationReport(False, "edge-conflict", ((u, v), phi[u], phi[v]))
    return VerificationReport(True)


# ---------------------------------------------------------------------------
# JSON interchange
#
# {"C": int,
#  "graphs": [{"id": str, "vertices": [str], "edges": [[str, str]]}],
#  "lists": {vertex: [int]},
#  "matchings": {"u|v": [[int, int]]}}        # optional; presence selects DP mode
#
# Canonical serialization sorts all keys and arrays.  The matching key joins
# the lexicographically smaller endpoint first.


def load_instance_document(doc: Mapping) -> tuple[UnionInstance, Assignment]:
    graphs = []
    for g in doc["graphs"]:
        raw_edges = [norm_edge(u, v) for u, v in g.get("edges", [])]
        if len(set(raw_edges)) != len(raw_edges):
            raise ValueError(f"multi-edge in graph {g['id']!r}")
        graphs.append(MemberGraph.build(g["id"], g["vertices"], raw_edges))
    instance = UnionInstance(graphs, int(doc["C"]))
    lists = {v: [int(c) for c in cs] for v, cs in doc["lists"].items()}
    assignment: Assignment
    if "matchings" in doc and doc["matchings"] is not None:
        matchings = {}
        for key, pairs in doc["matchings"].items():
            u, v = key.split("|")
            matchings[(u, v)] = [(int(a), int(b)) for a, b in pairs]
        assignment = CorrespondenceAssignment(lists, matchings)
    else:
        assignment = ListAssignment(lists)
    check_assignment(instance, assignment)
    return instance, assignment


def dump_instance_document(instance: UnionInstance, assignment: Assignment) -> dict:
    doc: dict = {
        "C": instance.c_bound,
        "graphs": [
            {
                "id": g.graph_id,
                "vertices": sorted(g.vertices),
                "edges": sorted([list(e) for e in g.edges]),
            }
            for g in instance.member_graphs
        ],
        "lists": {v: list(assignment[v]) for v in instance.vertex_registry},
    }
    if isinstance(assignment, CorrespondenceAssignment):
        doc["matchings"] = {
            f"{u}|{v}": sorted([list(p) for p in pairs])
            for (u, v), pairs in sorted(assignment.matchings.items())
        }
    return doc


def read_instance_json(path: str) -> tuple[UnionInstance, Assignment]:
    with open(path, "r", encoding="utf-8") as fh:
        return load_instance_document(json.load(fh))


def write_instance_json(path: str, instance: UnionInstance, assignment: Assignment) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dump_instance_document(instance, assignment), fh, indent=2, sort_keys=True)
        fh.write("\n")
