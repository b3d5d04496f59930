"""Array form of an instance + assignment for the round kernels.

Both coloring modes compile to one structure: per edge, the set of *conflict
pairs* (position in the u-list, position in the v-list).  List mode derives
pairs from shared colors, DP mode from the edge matchings, so an identity
matching compiles to bit-identical arrays and every downstream computation
agrees between the modes by construction.

Statistics are indexed three ways:
  vertex index      v in [0, n)
  vc index          list_indptr[v] + position of c in the list of v
  triple index      triple_base[v] + pos * mem_cnt[v] + slot, where slot is
                    the rank of the member graph inside membership(v)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .instance import Assignment, UnionInstance, check_assignment

MAX_OVERLAP = 62  # membership slots live in one int64 bitmask


@dataclass
class CompiledInstance:
    mode: str
    c_bound: int
    vertex_ids: tuple[str, ...]
    graph_ids: tuple[str, ...]
    vid: dict[str, int]
    gid: dict[str, int]

    list_indptr: np.ndarray
    list_colors: np.ndarray
    list_sizes: np.ndarray

    mem_indptr: np.ndarray
    mem_graphs: np.ndarray
    mem_cnt: np.ndarray
    triple_base: np.ndarray
    n_triples: int

    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_graph: np.ndarray

    pair_edge: np.ndarray
    pair_u: np.ndarray
    pair_v: np.ndarray
    pair_pu: np.ndarray
    pair_pv: np.ndarray
    pair_vc_u: np.ndarray
    pair_vc_v: np.ndarray
    pair_tri_u: np.ndarray
    pair_tri_v: np.ndarray
    pair_uslot: np.ndarray
    pair_vslot: np.ndarray
    pair_kmask_u: np.ndarray
    pair_kmask_v: np.ndarray
    pair_sbit_u: np.ndarray
    pair_sbit_v: np.ndarray

    member_cd: np.ndarray  # static color degree per triple
    union_cd: np.ndarray   # static color degree per vc over the union graph

    @property
    def n(self) -> int:
        return len(self.vertex_ids)

    @property
    def m(self) -> int:
        return len(self.graph_ids)

    @property
    def n_pairs(self) -> int:
        return len(self.pair_edge)

    def colors_of(self, v: int) -> np.ndarray:
        return self.list_colors[self.list_indptr[v] : self.list_indptr[v + 1]]

    def vc_index(self, vertex: str, color: int) -> int:
        v = self.vid[vertex]
        cols = self.colors_of(v)
        pos = int(np.searchsorted(cols, color))
        if pos >= len(cols) or cols[pos] != color:
            raise KeyError(f"color {color} not in the list of {vertex!r}")
        return int(self.list_indptr[v]) + pos

    def triple_index(self, vertex: str, color: int, graph_id: str) -> int:
        v = self.vid[vertex]
        g = self.gid[graph_id]
        pos = self.vc_index(vertex, color) - int(self.list_indptr[v])
        mem = self.mem_graphs[self.mem_indptr[v] : self.mem_indptr[v + 1]]
        slot = int(np.searchsorted(mem, g))
        if slot >= len(mem) or mem[slot] != g:
            raise KeyError(f"vertex {vertex!r} not in graph {graph_id!r}")
        return int(self.triple_base[v]) + pos * int(self.mem_cnt[v]) + slot

    def iter_triples(self) -> Iterator[tuple[str, int, str, int]]:
        """Yield (vertex, color, graph_id, triple index) in index order."""
        for v, vertex in enumerate(self.vertex_ids):
            cols = self.colors_of(v)
            mem = self.mem_graphs[self.mem_indptr[v] : self.mem_indptr[v + 1]]
            base = int(self.triple_base[v])
            for pos, color in enumerate(cols):
                for slot, g in enumerate(mem):
                    yield vertex, int(color), self.graph_ids[g], base + pos * len(mem) + slot

    def iter_vcs(self) -> Iterator[tuple[str, int, int]]:
        for v, vertex in enumerate(self.vertex_ids):
            start = int(self.list_indptr[v])
            for pos, color in enumerate(self.colors_of(v)):
                yield vertex, int(color), start + pos


def _conflict_pairs(instance, assignment, edges, vid, pos_of, list_sizes):
    """(pair_edge, pair_pu, pair_pv): one row per conflicting color pair."""
    z = np.zeros(0, dtype=np.int64)
    if not edges:
        return z, z.copy(), z.copy()
    n = len(vid)
    if assignment.mode == "list":
        # shared colors, found via a dense (vertex, color) position table
        all_colors = sorted({c for cs in assignment.lists.values() for c in cs})
        cid = {c: i for i, c in enumerate(all_colors)}
        n_colors = len(all_colors)
        if n_colors and n * n_colors <= 50_000_000:
            pres = np.full((n, n_colors), -1, dtype=np.int64)
            for vname, v in vid.items():
                for pos, c in enumerate(assignment[vname]):
                    pres[v, cid[c]] = pos
            eu = np.array([vid[u] for u, _ in edges], dtype=np.int64)
            ev = np.array([vid[v] for _, v in edges], dtype=np.int64)
            pu_mat = pres[eu]
            pv_mat = pres[ev]
            mask = (pu_mat >= 0) & (pv_mat >= 0)
            rows, cols = np.nonzero(mask)
            return rows.astype(np.int64), pu_mat[rows, cols], pv_mat[rows, cols]
    pe, ppu, ppv = [], [], []
    for eidx, e in enumerate(edges):
        u, v = vid[e[0]], vid[e[1]]
        for cu, cv in assignment.matching_of(e):
            pe.append(eidx)
            ppu.append(pos_of[u][cu])
            ppv.append(pos_of[v][cv])
    if not pe:
        return z, z.copy(), z.copy()
    return (
        np.array(pe, dtype=np.int64),
        np.array(ppu, dtype=np.int64),
        np.array(ppv, dtype=np.int64),
    )


def compile_instance(instance: UnionInstance, assignment: Assignment) -> CompiledInstance:
    report = instance.validate()
    if not report.ok:
        raise ValueError(f"invalid instance: {report.first.message}")
    check_assignment(instance, assignment)

    vertex_ids = instance.vertex_registry
    graph_ids = instance.graph_ids
    vid = {s: i for i, s in enumerate(vertex_ids)}
    gid = {s: i for i, s in enumerate(graph_ids)}
    n = len(vertex_ids)

    list_sizes = np.array([len(assignment[v]) for v in vertex_ids], dtype=np.int64)
    list_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(list_sizes, out=list_indptr[1:])
    list_colors = np.array(
        [c for v in vertex_ids for c in assignment[v]] or [0], dtype=np.int64
    )[: int(list_indptr[-1])]
    pos_of = [{c: i for i, c in enumerate(assignment[v])} for v in vertex_ids]

    mem_cnt = np.array([len(instance.membership[v]) for v in vertex_ids], dtype=np.int64)
    if mem_cnt.size and mem_cnt.max() > MAX_OVERLAP:
        raise ValueError(f"membership exceeds the supported bound {MAX_OVERLAP}")
    mem_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(mem_cnt, out=mem_indptr[1:])
    mem_graphs = np.array(
        [gid[g] for v in vertex_ids for g in instance.membership[v]] or [0],
        dtype=np.int64,
    )[: int(mem_indptr[-1])]
    slot_of = [
        {g: s for s, g in enumerate(instance.membership[v])} for v in vertex_ids
    ]

    triple_base = np.zeros(n, dtype=np.int64)
    np.cumsum((list_sizes * mem_cnt)[:-1], out=triple_base[1:])
    n_triples = int((list_sizes * mem_cnt).sum())

    owner = instance.edge_owner()
    edges = instance.union_edges()
    edge_u = np.array([vid[u] for u, _ in edges] or [0], dtype=np.int64)[: len(edges)]
    edge_v = np.array([vid[v] for _, v in edges] or [0], dtype=np.int64)[: len(edges)]
    edge_graph = np.array([gid[owner[e]] for e in edges] or [0], dtype=np.int64)[: len(edges)]

    graph_vsets = {g.graph_id: g.vertices for g in instance.member_graphs}

    # per-edge static data
    e_uslot = np.zeros(len(edges), dtype=np.int64)
    e_vslot = np.zeros(len(edges), dtype=np.int64)
    e_kmu = np.zeros(len(edges), dtype=np.int64)
    e_kmv = np.zeros(len(edges), dtype=np.int64)
    for eidx, (us, vs) in enumerate(edges):
        g_name = owner[(us, vs)]
        e_uslot[eidx] = slot_of[vid[us]][g_name]
        e_vslot[eidx] = slot_of[vid[vs]][g_name]
        # bits of membership slots whose graph does NOT contain the killer
        kmask_at_u = 0
        for s, gname in enumerate(instance.membership[us]):
            if vs not in graph_vsets[gname]:
                kmask_at_u |= 1 << s
        kmask_at_v = 0
        for s, gname in enumerate(instance.membership[vs]):
            if us not in graph_vsets[gname]:
                kmask_at_v |= 1 << s
        e_kmu[eidx] = kmask_at_u
        e_kmv[eidx] = kmask_at_v

    pair_edge, pair_pu, pair_pv = _conflict_pairs(
        instance, assignment, edges, vid, pos_of, list_sizes
    )
    pair_u = edge_u[pair_edge]
    pair_v = edge_v[pair_edge]
    pair_uslot = e_uslot[pair_edge]
    pair_vslot = e_vslot[pair_edge]

    ci = CompiledInstance(
        mode=assignment.mode,
        c_bound=instance.c_bound,
        vertex_ids=vertex_ids,
        graph_ids=graph_ids,
        vid=vid,
        gid=gid,
        list_indptr=list_indptr,
        list_colors=list_colors,
        list_sizes=list_sizes,
        mem_indptr=mem_indptr,
        mem_graphs=mem_graphs,
        mem_cnt=mem_cnt,
        triple_base=triple_base,
        n_triples=n_triples,
        edge_u=edge_u,
        edge_v=edge_v,
        edge_graph=edge_graph,
        pair_edge=pair_edge,
        pair_u=pair_u,
        pair_v=pair_v,
        pair_pu=pair_pu,
        pair_pv=pair_pv,
        pair_vc_u=list_indptr[pair_u] + pair_pu,
        pair_vc_v=list_indptr[pair_v] + pair_pv,
        pair_tri_u=triple_base[pair_u] + pair_pu * mem_cnt[pair_u] + pair_uslot,
        pair_tri_v=triple_base[pair_v] + pair_pv * mem_cnt[pair_v] + pair_vslot,
        pair_uslot=pair_uslot,
        pair_vslot=pair_vslot,
        pair_kmask_u=e_kmu[pair_edge],
        pair_kmask_v=e_kmv[pair_edge],
        pair_sbit_u=np.left_shift(1, pair_uslot),
        pair_sbit_v=np.left_shift(1, pair_vslot),
        member_cd=np.zeros(n_triples, dtype=np.int64),
        union_cd=np.zeros(max(int(list_indptr[-1]), 1), dtype=np.int64)[
            : int(list_indptr[-1])
        ],
    )
    if ci.n_pairs:
        np.add.at(ci.member_cd, ci.pair_tri_u, 1)
        np.add.at(ci.member_cd, ci.pair_tri_v, 1)
        np.add.at(ci.union_cd, ci.pair_vc_u, 1)
        np.add.at(ci.union_cd, ci.pair_vc_v, 1)
    return ci


def max_member_color_degree(ci: CompiledInstance) -> int:
    return int(ci.member_cd.max()) if ci.n_triples else 0


def is_uniformly_normalized(ci: CompiledInstance, degree_bound: int) -> bool:
    """Membership exactly C and every member color degree exactly D."""
    if ci.n == 0:
        return True
    if int(ci.mem_cnt.min()) != ci.c_bound or int(ci.mem_cnt.max()) != ci.c_bound:
        return False
    if ci.n_triples == 0:
        return degree_bound == 0
    return int(ci.member_cd.min()) == degree_bound and int(ci.member_cd.max()) == degree_bound
