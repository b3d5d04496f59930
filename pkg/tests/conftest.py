import numpy as np
import pytest

from nibblecolor import (
    CorrespondenceAssignment,
    ListAssignment,
    MemberGraph,
    UnionInstance,
)


def triangle(gid, names):
    a, b, c = names
    return MemberGraph.build(gid, names, [(a, b), (b, c), (a, c)])


@pytest.fixture
def k3():
    inst = UnionInstance([triangle("g", ["a", "b", "c"])], 1)
    lists = ListAssignment({v: [1, 2] for v in "abc"})
    return inst, lists


@pytest.fixture
def two_triangles_shared():
    """Two triangles glued at x, C = 2, lists {1,2,3}."""
    g1 = triangle("g1", ["x", "a", "b"])
    g2 = triangle("g2", ["x", "c", "d"])
    inst = UnionInstance([g1, g2], 2)
    lists = ListAssignment({v: [1, 2, 3] for v in inst.vertex_registry})
    return inst, lists


@pytest.fixture
def star4():
    g = MemberGraph.build(
        "s", ["c0", "l1", "l2", "l3", "l4"],
        [("c0", f"l{i}") for i in range(1, 5)],
    )
    inst = UnionInstance([g], 1)
    lists = ListAssignment({v: [1, 2] for v in inst.vertex_registry})
    return inst, lists


def random_family(seed, max_graphs=4, max_size=5, c_bound=3, n_colors=6, dp_prob=0.5):
    """Small random nearly disjoint family with lists or random matchings.

    Returns None when the random gluing broke near-disjointness.
    """
    r = np.random.default_rng(seed)
    n_graphs = int(r.integers(1, max_graphs))
    vid = 0
    graphs = []
    pool = []
    for gi in range(n_graphs):
        size = int(r.integers(1, max_size))
        verts = []
        if pool and r.random() < 0.6:
            verts.append(pool[int(r.integers(0, len(pool)))])
        while len(verts) < size:
            verts.append(f"x{vid}")
            vid += 1
        edges = []
        for i in range(len(verts)):
            for j in range(i + 1, len(verts)):
                if r.random() < 0.7:
                    edges.append((verts[i], verts[j]))
        graphs.append(MemberGraph.build(f"g{gi}", verts, edges))
        pool.extend(verts)
    inst = UnionInstance(graphs, c_bound)
    if not inst.validate().ok:
        return None
    lists = {}
    for v in inst.vertex_registry:
        k = int(r.integers(1, 4))
        lists[v] = sorted(r.choice(n_colors, size=k, replace=False).tolist())
    if r.random() >= dp_prob:
        return inst, ListAssignment(lists)
    la = ListAssignment(lists)
    match = {}
    for e in inst.union_edges():
        u, v = e
        lu, lv = list(la[u]), list(la[v])
        r.shuffle(lu)
        r.shuffle(lv)
        npairs = int(r.integers(0, min(len(lu), len(lv)) + 1))
        match[e] = list(zip(lu[:npairs], lv[:npairs]))
    return inst, CorrespondenceAssignment(lists, match)
