"""Exact backtracking solvers.

Two entry points: list/DP colorability from given lists, and the chromatic
number of a plain graph via uniform lists with canonical color introduction.
Candidate sets are bitmasks over list positions; propagation is forward
checking with an undo trail; the branching vertex is always one with the
fewest remaining candidates (ties by vertex index, so runs are deterministic).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .instance import Assignment, UnionInstance, _pairs_at


@dataclass(frozen=True)
class SolveResult:
    status: str                      # "colorable" | "uncolorable" | "budget"
    coloring: dict[str, int] | None
    nodes: int

    @property
    def decided(self) -> bool:
        return self.status != "budget"


def _bit_iter(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class _ListSolver:
    def __init__(self, names, lists, constraints):
        self.names = names
        self.lists = lists
        self.constraints = constraints  # u -> list[(v, {pos_u: forbidden-mask at v})]
        self.n = len(names)
        self.cand = [(1 << len(lists[i])) - 1 for i in range(self.n)]
        self.assigned = [-1] * self.n
        self.nodes = 0

    def solve(self, budget: int | None) -> SolveResult:
        trail: list[tuple[int, int]] = []
        frames: list[tuple[int, int, int]] = []  # vertex, remaining-mask, trail mark

        def pick() -> int:
            best, best_cnt = -1, 1 << 62
            for i in range(self.n):
                if self.assigned[i] < 0:
                    cnt = self.cand[i].bit_count()
                    if cnt < best_cnt:
                        best, best_cnt = i, cnt
                        if cnt <= 1:
                            break
            return best

        v = pick()
        if v < 0:
            return SolveResult("colorable", {}, 0)
        frames.append((v, self.cand[v], len(trail)))
        while frames:
            v, mask, mark = frames.pop()
            while len(trail) > mark:
                w, old = trail.pop()
                self.cand[w] = old
            self.assigned[v] = -1
            if mask == 0:
                continue
            low = mask & -mask
            pos = low.bit_length() - 1
            frames.append((v, mask ^ low, mark))

            self.nodes += 1
            if budget is not None and self.nodes > budget:
                return SolveResult("budget", None, self.nodes)
            self.assigned[v] = pos
            ok = True
            mark2 = len(trail)
            for w, removal in self.constraints[v]:
                if self.assigned[w] >= 0:
                    continue
                forbid = removal.get(pos)
                if not forbid:
                    continue
                new = self.cand[w] & ~forbid
                if new != self.cand[w]:
                    trail.append((w, self.cand[w]))
                    self.cand[w] = new
                    if new == 0:
                        ok = False
                        break
            if not ok:
                while len(trail) > mark2:
                    w, old = trail.pop()
                    self.cand[w] = old
                self.assigned[v] = -1
                continue
            nxt = pick()
            if nxt < 0:
                coloring = {
                    self.names[i]: self.lists[i][self.assigned[i]] for i in range(self.n)
                }
                return SolveResult("colorable", coloring, self.nodes)
            frames.append((nxt, self.cand[nxt], len(trail)))
        return SolveResult("uncolorable", None, self.nodes)


def solve_list_coloring(
    instance: UnionInstance,
    assignment: Assignment,
    node_budget: int | None = None,
    restrict_to: Sequence[str] | None = None,
    lists_override: Mapping[str, Sequence[int]] | None = None,
) -> SolveResult:
    """Decide colorability from the given lists (list or DP mode).

    ``restrict_to`` solves the induced subgraph on those vertices only;
    ``lists_override`` substitutes shrunken lists while keeping the conflict
    structure of ``assignment``.
    """
    if restrict_to is None:
        names = list(instance.vertex_registry)
    else:
        names = sorted(restrict_to)
    idx = {v: i for i, v in enumerate(names)}

    def list_of(v):
        if lists_override is not None:
            return tuple(sorted(lists_override[v]))
        return assignment[v]

    lists = [list_of(v) for v in names]
    pos = [{c: i for i, c in enumerate(cs)} for cs in lists]
    constraints: list[list[tuple[int, dict[int, int]]]] = [[] for _ in names]
    for u, v in instance.union_edges():
        if u not in idx or v not in idx:
            continue
        iu, iv = idx[u], idx[v]
        fwd: dict[int, int] = {}
        bwd: dict[int, int] = {}
        for cu, cv in _pairs_at(assignment, u, v):
            if cu in pos[iu] and cv in pos[iv]:
                fwd.setdefault(pos[iu][cu], 0)
                fwd[pos[iu][cu]] |= 1 << pos[iv][cv]
                bwd.setdefault(pos[iv][cv], 0)
                bwd[pos[iv][cv]] |= 1 << pos[iu][cu]
        if fwd:
            constraints[iu].append((iv, fwd))
            constraints[iv].append((iu, bwd))
    return _ListSolver(names, lists, constraints).solve(node_budget)


# ---------------------------------------------------------------------------
# plain chromatic number


class _NodeBudgetHit(Exception):
    pass


def _decide_k_colorable(names, adj, t, budget):
    """t-colorability with canonical color introduction: a fresh color may be
    used only when all smaller colors already appear, which kills the color
    permutation symmetry."""
    n = len(names)
    idx = {v: i for i, v in enumerate(names)}
    nbrs = [sorted(idx[w] for w in adj[names[i]]) for i in range(n)]
    assigned = [-1] * n
    nodes = 0

    def rec(used: int, colored: int) -> bool:
        nonlocal nodes
        if colored == n:
            return True
        cap = min(used + 1, t)
        best, best_free, best_taken = -1, 1 << 62, set()
        for i in range(n):
            if assigned[i] >= 0:
                continue
            taken = {assigned[w] for w in nbrs[i] if 0 <= assigned[w] < cap}
            free = cap - len(taken)
            if free < best_free:
                best, best_free, best_taken = i, free, taken
                if free == 0:
                    return False
        for c in range(cap):
            if c in best_taken:
                continue
            nodes += 1
            if budget is not None and nodes > budget:
                raise _NodeBudgetHit()
            assigned[best] = c
            if rec(max(used, c + 1), colored + 1):
                return True
            assigned[best] = -1
        return False

    try:
        if rec(0, 0):
            return SolveResult(
                "colorable", {names[i]: assigned[i] + 1 for i in range(n)}, nodes
            )
        return SolveResult("uncolorable", None, nodes)
    except _NodeBudgetHit:
        return SolveResult("budget", None, nodes)


def greedy_coloring(names, adj) -> dict[str, int]:
    order = sorted(names, key=lambda v: (-len(adj[v]), v))
    colors: dict[str, int] = {}
    for v in order:
        taken = {colors[w] for w in adj[v] if w in colors}
        c = 1
        while c in taken:
            c += 1
        colors[v] = c
    return colors


def greedy_clique(names, adj) -> list[str]:
    order = sorted(names, key=lambda v: (-len(adj[v]), v))
    clique: list[str] = []
    for v in order:
        if all(v in adj[w] for w in clique):
            clique.append(v)
    return clique


@dataclass(frozen=True)
class ChromaticWitness:
    chi: int
    coloring: dict[str, int]
    nodes_explored: int


def chromatic_number(
    vertices: Sequence[str],
    edges: Sequence[tuple[str, str]],
    node_budget: int | None = None,
) -> ChromaticWitness:
    """Exact chromatic number with a verifying optimal coloring.

    Binary search over the color count; each decision uses exhaustive
    backtracking, so chi colors succeed and chi-1 colors are refuted.
    """
    names = sorted(vertices)
    adj: dict[str, set[str]] = {v: set() for v in names}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    if not names:
        return ChromaticWitness(0, {}, 0)
    ub_coloring = greedy_coloring(names, adj)
    ub = max(ub_coloring.values())
    lb = max(len(greedy_clique(names, adj)), 1)
    best = ub_coloring
    nodes = 0
    while lb < ub:
        mid = (lb + ub) // 2
        res = _decide_k_colorable(names, adj, mid, node_budget)
        nodes += res.nodes
        if res.status == "budget":
            raise RuntimeError(f"chromatic search exceeded node budget {node_budget}")
        if res.status == "colorable":
            ub = mid
            best = res.coloring
        else:
            lb = mid + 1
    return ChromaticWitness(ub, best, nodes)
