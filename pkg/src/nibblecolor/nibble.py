"""One semi-random nibble round.

A round samples an activation set A (each vertex independently with
probability p) and a tentative color psi(v) uniform on each list.  Activated
vertices whose tentative color survives the tentative colors of their
activated neighbors keep it; every survivor's list drops the colors taken by
activated neighbors.  Strict mode additionally rejects and resamples whole
rounds until none of the deviation events fires, then truncates lists to the
exact expected size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from . import kernels
from .compiled import CompiledInstance, compile_instance, is_uniformly_normalized
from .instance import (
    Assignment,
    MemberGraph,
    UnionInstance,
)
from .schedule import NibbleParams, keep_value, uncov_value


class EmptyListError(ValueError):
    def __init__(self, vertex: str):
        self.vertex = vertex
        super().__init__(f"vertex {vertex!r} has an empty color list")


class NotNormalizedError(ValueError):
    """Raised when closed-form thresholds are requested off a normalized instance."""


class RoundFailedError(RuntimeError):
    def __init__(self, message: str, stats: "RoundStats | None" = None, events=None):
        super().__init__(message)
        self.stats = stats
        self.events = events or []


def derive_rng(seed: int, *context: int) -> np.random.Generator:
    """Deterministic child stream for (seed, context...)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, context)])))


def sample_arrays(ci: CompiledInstance, p: float, rng: np.random.Generator):
    """Activation mask and tentative color positions, drawn in vertex-id order."""
    n = ci.n
    active = (rng.random(n) < p).astype(np.uint8)
    if n and int(ci.list_sizes.min()) == 0:
        bad = int(np.argmin(ci.list_sizes))
        raise EmptyListError(ci.vertex_ids[bad])
    psi_pos = rng.integers(0, ci.list_sizes, size=n, dtype=np.int64) if n else np.zeros(0, dtype=np.int64)
    return active, psi_pos


@dataclass
class RoundSample:
    """One sampled (A, psi) with its provenance."""

    activated: frozenset[str]
    tentative: dict[str, int]
    rng_seed: int
    activation: float
    _ci: CompiledInstance = field(repr=False)
    _active: np.ndarray = field(repr=False)
    _psi_pos: np.ndarray = field(repr=False)


def _ensure_compiled(instance, assignment, ci: CompiledInstance | None) -> CompiledInstance:
    return ci if ci is not None else compile_instance(instance, assignment)


def sample_round(
    instance: UnionInstance,
    assignment: Assignment,
    p: float,
    seed: int,
    *,
    _ci: CompiledInstance | None = None,
) -> RoundSample:
    if not (0 <= p <= 1):
        raise ValueError(f"activation probability {p} outside [0, 1]")
    ci = _ensure_compiled(instance, assignment, _ci)
    for v in ci.vertex_ids:
        if len(assignment[v]) == 0:
            raise EmptyListError(v)
    active, psi_pos = sample_arrays(ci, p, derive_rng(seed))
    tentative = {
        ci.vertex_ids[v]: int(ci.colors_of(v)[psi_pos[v]]) for v in range(ci.n)
    }
    activated = frozenset(ci.vertex_ids[v] for v in range(ci.n) if active[v])
    return RoundSample(activated, tentative, seed, p, ci, active, psi_pos)


@dataclass
class RoundStats:
    """All per-vertex and per-(vertex, color, graph) round statistics."""

    activation: float
    rng_seed: int
    _ci: CompiledInstance = field(repr=False)
    acthit: np.ndarray = field(repr=False)
    excl: np.ndarray = field(repr=False)
    in_x: np.ndarray = field(repr=False)
    ell: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)

    def ell_of(self, vertex: str) -> int:
        return int(self.ell[self._ci.vid[vertex]])

    def _tri(self, vertex: str, color: int, graph_id: str) -> int:
        return self._ci.triple_index(vertex, color, graph_id)

    def t_of(self, vertex, color, graph_id) -> int:
        return int(self.t[self._tri(vertex, color, graph_id)])

    def a_of(self, vertex, color, graph_id) -> int:
        return int(self.a[self._tri(vertex, color, graph_id)])

    def k_of(self, vertex, color, graph_id) -> int:
        return int(self.k[self._tri(vertex, color, graph_id)])

    def d_of(self, vertex, color, graph_id) -> int:
        return int(self.d[self._tri(vertex, color, graph_id)])

    def survived(self, vertex: str, color: int) -> bool:
        """Did the color survive the activated tentative colors around vertex?"""
        return bool(self.acthit[self._ci.vc_index(vertex, color)] == 0)

    def no_member_conflict(self, vertex: str, color: int, graph_id: str) -> bool:
        """No activated neighbor inside this member graph took a conflicting color."""
        ci = self._ci
        v = ci.vid[vertex]
        mem = ci.mem_graphs[ci.mem_indptr[v] : ci.mem_indptr[v + 1]]
        slot = int(np.searchsorted(mem, ci.gid[graph_id]))
        bit = (int(self.acthit[ci.vc_index(vertex, color)]) >> slot) & 1
        return bit == 0

    def kept_vertices(self) -> frozenset[str]:
        return frozenset(
            self._ci.vertex_ids[v] for v in range(self._ci.n) if self.in_x[v]
        )

    def survivors_of(self, vertex: str) -> tuple[int, ...]:
        ci = self._ci
        v = ci.vid[vertex]
        lo, hi = int(ci.list_indptr[v]), int(ci.list_indptr[v + 1])
        return tuple(
            int(ci.list_colors[j]) for j in range(lo, hi) if self.acthit[j] == 0
        )

    def rows(self) -> Iterator[tuple[str, int, str, int, int, int, int]]:
        """(vertex, color, graph_id, d, a, k, t) per triple, index order."""
        for vertex, color, graph_id, idx in self._ci.iter_triples():
            yield (
                vertex,
                color,
                graph_id,
                int(self.d[idx]),
                int(self.a[idx]),
                int(self.k[idx]),
                int(self.t[idx]),
            )


def _run_kernel(sample: RoundSample) -> RoundStats:
    ci = sample._ci
    acthit, excl, in_x, ell, t, a, k, d = kernels.round_kernel(
        ci, sample._active, sample._psi_pos
    )
    if ci.n_triples and not bool(np.all(d <= a + k)):
        raise RuntimeError("statistic identity d <= a + k violated; kernel defect")
    return RoundStats(sample.activation, sample.rng_seed, ci, acthit, excl, in_x, ell, t, a, k, d)


def compute_removed_lists(
    instance: UnionInstance, assignment: Assignment, sample: RoundSample
) -> dict[str, tuple[int, ...]]:
    """Surviving colors per vertex after removing activated neighbors' choices."""
    stats = _run_kernel(sample)
    return {v: stats.survivors_of(v) for v in sample._ci.vertex_ids}


def compute_X(
    instance: UnionInstance, assignment: Assignment, sample: RoundSample
) -> frozenset[str]:
    """Activated vertices whose tentative color survived."""
    return _run_kernel(sample).kept_vertices()


def measure_stats(
    instance: UnionInstance, assignment: Assignment, sample: RoundSample
) -> RoundStats:
    return _run_kernel(sample)


# ---------------------------------------------------------------------------
# deviation events


@dataclass(frozen=True)
class BadEvent:
    kind: str                      # "ell" | "a" | "k"
    vertex: str
    color: int | None
    graph_id: str | None
    value: float
    threshold: float


def expected_stats(list_size: float, degree_bound: float, overlap: int, p: float):
    """Closed-form expectations (E[ell], E[a], E[k]) on a normalized instance."""
    params = NibbleParams(list_size, degree_bound, overlap, p)
    e_ell = keep_value(params)
    survive_all = e_ell / list_size
    e_a = p * (1.0 - survive_all) * degree_bound
    e_k = uncov_value(params) - e_a
    return e_ell, e_a, e_k


def check_bad_events(
    instance: UnionInstance,
    assignment: Assignment,
    stats: RoundStats,
    list_size: float,
    degree_bound: float,
    *,
    skip_normalization_check: bool = False,
) -> list[BadEvent]:
    """Deviation events of the round: a list-size drop below expectation minus
    Lambda^{4/5}, or an a/k statistic exceeding expectation plus D^{4/5}/2.

    The closed-form expectations are only valid on a normalized instance
    (membership exactly C, member color degrees exactly D); run the
    normalizer first otherwise.
    """
    ci = stats._ci
    if not skip_normalization_check and not is_uniformly_normalized(ci, int(degree_bound)):
        raise NotNormalizedError(
            "closed-form thresholds need membership exactly C and member color "
            "degrees exactly D; normalize the instance first"
        )
    e_ell, e_a, e_k = expected_stats(list_size, degree_bound, ci.c_bound, stats.activation)
    ell_floor = e_ell - list_size ** 0.8
    bump = degree_bound ** 0.8 / 2.0
    a_cap = e_a + bump
    k_cap = e_k + bump

    events: list[BadEvent] = []
    low = np.nonzero(stats.ell < ell_floor)[0]
    for v in low:
        events.append(BadEvent("ell", ci.vertex_ids[v], None, None, float(stats.ell[v]), ell_floor))
    if ci.n_triples:
        bad_a = set(np.nonzero(stats.a > a_cap)[0].tolist())
        bad_k = set(np.nonzero(stats.k > k_cap)[0].tolist())
        if bad_a or bad_k:
            for vertex, color, graph_id, idx in ci.iter_triples():
                if idx in bad_a:
                    events.append(
                        BadEvent("a", vertex, color, graph_id, float(stats.a[idx]), a_cap)
                    )
                if idx in bad_k:
                    events.append(
                        BadEvent("k", vertex, color, graph_id, float(stats.k[idx]), k_cap)
                    )
    return events


# ---------------------------------------------------------------------------
# the round driver


@dataclass
class NibbleOutcome:
    kept: frozenset[str]               # X, now colored
    colored: dict[str, int]            # psi restricted to X
    new_lists: dict[str, tuple[int, ...]]  # lists of the surviving vertices
    stats: RoundStats
    resample_count: int
    truncate_target: int | None        # strict mode: exact list size enforced


def nibble_round(
    instance: UnionInstance,
    assignment: Assignment,
    params: NibbleParams,
    mode: str = "practical",
    seed: int = 0,
    max_resamples: int = 1000,
    *,
    _ci: CompiledInstance | None = None,
) -> NibbleOutcome:
    """Run one nibble round.

    Practical mode accepts the first sample and returns realized lists.
    Strict mode resamples whole rounds (fresh child seed per attempt) until no
    deviation event fires, truncates every surviving list to exactly
    ceil(keep - Lambda^{4/5}) colors (dropping the largest color ids), and
    requires the post-round color-degree bound uncov + D^{4/5}.
    """
    if mode not in ("practical", "strict"):
        raise ValueError(f"unknown mode {mode!r}")
    ci = _ensure_compiled(instance, assignment, _ci)
    if ci.n and int(ci.list_sizes.min()) == 0:
        raise EmptyListError(ci.vertex_ids[int(np.argmin(ci.list_sizes))])

    if mode == "practical":
        sample = _make_sample(ci, params.activation, seed, 0)
        stats = _run_kernel(sample)
        kept, colored, new_lists = _outcome_parts(ci, sample, stats, None)
        return NibbleOutcome(kept, colored, new_lists, stats, 0, None)

    # strict mode
    lam_ceil = math.ceil(params.list_size)
    if ci.n and not (
        int(ci.list_sizes.min()) == lam_ceil and int(ci.list_sizes.max()) == lam_ceil
    ):
        raise ValueError(
            f"strict mode needs every list of size exactly {lam_ceil}; "
            f"got sizes in [{int(ci.list_sizes.min())}, {int(ci.list_sizes.max())}]"
        )
    if not is_uniformly_normalized(ci, int(params.degree_bound)):
        raise NotNormalizedError(
            "strict mode needs a normalized instance; run the normalizer first"
        )
    target = math.ceil(keep_value(params) - params.list_size ** 0.8)
    degree_cap = uncov_value(params) + params.degree_bound ** 0.8

    stats = None
    events: list[BadEvent] = []
    for attempt in range(max_resamples):
        sample = _make_sample(ci, params.activation, seed, attempt)
        stats = _run_kernel(sample)
        events = check_bad_events(
            instance, assignment, stats, params.list_size, params.degree_bound,
            skip_normalization_check=True,
        )
        if events:
            continue
        if target < 0:
            raise RoundFailedError(
                f"truncation target {target} below zero: round parameters degenerate",
                stats, events,
            )
        kept, colored, new_lists = _outcome_parts(ci, sample, stats, target)
        short = [v for v, colors in new_lists.items() if len(colors) != target]
        if short:
            raise RoundFailedError(
                f"cannot truncate {short[0]!r} to {target} colors", stats, events
            )
        worst = _max_remaining_degree(ci, stats, new_lists)
        if worst > degree_cap:
            raise RoundFailedError(
                f"post-round color degree {worst} exceeds bound {degree_cap:.3f}",
                stats, events,
            )
        return NibbleOutcome(kept, colored, new_lists, stats, attempt, target)
    raise RoundFailedError(
        f"no clean sample within {max_resamples} resamples "
        f"({len(events)} deviation events in the last attempt)",
        stats, events,
    )


def _make_sample(ci: CompiledInstance, p: float, seed: int, attempt: int) -> RoundSample:
    active, psi_pos = sample_arrays(ci, p, derive_rng(seed, attempt))
    tentative = {ci.vertex_ids[v]: int(ci.colors_of(v)[psi_pos[v]]) for v in range(ci.n)}
    activated = frozenset(ci.vertex_ids[v] for v in range(ci.n) if active[v])
    return RoundSample(activated, tentative, seed, p, ci, active, psi_pos)


def _outcome_parts(ci, sample, stats, target):
    kept = stats.kept_vertices()
    colored = {v: sample.tentative[v] for v in kept}
    new_lists: dict[str, tuple[int, ...]] = {}
    for v in ci.vertex_ids:
        if v in kept:
            continue
        survivors = stats.survivors_of(v)
        if target is not None:
            survivors = survivors[:target]  # lists are sorted: keeps smallest ids
        new_lists[v] = survivors
    return kept, colored, new_lists


def _max_remaining_degree(ci, stats, new_lists) -> int:
    """Max member color degree among surviving vertices under the new lists."""
    allowed = {v: set(cs) for v, cs in new_lists.items()}
    worst = 0
    tally: dict[tuple[int, int, int], int] = {}
    for p in range(ci.n_pairs):
        u = int(ci.pair_u[p]); v = int(ci.pair_v[p])
        us = ci.vertex_ids[u]; vs = ci.vertex_ids[v]
        if us not in allowed or vs not in allowed:
            continue
        cu = int(ci.list_colors[ci.pair_vc_u[p]])
        cv = int(ci.list_colors[ci.pair_vc_v[p]])
        if cv in allowed[vs] and cu in allowed[us]:
            for key in ((v, cv, int(ci.pair_vslot[p])), (u, cu, int(ci.pair_uslot[p]))):
                tally[key] = tally.get(key, 0) + 1
                worst = max(worst, tally[key])
    return worst


def shrink_after_round(
    instance: UnionInstance, assignment: Assignment, outcome: NibbleOutcome
) -> tuple[UnionInstance, Assignment]:
    """The instance the next round runs on: kept vertices removed, lists replaced."""
    gone = outcome.kept
    new_graphs = []
    for g in instance.member_graphs:
        verts = g.vertices - gone
        if not verts:
            continue
        edges = frozenset(e for e in g.edges if e[0] in verts and e[1] in verts)
        new_graphs.append(MemberGraph(g.graph_id, verts, edges))
    shrunk = UnionInstance(new_graphs, instance.c_bound)
    new_assignment = assignment.restrict(outcome.new_lists)
    return shrunk, new_assignment
