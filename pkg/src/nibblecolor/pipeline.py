"""End-to-end driver: iterate nibble rounds, hand over to the finisher, verify.

Practical mode runs rounds with a user activation probability until the
surviving lists dominate the surviving color degrees (factor 8C), a round cap
hits, or further rounds can no longer help because the list/degree hypothesis
broke; the finisher then completes whatever remains and the result is
verified against the original instance.  Strict mode follows the analysis
schedule exactly and downgrades to practical on the first round failure,
recording the downgrade.

The hypergraph front door colors the edges of a linear hypergraph by coloring
the vertices of its line graph, which is a nearly disjoint union of cliques
(one per ground vertex, overlap bounded by the edge size).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .compiled import compile_instance
from .finisher import FinisherConfig, FinishResult, finish
from .instance import (
    Assignment,
    ListAssignment,
    MemberGraph,
    PartialColoring,
    UnionInstance,
    VerificationReport,
    identity_matchings,
    verify_coloring,
)
from .lab import Hypergraph
from .nibble import (
    EmptyListError,
    NotNormalizedError,
    RoundFailedError,
    nibble_round,
    shrink_after_round,
)
from .schedule import FINISHER_FACTOR, NibbleParams, Schedule, build_schedule


@dataclass(frozen=True)
class RoundSummary:
    index: int
    mode: str
    vertices_before: int
    kept: int
    min_list_after: int
    max_member_degree_after: int
    resamples: int


@dataclass
class PipelineRun:
    mode: str
    dp: bool
    seed: int
    success: bool
    coloring: PartialColoring | None
    verification: VerificationReport | None
    rounds: list[RoundSummary] = field(default_factory=list)
    finisher: FinishResult | None = None
    schedule: Schedule | None = None
    downgraded: bool = False
    retried_whole: bool = False      # rounds stranded the remainder; solved from scratch
    stop_reason: str = ""
    failure: str = ""
    timings: dict[str, float] = field(default_factory=dict)

    def summary_table(self) -> str:
        lines = [
            f"mode={self.mode} dp={self.dp} seed={self.seed} success={self.success}",
            f"stop={self.stop_reason} downgraded={self.downgraded}",
            "round  mode       before  kept  min_list  max_deg  resamples",
        ]
        for r in self.rounds:
            lines.append(
                f"{r.index:>5}  {r.mode:<9} {r.vertices_before:>6} {r.kept:>5} "
                f"{r.min_list_after:>9} {r.max_member_degree_after:>8} {r.resamples:>10}"
            )
        if self.finisher is not None:
            lines.append(
                f"finisher: method={self.finisher.method} passes={self.finisher.passes_used} "
                f"precondition_met={self.finisher.precondition_met} "
                f"retried_whole={self.retried_whole}"
            )
        for stage, secs in self.timings.items():
            lines.append(f"time[{stage}] = {secs:.3f}s")
        if self.failure:
            lines.append(f"failure: {self.failure}")
        return "\n".join(lines)


def _child_seed(seed: int, *context: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, context)]).generate_state(1)[0])


def _hypothesis_check(instance: UnionInstance, assignment: Assignment, eps: float, ci) -> int:
    """Largest member color degree; raises when some list is too small."""
    worst_d, worst_graph = 0, None
    if ci.n_triples:
        idx = int(np.argmax(ci.member_cd))
        worst_d = int(ci.member_cd[idx])
        for vertex, _color, graph_id, tri in ci.iter_triples():
            if tri == idx:
                worst_graph = graph_id
                break
    need = max((1 + eps) * worst_d, 1)
    for v in instance.vertex_registry:
        if len(assignment[v]) < need:
            raise ValueError(
                f"list of vertex {v!r} has {len(assignment[v])} colors, below "
                f"(1+eps) * {worst_d} = {need} (degree attained in graph {worst_graph!r})"
            )
    return worst_d


def run_pipeline(
    instance: UnionInstance,
    assignment: Assignment,
    eps: float,
    mode: str = "practical",
    dp: bool = False,
    seed: int = 0,
    activation: float = 0.1,
    round_cap: int = 200,
    max_resamples: int = 1000,
    finisher_config: FinisherConfig | None = None,
) -> PipelineRun:
    """Color the union instance from its lists and verify the result.

    Returns a run record; ``success`` is True only when the final coloring is
    total and passes verification on the original instance.
    """
    report = instance.validate()
    if not report.ok:
        raise ValueError(f"invalid instance: {report.first.message}")
    if dp and isinstance(assignment, ListAssignment):
        assignment = identity_matchings(instance, assignment.lists)
    is_dp = assignment.mode == "dp"
    ci = compile_instance(instance, assignment)
    degree_bound = _hypothesis_check(instance, assignment, eps, ci)
    run = PipelineRun(mode=mode, dp=is_dp, seed=seed, success=False, coloring=None, verification=None)
    if finisher_config is None:
        finisher_config = FinisherConfig(max_resample_passes=200)

    schedule: Schedule | None = None
    if mode == "strict":
        try:
            schedule = build_schedule(max(degree_bound, 2), eps, instance.c_bound, activation)
        except ValueError as exc:
            run.downgraded = True
            run.stop_reason = f"schedule unavailable: {exc}"
        run.schedule = schedule
    elif mode != "practical":
        raise ValueError(f"unknown mode {mode!r}")

    t0 = time.perf_counter()
    cur_inst, cur_asgn = instance, assignment
    coloring = PartialColoring({})
    threshold = FINISHER_FACTOR * instance.c_bound
    round_idx = 0
    strict_active = mode == "strict" and not run.downgraded
    stop = "round-cap"
    while round_idx < round_cap:
        if ci.n == 0 or ci.n_pairs == 0:
            stop = "no-conflicts"
            break
        min_list = int(ci.list_sizes.min())
        max_deg = int(ci.member_cd.max()) if ci.n_triples else 0
        if min_list == 0:
            empty = ci.vertex_ids[int(np.argmin(ci.list_sizes))]
            run.failure = f"vertex {empty!r} ran out of colors"
            stop = "empty-list"
            break
        if min_list >= threshold * max_deg:
            stop = "threshold"
            break
        if not strict_active and min_list < (1 + eps) * max_deg:
            # rounds shrink lists faster than they help once the hypothesis
            # breaks; hand the remainder to the finisher instead
            stop = "hypothesis-broke"
            break

        if strict_active:
            row = schedule.rows[min(round_idx, len(schedule.rows) - 1)]
            try:
                params = NibbleParams(
                    row.list_size, row.degree_bound, instance.c_bound,
                    schedule.activation, eps, strict=True,
                )
                if round_idx == 0:
                    # entry normalization; later rounds already leave lists at
                    # exactly the next row's size
                    trimmed = _truncate_lists(cur_asgn, int(np.ceil(row.list_size)))
                    outcome = nibble_round(
                        cur_inst, trimmed, params, "strict",
                        seed=_child_seed(seed, 1, round_idx), max_resamples=max_resamples,
                    )
                    cur_asgn = trimmed
                else:
                    outcome = nibble_round(
                        cur_inst, cur_asgn, params, "strict",
                        seed=_child_seed(seed, 1, round_idx), max_resamples=max_resamples,
                    )
                round_mode = "strict"
            except (ValueError, NotNormalizedError, RoundFailedError) as exc:
                run.downgraded = True
                strict_active = False
                run.stop_reason = f"strict round {round_idx} failed: {exc}"
                continue
        else:
            params = NibbleParams(
                max(float(min_list), 1.0), max(float(max_deg), 1.0),
                instance.c_bound, activation, eps,
            )
            try:
                outcome = nibble_round(
                    cur_inst, cur_asgn, params, "practical",
                    seed=_child_seed(seed, 1, round_idx), _ci=ci,
                )
            except EmptyListError as exc:
                run.failure = str(exc)
                stop = "empty-list"
                break
            round_mode = "practical"

        coloring = coloring.extended(outcome.colored)
        check = verify_coloring(instance, assignment, coloring)
        if not check.ok:
            raise RuntimeError(f"round {round_idx} broke the partial coloring: {check}")
        before = ci.n
        cur_inst, cur_asgn = shrink_after_round(cur_inst, cur_asgn, outcome)
        ci = compile_instance(cur_inst, cur_asgn)
        run.rounds.append(
            RoundSummary(
                round_idx,
                round_mode,
                before,
                len(outcome.kept),
                int(ci.list_sizes.min()) if ci.n else 0,
                int(ci.member_cd.max()) if ci.n_triples else 0,
                outcome.resample_count,
            )
        )
        round_idx += 1
    run.timings["rounds"] = time.perf_counter() - t0
    run.stop_reason = run.stop_reason or stop

    t1 = time.perf_counter()
    if stop == "empty-list" or len(cur_inst.vertex_registry) > 0:
        failed_detail = ""
        fin = None
        if stop != "empty-list":
            fin = finish(
                cur_inst, cur_asgn, None, finisher_config,
                seed=_child_seed(seed, 2), force=True,
            )
            run.finisher = fin
        if fin is None or not fin.success:
            # the rounds may have stranded an instance the exact fallback can
            # color outright; retry from scratch before giving up
            if fin is not None:
                failed_detail = fin.detail
            if coloring.assignment and finisher_config.fallback != "none":
                retry = finish(
                    instance, assignment, None, finisher_config,
                    seed=_child_seed(seed, 3), force=True,
                )
                run.finisher = retry
                run.retried_whole = True
                if retry.success:
                    coloring = retry.coloring
                    run.failure = ""
                else:
                    run.failure = run.failure or (
                        f"finisher failed on the remainder ({failed_detail}) and on "
                        f"the whole instance ({retry.detail})"
                    )
                    run.coloring = coloring
                    run.timings["finisher"] = time.perf_counter() - t1
                    return run
            else:
                run.failure = run.failure or f"finisher failed: {failed_detail}"
                run.coloring = coloring
                run.timings["finisher"] = time.perf_counter() - t1
                return run
        else:
            coloring = coloring.extended(fin.coloring.assignment)
    run.timings["finisher"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    run.coloring = coloring
    run.verification = verify_coloring(instance, assignment, coloring)
    total = coloring.colored_set == frozenset(instance.vertex_registry)
    run.success = bool(run.verification.ok and total)
    if not run.success and not run.failure:
        run.failure = "verification failed" if total else "coloring not total"
    run.timings["verify"] = time.perf_counter() - t2
    return run


def _truncate_lists(assignment: Assignment, target: int) -> Assignment:
    new_lists = {}
    for v, cs in assignment.lists.items():
        if len(cs) < target:
            raise RoundFailedError(f"list of {v!r} shorter than schedule target {target}")
        new_lists[v] = cs[:target]
    return assignment.restrict(new_lists)


# ---------------------------------------------------------------------------
# hypergraph edge coloring


@dataclass
class EdgeColoringResult:
    success: bool
    edge_colors: dict[tuple[str, ...], int]
    colors_used: int
    run: PipelineRun


class NonLinearError(ValueError):
    def __init__(self, pair):
        self.pair = pair
        super().__init__(f"hyperedges {pair[0]} and {pair[1]} share two or more vertices")


def line_graph_union(hypergraph: Hypergraph) -> tuple[UnionInstance, dict[str, tuple[str, ...]]]:
    """Member clique per ground vertex on its incident hyperedges.

    Linearity makes the cliques nearly disjoint, and each line vertex lies in
    at most (edge size) of them.
    """
    linear, pair = hypergraph.is_linear()
    if not linear:
        raise NonLinearError(pair)
    edges = sorted(hypergraph.edges)
    width = len(str(max(len(edges) - 1, 1)))
    names = {e: f"e{str(i).zfill(width)}" for i, e in enumerate(edges)}
    incident: dict[str, list[str]] = {}
    for e in edges:
        for u in e:
            incident.setdefault(u, []).append(names[e])
    members = []
    for u in sorted(incident):
        verts = incident[u]
        clique = [
            (verts[i], verts[j])
            for i in range(len(verts))
            for j in range(i + 1, len(verts))
        ]
        members.append(MemberGraph.build(f"g_{u}", verts, clique))
    k = max((len(e) for e in edges), default=1)
    instance = UnionInstance(members, max(k, 1))
    return instance, {names[e]: e for e in edges}


def edge_color_hypergraph(
    hypergraph: Hypergraph,
    eps: float,
    seed: int = 0,
    activation: float = 0.1,
    round_cap: int = 200,
) -> EdgeColoringResult:
    """Proper edge coloring of a linear hypergraph with ceil((1+eps)*D) colors,
    D the maximum vertex degree.  Verified directly on the hypergraph."""
    instance, name_to_edge = line_graph_union(hypergraph)
    degree = hypergraph.max_degree()
    n_colors = int(np.ceil((1 + eps) * max(degree, 1)))
    lists = ListAssignment(
        {v: range(1, n_colors + 1) for v in instance.vertex_registry}
    )
    run = run_pipeline(
        instance, lists, eps, mode="practical", seed=seed,
        activation=activation, round_cap=round_cap,
    )
    edge_colors: dict[tuple[str, ...], int] = {}
    if run.success:
        for name, edge in name_to_edge.items():
            edge_colors[edge] = run.coloring.assignment[name]
        # independent check straight on the hypergraph
        by_vertex: dict[str, set[int]] = {}
        for edge, c in edge_colors.items():
            for u in edge:
                if c in by_vertex.setdefault(u, set()):
                    raise RuntimeError(
                        f"two edges at vertex {u!r} share color {c}; verifier defect"
                    )
                by_vertex[u].add(c)
    used = len(set(edge_colors.values())) if edge_colors else 0
    return EdgeColoringResult(run.success, edge_colors, used, run)
