"""Completion stage: color everything that remains once lists dominate
color degrees.

The driver resamples conflicted vertices (fresh uniform color from the list,
everyone else untouched) until no conflict remains, then verifies.  With
|L(v)| >= 8 * max color degree this terminates fast in practice; if the pass
cap runs out, an exhaustive backtracking fallback decides the instance
exactly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .compiled import CompiledInstance, compile_instance
from .exactsolve import solve_list_coloring
from .instance import Assignment, PartialColoring, UnionInstance, verify_coloring
from .nibble import EmptyListError, derive_rng


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class FinisherConfig:
    factor_required: float = 8.0
    max_resample_passes: int = 2000
    fallback: str = "backtracking"       # "none" | "backtracking"
    node_budget: int | None = 2_000_000

    def __post_init__(self):
        if self.factor_required <= 1:
            raise ValueError("factor_required must exceed 1")
        if self.fallback not in ("none", "backtracking"):
            raise ValueError(f"unknown fallback {self.fallback!r}")


@dataclass
class FinishResult:
    success: bool
    coloring: PartialColoring | None
    method: str                      # "resampling" | "backtracking" | "none"
    passes_used: int
    conflict_counts: list[int] = field(default_factory=list)
    precondition_met: bool = True
    detail: str = ""

    def conflict_histogram(self) -> dict[int, int]:
        return dict(Counter(self.conflict_counts))

    def report(self) -> dict:
        return {
            "success": self.success,
            "method": self.method,
            "passes_used": self.passes_used,
            "precondition_met": self.precondition_met,
            "conflict_counts": self.conflict_counts,
            "conflict_histogram": {str(k): v for k, v in sorted(self.conflict_histogram().items())},
            "detail": self.detail,
        }


def _max_list_degree(ci: CompiledInstance) -> tuple[int, int]:
    min_list = int(ci.list_sizes.min()) if ci.n else 0
    max_deg = int(ci.union_cd.max()) if len(ci.union_cd) else 0
    return min_list, max_deg


def resample_pass(
    instance: UnionInstance,
    assignment: Assignment,
    psi: dict[str, int],
    seed: int,
) -> tuple[dict[str, int], int]:
    """Redraw a uniform color for every vertex incident to a conflict.

    Returns the new total assignment and the number of conflicting edges seen
    before resampling.  Conflict-free input is returned unchanged.
    """
    ci = compile_instance(instance, assignment)
    psi_pos = _positions(ci, psi)
    count, conflicted = kernels.conflict_kernel(ci, psi_pos)
    if count == 0:
        return dict(psi), 0
    rng = derive_rng(seed)
    out = dict(psi)
    for v in np.nonzero(conflicted)[0]:
        colors = ci.colors_of(int(v))
        out[ci.vertex_ids[int(v)]] = int(colors[rng.integers(0, len(colors))])
    return out, int(count)


def _positions(ci: CompiledInstance, psi: dict[str, int]) -> np.ndarray:
    psi_pos = np.zeros(ci.n, dtype=np.int64)
    for v in range(ci.n):
        name = ci.vertex_ids[v]
        psi_pos[v] = ci.vc_index(name, psi[name]) - int(ci.list_indptr[v])
    return psi_pos


def finish(
    instance: UnionInstance,
    assignment: Assignment,
    mode: str | None = None,
    config: FinisherConfig = FinisherConfig(),
    seed: int = 0,
    force: bool = False,
) -> FinishResult:
    """Produce a total proper coloring of the instance from the given lists.

    Refuses when some list is smaller than factor_required times the maximum
    color degree of the union, unless ``force`` overrides the check.
    """
    ci = compile_instance(instance, assignment)
    if ci.n == 0:
        return FinishResult(True, PartialColoring({}), "none", 0)
    if ci.n and int(ci.list_sizes.min()) == 0:
        raise EmptyListError(ci.vertex_ids[int(np.argmin(ci.list_sizes))])
    min_list, max_deg = _max_list_degree(ci)
    precondition_met = min_list >= config.factor_required * max_deg
    if not precondition_met and not force:
        raise PreconditionError(
            f"smallest list ({min_list}) below {config.factor_required} x "
            f"max color degree ({max_deg}); pass force=True to try anyway"
        )

    rng = derive_rng(seed, 0)
    psi_pos = (
        rng.integers(0, ci.list_sizes, size=ci.n, dtype=np.int64)
        if ci.n
        else np.zeros(0, dtype=np.int64)
    )
    conflict_counts: list[int] = []
    for pass_idx in range(config.max_resample_passes):
        count, conflicted = kernels.conflict_kernel(ci, psi_pos)
        if count == 0:
            coloring = PartialColoring(
                {
                    ci.vertex_ids[v]: int(ci.colors_of(v)[psi_pos[v]])
                    for v in range(ci.n)
                }
            )
            check = verify_coloring(instance, assignment, coloring, mode)
            if not check.ok:
                raise RuntimeError(f"finisher produced an improper coloring: {check}")
            return FinishResult(
                True, coloring, "resampling", pass_idx, conflict_counts, precondition_met
            )
        conflict_counts.append(int(count))
        step_rng = derive_rng(seed, pass_idx + 1)
        redraw = step_rng.integers(0, ci.list_sizes, size=ci.n, dtype=np.int64)
        mask = conflicted.astype(bool)
        psi_pos[mask] = redraw[mask]

    if config.fallback == "backtracking":
        res = solve_list_coloring(instance, assignment, config.node_budget)
        if res.status == "colorable":
            coloring = PartialColoring(res.coloring)
            check = verify_coloring(instance, assignment, coloring, mode)
            if not check.ok:
                raise RuntimeError(f"fallback produced an improper coloring: {check}")
            return FinishResult(
                True,
                coloring,
                "backtracking",
                config.max_resample_passes,
                conflict_counts,
                precondition_met,
                detail=f"decided after {res.nodes} nodes",
            )
        if res.status == "uncolorable":
            return FinishResult(
                False,
                None,
                "backtracking",
                config.max_resample_passes,
                conflict_counts,
                precondition_met,
                detail="exhaustive search refuted colorability",
            )
        return FinishResult(
            False,
            None,
            "backtracking",
            config.max_resample_passes,
            conflict_counts,
            precondition_met,
            detail=f"node budget exhausted after {res.nodes} nodes",
        )
    return FinishResult(
        False,
        None,
        "resampling",
        config.max_resample_passes,
        conflict_counts,
        precondition_met,
        detail="resample pass cap reached",
    )
