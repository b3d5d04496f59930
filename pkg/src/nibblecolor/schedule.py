"""Closed-form round arithmetic and the iteration schedule.

``keep_value`` is the expected list size after one nibble round and
``uncov_value`` bounds the expected color degree after the round.  Both are
evaluated in log space: the inner power (1 - p/Lambda)^(D*C) underflows naive
evaluation long before the parameter ranges of interest end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

FINISHER_FACTOR = 8  # handover fires once ceil(list size) / degree bound reaches 8*C


@dataclass(frozen=True)
class NibbleParams:
    """Parameters of one nibble round.

    ``strict`` additionally enforces the analysis window
    (1+eps)*D <= Lambda <= 10*C*D and 1/log^2(D) <= p <= 1/log(D), which is
    meaningful only for fairly large degree bounds; practical mode accepts any
    activation probability in (0, 1).
    """

    list_size: float          # Lambda, the common list size target
    degree_bound: float       # D, per-member-graph color degree bound
    overlap_bound: int        # C, max member graphs per vertex
    activation: float         # p, per-vertex activation probability
    slack: float = 0.0        # eps, only used by the strict window check
    strict: bool = False

    def __post_init__(self):
        if not (0 <= self.activation < 1):
            raise ValueError(f"activation probability {self.activation} outside [0, 1)")
        if self.degree_bound < 0:
            raise ValueError("degree bound must be nonnegative")
        if self.list_size <= 0:
            raise ValueError("list size must be positive")
        if self.overlap_bound < 1:
            raise ValueError("overlap bound must be at least 1")
        if self.strict:
            problems = self.window_violations()
            if problems:
                raise ValueError("strict-mode window violated: " + "; ".join(problems))

    def window_violations(self) -> list[str]:
        lam, d, c, p, eps = (
            self.list_size,
            self.degree_bound,
            self.overlap_bound,
            self.activation,
            self.slack,
        )
        problems = []
        if eps <= 0:
            problems.append(f"slack {eps} not positive")
        if d <= 1:
            problems.append(f"degree bound {d} leaves no admissible activation window")
            return problems
        if not ((1 + eps) * d <= lam + 1e-9):
            problems.append(f"list size {lam} below (1+eps)*D = {(1 + eps) * d}")
        if not (lam <= 10 * c * d + 1e-9):
            problems.append(f"list size {lam} above 10*C*D = {10 * c * d}")
        lo, hi = math.log(d) ** -2, math.log(d) ** -1
        if hi >= 1:
            problems.append(f"degree bound {d} too small: activation window reaches 1")
        if not (lo - 1e-12 <= p <= hi + 1e-12):
            problems.append(f"activation {p} outside [{lo:.6g}, {hi:.6g}]")
        return problems


def _survive_power(list_size: float, activation: float, exponent: float) -> float:
    """(1 - p/Lambda)^exponent via exp/log1p."""
    x = activation / list_size
    if x >= 1:
        raise ValueError(f"activation/list_size = {x} >= 1: survive probability ill-defined")
    if exponent == 0 or activation == 0:
        return 1.0
    return math.exp(exponent * math.log1p(-x))


def keep_value(params: NibbleParams) -> float:
    """Expected number of surviving colors per list: (1 - p/Lambda)^(D*C) * Lambda."""
    return (
        _survive_power(
            params.list_size, params.activation, params.degree_bound * params.overlap_bound
        )
        * params.list_size
    )


def uncov_value(params: NibbleParams) -> float:
    """Expected color-degree bound after one round.

    ((1-p)(1 - p/Lambda)^(D(C-1)) + p(1 - (1 - p/Lambda)^(DC))) * D
    """
    lam, d, c, p = params.list_size, params.degree_bound, params.overlap_bound, params.activation
    stay = (1 - p) * _survive_power(lam, p, d * (c - 1))
    churn = p * (1.0 - _survive_power(lam, p, d * c))
    return (stay + churn) * d


@dataclass(frozen=True)
class Prop22Report:
    ratio_ok: bool            # (keep - Lambda^{4/5}) / (uncov + D^{4/5}) >= (1 + eps*p/4) * Lambda/D
    degree_ok: bool           # uncov >= (1 - p*C) * D
    ratio_lhs: float
    ratio_rhs: float
    degree_lhs: float
    degree_rhs: float

    @property
    def ratio_margin(self) -> float:
        return self.ratio_lhs - self.ratio_rhs

    @property
    def degree_margin(self) -> float:
        return self.degree_lhs - self.degree_rhs


def check_prop22(params: NibbleParams) -> Prop22Report:
    """Evaluate both round-progress inequalities and report their slack."""
    lam, d, p = params.list_size, params.degree_bound, params.activation
    keep = keep_value(params)
    uncov = uncov_value(params)
    ratio_lhs = (keep - lam ** 0.8) / (uncov + d ** 0.8)
    ratio_rhs = (1 + params.slack * p / 4) * lam / d
    degree_rhs = (1 - p * params.overlap_bound) * d
    return Prop22Report(
        ratio_ok=ratio_lhs >= ratio_rhs,
        degree_ok=uncov >= degree_rhs,
        ratio_lhs=ratio_lhs,
        ratio_rhs=ratio_rhs,
        degree_lhs=uncov,
        degree_rhs=degree_rhs,
    )


@dataclass(frozen=True)
class ScheduleRow:
    index: int
    list_size: float      # Lambda_i
    degree_bound: float   # D_i
    ratio: float          # ceil(Lambda_i) / D_i
    window_ok: bool       # strict-mode window holds at this row


@dataclass(frozen=True)
class Schedule:
    rows: tuple[ScheduleRow, ...]
    activation: float
    slack: float
    overlap_bound: int
    i_star: int | None        # first row whose ratio reaches the handover threshold
    stop_reason: str          # "threshold" | "cap" | "collapse"
    finisher_threshold: float # 8 * C

    @property
    def round_cap(self) -> int:
        return math.ceil(33 * self.overlap_bound / (self.slack * self.activation))


def build_schedule(
    degree_bound: float,
    slack: float,
    overlap_bound: int,
    activation: float | None = None,
) -> Schedule:
    """Iterate the round recurrences until the finisher threshold or a cap.

    Lambda_0 = (1+eps) * D_0 and then
    Lambda_{i+1} = keep(Lambda_i, D_i, C, p) - Lambda_i^{4/5},
    D_{i+1}      = uncov(Lambda_i, D_i, C, p) + D_i^{4/5}.
    Stops at the first row with ceil(Lambda_i)/D_i >= 8C, at the hard cap
    ceil(33C/(eps*p)) + 1, or when the list size collapses to 0.
    """
    if degree_bound <= 1:
        raise ValueError("degree bound must exceed 1")
    if slack <= 0:
        raise ValueError("slack must be positive")
    if overlap_bound < 1:
        raise ValueError("overlap bound must be at least 1")
    p = 1.0 / math.log(degree_bound) if activation is None else float(activation)
    if not (0 < p < 1):
        raise ValueError(f"activation probability {p} outside (0, 1)")

    threshold = FINISHER_FACTOR * overlap_bound
    cap = math.ceil(33 * overlap_bound / (slack * p)) + 1
    lam, d = (1 + slack) * degree_bound, float(degree_bound)
    rows: list[ScheduleRow] = []
    i_star: int | None = None
    stop = "cap"
    for i in range(cap + 1):
        ratio = math.ceil(lam) / d
        params = NibbleParams(lam, d, overlap_bound, p, slack)
        rows.append(ScheduleRow(i, lam, d, ratio, not params.window_violations()))
        if ratio >= threshold:
            i_star = i
            stop = "threshold"
            break
        nxt_lam = keep_value(params) - lam ** 0.8
        nxt_d = uncov_value(params) + d ** 0.8
        if nxt_lam <= 0:
            stop = "collapse"
            break
        lam, d = nxt_lam, nxt_d
    return Schedule(
        rows=tuple(rows),
        activation=p,
        slack=slack,
        overlap_bound=overlap_bound,
        i_star=i_star,
        stop_reason=stop,
        finisher_threshold=float(threshold),
    )


def schedule_csv(schedule: Schedule) -> str:
    lines = ["i,Lambda_i,D_i,ratio,stop_reason"]
    last = len(schedule.rows) - 1
    for row in schedule.rows:
        reason = schedule.stop_reason if row.index == schedule.rows[last].index else ""
        lines.append(
            f"{row.index},{row.list_size!r},{row.degree_bound!r},{row.ratio!r},{reason}"
        )
    return "\n".join(lines) + "\n"
