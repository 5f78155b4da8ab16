"""Staged Rauzy-path construction under a scaled norm schedule.

The paths alternate five phases per stage (freedom/restriction on each side
plus a transition) whose matrix norms are steered into per-stage windows.
The unscaled exponent windows are astronomically large, so a schedule carries
a configurable exponent map; the default linear map preserves the structure
the condition checks measure (phase ordering by magnitude, the ratio gaps
between the two sides) at desk scale.

Phase paths store runs (winner, loser, side, count) rather than individual
edges: the restriction phases repeat a single self-loop comparison up to
millions of times, and a run applies to the matrix in closed form.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from random import Random
from typing import Callable, Iterable, Sequence

from .errors import (
    BudgetExceededError,
    CalibrationError,
    ScheduleError,
    ScheduleOverflowError,
    StageError,
    UsageError,
)
from .induction import Iet, VisitationMatrix
from .perm import (
    BOTTOM_WINS,
    TOP_WINS,
    LabeledPermutation,
    RauzyEdge,
    hyperelliptic_class,
    hyperelliptic_permutation,
    rauzy_move,
    special_permutations,
)

log = logging.getLogger(__name__)

MAX_EXPONENT = 18  # largest base-10 exponent we will instantiate as an int

FREEDOM_LHS = "freedom-LHS"
FREEDOM_LHS_BRIDGE = "freedom-LHS-bridge"
RESTRICTION_LHS = "restriction-LHS"
TRANSITION = "transition"
FREEDOM_RHS = "freedom-RHS"
RESTRICTION_RHS = "restriction-RHS"
AVOIDING = "avoiding"


def _pow10(exp: float) -> int:
    if exp > MAX_EXPONENT:
        raise ScheduleOverflowError(
            f"10^{exp:g} is beyond the representable budget (max 10^{MAX_EXPONENT}); "
            "this schedule exists for symbolic inspection only"
        )
    return max(1, round(10.0**exp))


@dataclass(frozen=True)
class Window:
    """Norm window [10^lo_exp, 10^hi_exp] (or [L, 2L] when doubled)."""

    lo_exp: float
    hi_exp: float
    double: bool = False

    @property
    def lo(self) -> int:
        return _pow10(self.lo_exp)

    @property
    def hi(self) -> int:
        return 2 * self.lo if self.double else _pow10(self.hi_exp)

    def contains(self, n: int) -> bool:
        return self.lo <= n <= self.hi

    def __str__(self):
        return f"[10^{self.lo_exp:g}, {'2x' if self.double else ''}10^{self.hi_exp:g}]"


@dataclass(frozen=True)
class ExponentScale:
    """The four exponent maps standing in for the unscaled powers 6, 4, 2, 2.3."""

    p6: Callable[[float], float]
    p4: Callable[[float], float]
    p2: Callable[[float], float]
    p23: Callable[[float], float]
    name: str = "custom"

    @staticmethod
    def linear(c6=0.7, c4=0.35, c2=0.2, c23=0.1) -> "ExponentScale":
        return ExponentScale(
            lambda n: c6 * n,
            lambda n: c4 * n,
            lambda n: c2 * n,
            lambda n: c23 * n,
            name=f"linear({c6},{c4},{c2},{c23})",
        )

    @staticmethod
    def tower() -> "ExponentScale":
        """The unscaled powers; numeric windows refuse to instantiate."""
        return ExponentScale(
            lambda n: float(n) ** 6,
            lambda n: float(n) ** 4,
            lambda n: float(n) ** 2,
            lambda n: float(n) ** 2.3,
            name="tower",
        )

    @staticmethod
    def uniform(f: Callable[[float], float], name="uniform") -> "ExponentScale":
        return ExponentScale(f, f, f, f, name=name)


@dataclass(frozen=True)
class StageWindows:
    k: int
    A: Window | None  # absent at stage 1
    Aprime: Window
    T_cap_exp: float
    B: Window
    Bprime: Window
    s_exp: float
    t_exp: float  # negative

    @property
    def s(self) -> int:
        return _pow10(self.s_exp)

    @property
    def t(self) -> float:
        return 10.0**self.t_exp

    @property
    def T_cap(self) -> int:
        return _pow10(self.T_cap_exp)


@dataclass(frozen=True)
class Schedule:
    k0: int
    stages: int
    scale: ExponentScale
    windows: tuple[StageWindows, ...]
    zeta: float = 32.0
    cstar: float = 0.5  # the constant in the angle condition thresholds

    def stage(self, k: int) -> StageWindows:
        return self.windows[k - 1]

    def star2_threshold(self, k: int) -> float:
        """Scaled analog of the first-column balance bound for A'_k T_k."""
        return 10.0 ** (2 * self.scale.p2(k + self.k0))

    def angle_threshold_lhs(self, k: int) -> float:
        return 10.0 ** (-self.cstar * self.scale.p6(2 * k + self.k0))

    def angle_threshold_rhs(self, k: int) -> float:
        return 10.0 ** (-self.cstar * self.scale.p6(2 * k + 1 + self.k0))


def make_schedule(
    k0: int, scale: ExponentScale, stages: int, zeta: float = 32.0
) -> Schedule:
    """Concrete per-stage windows; raises ScheduleError when they collapse."""
    if stages < 1:
        raise UsageError("need at least one stage")
    p6, p4, p2, p23 = scale.p6, scale.p4, scale.p2, scale.p23
    out = []
    for k in range(1, stages + 1):
        if k == 1:
            a = None
            ap = Window(p6(3 + k0), p6(3 + k0), double=True)
        else:
            lo = p6(2 * k + k0) - p4(k + k0)
            a = Window(lo, lo + p23(k + k0))
            lo = p6(2 * k + 1 + k0) + p4(k + k0)
            ap = Window(lo, lo + p2(k + k0))
        b_lo = p6(2 * k + 1 + k0) - p4(k + k0)
        b = Window(b_lo, b_lo + p2(k + k0))
        bp_lo = p6(2 * k + 2 + k0) + p4(k + k0)
        bp = Window(bp_lo, bp_lo, double=True)
        t_exp = -(p6(2 * k + 1 + k0) + p4(k + k0) + p2(k + k0) / 2)
        out.append(
            StageWindows(k, a, ap, p2(k + k0), b, bp, s_exp=bp_lo, t_exp=t_exp)
        )
    sched = Schedule(k0, stages, scale, tuple(out), zeta=zeta)
    _validate_schedule(sched)
    return sched


def _validate_schedule(s: Schedule) -> None:
    prev: StageWindows | None = None
    for w in s.windows:
        for win in (w.A, w.Aprime, w.B, w.Bprime):
            if win is not None and win.lo_exp > win.hi_exp:
                raise ScheduleError(f"stage {w.k}: collapsed window {win}")
        if w.A is not None and w.Aprime.lo_exp <= w.A.hi_exp:
            raise ScheduleError(
                f"stage {w.k}: restriction window does not dominate freedom window"
            )
        if w.Bprime.lo_exp <= w.B.hi_exp:
            raise ScheduleError(f"stage {w.k}: B' window does not dominate B window")
        if prev is not None:
            pairs = [(prev.Aprime, w.Aprime), (prev.B, w.B), (prev.Bprime, w.Bprime)]
            if prev.A is not None and w.A is not None:
                pairs.append((prev.A, w.A))
            for old, new in pairs:
                if new.lo_exp <= old.lo_exp:
                    raise ScheduleError(
                        f"stage {w.k}: windows are not increasing across stages"
                    )
        prev = w


# ---------------------------------------------------------------------------
# phase paths


@dataclass(frozen=True)
class PhasePath:
    phase: str
    start: LabeledPermutation
    end: LabeledPermutation
    runs: tuple[tuple[int, int, str, int], ...]  # (winner, loser, side, count)
    matrix: VisitationMatrix
    warnings: tuple[str, ...] = ()

    @property
    def edge_count(self) -> int:
        return sum(c for _, _, _, c in self.runs)

    def winners(self) -> set[int]:
        return {w for w, _, _, c in self.runs if c}

    def losers(self) -> set[int]:
        return {l for _, l, _, c in self.runs if c}


class PathBuilder:
    """Accumulates runs and the phase matrix while walking the diagram."""

    def __init__(self, start: LabeledPermutation):
        self.start = start
        self.pi = start
        self.M = VisitationMatrix.identity(start.d)
        self.runs: list[list] = []  # mutable [winner, loser, side, count]
        self.warnings: list[str] = []

    def apply_side(self, side: str) -> RauzyEdge:
        edge = rauzy_move(self.pi, side)
        self.M = self.M.apply_step(edge.winner, edge.loser)
        self.pi = edge.target
        if self.runs and self.runs[-1][:3] == [edge.winner, edge.loser, side]:
            self.runs[-1][3] += 1
        else:
            self.runs.append([edge.winner, edge.loser, side, 1])
        return edge

    def apply_winner(self, winner: int) -> RauzyEdge:
        i, j = self.pi.top[-1], self.pi.bottom[-1]
        if winner == i:
            return self.apply_side(TOP_WINS)
        if winner == j:
            return self.apply_side(BOTTOM_WINS)
        raise StageError(
            f"symbol {winner} cannot win at {self.pi} (last symbols {i}, {j})"
        )

    def apply_self_loop(self, side: str, count: int) -> None:
        """Closed form for a self-loop repeated ``count`` times."""
        edge = rauzy_move(self.pi, side)
        if edge.target != self.pi:
            raise StageError("closed-form repetition needs a self-loop move")
        rows = [list(r) for r in self.M.rows]
        for r in rows:
            r[edge.loser - 1] += count * r[edge.winner - 1]
        self.M = VisitationMatrix(rows)
        if self.runs and self.runs[-1][:3] == [edge.winner, edge.loser, side]:
            self.runs[-1][3] += count
        else:
            self.runs.append([edge.winner, edge.loser, side, count])

    def finish(self, phase: str) -> PhasePath:
        return PhasePath(
            phase,
            self.start,
            self.pi,
            tuple(tuple(r) for r in self.runs),
            self.M,
            tuple(self.warnings),
        )


def _admissible_freedom_lhs(edge: RauzyEdge, d: int) -> bool:
    return edge.winner <= d - 2


def _admissible_restriction_lhs(edge: RauzyEdge, d: int) -> bool:
    return edge.winner not in (1, d - 1, d) and edge.loser not in (d - 1, d)


def _steer(
    pi: LabeledPermutation,
    target: LabeledPermutation,
    admissible: Callable[[RauzyEdge, int], bool],
    rng: Random,
) -> list[str]:
    """Shortest admissible side-sequence from pi to target (BFS, rng ties)."""
    d = pi.d
    if pi == target:
        return []
    parents: dict[LabeledPermutation, tuple[LabeledPermutation, str]] = {}
    queue = deque([pi])
    seen = {pi}
    while queue:
        v = queue.popleft()
        sides = [TOP_WINS, BOTTOM_WINS]
        rng.shuffle(sides)
        for side in sides:
            e = rauzy_move(v, side)
            if not admissible(e, d) or e.target in seen:
                continue
            parents[e.target] = (v, side)
            if e.target == target:
                path = [side]
                cur = v
                while cur != pi:
                    prev, s = parents[cur]
                    path.append(s)
                    cur = prev
                return path[::-1]
            seen.add(e.target)
            queue.append(e.target)
    raise StageError(f"no admissible path from {pi} to {target}")


def _steer_to_edge(
    pi: LabeledPermutation, winners: set[int], loser: int
) -> list[str]:
    """Shortest freedom-LHS move sequence ending with someone in ``winners``
    beating ``loser``; BFS over the admissible part of the diagram."""
    d = pi.d

    def final_side(v: LabeledPermutation) -> str | None:
        for side in (TOP_WINS, BOTTOM_WINS):
            e = rauzy_move(v, side)
            if e.winner in winners and e.loser == loser:
                return side
        return None

    if (side := final_side(pi)) is not None:
        return [side]
    parents: dict[LabeledPermutation, tuple[LabeledPermutation, str]] = {}
    queue = deque([pi])
    seen = {pi}
    while queue:
        v = queue.popleft()
        for side in (TOP_WINS, BOTTOM_WINS):
            e = rauzy_move(v, side)
            if not _admissible_freedom_lhs(e, d) or e.target in seen:
                continue
            parents[e.target] = (v, side)
            if (last := final_side(e.target)) is not None:
                path = [last, side]
                cur = v
                while cur != pi:
                    prev, s = parents[cur]
                    path.append(s)
                    cur = prev
                return path[::-1]
            seen.add(e.target)
            queue.append(e.target)
    raise StageError(f"no admissible route to a win against {loser}")


def _window_check(builder: PathBuilder, window: Window, phase: str) -> None:
    norm = builder.M.norm
    if norm > window.hi:
        builder.warnings.append(
            f"{phase}: norm {norm} overshot window {window}; widened"
        )
        log.warning("%s norm %d overshot window %s; widening", phase, norm, window)


def gen_freedom_lhs(
    start: LabeledPermutation,
    window: Window,
    rng: Random,
    step_budget: int = 10**6,
) -> PhasePath:
    """Freedom on the left: only 1..d-2 win, 1 wins first, ends at pi_s.

    ``start`` may be pi_L (the canonical start) or pi_s (the state the
    previous stage ends in; the two forced symbol-1 wins that route back
    through pi_L are part of the phase).
    """
    d = start.d
    pi_s = hyperelliptic_permutation(d)
    pi_l, _, _ = special_permutations(d)
    if start not in (pi_l, pi_s):
        raise UsageError("freedom on LHS starts at pi_L or pi_s")
    b = PathBuilder(start)
    b.apply_winner(1)  # 1 wins first; forced at pi_s, chosen at pi_L
    steps = 1
    while b.M.norm < window.lo:
        if steps >= step_budget:
            raise BudgetExceededError("freedom-LHS window unreachable within budget")
        options = [
            side
            for side in (TOP_WINS, BOTTOM_WINS)
            if _admissible_freedom_lhs(rauzy_move(b.pi, side), d)
        ]
        b.apply_side(rng.choice(options))
        steps += 1
    for side in _steer(b.pi, pi_s, _admissible_freedom_lhs, rng):
        b.apply_side(side)
    _window_check(b, window, FREEDOM_LHS)
    return b.finish(FREEDOM_LHS)


def gen_restriction_lhs(
    start: LabeledPermutation,
    window: Window,
    rng: Random,
    step_budget: int = 10**6,
) -> PhasePath:
    """Restriction on the left: 1 never wins, d-1 and d are never compared.

    For d=4 the restricted diagram is the single self-loop where 2 beats 1,
    so the norm target is hit in closed form; for d >= 5 the walk lives in
    the embedded smaller class and returns to pi_L.
    """
    d = start.d
    pi_l, _, _ = special_permutations(d)
    if start != pi_l:
        raise UsageError("restriction on LHS starts at pi_L")
    b = PathBuilder(start)
    if d == 4:
        count = rng.randint(window.lo - 1, window.hi - 1)
        b.apply_self_loop(TOP_WINS, count)  # 2 beats 1, repeatedly
        return b.finish(RESTRICTION_LHS)
    steps = 0
    while b.M.norm < window.lo:
        if steps >= step_budget:
            raise BudgetExceededError(
                "restriction-LHS window unreachable within budget"
            )
        options = [
            side
            for side in (TOP_WINS, BOTTOM_WINS)
            if _admissible_restriction_lhs(rauzy_move(b.pi, side), d)
        ]
        if not options:
            raise StageError(f"restricted walk stuck at {b.pi}")
        b.apply_side(rng.choice(options))
        steps += 1
    for side in _steer(b.pi, pi_l, _admissible_restriction_lhs, rng):
        b.apply_side(side)
    _window_check(b, window, RESTRICTION_LHS)
    return b.finish(RESTRICTION_LHS)


def gen_transition(start: LabeledPermutation, rng: Random) -> PhasePath:
    """pi_L to pi_s, visiting pi_s only at the end, never revisiting pi_L."""
    d = start.d
    pi_l, _, _ = special_permutations(d)
    pi_s = hyperelliptic_permutation(d)
    if start != pi_l:
        raise UsageError("transition starts at pi_L")

    def admissible(edge: RauzyEdge, _d: int) -> bool:
        return edge.target != pi_l

    b = PathBuilder(start)
    for side in _steer(start, pi_s, admissible, rng):
        b.apply_side(side)
    return b.finish(TRANSITION)


def gen_freedom_rhs(
    start: LabeledPermutation,
    loops: int,
    pattern: Sequence[int],
    rng: Random | None = None,
) -> PhasePath:
    """Freedom on the right: d sweeps 1..d-2, then loops at pi_R.

    Each loop is pattern[i] moves of d-1 beating d, one move of d beating
    d-1, then d beating 1,..,d-2 again; the loop returns to pi_R.
    """
    d = start.d
    pi_s = hyperelliptic_permutation(d)
    if start != pi_s:
        raise UsageError("freedom on RHS starts at pi_s")
    if len(pattern) != loops:
        raise UsageError("pattern length must equal the loop count")
    b = PathBuilder(start)
    for sym in range(1, d - 1):
        b.apply_winner(d)  # d beats 1, ..., d-2
    for m in pattern:
        if m < 0:
            raise UsageError("pattern counts must be non-negative")
        if m:
            b.apply_self_loop(BOTTOM_WINS, m)  # d-1 beats d at pi_R
        b.apply_winner(d)  # d beats d-1, back toward pi_s
        for sym in range(1, d - 1):
            b.apply_winner(d)
    return b.finish(FREEDOM_RHS)


def freedom_rhs_for_window(
    start: LabeledPermutation, window: Window, rng: Random, max_loops: int = 10**6
) -> PhasePath:
    """Drive gen_freedom_rhs loop by loop until the norm enters the window."""
    pattern: list[int] = []
    while True:
        path = gen_freedom_rhs(start, len(pattern), pattern)
        if path.matrix.norm >= window.lo:
            if path.matrix.norm > window.hi:
                path = PhasePath(
                    path.phase,
                    path.start,
                    path.end,
                    path.runs,
                    path.matrix,
                    path.warnings
                    + (
                        f"freedom-RHS: norm {path.matrix.norm} overshot {window}; widened",
                    ),
                )
            return path
        if len(pattern) >= max_loops:
            raise BudgetExceededError("freedom-RHS window unreachable")
        pattern.append(rng.randint(1, 3))


def gen_restriction_rhs(start: LabeledPermutation, ell: int, stage: StageWindows) -> PhasePath:
    """d-1 beats d exactly ell times at pi_R, then d beats d-1; ends at pi_s."""
    d = start.d
    _, pi_r, _ = special_permutations(d)
    if start != pi_r:
        raise UsageError("restriction on RHS starts at pi_R")
    if not stage.s <= ell <= 2 * stage.s:
        raise UsageError(f"loop count {ell} outside [s_k, 2 s_k] = [{stage.s}, {2*stage.s}]")
    b = PathBuilder(start)
    b.apply_self_loop(BOTTOM_WINS, ell)
    b.apply_winner(d)
    return b.finish(RESTRICTION_RHS)


# ---------------------------------------------------------------------------
# grammar validation


def validate_phase(path: PhasePath) -> list[str]:
    """Exhaustive winner/loser scan; returns violations (empty when clean)."""
    d = path.start.d
    bad: list[str] = []
    if path.phase == FREEDOM_LHS:
        if any(w > d - 2 for w in path.winners()):
            bad.append("a symbol above d-2 won")
        if path.runs and path.runs[0][0] != 1:
            bad.append("1 did not win first")
        if path.end != hyperelliptic_permutation(d):
            bad.append("does not end at pi_s")
    elif path.phase == AVOIDING:
        if any(w > d - 2 for w in path.winners()):
            bad.append("a symbol above d-2 won")
        if path.end != hyperelliptic_permutation(d):
            bad.append("does not end at pi_s")
    elif path.phase == FREEDOM_LHS_BRIDGE:
        if any(w > d - 2 for w in path.winners()):
            bad.append("a symbol above d-2 won")
        if path.end != special_permutations(d)[0]:
            bad.append("does not end at pi_L")
    elif path.phase == RESTRICTION_LHS:
        if 1 in path.winners():
            bad.append("symbol 1 won")
        involved = path.winners() | path.losers()
        if involved & {d - 1, d}:
            bad.append("symbols d-1, d were compared")
        if path.end != special_permutations(d)[0]:
            bad.append("does not return to pi_L")
        if path.matrix.rows[0] != tuple(
            1 if j == 0 else 0 for j in range(d)
        ):
            bad.append("first row is not (1, 0, ..., 0)")
        for j in (d - 1, d):
            if path.matrix.column(j) != tuple(
                1 if i == j else 0 for i in range(1, d + 1)
            ):
                bad.append(f"column {j} was touched")
    elif path.phase == TRANSITION:
        if path.end != hyperelliptic_permutation(d):
            bad.append("does not end at pi_s")
    elif path.phase == FREEDOM_RHS:
        if any(w < d - 1 for w in path.winners()):
            bad.append("a symbol below d-1 won")
        if path.end != special_permutations(d)[1]:
            bad.append("does not end at pi_R")
    elif path.phase == RESTRICTION_RHS:
        if path.winners() - {d - 1, d} or path.losers() - {d - 1, d}:
            bad.append("symbols 1..d-2 were compared")
        if path.end != hyperelliptic_permutation(d):
            bad.append("does not end at pi_s")
    else:
        bad.append(f"unknown phase {path.phase}")
    return bad


# ---------------------------------------------------------------------------
# stage traces and the full run


def _span_angle(col: Sequence[int], first_block: bool, d: int) -> float:
    """Angle from a column to span(e_1..e_{d-2}) or span(e_{d-1}, e_d)."""
    top = math.sqrt(sum(float(x) ** 2 for x in col[: d - 2]))
    bottom = math.sqrt(sum(float(x) ** 2 for x in col[d - 2 :]))
    inside, outside = (top, bottom) if first_block else (bottom, top)
    return math.atan2(outside, inside)


def _column_angle(a: Sequence[int], b: Sequence[int]) -> float:
    na = math.sqrt(sum(float(x) ** 2 for x in a))
    nb = math.sqrt(sum(float(x) ** 2 for x in b))
    dot = sum(float(x) * float(y) for x, y in zip(a, b))
    c = max(-1.0, min(1.0, dot / (na * nb)))
    return math.acos(c)


@dataclass(frozen=True)
class StageTrace:
    k: int
    phases: dict[str, PhasePath | None]
    checkpoints: dict[str, VisitationMatrix]  # cumulative after each phase
    cumulative: VisitationMatrix
    stats: dict

    def phase(self, name: str) -> PhasePath | None:
        return self.phases[name]


@dataclass(frozen=True)
class LimitInfo:
    vertex_lhs: tuple[float, ...]  # cluster average of first d-2 vertices
    vertex_rhs: tuple[float, ...]
    intra_lhs: float  # max angle within the first cluster, radians
    intra_rhs: float
    inter: float  # min angle between clusters
    representative: Iet
    candidate_lhs: Iet
    candidate_rhs: Iet


@dataclass(frozen=True)
class ConstructionRun:
    d: int
    schedule: Schedule
    seed: int
    stages: tuple[StageTrace, ...]
    limit: LimitInfo

    @property
    def cumulative(self) -> VisitationMatrix:
        return self.stages[-1].cumulative


def _stage_stats(
    k: int, checkpoints: dict[str, VisitationMatrix], d: int
) -> dict:
    """U/u/V/v analogs plus checkpoint angle measurements."""
    stats: dict = {}
    after_a = checkpoints.get("A")
    stats["U"] = (
        max(after_a.column_norm(j) for j in range(1, d - 1)) if after_a else 1
    )
    ap = checkpoints["Aprime"]
    stats["u"] = min(ap.column_norm(j) for j in range(1, d - 1))
    after_b = checkpoints["B"]
    stats["V"] = max(after_b.column_norm(j) for j in (d - 1, d))
    after_bp = checkpoints["Bprime"]
    stats["v"] = min(after_bp.column_norm(j) for j in (d - 1, d))
    end = after_bp
    stats["angle_first_to_span"] = max(
        _span_angle(end.column(j), True, d) for j in range(1, d - 1)
    )
    stats["angle_last_to_span"] = max(
        _span_angle(end.column(j), False, d) for j in (d - 1, d)
    )
    stats["angle_last_pair"] = _column_angle(end.column(d - 1), end.column(d))
    if after_a is not None:
        stats["angle_first_pair_after_A"] = max(
            _column_angle(after_a.column(i), after_a.column(j))
            for i in range(1, d - 1)
            for j in range(i + 1, d - 1)
        )
    return stats


def run_construction(
    d: int, schedule: Schedule, seed: int, angle_tol: float = 1e-9
) -> ConstructionRun:
    """Drive all stages and report the limiting vertex clusters."""
    if d < 4:
        raise UsageError("the construction needs d >= 4")
    rng = Random(seed)
    pi_l, pi_r, _ = special_permutations(d)
    pi_s = hyperelliptic_permutation(d)
    cum = VisitationMatrix.identity(d)
    stages: list[StageTrace] = []
    current = pi_l
    try:
        for k in range(1, schedule.stages + 1):
            w = schedule.stage(k)
            phases: dict[str, PhasePath | None] = {}
            checkpoints: dict[str, VisitationMatrix] = {"entry": cum}
            if k == 1:
                phases["A"] = None
            else:
                path = gen_freedom_lhs(current, w.A, rng)
                phases["A"] = path
                cum = cum @ path.matrix
                current = path.end
                checkpoints["A"] = cum
                # freedom ends at pi_s; restriction needs pi_L: route back
                # with the same two 1-wins freedom itself would use
                bridge = PathBuilder(current)
                bridge.apply_winner(1)
                bridge.apply_winner(1)
                if bridge.pi != pi_l:
                    raise StageError("bridge to pi_L failed")
                bpath = bridge.finish(FREEDOM_LHS_BRIDGE)
                phases["A-bridge"] = bpath
                cum = cum @ bpath.matrix
                current = bpath.end
            path = gen_restriction_lhs(current, w.Aprime, rng)
            phases["Aprime"] = path
            cum = cum @ path.matrix
            current = path.end
            checkpoints["Aprime"] = cum
            path = gen_transition(current, rng)
            if path.matrix.norm > w.T_cap:
                path = PhasePath(
                    path.phase, path.start, path.end, path.runs, path.matrix,
                    path.warnings + (
                        f"transition norm {path.matrix.norm} above cap 10^{w.T_cap_exp:g}",
                    ),
                )
            phases["T"] = path
            cum = cum @ path.matrix
            current = path.end
            checkpoints["T"] = cum
            path = freedom_rhs_for_window(current, w.B, rng)
            phases["B"] = path
            cum = cum @ path.matrix
            current = path.end
            checkpoints["B"] = cum
            ell = rng.randint(w.s, 2 * w.s)
            path = gen_restriction_rhs(current, ell, w)
            phases["Bprime"] = path
            cum = cum @ path.matrix
            current = path.end
            checkpoints["Bprime"] = cum
            stats = _stage_stats(k, checkpoints, d)
            stats["ell"] = ell
            stats["norm"] = cum.norm
            stages.append(StageTrace(k, phases, checkpoints, cum, stats))
    except (BudgetExceededError, StageError) as exc:
        raise StageError(
            f"stage {len(stages) + 1} failed: {exc}", partial=tuple(stages)
        ) from exc
    limit = _extract_limit(stages[-1].cumulative, d, angle_tol)
    return ConstructionRun(d, schedule, seed, tuple(stages), limit)


def _extract_limit(M: VisitationMatrix, d: int, tol: float) -> LimitInfo:
    verts = []
    for j in range(1, d + 1):
        col = M.column(j)
        n = sum(col)
        verts.append(tuple(Fraction(x, n) for x in col))
    fverts = [tuple(float(x) for x in v) for v in verts]

    def avg(vs):
        s = [sum(c) for c in zip(*vs)]
        t = sum(s)
        return tuple(x / t for x in s)

    lhs = avg(fverts[: d - 2])
    rhs = avg(fverts[d - 2 :])
    intra_lhs = max(
        (_column_angle(a, b) for a in fverts[: d - 2] for b in fverts[: d - 2]),
        default=0.0,
    )
    intra_rhs = _column_angle(fverts[d - 2], fverts[d - 1])
    inter = min(
        _column_angle(a, b) for a in fverts[: d - 2] for b in fverts[d - 2 :]
    )
    pi_l, _, _ = special_permutations(d)
    # exact interior representative: image of the barycenter
    w = M.mat_vec(tuple(Fraction(1, d) for _ in range(d)))
    total = sum(w)
    representative = Iet(tuple(x / total for x in w), pi_l)

    def rationalize(v: tuple[float, ...]) -> Iet:
        fr = [Fraction(x).limit_denominator(10**12) for x in v]
        fr = [max(f, Fraction(1, 10**13)) for f in fr]
        t = sum(fr)
        return Iet(tuple(f / t for f in fr), pi_l)

    return LimitInfo(
        lhs, rhs, intra_lhs, intra_rhs, inter, representative,
        rationalize(lhs), rationalize(rhs),
    )


# ---------------------------------------------------------------------------
# condition checks


@dataclass(frozen=True)
class StarReport:
    stage: int
    c1_ratio: float | None
    c1_pass: bool | None
    c2_ratio: float
    c2_threshold: float
    c2_pass: bool
    c3_ratio: float
    c3_pass: bool
    c4_ratio: float
    c4_pass: bool


def check_conditions_star(run: ConstructionRun, zeta: float | None = None) -> list[StarReport]:
    """The four balance conditions, per stage (the fourth is automatic)."""
    zeta = zeta if zeta is not None else run.schedule.zeta
    d = run.d
    out = []
    for st in run.stages:
        a = st.phase("A")
        if a is None:
            c1_ratio, c1_pass = None, None
        else:
            c1_ratio = float(a.matrix.balance_ratio(range(1, d - 1)))
            c1_pass = c1_ratio < zeta
        ap = st.phase("Aprime").matrix @ st.phase("T").matrix
        c2_ratio = float(
            Fraction(
                max(ap.column_norm(j) for j in range(1, d - 1)),
                min(ap.column_norm(j) for j in range(1, d - 1)),
            )
        )
        c2_threshold = run.schedule.star2_threshold(st.k)
        b = st.phase("B").matrix
        c3_ratio = float(b.balance_ratio((d - 1, d)))
        bp = st.phase("Bprime").matrix
        c4_ratio = float(bp.balance_ratio((d - 1, d)))
        out.append(
            StarReport(
                st.k,
                c1_ratio,
                c1_pass,
                c2_ratio,
                c2_threshold,
                c2_ratio < c2_threshold,
                c3_ratio,
                c3_ratio <= zeta,
                c4_ratio,
                c4_ratio <= 2.0,
            )
        )
    return out


@dataclass(frozen=True)
class DoubleStarReport:
    stage: int
    lhs_angle: float | None
    lhs_threshold: float | None
    lhs_pass: bool | None
    rhs_angle: float
    rhs_threshold: float
    rhs_pass: bool


def check_condition_double_star(run: ConstructionRun) -> list[DoubleStarReport]:
    """Column-angle conditions at the two per-stage checkpoints."""
    d = run.d
    out = []
    for st in run.stages:
        if "A" in st.checkpoints:
            m = st.checkpoints["A"]
            lhs_angle = max(
                _column_angle(m.column(i), m.column(j))
                for i in range(1, d - 1)
                for j in range(i + 1, d - 1)
            )
            lhs_threshold = run.schedule.angle_threshold_lhs(st.k)
            lhs_pass = lhs_angle < lhs_threshold
        else:
            lhs_angle = lhs_threshold = lhs_pass = None
        m = st.checkpoints["Bprime"]
        rhs_angle = _column_angle(m.column(d - 1), m.column(d))
        rhs_threshold = run.schedule.angle_threshold_rhs(st.k)
        out.append(
            DoubleStarReport(
                st.k, lhs_angle, lhs_threshold, lhs_pass,
                rhs_angle, rhs_threshold, rhs_angle < rhs_threshold,
            )
        )
    return out


@dataclass(frozen=True)
class SizeReport:
    stage: int
    upper_bound: float
    measured_U: float
    upper_pass: bool
    lower_estimate: float
    lower_pass: bool
    sandwich_ratio: float  # V_{k-1} / (U_{k-1} * B-window-low), want >= 1/zeta


def check_size_recursions(run: ConstructionRun) -> list[SizeReport]:
    """The structural growth recursions with measured quantities.

    Upper: U_k <= (U_{k-1} |A'_{k-1}| |T_{k-1}| + V_{k-1}) |A_k|; the lower
    analog replaces the symbolic balance constants by the measured balance
    ratios of the same matrices, so it is a slack report, not a theorem.
    """
    if len(run.stages) < 2:
        return []
    d = run.d
    out = []
    for prev, st in zip(run.stages, run.stages[1:]):
        ap_prev = prev.phase("Aprime").matrix
        t_prev = prev.phase("T").matrix
        a = st.phase("A").matrix
        u_prev = float(prev.stats["U"])
        v_prev = float(prev.stats["V"])
        upper = (u_prev * ap_prev.norm * t_prev.norm + v_prev) * a.norm
        measured = float(st.stats["U"])
        apt = ap_prev @ t_prev
        bal_apt = float(
            Fraction(
                max(apt.column_norm(j) for j in range(1, d - 1)),
                min(apt.column_norm(j) for j in range(1, d - 1)),
            )
        )
        bal_b = float(prev.phase("B").matrix.balance_ratio((d - 1, d)))
        bal_a = float(a.balance_ratio(range(1, d - 1)))
        lower = (
            u_prev * min(apt.column_norm(j) for j in range(1, d - 1)) / bal_apt
            + v_prev / bal_b
        ) * (a.norm / bal_a)
        sandwich = v_prev / (u_prev * prev.phase("B").matrix.norm)
        out.append(
            SizeReport(
                st.k,
                upper,
                measured,
                measured <= upper,
                lower,
                measured >= lower,
                sandwich,
            )
        )
    return out


@dataclass(frozen=True)
class AngleMonotonicityReport:
    stage: int
    lhs_angles: tuple[float, ...]  # entry, [after A], after A'
    lhs_monotone: bool
    rhs_angles: tuple[float, ...]  # after T, after B, after B'
    rhs_monotone: bool


def check_nue_angles(
    run: ConstructionRun, slack: float = 1e-12
) -> list[AngleMonotonicityReport]:
    """Per-stage checkpoint angles to the two coordinate spans.

    While a side is active only its own columns are added to each other, so
    the maximal angle of those columns to their coordinate span cannot
    increase; the sequence over that side's checkpoints must be
    non-increasing (up to float slack).  The opposite side's additions can
    and do push the angle back up between stages, which is why the
    comparison is within-stage.
    """
    d = run.d
    out = []
    for st in run.stages:
        lhs_names = [n for n in ("entry", "A", "Aprime") if n in st.checkpoints]
        lhs = tuple(
            max(
                _span_angle(st.checkpoints[n].column(j), True, d)
                for j in range(1, d - 1)
            )
            for n in lhs_names
        )
        rhs_names = [n for n in ("T", "B", "Bprime") if n in st.checkpoints]
        rhs = tuple(
            max(
                _span_angle(st.checkpoints[n].column(j), False, d)
                for j in (d - 1, d)
            )
            for n in rhs_names
        )
        lhs_ok = all(b <= a + slack for a, b in zip(lhs, lhs[1:]))
        rhs_ok = all(b <= a + slack for a, b in zip(rhs, rhs[1:]))
        out.append(AngleMonotonicityReport(st.k, lhs, lhs_ok, rhs, rhs_ok))
    return out


# ---------------------------------------------------------------------------
# hyperplane-avoiding paths (appendix)


def hyperplane_avoiding_paths(
    d: int, i: int, eps0: float = 0.1, reps: int | None = None
) -> PhasePath:
    """Explicit paths whose sub-simplices hug the vertex e_i.

    i=1: symbol 1 wins d-1 consecutive times from pi_s (passing through pi_L
    and pi_prime); every vertex of the resulting simplex has first coordinate
    at least 1/2 exactly.  i in 2..d-2: symbol d-2 ferries mass, then i beats
    d-2..i+1 repeatedly, then d-2 sweeps the leftovers; the first d-2 vertex
    directions land within eps0 of e_i, verified numerically.
    """
    if d < 4:
        raise UsageError("need d >= 4")
    if not 1 <= i <= d - 2:
        raise UsageError("target vertex must be one of 1..d-2")
    pi_s = hyperelliptic_permutation(d)
    pi_l, _, pi_prime = special_permutations(d)
    if i == 1:
        b = PathBuilder(pi_s)
        waypoints = []
        for _ in range(d - 1):
            b.apply_winner(1)
            waypoints.append(b.pi)
        path = b.finish(AVOIDING)
        if pi_l not in waypoints or pi_prime not in waypoints or b.pi != pi_s:
            raise StageError("i=1 path did not route pi_s -> pi_L -> pi' -> pi_s")
        # exact containment: every vertex has first coordinate >= 1/2
        for j in range(1, d + 1):
            col = path.matrix.column(j)
            if Fraction(col[0], sum(col)) < Fraction(1, 2):
                raise CalibrationError("i=1 containment failed", achieved_radius=None)
        return path
    reps = reps if reps is not None else math.ceil(4.0 / eps0)
    b = PathBuilder(pi_l)
    for _ in range(i - 1):
        b.apply_winner(d - 2)  # ferry 1, ..., i-1 out of the way
    if i < d - 2:
        for _ in range(reps):
            for _ in range(d - 2 - i):
                b.apply_winner(i)  # i beats d-2, ..., i+1 in a loop
    else:
        # i = d-2: the ferry loop itself is the mass pump
        for _ in range(reps):
            for _ in range(d - 3):
                b.apply_winner(d - 2)

    def col_dist(j: int) -> float:
        col = [float(x) for x in b.M.column(j)]
        t = sum(col)
        return math.sqrt(
            sum((x / t - (1.0 if idx == i - 1 else 0.0)) ** 2 for idx, x in enumerate(col))
        )

    # cleanup: route each still-light column under a heavy carrier's win
    for _ in range(d):
        light = [
            j for j in range(1, d - 1) if j != i and col_dist(j) > eps0 / 2
        ]
        if not light:
            break
        target = max(light, key=col_dist)
        heavy = {i} | {
            j for j in range(1, d - 1) if col_dist(j) <= eps0 / 2
        }
        for side in _steer_to_edge(b.pi, heavy, target):
            b.apply_side(side)
    for side in _steer(b.pi, pi_s, _admissible_freedom_lhs, Random(0)):
        b.apply_side(side)
    path = b.finish(AVOIDING)
    worst = max(col_dist(j) for j in range(1, d - 1))
    if worst > eps0:
        raise CalibrationError(
            f"containment radius {worst:.3g} exceeds eps0 {eps0}", achieved_radius=worst
        )
    return path
