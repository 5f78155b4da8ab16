"""Exact Rauzy-Veech induction and the visitation-matrix cocycle.

Lengths are ``Fraction``s throughout; a step subtracts the shorter of the two
last intervals from the longer one, so floating point would destroy the
cocycle identity x = M(n) x' that everything downstream relies on.  The
matrices are plain python integers and may grow without bound.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from . import _rational
from .errors import BudgetExceededError, InductionUndefinedError, UsageError
from .perm import BOTTOM_WINS, TOP_WINS, LabeledPermutation, RauzyEdge, rauzy_move


@dataclass(frozen=True)
class Iet:
    """Length vector plus permutation pair; the full datum of an exchange."""

    lengths: tuple[Fraction, ...]
    perm: LabeledPermutation

    def __post_init__(self):
        if len(self.lengths) != self.perm.d:
            raise UsageError("length vector size does not match permutation")
        if any(x <= 0 for x in self.lengths):
            raise UsageError("lengths must be strictly positive")

    @staticmethod
    def make(lengths: Sequence, perm: LabeledPermutation) -> "Iet":
        return Iet(tuple(Fraction(x) for x in lengths), perm)

    @property
    def d(self) -> int:
        return self.perm.d

    @property
    def total(self) -> Fraction:
        return sum(self.lengths)

    def normalized(self) -> "Iet":
        t = self.total
        return Iet(tuple(x / t for x in self.lengths), self.perm)

    def translation(self, symbol: int) -> Fraction:
        """Displacement applied to points of the interval labeled ``symbol``."""
        top_before = sum(
            self.lengths[s - 1] for s in self.perm.top[: self.perm.top_position(symbol)]
        )
        bottom_before = sum(
            self.lengths[s - 1]
            for s in self.perm.bottom[: self.perm.bottom_position(symbol)]
        )
        return bottom_before - top_before

    def interval_of(self, point: Fraction) -> int:
        """Symbol of the continuity interval containing ``point``."""
        acc = Fraction(0)
        for s in self.perm.top:
            acc += self.lengths[s - 1]
            if point < acc:
                return s
        raise UsageError(f"point {point} outside [0, {self.total})")

    def __call__(self, point: Fraction) -> Fraction:
        return point + self.translation(self.interval_of(point))


class VisitationMatrix:
    """Non-negative integer cocycle matrix (product of elementary factors).

    Entry (i, j) counts visits of interval j's points to original interval i
    before first return; column sums are therefore return times and the
    matrix norm used everywhere is the max column sum.
    """

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence[int]]):
        self.rows = tuple(tuple(int(x) for x in r) for r in rows)

    @staticmethod
    def identity(d: int) -> "VisitationMatrix":
        return VisitationMatrix(
            [[1 if i == j else 0 for j in range(d)] for i in range(d)]
        )

    @staticmethod
    def elementary(d: int, winner: int, loser: int) -> "VisitationMatrix":
        """E with E(e_k)=e_k for k != loser, E(e_loser)=e_winner+e_loser."""
        rows = [[1 if i == j else 0 for j in range(d)] for i in range(d)]
        rows[winner - 1][loser - 1] = 1
        return VisitationMatrix(rows)

    @property
    def d(self) -> int:
        return len(self.rows)

    def column(self, j: int) -> tuple[int, ...]:
        """Column j, 1-based to match symbol numbering."""
        return tuple(row[j - 1] for row in self.rows)

    def column_norm(self, j: int) -> int:
        return sum(row[j - 1] for row in self.rows)

    def column_norms(self) -> tuple[int, ...]:
        return tuple(self.column_norm(j) for j in range(1, self.d + 1))

    @property
    def norm(self) -> int:
        return max(self.column_norms())

    def balance_ratio(self, columns: Sequence[int] | None = None) -> Fraction:
        norms = [self.column_norm(j) for j in (columns or range(1, self.d + 1))]
        return Fraction(max(norms), min(norms))

    def is_positive(self) -> bool:
        return all(x >= 1 for row in self.rows for x in row)

    def det(self) -> int:
        value = _rational.det(_rational.mat(self.rows))
        assert value.denominator == 1
        return int(value)

    def __matmul__(self, other: "VisitationMatrix") -> "VisitationMatrix":
        ot = list(zip(*other.rows))
        return VisitationMatrix(
            [
                [sum(a * b for a, b in zip(row, col)) for col in ot]
                for row in self.rows
            ]
        )

    def apply_step(self, winner: int, loser: int) -> "VisitationMatrix":
        """Right-multiply by the elementary factor: adds column winner to loser."""
        rows = [list(r) for r in self.rows]
        for r in rows:
            r[loser - 1] += r[winner - 1]
        return VisitationMatrix(rows)

    def mat_vec(self, v: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(sum(a * x for a, x in zip(row, v)) for row in self.rows)

    def solve(self, b: Sequence[Fraction]) -> tuple[Fraction, ...]:
        x = _rational.solve(_rational.mat(self.rows), b)
        if x is None:
            raise UsageError("inconsistent system")
        return x

    def __eq__(self, other) -> bool:
        return isinstance(other, VisitationMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"VisitationMatrix({[list(r) for r in self.rows]})"


@dataclass(frozen=True)
class InductionTrace:
    start: Iet
    edges: tuple[RauzyEdge, ...]
    matrix: VisitationMatrix
    induced: Iet  # unnormalized

    @property
    def steps(self) -> int:
        return len(self.edges)

    def check_identity(self) -> bool:
        """x = M(n) x' as an exact identity of rationals."""
        return self.matrix.mat_vec(self.induced.lengths) == self.start.lengths

    def to_json(self) -> str:
        doc = {
            "start": {
                "lengths": [str(x) for x in self.start.lengths],
                "top": list(self.start.perm.top),
                "bottom": list(self.start.perm.bottom),
            },
            "steps": self.steps,
            "edges": [[e.winner, e.loser, e.side] for e in self.edges],
            "matrix": [[str(x) for x in row] for row in self.matrix.rows],
            "induced_lengths": [str(x) for x in self.induced.lengths],
            "induced_top": list(self.induced.perm.top),
            "induced_bottom": list(self.induced.perm.bottom),
        }
        return json.dumps(doc, sort_keys=True)


def step(T: Iet) -> tuple[Iet, RauzyEdge, VisitationMatrix]:
    """One induction step; the longer of the two last intervals wins."""
    i, j = T.perm.top[-1], T.perm.bottom[-1]
    xi, xj = T.lengths[i - 1], T.lengths[j - 1]
    if xi == xj:
        raise InductionUndefinedError(
            f"equal last lengths x_{i} = x_{j} = {xi}: induction undefined"
        )
    side = TOP_WINS if xi > xj else BOTTOM_WINS
    edge = rauzy_move(T.perm, side)
    new_lengths = list(T.lengths)
    new_lengths[edge.winner - 1] -= T.lengths[edge.loser - 1]
    induced = Iet(tuple(new_lengths), edge.target)
    E = VisitationMatrix.elementary(T.d, edge.winner, edge.loser)
    return induced, edge, E


def normalized_step(T: Iet) -> Iet:
    induced, _, _ = step(T)
    return induced.normalized()


def induct(T: Iet, n: int) -> InductionTrace:
    """n induction steps with the running cocycle product.

    Raises InductionUndefinedError carrying the partial trace if the equality
    case interrupts before n steps.
    """
    edges: list[RauzyEdge] = []
    M = VisitationMatrix.identity(T.d)
    current = T
    for k in range(n):
        try:
            current, edge, _ = step(current)
        except InductionUndefinedError as exc:
            partial = InductionTrace(T, tuple(edges), M, current)
            raise InductionUndefinedError(
                f"equality at step {k}: {exc}", steps_completed=k, partial=partial
            ) from None
        edges.append(edge)
        M = M.apply_step(edge.winner, edge.loser)
    return InductionTrace(T, tuple(edges), M, current)


def norm_at_least(N: int) -> Callable[[VisitationMatrix, LabeledPermutation], bool]:
    return lambda M, pi: M.norm >= N


def permutation_is(target: LabeledPermutation):
    return lambda M, pi: pi == target


def balanced(zeta) -> Callable[[VisitationMatrix, LabeledPermutation], bool]:
    zeta = Fraction(zeta)
    return lambda M, pi: M.balance_ratio() <= zeta


def positive_matrix(M: VisitationMatrix, pi: LabeledPermutation) -> bool:
    return M.is_positive()


def maximal_for(N: int):
    """Stopping rule: first n with ||M(n)|| >= N/2 (so ||M(n-1)|| < N/2)."""
    threshold = Fraction(N, 2)

    def predicate(M: VisitationMatrix, pi: LabeledPermutation) -> bool:
        return M.norm >= threshold

    return predicate


def induct_until(
    T: Iet,
    predicate: Callable[[VisitationMatrix, LabeledPermutation], bool],
    step_budget: int = 10**6,
) -> InductionTrace:
    """Shortest trace whose final (matrix, permutation) satisfies the predicate."""
    edges: list[RauzyEdge] = []
    M = VisitationMatrix.identity(T.d)
    current = T
    steps = 0
    while True:
        if predicate(M, current.perm):
            return InductionTrace(T, tuple(edges), M, current)
        if steps >= step_budget:
            raise BudgetExceededError(f"step budget {step_budget} exhausted")
        try:
            current, edge, _ = step(current)
        except InductionUndefinedError as exc:
            partial = InductionTrace(T, tuple(edges), M, current)
            raise InductionUndefinedError(
                f"equality at step {steps}: {exc}",
                steps_completed=steps,
                partial=partial,
            ) from None
        edges.append(edge)
        M = M.apply_step(edge.winner, edge.loser)
        steps += 1


def drive_path(
    pi: LabeledPermutation, sides: Sequence[str]
) -> tuple[VisitationMatrix, LabeledPermutation, tuple[RauzyEdge, ...]]:
    """Cocycle product along a path given by winning sides (no lengths needed)."""
    M = VisitationMatrix.identity(pi.d)
    edges = []
    for side in sides:
        edge = rauzy_move(pi, side)
        edges.append(edge)
        M = M.apply_step(edge.winner, edge.loser)
        pi = edge.target
    return M, pi, tuple(edges)


def orbit(T: Iet, point, n: int) -> list[Fraction]:
    """Forward orbit point, T(point), ..., T^n(point), exact.

    Internally runs on integers over the common denominator of the data,
    which is an order of magnitude faster than Fraction arithmetic when the
    denominators are large but shared.
    """
    point = Fraction(point)
    if not 0 <= point < T.total:
        raise UsageError(f"point {point} outside [0, {T.total})")
    return list(_orbit_iter(T, point, n))


def _orbit_iter(T: Iet, point: Fraction, n: int) -> Iterator[Fraction]:
    denom = math.lcm(point.denominator, *(x.denominator for x in T.lengths))
    lengths = [int(x * denom) for x in T.lengths]
    p = int(point * denom)
    # cumulative top endpoints and per-symbol displacements, all integers
    tops: list[tuple[int, int]] = []  # (right endpoint, displacement)
    acc = 0
    for s in T.perm.top:
        before_bottom = sum(
            lengths[t - 1] for t in T.perm.bottom[: T.perm.bottom_position(s)]
        )
        disp = before_bottom - acc
        acc += lengths[s - 1]
        tops.append((acc, disp))
    yield Fraction(p, denom)
    for _ in range(n):
        for right, disp in tops:
            if p < right:
                p += disp
                break
        yield Fraction(p, denom)
