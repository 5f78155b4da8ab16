"""Monte Carlo checks, Birkhoff averages, nested plane sections, dimensions.

Everything here is measurement, not proof: reports carry an estimate, a
standard error, and a fixed 3-sigma verdict.  Exact rational arithmetic is
used wherever a downstream check needs identities to hold on the nose
(orbits, Keane scans, balance scans); floats everywhere else.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from random import Random
from typing import Callable, Iterable, Sequence

import numpy as np

from .construction import ConstructionRun, freedom_rhs_for_window
from .errors import DegeneracyError, UsageError
from .induction import Iet, VisitationMatrix
from .perm import LabeledPermutation, rauzy_move, TOP_WINS, BOTTOM_WINS
from .simplex_geometry import PlaneFamily, ProjectiveSimplex, illuminated, section
from . import _rational

GRID = 1 << 53  # denominator grid for exact random samples

CONSISTENT = "consistent"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class McReport:
    estimate: float
    stderr: float
    samples: int
    seed: int
    claim_bound: float
    verdict: str
    extras: dict = field(default_factory=dict, compare=False)


def _verdict(estimate: float, stderr: float, bound: float, two_sided: bool = False) -> str:
    if stderr != stderr or stderr == float("inf"):
        return INCONCLUSIVE
    if two_sided:
        return CONSISTENT if abs(estimate - bound) <= 3 * stderr else VIOLATED
    return VIOLATED if estimate - 3 * stderr > bound else CONSISTENT


def _binomial_report(hits: int, n: int, seed: int, bound: float, two_sided=False, **extras) -> McReport:
    if n == 0:
        return McReport(float("nan"), float("inf"), 0, seed, bound, INCONCLUSIVE, extras)
    p = hits / n
    se = math.sqrt(max(p * (1 - p), 1.0 / n) / n)
    return McReport(p, se, n, seed, bound, _verdict(p, se, bound, two_sided), extras)


# ---------------------------------------------------------------------------
# simplex sampling


def sample_simplex(d: int, rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """n uniform points on the standard (d-1)-simplex, rows summing to 1."""
    g = rng.standard_exponential((n, d))
    return g / g.sum(axis=1, keepdims=True)


def sample_simplex_exact(d: int, rng: Random) -> tuple[Fraction, ...]:
    """One uniform point with exact dyadic coordinates (spacings of sorted
    uniforms on a 2^53 grid), so downstream induction stays rational."""
    while True:
        cuts = sorted(rng.randrange(1, GRID) for _ in range(d - 1))
        pts = [0] + cuts + [GRID]
        gaps = [b - a for a, b in zip(pts, pts[1:])]
        if all(g > 0 for g in gaps):
            return tuple(Fraction(g, GRID) for g in gaps)


# ---------------------------------------------------------------------------
# balance decay


@dataclass(frozen=True)
class BalanceReport:
    report: McReport
    fractions: tuple[float, ...]  # failure fraction for m = 1..m_max
    sigma_hat: float
    sigma_ci_upper: float  # 95% upper confidence bound on the decay ratio


def _balance_scan(
    pi: LabeledPermutation, lengths: Sequence[int], zeta: Fraction, limit: int
) -> int:
    """Norm at the first time the matrix is positive and zeta-balanced,
    or 0 when the scan dies (equality) or exceeds the norm limit."""
    d = pi.d
    lens = list(lengths)
    cols = [[1 if i == j else 0 for i in range(d)] for j in range(d)]  # columns
    norms = [1] * d
    while True:
        i, j = pi.top[-1], pi.bottom[-1]
        a, b = lens[i - 1], lens[j - 1]
        if a == b:
            return 0
        side = TOP_WINS if a > b else BOTTOM_WINS
        edge = rauzy_move(pi, side)
        w, l = edge.winner, edge.loser
        lens[w - 1] -= lens[l - 1]
        cw = cols[w - 1]
        cl = cols[l - 1]
        for r in range(d):
            cl[r] += cw[r]
        norms[l - 1] += norms[w - 1]
        pi = edge.target
        hi = max(norms)
        if hi > limit:
            return 0
        if (
            hi <= zeta * min(norms)
            and all(x > 0 for col in cols for x in col)
        ):
            return hi


def mc_balance(
    pi: LabeledPermutation,
    zeta: float,
    K: float,
    m: int,
    samples: int,
    seed: int,
) -> BalanceReport:
    """Failure fractions of reaching a positive zeta-balanced matrix before
    norm K^j, for j = 1..m, with a geometric-decay fit."""
    if zeta <= 1 or K <= 1:
        raise UsageError("need zeta > 1 and K > 1")
    if samples == 0:
        rep = McReport(float("nan"), float("inf"), 0, seed, 0.0, INCONCLUSIVE)
        return BalanceReport(rep, (), float("nan"), float("nan"))
    rng = Random(seed)
    zeta_f = Fraction(zeta).limit_denominator(10**6)
    thresholds = [K**j for j in range(1, m + 1)]
    limit = int(math.ceil(thresholds[-1]))
    failures = [0] * m
    for _ in range(samples):
        x = sample_simplex_exact(pi.d, rng)
        nums = [f.numerator for f in x]  # common denominator GRID
        reached = _balance_scan(pi, nums, zeta_f, limit)
        for j, t in enumerate(thresholds):
            if reached == 0 or reached > t:
                failures[j] += 1
    fracs = tuple(f / samples for f in failures)
    # geometric fit on the decaying tail (skip the saturated prefix near 1)
    xs = [j + 1 for j, f in enumerate(fracs) if 0 < f < 0.99]
    ys = [math.log(f) for f in fracs if 0 < f < 0.99]
    if len(xs) >= 2:
        slope, _ = np.polyfit(xs, ys, 1)
        resid = np.array(ys) - np.polyval(np.polyfit(xs, ys, 1), xs)
        se_slope = (
            math.sqrt(float(resid @ resid) / max(1, len(xs) - 2))
            / math.sqrt(float(np.sum((np.array(xs) - np.mean(xs)) ** 2)))
            if len(xs) > 2
            else 0.0
        )
        sigma_hat = math.exp(float(slope))
        sigma_up = math.exp(float(slope) + 1.645 * se_slope)
    elif fracs and fracs[-1] == 0.0:
        sigma_hat, sigma_up = 0.0, 0.0
    else:
        sigma_hat = sigma_up = float("nan")
    last = fracs[-1]
    se = math.sqrt(max(last * (1 - last), 1.0 / samples) / samples)
    rep = McReport(last, se, samples, seed, 1.0, CONSISTENT if sigma_hat < 1 else VIOLATED)
    return BalanceReport(rep, fracs, sigma_hat, sigma_up)


# ---------------------------------------------------------------------------
# jacobian pushforward


@dataclass(frozen=True)
class SubSimplex:
    """Region of the simplex spanned by rational vertices (each summing 1)."""

    vertices: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        for v in self.vertices:
            if sum(v) != 1:
                raise UsageError("sub-simplex vertices must lie on the simplex")

    @property
    def d(self) -> int:
        return len(self.vertices)

    def vertex_matrix(self) -> np.ndarray:
        return np.array([[float(x) for x in v] for v in self.vertices], dtype=float).T


def half_simplex(d: int, split: Fraction = Fraction(1, 2)) -> SubSimplex:
    """The sub-simplex where the first vertex is pulled toward the barycenter
    of vertices 1 and 2: a canonical positive-volume test region."""
    verts = []
    e = lambda i: tuple(Fraction(1) if j == i else Fraction(0) for j in range(d))
    mid = tuple(
        split * a + (1 - split) * b for a, b in zip(e(0), e(1))
    )
    verts.append(mid)
    for i in range(1, d):
        verts.append(e(i))
    return SubSimplex(tuple(verts))


def mc_jacobian_pushforward(
    M: VisitationMatrix, W: SubSimplex, samples: int, seed: int
) -> McReport:
    """Fraction of uniform points of M-Delta whose preimage lies in W,
    against the exact ratio of image volumes (the jacobian integral)."""
    d = M.d
    if W.d != d:
        raise UsageError("region dimension mismatch")
    Vw = _rational.mat([[Fraction(x) for x in v] for v in zip(*W.vertices)])
    if _rational.det(Vw) == 0:
        raise DegeneracyError("degenerate region")
    # predicted probability: lambda(M W) / lambda(M Delta), both via the
    # determinant of sum-normalized image vertices
    m_rat = _rational.mat(M.rows)

    def norm_det(cols: list[tuple[Fraction, ...]]) -> Fraction:
        normed = [tuple(x / sum(c) for x in c) for c in cols]
        return abs(_rational.det(_rational.mat(list(zip(*normed)))))

    img_w = [_rational.mat_vec(m_rat, v) for v in W.vertices]
    img_d = [tuple(Fraction(x) for x in M.column(j)) for j in range(1, d + 1)]
    predicted = float(norm_det(img_w) / norm_det(img_d))
    rng = np.random.default_rng(seed)
    a = np.array(M.rows, dtype=float)
    verts = a / a.sum(axis=0, keepdims=True)  # columns span M-Delta
    w = rng.standard_exponential((samples, d))
    w /= w.sum(axis=1, keepdims=True)
    y = w @ verts.T  # uniform on M-Delta
    z = np.linalg.solve(a, y.T).T
    z /= z.sum(axis=1, keepdims=True)  # exact preimage direction, normalized
    bary = np.linalg.solve(W.vertex_matrix(), z.T).T
    hits = int(np.count_nonzero((bary > -1e-12).all(axis=1)))
    return _binomial_report(hits, samples, seed, predicted, two_sided=True,
                            predicted=predicted)


# ---------------------------------------------------------------------------
# probability decay


@dataclass(frozen=True)
class ProbDecayReport:
    report: McReport
    window_probs: tuple[float, ...]  # empirical P(first j trials all fail)
    window_bounds: tuple[float, ...]  # (1-rho)^j
    tau_hat: float  # fitted decay of P(count < (1-eps) rho N)
    count_tail: float


def prob_decay_sim(
    rho: float,
    dependence: str,
    N: int,
    samples: int,
    seed: int,
    window: int = 10,
    eps: float = 0.5,
) -> ProbDecayReport:
    """0/1 sequences with conditional success probability >= rho.

    independent: each trial is Bernoulli(rho).  adversarial-markov: the chain
    pays exactly rho while its past is all-failures and 0.9 afterwards, which
    makes the all-failure window bound (1-rho)^j tight.
    """
    if not 0 < rho < 0.5:
        raise UsageError("rho must be in (0, 1/2)")
    if dependence not in ("independent", "adversarial-markov"):
        raise UsageError(f"unknown dependence {dependence!r}")
    rng = np.random.default_rng(seed)
    window = min(window, N)
    if dependence == "independent":
        seqs = rng.random((samples, N)) < rho
    else:
        u = rng.random((samples, N))
        seqs = np.zeros((samples, N), dtype=bool)
        no_success = np.ones(samples, dtype=bool)
        for t in range(N):
            p = np.where(no_success, rho, 0.9)
            seqs[:, t] = u[:, t] < p
            no_success &= ~seqs[:, t]
    prefix_fail = np.cumprod(~seqs[:, :window], axis=1)
    probs = tuple(float(x) for x in prefix_fail.mean(axis=0))
    bounds = tuple((1 - rho) ** j for j in range(1, window + 1))
    counts = seqs.sum(axis=1)
    tail = float(np.mean(counts < (1 - eps) * rho * N))
    # decay of the count tail across sub-horizons
    taus = []
    for n_sub in range(max(2, N // 4), N + 1, max(1, N // 4)):
        t = float(np.mean(seqs[:, :n_sub].sum(axis=1) < (1 - eps) * rho * n_sub))
        taus.append((n_sub, t))
    pos = [(n, t) for n, t in taus if t > 0]
    if len(pos) >= 2:
        slope = np.polyfit([n for n, _ in pos], [math.log(t) for _, t in pos], 1)[0]
        tau_hat = math.exp(float(slope))
    else:
        tau_hat = 0.0
    j = window
    est = probs[-1]
    se = math.sqrt(max(est * (1 - est), 1.0 / samples) / samples)
    two_sided = dependence == "independent"
    rep = McReport(
        est, se, samples, seed, bounds[-1], _verdict(est, se, bounds[-1], two_sided)
    )
    return ProbDecayReport(rep, probs, bounds, tau_hat, tail)


# ---------------------------------------------------------------------------
# Birkhoff averages and the Keane scan


def birkhoff_separation(
    T: Iet, points: Iterable[Fraction], observable="I1", n: int = 10**5
) -> dict[Fraction, float]:
    """Birkhoff averages of an indicator along exact orbits.

    observable: "I1" (the first continuity interval) or a Fraction c for the
    indicator of [0, c).  The orbit runs on integers over the common
    denominator of all data.
    """
    if n < 1:
        raise UsageError("need n >= 1")
    points = [Fraction(p) for p in points]
    if observable == "I1":
        # indicator of the interval labeled 1, wherever it sits on the top row
        lo = sum(
            (T.lengths[s - 1] for s in T.perm.top[: T.perm.top_position(1)]),
            Fraction(0),
        )
        hi = lo + T.lengths[0]
    else:
        lo, hi = Fraction(0), Fraction(observable)
    out: dict[Fraction, float] = {}
    denom = math.lcm(
        lo.denominator, hi.denominator,
        *(x.denominator for x in T.lengths),
        *(p.denominator for p in points),
    )
    lengths = [int(x * denom) for x in T.lengths]
    lo_i, hi_i = int(lo * denom), int(hi * denom)
    tops: list[tuple[int, int]] = []
    acc = 0
    for s in T.perm.top:
        before_bottom = sum(
            lengths[t - 1] for t in T.perm.bottom[: T.perm.bottom_position(s)]
        )
        tops.append((acc + lengths[s - 1], before_bottom - acc))
        acc += lengths[s - 1]
    total = acc
    for p0 in points:
        p = int(p0 * denom)
        if not 0 <= p < total:
            raise UsageError(f"point {p0} outside the domain")
        hits = 0
        for _ in range(n):
            if lo_i <= p < hi_i:
                hits += 1
            for right, disp in tops:
                if p < right:
                    p += disp
                    break
        out[p0] = hits / n
    return out


def limit_tower_points(
    run: ConstructionRun,
    T: Iet,
    horizon: int,
    fracs: Sequence[Fraction] = (Fraction(1, 2), Fraction(1, 4), Fraction(3, 4)),
) -> tuple[list[Fraction], list[Fraction]]:
    """Starting points whose ``horizon``-step itineraries follow the two
    limit-vertex column families.

    For each cluster the points sit inside the induced intervals of a run
    checkpoint whose relevant columns (first block for the left cluster,
    last two for the right) have return time at least ``horizon``, so each
    average reads a single column word of that family.
    """
    d = run.d

    def pick(cols: Sequence[int], names: Sequence[str]):
        for st in run.stages:
            for name in names:
                m = st.checkpoints.get(name)
                if m is None or name not in st.phases or st.phases[name] is None:
                    continue
                if min(m.column_norm(j) for j in cols) >= horizon:
                    return m, st.phases[name].end
        raise UsageError("no checkpoint deep enough for this horizon")

    m_a, pi_a = pick(range(1, d - 1), ["A", "Aprime"])
    m_b, pi_b = pick((d - 1, d), ["B", "Bprime"])

    def cluster(m, perm, syms):
        lam = m.solve(T.lengths)
        if any(x <= 0 for x in lam):
            raise UsageError("lengths are not in the image of this checkpoint")
        pos: dict[int, Fraction] = {}
        acc = Fraction(0)
        for s in perm.top:
            pos[s] = acc
            acc += lam[s - 1]
        pts = []
        for idx in range(5):
            s = syms[idx % len(syms)]
            f = fracs[idx % len(fracs)]
            pts.append(pos[s] + f * lam[s - 1])
        return pts

    return (
        cluster(m_a, pi_a, list(range(1, d - 1))),
        cluster(m_b, pi_b, [d - 1, d]),
    )


@dataclass(frozen=True)
class KeaneReport:
    satisfied: bool
    steps: int
    collision: tuple[int, int] | None  # (discontinuity index, orbit step)


def keane_check(T: Iet, N: int) -> KeaneReport:
    """Exact i.d.o.c. scan: orbits of 0 and the interior discontinuities
    must avoid the interior discontinuities for n = 1..N."""
    denom = math.lcm(*(x.denominator for x in T.lengths))
    lengths = [int(x * denom) for x in T.lengths]
    discs = []
    acc = 0
    for s in T.perm.top[:-1]:
        acc += lengths[s - 1]
        discs.append(acc)
    targets = set(discs)
    tops: list[tuple[int, int]] = []
    acc = 0
    for s in T.perm.top:
        before_bottom = sum(
            lengths[t - 1] for t in T.perm.bottom[: T.perm.bottom_position(s)]
        )
        tops.append((acc + lengths[s - 1], before_bottom - acc))
        acc += lengths[s - 1]
    for idx, start in enumerate([0] + discs):
        p = start
        for n in range(1, N + 1):
            for right, disp in tops:
                if p < right:
                    p += disp
                    break
            if p in targets:
                return KeaneReport(False, N, (idx, n))
    return KeaneReport(True, N, None)


# ---------------------------------------------------------------------------
# nested plane families and dimension estimators


@dataclass(frozen=True)
class Polygon2D:
    vertices: np.ndarray  # (n, 2), convex, counterclockwise or clockwise

    @property
    def area(self) -> float:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return 0.5 * abs(
            float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        )

    @property
    def diameter(self) -> float:
        v = self.vertices
        diff = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def contains(self, pt: np.ndarray, tol: float = 1e-10) -> bool:
        v = self.vertices
        n = len(v)
        signs = []
        for i in range(n):
            a, b = v[i], v[(i + 1) % n]
            cross = (b[0] - a[0]) * (pt[1] - a[1]) - (b[1] - a[1]) * (pt[0] - a[0])
            signs.append(cross)
        return all(s >= -tol for s in signs) or all(s <= tol for s in signs)

    def contains_polygon(self, other: "Polygon2D", tol: float = 1e-10) -> bool:
        return all(self.contains(p, tol) for p in other.vertices)


@dataclass(frozen=True)
class NestedFamily:
    levels: tuple[tuple[Polygon2D, ...], ...]
    parents: tuple[tuple[int | None, ...], ...]  # index into previous level
    a: tuple[float, ...]  # retained-measure fraction per level > 0
    radii: tuple[tuple[float, float], ...]  # (max diameter, min diameter)

    def __post_init__(self):
        for lv, (polys, pars) in enumerate(zip(self.levels, self.parents)):
            if lv == 0:
                continue
            for poly, par in zip(polys, pars):
                parent = self.levels[lv - 1][par]
                if not parent.contains_polygon(poly, tol=1e-8):
                    raise UsageError(f"level {lv}: child escapes its parent")

    @property
    def depth(self) -> int:
        return len(self.levels)


def make_nested_family(
    levels: Sequence[Sequence[Polygon2D]],
    parents: Sequence[Sequence[int | None]],
) -> NestedFamily:
    a = []
    radii = []
    for lv, polys in enumerate(levels):
        areas = [p.area for p in polys]
        diams = [p.diameter for p in polys]
        radii.append((max(diams), min(diams)))
        if lv == 0:
            a.append(1.0)
        else:
            prev = sum(p.area for p in levels[lv - 1])
            a.append(sum(areas) / prev if prev > 0 else 0.0)
    return NestedFamily(
        tuple(tuple(p) for p in levels),
        tuple(tuple(p) for p in parents),
        tuple(a),
        tuple(radii),
    )


def cantor_product_family(levels: int) -> NestedFamily:
    """Middle-thirds Cantor set squared, as a nested polygon family."""
    out_levels: list[list[Polygon2D]] = []
    out_parents: list[list[int | None]] = []
    squares = [(0.0, 0.0, 1.0)]  # (x, y, side)
    out_levels.append([_square(*squares[0])])
    out_parents.append([None])
    for _ in range(levels):
        nxt = []
        pars = []
        for pi, (x, y, s) in enumerate(squares):
            t = s / 3.0
            for dx in (0.0, 2 * t):
                for dy in (0.0, 2 * t):
                    nxt.append((x + dx, y + dy, t))
                    pars.append(pi)
        squares = nxt
        out_levels.append([_square(*sq) for sq in squares])
        out_parents.append(pars)
    return make_nested_family(out_levels, out_parents)


def _square(x: float, y: float, s: float) -> Polygon2D:
    return Polygon2D(
        np.array([[x, y], [x + s, y], [x + s, y + s], [x, y + s]])
    )


def build_nested_family(
    run: ConstructionRun,
    family: PlaneFamily,
    planes: int,
    seed: int = 0,
) -> list[NestedFamily]:
    """Per-plane chains of stage-simplex sections.

    Base points are sampled inside the deepest stage's simplex; each stage's
    cumulative simplex is sliced by the same plane, giving a single nested
    polygon per level for as long as the section stays non-empty.
    """
    if len(run.stages) < 2:
        raise UsageError("need a run with at least two stages")
    rng = np.random.default_rng(seed)
    d = run.d
    # base points inside the deepest simplex, so the plane meets every level;
    # exact rationals, because float rounding already exceeds that simplex's
    # width in its thin directions
    m_last = run.stages[-1].cumulative.rows
    out = []
    attempts = 0
    while len(out) < planes and attempts < 50 * planes:
        attempts += 1
        w = rng.dirichlet(np.ones(d))
        raw = [
            sum(Fraction(float(w[j])) * m_last[i][j] for j in range(d))
            for i in range(d)
        ]
        tot = sum(raw)
        base = [x / tot for x in raw]
        levels: list[list[Polygon2D]] = []
        parents: list[list[int | None]] = []
        ok = True
        for lv, st in enumerate(run.stages):
            sec = section(st.cumulative, base, family)
            if sec is None or sec.area <= 0:
                ok = lv >= 2  # keep chains that survived at least two levels
                break
            levels.append([Polygon2D(np.asarray(sec.vertices, dtype=float))])
            parents.append([None if lv == 0 else 0])
        if not levels or len(levels) < 2 or not ok:
            continue
        try:
            out.append(make_nested_family(levels, parents))
        except UsageError:
            continue
    return out


@dataclass(frozen=True)
class FrostmanMeasure:
    weights: tuple[tuple[float, ...], ...]  # per level, per polygon
    exponent: float  # fitted s with sup-ball-mass ~ r^s
    radii: tuple[float, ...]
    masses: tuple[float, ...]  # sup over probe points of mu(B(x, r))


def frostman_measure(family: NestedFamily) -> FrostmanMeasure:
    """The inductive sibling-area measure plus a ball-mass exponent scan."""
    if family.depth < 1 or not family.levels[0]:
        raise DegeneracyError("empty family")
    weights: list[list[float]] = []
    top_areas = [p.area for p in family.levels[0]]
    total = sum(top_areas)
    if total <= 0:
        raise DegeneracyError("zero-mass family")
    weights.append([a / total for a in top_areas])
    for lv in range(1, family.depth):
        w_prev = weights[-1]
        polys = family.levels[lv]
        pars = family.parents[lv]
        sums: dict[int, float] = {}
        for poly, par in zip(polys, pars):
            sums[par] = sums.get(par, 0.0) + poly.area
        weights.append(
            [w_prev[par] * poly.area / sums[par] for poly, par in zip(polys, pars)]
        )
    deepest = family.levels[-1]
    w_last = weights[-1]
    centers = np.array([p.centroid for p in deepest])
    # an even subsample of centroids is enough for the sup: the measure is
    # near-homogeneous, and the full probe set only changes the prefactor
    stride = max(1, len(centers) // 256)
    probe = np.concatenate(
        [centers[::stride]] + [p.vertices for p in deepest[: 16]]
    )
    r_hi = family.radii[0][0]
    r_lo = max(family.radii[-1][1], 1e-12)
    radii = []
    r = r_hi
    while r >= r_lo:
        radii.append(r)
        r /= 2.0
    if len(radii) < 2:
        radii = [r_hi, r_hi / 2.0]
    w_arr = np.array(w_last)
    dist = np.sqrt(
        ((probe[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
    )
    masses = [
        float((w_arr[None, :] * (dist <= r)).sum(axis=1).max()) for r in radii
    ]
    # Radii comparable to the family's diameter saturate the sup ball mass at
    # the total measure; those points carry no scaling information and would
    # flatten the log-log slope, so the fit keeps only the scaling regime.
    total = float(w_arr.sum())
    kept = [
        (math.log(r), math.log(m))
        for r, m in zip(radii, masses)
        if 0 < m < 0.99 * total
    ]
    if len(kept) < 2:
        kept = [
            (math.log(r), math.log(m)) for r, m in zip(radii, masses) if m > 0
        ]
    xs = [x for x, _ in kept]
    ys = [y for _, y in kept]
    exponent = float(np.polyfit(xs, ys, 1)[0]) if len(xs) >= 2 else float("nan")
    return FrostmanMeasure(
        tuple(tuple(w) for w in weights), exponent, tuple(radii), tuple(masses)
    )


@dataclass(frozen=True)
class BoxDimensionFit:
    estimate: float
    counts: tuple[int, ...]
    radii: tuple[float, ...]
    residual: float  # max absolute fit residual in log-log space


def box_dimension(points: np.ndarray, r_grid: Sequence[float]) -> BoxDimensionFit:
    """Least-squares slope of log N(r) against log(1/r) over occupied boxes."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    radii = sorted(float(r) for r in r_grid)
    counts = []
    for r in radii:
        cells = np.floor(pts / r).astype(np.int64)
        counts.append(len({tuple(c) for c in cells}))
    usable = [(r, n) for r, n in zip(radii, counts) if n > 0]
    if len(usable) < 2:
        raise UsageError("need at least two non-empty scales")
    xs = [math.log(1.0 / r) for r, _ in usable]
    ys = [math.log(n) for _, n in usable]
    coef = np.polyfit(xs, ys, 1)
    resid = np.array(ys) - np.polyval(coef, xs)
    return BoxDimensionFit(
        float(coef[0]), tuple(counts), tuple(radii), float(np.abs(resid).max())
    )


# ---------------------------------------------------------------------------
# illumination proportion


def illumination_proportion(
    run: ConstructionRun,
    stage: int,
    c: float,
    samples: int,
    seed: int,
    variants: int = 3,
) -> McReport:
    """Measured fraction of slice points of the stage family that the fixed
    direction phi joins to the first face; plus the t_k-neighborhood
    survival fraction in the extras."""
    if not 0.1 <= c <= 0.9:
        raise UsageError("slice parameter must lie in [0.1, 0.9]")
    st = run.stages[stage - 1]
    d = run.d
    rng = Random(seed)
    nrng = np.random.default_rng(seed)
    # family members: cumulative-through-B with a few regenerated B phases
    members_vm = [st.checkpoints["B"]]
    before_b = st.checkpoints["T"]
    w = run.schedule.stage(stage)
    for _ in range(variants - 1):
        alt = freedom_rhs_for_window(st.phase("B").start, w.B, rng)
        members_vm.append(before_b @ alt.matrix)
    members = [
        ProjectiveSimplex(
            tuple(tuple(Fraction(x) for x in row) for row in vm.rows)
        )
        for vm in members_vm
    ]
    from .simplex_geometry import plane_family as _pf
    from .symplectic import omega as _omega

    fam = _pf(
        run.stages[0].phase("Aprime").matrix,
        run.stages[0].phase("B").matrix,
        _omega(run.stages[0].phase("Aprime").start),
    )
    phi = fam.phi
    float_members = [
        np.array(vm.rows, dtype=float) / np.array(vm.rows, dtype=float).sum(axis=0)
        for vm in members_vm
    ]
    hits = 0
    survive = 0
    tried = 0
    t_k = w.t
    guard = 0
    while tried < samples and guard < 100 * samples:
        guard += 1
        m_idx = rng.randrange(len(members))
        verts = float_members[m_idx]
        w1 = nrng.dirichlet(np.ones(d))
        w2 = nrng.dirichlet(np.ones(d))
        p1, p2 = verts @ w1, verts @ w2
        s1, s2 = p1[-2:].sum(), p2[-2:].sum()
        if (s1 - c) * (s2 - c) >= 0:
            continue
        t = (c - s1) / (s2 - s1)
        y = p1 + t * (p2 - p1)
        tried += 1
        y_rat = tuple(Fraction(float(v)).limit_denominator(10**9) for v in y)
        tot = sum(y_rat)
        y_rat = tuple(v / tot for v in y_rat)
        if illuminated(y_rat, [members[m_idx]], phi):
            hits += 1
        bary = w1 + t * (w2 - w1)
        if bary[0] <= t_k:
            survive += 1
    rep = _binomial_report(hits, tried, seed, 0.0)
    rep.extras["survival_fraction"] = survive / tried if tried else float("nan")
    rep.extras["t_k"] = t_k
    rep.extras["members"] = len(members)
    return McReport(
        rep.estimate, rep.stderr, rep.samples, seed, 0.0, CONSISTENT, rep.extras
    )
