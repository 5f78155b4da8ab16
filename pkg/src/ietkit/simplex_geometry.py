"""Projective action on the simplex: volumes, Jacobians, slices, sections.

A non-negative matrix M acts on the standard simplex by x -> Mx/|Mx|; the
image is the sub-simplex spanned by the normalized columns.  Identities
(volume ratios, Jacobian values, orthogonality of the plane directions) are
exact rationals; polygon sections and diameters are floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _rational
from .errors import DegeneracyError, UsageError
from .induction import VisitationMatrix
from .symplectic import SymplecticForm


def _columns(M) -> list[tuple[Fraction, ...]]:
    rows = M.rows if isinstance(M, VisitationMatrix) else M
    return [
        tuple(Fraction(rows[i][j]) for i in range(len(rows)))
        for j in range(len(rows[0]))
    ]


def column_l1(col: Sequence[Fraction]) -> Fraction:
    return sum(Fraction(x) for x in col)


@dataclass(frozen=True)
class ProjectiveSimplex:
    """The image of the standard simplex under a non-negative matrix."""

    generator: tuple[tuple[Fraction, ...], ...]  # rows

    @staticmethod
    def from_matrix(M) -> "ProjectiveSimplex":
        rows = M.rows if isinstance(M, VisitationMatrix) else M
        return ProjectiveSimplex(
            tuple(tuple(Fraction(x) for x in row) for row in rows)
        )

    @property
    def d(self) -> int:
        return len(self.generator)

    def vertices(self) -> list[tuple[Fraction, ...]]:
        """Unit-sum normalized columns."""
        out = []
        for col in _columns(self.generator):
            s = column_l1(col)
            if s == 0:
                raise DegeneracyError("zero column has no projective image")
            out.append(tuple(x / s for x in col))
        return out

    def contains(self, point: Sequence) -> bool:
        """Exact membership: x in M Delta iff the preimage is non-negative."""
        p = _rational.vec(point)
        if sum(p) != 1:
            return False
        z = _rational.solve(_rational.mat(self.generator), p)
        if z is None:
            return False
        return all(c >= 0 for c in z)

    def float_vertices(self) -> np.ndarray:
        return np.array([[float(x) for x in v] for v in self.vertices()])


@dataclass(frozen=True)
class SliceDeltaC:
    """The slice {x in Delta : x_{d-1} + x_d = c}."""

    d: int
    c: Fraction

    def contains(self, point: Sequence) -> bool:
        p = _rational.vec(point)
        return (
            len(p) == self.d
            and sum(p) == 1
            and all(x >= 0 for x in p)
            and p[-1] + p[-2] == self.c
        )

    def barycenter(self) -> tuple[Fraction, ...]:
        first = (1 - self.c) / (self.d - 2)
        return tuple([first] * (self.d - 2) + [self.c / 2, self.c / 2])


def simplex_volume_ratio(M1, M2) -> Fraction:
    """lambda(M1 Delta) / lambda(M2 Delta), exact.

    Column-norm product formula; the determinant factor covers non-unimodular
    inputs.
    """
    d1 = _rational.det(_rational.mat(M1.rows if isinstance(M1, VisitationMatrix) else M1))
    d2 = _rational.det(_rational.mat(M2.rows if isinstance(M2, VisitationMatrix) else M2))
    if d1 == 0 or d2 == 0:
        raise DegeneracyError("singular matrix spans a degenerate simplex")
    p1 = Fraction(1)
    for col in _columns(M1):
        p1 *= column_l1(col)
    p2 = Fraction(1)
    for col in _columns(M2):
        p2 *= column_l1(col)
    return abs(d1) / abs(d2) * p2 / p1


def face_volume_ratio(M, A1, A2, face: Sequence[int] | None = None) -> Fraction:
    """Ratio of face volumes of V(M A1) vs V(M A2) from column norms.

    ``face`` defaults to the first d-2 indices (the V face).  A1 and A2 must
    leave the complementary columns untouched for the formula to mean what
    the caller thinks it means; that contract is the caller's to honor.
    """
    d = M.d if isinstance(M, VisitationMatrix) else len(M)
    face = tuple(face) if face is not None else tuple(range(1, d - 1))
    prod1 = Fraction(1)
    prod2 = Fraction(1)
    c1 = _columns((M @ A1).rows if isinstance(M, VisitationMatrix) else M)
    c2 = _columns((M @ A2).rows if isinstance(M, VisitationMatrix) else M)
    for j in face:
        prod1 *= column_l1(c1[j - 1])
        prod2 *= column_l1(c2[j - 1])
    return prod2 / prod1


def jacobian(M, z: Sequence, exact: bool = False):
    """Jacobian of x -> Mx/|Mx| at z in Delta: 1 / (sum_i |C_i| z_i)^d."""
    cols = _columns(M)
    d = len(cols)
    if exact:
        s = sum(column_l1(c) * Fraction(x) for c, x in zip(cols, z))
        return 1 / s**d
    norms = [float(column_l1(c)) for c in cols]
    s = float(sum(n * float(x) for n, x in zip(norms, z)))
    return s**-d


def face_jacobian(M, u: Sequence, face: Sequence[int]):
    """Face Jacobian up to its matrix constant: (sum_j u_j |C_j|)^{-k}.

    ``u`` is the preimage point, supported on the ``face`` indices and
    summing to 1.  Only ratios of these values are meaningful.
    """
    u = _rational.vec(u)
    face = tuple(face)
    if sum(u) != 1 or any(
        u[j] != 0 for j in range(len(u)) if (j + 1) not in face
    ):
        raise UsageError("point must be a unit-sum vector supported on the face")
    cols = _columns(M)
    s = sum(u[j - 1] * column_l1(cols[j - 1]) for j in face)
    return float(s) ** (-len(face))


@dataclass(frozen=True)
class PlaneFamily:
    """Parallel 2-planes spanned by the construction's two special directions.

    u and v live in the direction space of the slice (coordinates sum to
    zero, last two coordinates sum to zero) and are each orthogonal to the
    restricted-inverse image of the other defining column.  phi, the
    illumination direction, is u.
    """

    d: int
    u: tuple[Fraction, ...]
    v: tuple[Fraction, ...]

    @property
    def phi(self) -> tuple[Fraction, ...]:
        return self.u

    def chart(self) -> np.ndarray:
        """Orthonormal 2 x d chart basis for the plane directions."""
        b1 = np.array([float(x) for x in self.u])
        b1 /= np.linalg.norm(b1)
        b2 = np.array([float(x) for x in self.v])
        b2 -= np.dot(b2, b1) * b1
        n = np.linalg.norm(b2)
        if n < 1e-14:
            raise DegeneracyError("plane directions are numerically dependent")
        return np.vstack([b1, b2 / n])


def _project_slice_directions(z: Sequence[Fraction], d: int) -> tuple[Fraction, ...]:
    """Orthogonal projection onto {sum x = 0, x_{d-1}+x_d = 0}."""
    ones = tuple(Fraction(1) for _ in range(d))
    last_two = tuple(
        Fraction(1) if i >= d - 2 else Fraction(0) for i in range(d)
    )
    # orthogonalize the second normal against the first
    shift = _rational.dot(last_two, ones) / _rational.dot(ones, ones)
    n2 = tuple(x - shift * y for x, y in zip(last_two, ones))
    out = tuple(Fraction(x) for x in z)
    for n in (ones, n2):
        coeff = _rational.dot(out, n) / _rational.dot(n, n)
        out = tuple(x - coeff * y for x, y in zip(out, n))
    return out


def plane_family(A1prime, B1, form: SymplecticForm) -> PlaneFamily:
    """Build the plane directions from the first-stage product A'_1 B_1."""
    N = A1prime @ B1
    d = N.d
    c1 = tuple(Fraction(x) for x in N.column(1))
    cd = tuple(Fraction(x) for x in N.column(d))
    w_u = form.image_preimage(c1)
    w_v = form.image_preimage(cd)
    u0 = _project_slice_directions(w_u, d)
    v0 = _project_slice_directions(w_v, d)
    if all(x == 0 for x in v0) or all(x == 0 for x in u0):
        raise DegeneracyError("plane direction collapsed to zero")
    u = tuple(
        x - (_rational.dot(u0, v0) / _rational.dot(v0, v0)) * y
        for x, y in zip(u0, v0)
    )
    v = tuple(
        x - (_rational.dot(v0, u0) / _rational.dot(u0, u0)) * y
        for x, y in zip(v0, u0)
    )
    if all(x == 0 for x in u) or all(x == 0 for x in v):
        raise DegeneracyError("plane directions are dependent")
    return PlaneFamily(d, u, v)


@dataclass(frozen=True)
class SectionPolygon:
    base_point: tuple[float, ...]
    chart: np.ndarray  # 2 x d orthonormal directions
    vertices: np.ndarray  # n x 2 chart coordinates, counterclockwise

    @property
    def diameter(self) -> float:
        vs = self.vertices
        if len(vs) < 2:
            return 0.0
        diffs = vs[:, None, :] - vs[None, :, :]
        return float(np.sqrt((diffs**2).sum(-1)).max())

    @property
    def area(self) -> float:
        vs = self.vertices
        if len(vs) < 3:
            return 0.0
        x, y = vs[:, 0], vs[:, 1]
        return float(
            abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2
        )

    def ambient_vertices(self) -> np.ndarray:
        return np.array(self.base_point) + self.vertices @ self.chart

    def centroid(self) -> np.ndarray:
        """Area centroid in chart coordinates (vertex mean for degenerate)."""
        vs = self.vertices
        if len(vs) < 3 or self.area == 0.0:
            return vs.mean(axis=0)
        x, y = vs[:, 0], vs[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = cross.sum() / 2
        cx = ((x + xn) * cross).sum() / (6 * a)
        cy = ((y + yn) * cross).sum() / (6 * a)
        return np.array([cx, cy])


def clip_halfplanes(
    constraints: np.ndarray, box: float = 16.0
) -> np.ndarray | None:
    """Intersect half-planes a*s + b*t + c >= 0 given as rows (a, b, c).

    Sutherland-Hodgman against a large initial box; returns vertices
    counterclockwise, or None when the intersection is empty.
    """
    poly = [
        np.array([-box, -box]),
        np.array([box, -box]),
        np.array([box, box]),
        np.array([-box, box]),
    ]
    for a, b, c in constraints:
        if not poly:
            return None
        nrm = float(np.hypot(a, b))
        if nrm < 1e-300:
            if c < 0:
                return None
            continue
        new_poly = []
        vals = [a * p[0] + b * p[1] + c for p in poly]
        n = len(poly)
        for i in range(n):
            p, q = poly[i], poly[(i + 1) % n]
            vp, vq = vals[i], vals[(i + 1) % n]
            if vp >= 0:
                new_poly.append(p)
            if (vp > 0) != (vq > 0) and vp != vq:
                t = vp / (vp - vq)
                if 0 < t < 1:
                    new_poly.append(p + t * (q - p))
        # drop duplicate points
        poly = []
        for p in new_poly:
            if not poly or np.linalg.norm(p - poly[-1]) > 1e-13:
                poly.append(p)
        if len(poly) > 1 and np.linalg.norm(poly[0] - poly[-1]) <= 1e-13:
            poly.pop()
    if len(poly) < 3:
        return None
    return np.array(poly)


def section(M, base_point: Sequence, family: PlaneFamily) -> SectionPolygon | None:
    """M Delta sliced by the plane through base_point; None when empty.

    The preimage condition M^{-1} x >= 0 turns into d half-planes in the
    plane's own chart, so no d-dimensional vertex enumeration happens.
    """
    rows = M.rows if isinstance(M, VisitationMatrix) else M
    p0 = np.array([float(x) for x in base_point])
    if abs(p0.sum() - 1.0) > 1e-9:
        return None  # plane misses the affine hull of the simplex entirely
    chart = family.chart()
    # constraint rows: (M^-1 p0)_r + s (M^-1 b1)_r + t (M^-1 b2)_r >= 0.
    # M^-1 has entries of size ~ norm(M)^(d-1), so forming it in floats and
    # multiplying cancels catastrophically once the section is much smaller
    # than the simplex; solve the three systems exactly instead.
    m = _rational.mat(rows)
    sols = []
    for rhs in (base_point, chart[0], chart[1]):
        x = _rational.solve(m, [Fraction(v) for v in rhs])
        if x is None:
            return None
        sols.append(x)
    c_ex, a_ex, b_ex = sols
    rows_abc = [
        (a, b, c)
        for a, b, c in zip(a_ex, b_ex, c_ex)
        if a != 0 or b != 0
    ]
    if any(
        c < 0 for a, b, c in zip(a_ex, b_ex, c_ex) if a == 0 and b == 0
    ):
        return None
    # vertex enumeration stays exact: the section can sit 20+ orders of
    # magnitude below the chart scale, where any float clipping collapses
    verts_ex: list[tuple[Fraction, Fraction]] = []
    n = len(rows_abc)
    for i in range(n):
        a1, b1, c1 = rows_abc[i]
        for j in range(i + 1, n):
            a2, b2, c2 = rows_abc[j]
            det = a1 * b2 - a2 * b1
            if det == 0:
                continue
            s = (-c1 * b2 + c2 * b1) / det
            t = (-a1 * c2 + a2 * c1) / det
            if all(a * s + b * t + c >= 0 for a, b, c in rows_abc):
                if not any(s == ps and t == pt for ps, pt in verts_ex):
                    verts_ex.append((s, t))
    if len(verts_ex) < 3:
        return None
    cs = sum(s for s, _ in verts_ex) / len(verts_ex)
    ct = sum(t for _, t in verts_ex) / len(verts_ex)
    order = sorted(
        verts_ex, key=lambda v: math.atan2(float(v[1] - ct), float(v[0] - cs))
    )
    verts = np.array([[float(s), float(t)] for s, t in order])
    return SectionPolygon(tuple(p0), chart, verts)


def illuminated(y: Sequence, simplices: Sequence, phi: Sequence) -> bool:
    """True iff the line through y in direction phi meets the face F_1.

    F_1 of a family is the convex hull of all member vertices except each
    member's first.  Exact rational LP feasibility over the barycentric
    weights and the line parameter; invariant under scaling or flipping phi.
    """
    face_points: list[tuple[Fraction, ...]] = []
    for s in simplices:
        ps = s if isinstance(s, ProjectiveSimplex) else ProjectiveSimplex.from_matrix(s)
        face_points.extend(ps.vertices()[1:])
    if not face_points:
        raise DegeneracyError("no face points")
    d = len(face_points[0])
    y = _rational.vec(y)
    phi = _rational.vec(phi)
    if all(x == 0 for x in phi):
        raise DegeneracyError("zero illumination direction")
    # unknowns: b_1..b_m >= 0, t free;  sum b_m q_m - t phi = y;  sum b = 1
    m = len(face_points)
    eq_lhs = []
    eq_rhs = []
    for i in range(d):
        eq_lhs.append([q[i] for q in face_points] + [-phi[i]])
        eq_rhs.append(y[i])
    eq_lhs.append([Fraction(1)] * m + [Fraction(0)])
    eq_rhs.append(Fraction(1))
    sol = _rational.lp_feasible(eq_lhs, eq_rhs, [True] * m + [False])
    return sol is not None


def _polytope_halfspaces(body) -> tuple[np.ndarray, np.ndarray]:
    """(A, b) with body = {x : A x <= b}; accepts vertices or the pair itself."""
    if isinstance(body, tuple) and len(body) == 2:
        return np.asarray(body[0], dtype=float), np.asarray(body[1], dtype=float)
    from scipy.spatial import ConvexHull

    hull = ConvexHull(np.asarray(body, dtype=float))
    eq = hull.equations  # rows: a . x + c <= 0
    return eq[:, :-1], -eq[:, -1]


def polytope_section_area(
    A: np.ndarray, b: np.ndarray, point: np.ndarray, chart: np.ndarray
) -> float:
    """Area of {x : A x <= b} cut by the plane point + span(chart rows)."""
    cons = np.column_stack(
        [-(A @ chart[0]), -(A @ chart[1]), b - A @ point]
    )
    verts = clip_halfplanes(cons, box=1e3)
    if verts is None:
        return 0.0
    x, y = verts[:, 0], verts[:, 1]
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2)


def plane_section_concavity_test(
    body,
    directions: np.ndarray,
    eps: float,
    samples: int,
    seed: int = 0,
    constant: float = 4.0,
) -> tuple[float, float, bool]:
    """Fraction of parallel-plane sections with area below eps * max area.

    ``directions`` is a 2 x n array spanning the plane; translates are
    sampled uniformly over the bounding box of the body's projection onto
    the orthocomplement.  Returns (fraction, bound, fraction <= bound) with
    bound = constant * sqrt(eps).
    """
    if not 0 < eps <= 1:
        raise UsageError("eps must be in (0, 1]")
    if isinstance(body, dict) and "ball" in body:
        # exact ball sections: area pi (R^2 - r^2) at offset radius r
        radius = float(body["ball"])
        n = int(body["dim"])
        rng = np.random.default_rng(seed)
        offsets = rng.uniform(-radius, radius, size=(samples, n - 2))
        r2 = (offsets**2).sum(axis=1)
        areas = np.pi * np.clip(radius**2 - r2, 0.0, None)
        hit = areas > 0
        if not hit.any():
            raise DegeneracyError("no sampled plane met the ball")
        fraction = float((areas[hit] < eps * areas.max()).mean())
        bound = constant * float(np.sqrt(eps))
        return fraction, bound, fraction <= bound
    A, b = _polytope_halfspaces(body)
    n = A.shape[1]
    chart_q, _ = np.linalg.qr(np.asarray(directions, dtype=float).T)
    chart = chart_q.T[:2]
    # orthocomplement basis
    full, _ = np.linalg.qr(np.hstack([chart.T, np.eye(n)]))
    comp = full[:, 2:n].T
    # bounding box of the body via support in +-each comp direction (LP-free:
    # use vertices when given, else solve support by scipy linprog)
    try:
        vertices = np.asarray(body, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != n:
            raise ValueError
        proj = vertices @ comp.T
        lo, hi = proj.min(axis=0), proj.max(axis=0)
    except (ValueError, TypeError):
        from scipy.optimize import linprog

        lo = np.empty(n - 2)
        hi = np.empty(n - 2)
        for i, c in enumerate(comp):
            r1 = linprog(c, A_ub=A, b_ub=b, bounds=(None, None))
            r2 = linprog(-c, A_ub=A, b_ub=b, bounds=(None, None))
            lo[i], hi[i] = r1.fun, -r2.fun
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(lo, hi, size=(samples, n - 2))
    areas = np.empty(samples)
    for k in range(samples):
        point = offsets[k] @ comp
        areas[k] = polytope_section_area(A, b, point, chart)
    hit = areas > 0
    if not hit.any():
        raise DegeneracyError("no sampled plane met the body")
    a_max = areas.max()
    fraction = float((areas[hit] < eps * a_max).mean())
    bound = constant * float(np.sqrt(eps))
    return fraction, bound, fraction <= bound
