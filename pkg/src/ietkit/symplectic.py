"""The (possibly degenerate) skew form attached to a permutation pair.

Convention: Omega[a][b] = +1 when symbol a precedes b on the top row and
follows b on the bottom row, -1 in the mirrored case, 0 otherwise.  The
cocycle transports the form exactly: M^T Omega_pi M = Omega_pi'.  On the
image of the form the transported matrix is symplectic, which forces its
singular values into reciprocal pairs; we verify that numerically after an
exact change to Darboux coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _rational
from .errors import DegeneracyError, IetkitError, UsageError
from .induction import VisitationMatrix
from .perm import LabeledPermutation, ReducibilityError


@dataclass(frozen=True)
class SymplecticForm:
    perm: LabeledPermutation
    matrix: tuple[tuple[int, ...], ...]  # skew integer matrix
    image_basis: tuple[tuple[Fraction, ...], ...]  # rational, spans Im
    kernel_basis: tuple[tuple[Fraction, ...], ...]

    @property
    def d(self) -> int:
        return len(self.matrix)

    @property
    def rank(self) -> int:
        return self.d - len(self.kernel_basis)

    def apply(self, u, v) -> Fraction:
        """The bilinear form u^T Omega v."""
        return sum(
            Fraction(u[i]) * self.matrix[i][j] * Fraction(v[j])
            for i in range(self.d)
            for j in range(self.d)
        )

    def image_preimage(self, w) -> tuple[Fraction, ...]:
        """Solve Omega y = proj_Im(w) with y in Im(Omega).

        This is the restricted inverse: well defined because Omega maps its
        image bijectively onto itself (image and kernel are orthogonal
        complements for a skew form).
        """
        m = _rational.mat(self.matrix)
        w = _rational.vec(w)
        # project w onto Im = ker^perp
        for k in self.kernel_basis:
            coeff = _rational.dot(w, k) / _rational.dot(k, k)
            w = tuple(wi - coeff * ki for wi, ki in zip(w, k))
        y = _rational.solve(m, w)
        if y is None:
            raise DegeneracyError("projection did not land in the image")
        for k in self.kernel_basis:
            coeff = _rational.dot(y, k) / _rational.dot(k, k)
            y = tuple(yi - coeff * ki for yi, ki in zip(y, k))
        return y

    def orthonormal_image(self) -> np.ndarray:
        """Float orthonormal basis of Im(Omega), columns of a d x rank array."""
        b = np.array(self.image_basis, dtype=float).T
        q, _ = np.linalg.qr(b)
        return q[:, : self.rank]


def omega(pi: LabeledPermutation) -> SymplecticForm:
    """Build the skew form for a permutation pair."""
    if not pi.is_irreducible():
        raise ReducibilityError(f"reducible permutation {pi}")
    d = pi.d
    m = [[0] * d for _ in range(d)]
    for a in range(1, d + 1):
        for b in range(1, d + 1):
            if a == b:
                continue
            before_top = pi.top_position(a) < pi.top_position(b)
            before_bottom = pi.bottom_position(a) < pi.bottom_position(b)
            if before_top and not before_bottom:
                m[a - 1][b - 1] = 1
            elif not before_top and before_bottom:
                m[a - 1][b - 1] = -1
    mat = _rational.mat(m)
    kernel = _rational.nullspace(mat)
    image = _rational.column_space_basis(mat)
    return SymplecticForm(pi, tuple(tuple(r) for r in m), tuple(image), tuple(kernel))


def verify_invariance(
    M: VisitationMatrix, pi: LabeledPermutation, pi_prime: LabeledPermutation
) -> bool:
    """Exact integer check of M^T Omega_pi M == Omega_pi'."""
    om = omega(pi).matrix
    om_prime = omega(pi_prime).matrix
    d = M.d
    rows = M.rows
    # (M^T Omega M)[i][j] = sum_{a,b} M[a][i] Omega[a][b] M[b][j]
    tmp = [
        [sum(om[a][b] * rows[b][j] for b in range(d)) for j in range(d)]
        for a in range(d)
    ]
    lhs = [
        [sum(rows[a][i] * tmp[a][j] for a in range(d)) for j in range(d)]
        for i in range(d)
    ]
    return all(lhs[i][j] == om_prime[i][j] for i in range(d) for j in range(d))


@dataclass(frozen=True)
class SingularData:
    values: tuple[float, ...]  # descending
    input_dirs: np.ndarray  # rows are right-singular vectors
    output_dirs: np.ndarray  # rows are left-singular vectors


def singular_data(M) -> SingularData:
    """Full SVD with a deterministic sign convention.

    Each input direction is flipped so its first non-zero coordinate is
    positive; the output direction flips with it to keep M v = s u.
    """
    a = np.array(M.rows if isinstance(M, VisitationMatrix) else M, dtype=float)
    if abs(np.linalg.det(a)) < 1e-300:
        raise DegeneracyError("singular matrix has no full decomposition")
    u, s, vh = np.linalg.svd(a)
    for k in range(len(s)):
        row = vh[k]
        lead = row[np.nonzero(np.abs(row) > 1e-12)[0][0]]
        if lead < 0:
            vh[k] = -row
            u[:, k] = -u[:, k]
    return SingularData(tuple(float(x) for x in s), vh, u.T)


def darboux_basis(form: SymplecticForm) -> list[tuple[Fraction, ...]]:
    """Exact basis (u_1, v_1, u_2, v_2, ...) of Im with form(u_i, v_i) = 1.

    Standard symplectic Gram-Schmidt over the rationals.
    """
    pool = [tuple(v) for v in form.image_basis]
    out: list[tuple[Fraction, ...]] = []
    while pool:
        u = pool.pop(0)
        partner = next((i for i, w in enumerate(pool) if form.apply(u, w) != 0), None)
        if partner is None:
            raise DegeneracyError("form degenerate on its own image")
        v = pool.pop(partner)
        scale = form.apply(u, v)
        v = tuple(x / scale for x in v)
        out.extend([u, v])
        reduced = []
        for w in pool:
            c_u = form.apply(u, w)
            w = tuple(wi - c_u * vi for wi, vi in zip(w, v))
            c_v = form.apply(v, w)
            w = tuple(wi + c_v * ui for wi, ui in zip(w, u))
            reduced.append(w)
        pool = reduced
    return out


@dataclass(frozen=True)
class PairingReport:
    values: tuple[float, ...]
    pairs: tuple[tuple[int, int], ...]
    defect: float
    kernel_scale: Fraction | None  # |c| with M k' = c k on 1-dim kernels
    restricted_det: float


def _restricted_matrix(
    M: VisitationMatrix, form: SymplecticForm, form_prime: SymplecticForm
) -> list[list[Fraction]]:
    """Coordinates of the induced map in Darboux bases of both images.

    With D, D' Darboux for Omega_pi, Omega_pi', the columns of M D' decompose
    as D S + (kernel of Omega_pi part); S is exactly symplectic w.r.t. the
    standard form, so its singular values pair reciprocally up to float error.
    """
    D = darboux_basis(form)
    D_prime = darboux_basis(form_prime)
    d = M.d
    basis_cols = [list(v) for v in D] + [list(v) for v in form.kernel_basis]
    B = _rational.mat(list(zip(*basis_cols)))  # columns are basis vectors
    S: list[list[Fraction]] = [[Fraction(0)] * len(D_prime) for _ in range(len(D))]
    for j, w in enumerate(D_prime):
        target = M.mat_vec(tuple(Fraction(x) for x in w))
        coeffs = _rational.solve(B, target)
        if coeffs is None:
            raise IetkitError("image decomposition failed")
        for i in range(len(D)):
            S[i][j] = coeffs[i]
    return S


def reciprocal_pairing(
    M: VisitationMatrix, pi: LabeledPermutation, pi_prime: LabeledPermutation
) -> PairingReport:
    """Singular values of the cocycle restricted to the form's image.

    Greedy pairing: repeatedly match the largest unpaired value with the
    value closest to its reciprocal, and report max |a * a_paired - 1|.
    Small singular values are recovered as reciprocals of the large singular
    values of the exact inverse, which keeps their relative accuracy.
    """
    if not verify_invariance(M, pi, pi_prime):
        raise UsageError("invariance M^T Omega M = Omega' fails for this path")
    form, form_prime = omega(pi), omega(pi_prime)
    if form.rank != form_prime.rank:
        raise IetkitError("rank mismatch between the two forms")
    S = _restricted_matrix(M, form, form_prime)
    S_float = np.array([[float(x) for x in row] for row in S])
    n = len(S)
    svals = np.linalg.svd(S_float, compute_uv=False)
    S_inv = _rational.inverse(_rational.mat(S))
    inv_vals = np.linalg.svd(
        np.array([[float(x) for x in row] for row in S_inv]), compute_uv=False
    )
    # top half from S, bottom half from 1/svd(S^{-1}), both relatively accurate
    merged = sorted(
        list(svals[: (n + 1) // 2]) + [1.0 / v for v in inv_vals[: n // 2]],
        reverse=True,
    )
    values = tuple(merged)
    unpaired = list(range(n))
    pairs = []
    defect = 0.0
    while unpaired:
        i = unpaired.pop(0)
        if not unpaired:
            pairs.append((i, i))  # middle value of an odd count pairs with itself
            defect = max(defect, abs(values[i] * values[i] - 1.0))
            break
        j = min(unpaired, key=lambda k: abs(values[k] - 1.0 / values[i]))
        unpaired.remove(j)
        pairs.append((i, j))
        defect = max(defect, abs(values[i] * values[j] - 1.0))
    kernel_scale = None
    if len(form_prime.kernel_basis) == 1 and len(form.kernel_basis) == 1:
        k_prime = form_prime.kernel_basis[0]
        image = M.mat_vec(tuple(Fraction(x) for x in k_prime))
        k = form.kernel_basis[0]
        ratios = {Fraction(a, b) for a, b in zip(image, k) if b != 0}
        nonzero_match = all(
            (a == 0) == (b == 0) for a, b in zip(image, k)
        )
        if len(ratios) == 1 and nonzero_match:
            kernel_scale = abs(ratios.pop())
    restricted_det = abs(float(np.linalg.det(S_float)))
    return PairingReport(values, tuple(pairs), defect, kernel_scale, restricted_det)


@dataclass(frozen=True)
class AngleReport:
    column_angles: np.ndarray  # d x d symmetric, radians
    top_input_vs_last_column: float
    second_input_vs_first_column: float


def vector_angle(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    c = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def angle_report(M) -> AngleReport:
    """Pairwise column angles plus singular-direction alignment probes.

    The top input direction of M^T aligns with the dominant column; the probe
    reports its angle to C_d and the angle of the second direction (projected
    off the first) to C_1.
    """
    rows = M.rows if isinstance(M, VisitationMatrix) else M
    a = np.array(rows, dtype=float)
    d = a.shape[0]
    angles = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            if i != j:
                angles[i][j] = vector_angle(a[:, i], a[:, j])
            else:
                angles[i][j] = 0.0
    sd = singular_data(a.T)
    w = sd.input_dirs[0]
    w2 = sd.input_dirs[1]
    proj = w2 - np.dot(w2, w) * w
    c1 = a[:, 0]
    cd = a[:, d - 1]
    return AngleReport(
        column_angles=angles,
        top_input_vs_last_column=vector_angle(w, cd),
        second_input_vs_first_column=vector_angle(proj, c1)
        if np.linalg.norm(proj) > 1e-14
        else float("nan"),
    )
