"""The permutation skew form, its transport, and reciprocal pairing."""
from __future__ import annotations

from fractions import Fraction
from random import Random

import numpy as np
import pytest

from ietkit.induction import BOTTOM_WINS, TOP_WINS, drive_path
from ietkit.perm import (
    LabeledPermutation,
    ReducibilityError,
    hyperelliptic_class,
    hyperelliptic_permutation,
)
from ietkit.symplectic import (
    angle_report,
    darboux_basis,
    omega,
    reciprocal_pairing,
    singular_data,
    verify_invariance,
)


def random_path(d: int, length: int, seed: int):
    rng = Random(seed)
    pi = hyperelliptic_permutation(d)
    sides = [rng.choice([TOP_WINS, BOTTOM_WINS]) for _ in range(length)]
    M, pi_end, _ = drive_path(pi, sides)
    return M, pi, pi_end


def test_form_is_skew():
    form = omega(hyperelliptic_permutation(5))
    m = form.matrix
    for i in range(5):
        assert m[i][i] == 0
        for j in range(5):
            assert m[i][j] == -m[j][i]


@pytest.mark.parametrize("d,rank", [(2, 2), (3, 2), (4, 4), (5, 4)])
def test_form_rank(d, rank):
    assert omega(hyperelliptic_permutation(d)).rank == rank


def test_reducible_rejected():
    with pytest.raises(ReducibilityError):
        omega(LabeledPermutation((1, 2, 3), (2, 1, 3)))


def test_invariance_exact_on_random_paths():
    for seed in range(20):
        M, pi, pi_end = random_path(4, 25, seed)
        assert verify_invariance(M, pi, pi_end)


def test_invariance_fails_for_wrong_target():
    M, pi, pi_end = random_path(4, 10, 3)
    graph = hyperelliptic_class(4)
    wrong = next(v for v in graph.vertices if v != pi_end)
    # the transported form matches exactly one permutation's form here
    assert not verify_invariance(M, pi, wrong) or omega(wrong).matrix == omega(pi_end).matrix


def test_darboux_pairs_to_one():
    form = omega(hyperelliptic_permutation(4))
    basis = darboux_basis(form)
    assert len(basis) == form.rank
    for k in range(0, len(basis), 2):
        assert form.apply(basis[k], basis[k + 1]) == 1
    # off-pair values vanish
    for i in range(len(basis)):
        for j in range(len(basis)):
            expected = 0
            if i % 2 == 0 and j == i + 1:
                expected = 1
            elif i % 2 == 1 and j == i - 1:
                expected = -1
            assert form.apply(basis[i], basis[j]) == expected


def test_image_preimage_solves_on_image():
    form = omega(hyperelliptic_permutation(4))
    w = (Fraction(1), Fraction(2), Fraction(0), Fraction(-1))
    y = form.image_preimage(w)
    # Omega y equals the image-projection of w: applying the form to the
    # kernel directions of both sides gives zero
    image = tuple(
        sum(Fraction(form.matrix[i][j]) * y[j] for j in range(4)) for i in range(4)
    )
    for k in form.kernel_basis:
        assert sum(a * b for a, b in zip(image, k)) == 0


def test_reciprocal_pairing_defect_small():
    M, pi, pi_end = random_path(4, 30, 7)
    rep = reciprocal_pairing(M, pi, pi_end)
    assert rep.defect < 1e-8
    assert rep.restricted_det == pytest.approx(1.0, abs=1e-9)
    for i, j in rep.pairs:
        assert rep.values[i] * rep.values[j] == pytest.approx(1.0, abs=1e-8)


def test_pairing_on_longer_d5_path():
    M, pi, pi_end = random_path(5, 30, 11)
    rep = reciprocal_pairing(M, pi, pi_end)
    assert rep.defect < 1e-8


def test_singular_data_descending_and_consistent():
    M, _, _ = random_path(4, 20, 2)
    sd = singular_data(M)
    assert list(sd.values) == sorted(sd.values, reverse=True)
    a = np.array(M.rows, dtype=float)
    for k in range(4):
        lhs = a @ sd.input_dirs[k]
        rhs = sd.values[k] * sd.output_dirs[k]
        assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-6)


def test_angle_report_on_positive_matrix():
    M, _, _ = random_path(4, 40, 5)
    rep = angle_report(M)
    # dominant input direction hugs the dominant column
    assert rep.top_input_vs_last_column < np.pi / 2
    assert rep.column_angles.shape == (4, 4)
    assert np.allclose(rep.column_angles, rep.column_angles.T)
