"""Monte Carlo lemma checks, Birkhoff measurements, and dimension tools."""
from __future__ import annotations

import math
from fractions import Fraction
from random import Random

import numpy as np
import pytest

from ietkit.analysis import (
    CONSISTENT,
    INCONCLUSIVE,
    Polygon2D,
    birkhoff_separation,
    box_dimension,
    build_nested_family,
    cantor_product_family,
    frostman_measure,
    half_simplex,
    illumination_proportion,
    keane_check,
    limit_tower_points,
    make_nested_family,
    mc_balance,
    mc_jacobian_pushforward,
    prob_decay_sim,
    sample_simplex,
    sample_simplex_exact,
)
from ietkit.construction import ExponentScale, make_schedule, run_construction
from ietkit.errors import DegeneracyError, UsageError
from ietkit.induction import Iet, VisitationMatrix
from ietkit.perm import hyperelliptic_permutation
from ietkit.simplex_geometry import plane_family
from ietkit.symplectic import omega


@pytest.fixture(scope="module")
def reference_run():
    schedule = make_schedule(1, ExponentScale.linear(), stages=3)
    return run_construction(4, schedule, seed=11)


@pytest.fixture(scope="module")
def reference_planes(reference_run):
    st1 = reference_run.stages[0]
    return plane_family(
        st1.phases["Aprime"].matrix,
        st1.phases["B"].matrix,
        omega(st1.phases["Aprime"].start),
    )


# -- sampling ---------------------------------------------------------------


def test_simplex_samples_normalized():
    pts = sample_simplex(4, np.random.default_rng(0), 100)
    assert np.allclose(pts.sum(axis=1), 1.0)
    assert (pts >= 0).all()


def test_exact_simplex_sample_sums_to_one():
    x = sample_simplex_exact(5, Random(3))
    assert sum(x) == 1
    assert all(v >= 0 for v in x)


# -- balance decay ----------------------------------------------------------


def test_balance_decay_d2():
    rep = mc_balance(
        hyperelliptic_permutation(2), zeta=10.0, K=2.0, m=8, samples=500, seed=0
    )
    assert rep.sigma_hat < 1
    assert rep.fractions == tuple(sorted(rep.fractions, reverse=True))


def test_balance_zero_samples_inconclusive():
    rep = mc_balance(
        hyperelliptic_permutation(2), zeta=10.0, K=2.0, m=3, samples=0, seed=0
    )
    assert rep.report.verdict == INCONCLUSIVE


# -- jacobian pushforward ---------------------------------------------------


def test_jacobian_identity_matches_volume_fraction():
    rep = mc_jacobian_pushforward(
        VisitationMatrix.identity(3), half_simplex(3), samples=20000, seed=1
    )
    assert rep.claim_bound == pytest.approx(0.5)
    assert rep.verdict == CONSISTENT


def test_jacobian_elementary_step():
    M = VisitationMatrix.elementary(3, winner=1, loser=2)
    rep = mc_jacobian_pushforward(M, half_simplex(3), samples=50000, seed=2)
    assert rep.verdict == CONSISTENT


def test_jacobian_degenerate_region():
    flat = half_simplex(3).vertices
    degenerate = (flat[0], flat[0], flat[2])
    from ietkit.analysis import SubSimplex

    with pytest.raises(DegeneracyError):
        mc_jacobian_pushforward(
            VisitationMatrix.identity(3), SubSimplex(degenerate), 100, 0
        )


# -- probability decay ------------------------------------------------------


def test_prob_decay_independent_matches_closed_form():
    rep = prob_decay_sim(0.3, "independent", N=60, samples=20000, seed=4)
    assert rep.report.verdict == CONSISTENT
    for emp, bound in zip(rep.window_probs, rep.window_bounds):
        assert emp <= bound + 3 * math.sqrt(bound * (1 - bound) / 20000) + 1e-9


def test_prob_decay_adversarial_respects_bound():
    rep = prob_decay_sim(0.3, "adversarial-markov", N=60, samples=20000, seed=5)
    assert rep.report.verdict == CONSISTENT
    assert rep.tau_hat < 1


def test_prob_decay_rho_domain():
    with pytest.raises(UsageError):
        prob_decay_sim(0.7, "independent", N=10, samples=10, seed=0)


# -- Birkhoff averages ------------------------------------------------------


def test_birkhoff_constant_observable_is_one():
    T = Iet.make(
        (Fraction(987, 1597), Fraction(610, 1597)), hyperelliptic_permutation(2)
    )
    av = birkhoff_separation(T, [Fraction(1, 7)], observable=Fraction(1), n=100)
    assert av[Fraction(1, 7)] == 1.0


def test_birkhoff_periodic_orbit_frequency():
    T = Iet.make((Fraction(2, 3), Fraction(1, 3)), hyperelliptic_permutation(2))
    av = birkhoff_separation(T, [Fraction(0)], observable=Fraction(2, 3), n=3)
    assert av[Fraction(0)] == pytest.approx(2 / 3)


def test_birkhoff_equidistribution_proxy():
    """A high-denominator golden-ratio approximant equidistributes at O(1/n)."""
    alpha = Fraction(4181, 6765)  # ratio of consecutive Fibonacci numbers
    T = Iet.make((1 - alpha, alpha), hyperelliptic_permutation(2))
    pts = [Fraction(k, 17) for k in range(1, 11)]
    av = birkhoff_separation(T, pts, observable=Fraction(1, 2), n=3000)
    values = list(av.values())
    assert max(values) - min(values) < 0.01
    assert abs(sum(values) / len(values) - 0.5) < 0.01


def test_limit_tower_points_separate(reference_run):
    T = reference_run.limit.representative.normalized()
    left, right = limit_tower_points(reference_run, T, horizon=10**4)
    assert len(left) == 5 and len(right) == 5
    av = birkhoff_separation(T, left + right, observable=Fraction(1, 2), n=10**4)
    left_vals = [av[p] for p in left]
    right_vals = [av[p] for p in right]
    gap = abs(
        sum(left_vals) / len(left_vals) - sum(right_vals) / len(right_vals)
    )
    spread = max(
        max(left_vals) - min(left_vals), max(right_vals) - min(right_vals)
    )
    assert gap > 10 * max(spread, 1e-12)


# -- Keane scans ------------------------------------------------------------


def test_keane_rational_rotation_collides():
    T = Iet.make((Fraction(1, 2), Fraction(1, 2)), hyperelliptic_permutation(2))
    rep = keane_check(T, 10)
    assert not rep.satisfied
    assert rep.collision == (0, 1)


def test_keane_random_rational_collides():
    T = Iet.make(
        (
            Fraction(509, 1009),
            Fraction(251, 1009),
            Fraction(151, 1009),
            Fraction(98, 1009),
        ),
        hyperelliptic_permutation(4),
    )
    rep = keane_check(T, 5000)
    assert not rep.satisfied
    assert rep.collision is not None


def test_keane_construction_candidate_survives(reference_run):
    T = reference_run.limit.representative.normalized()
    rep = keane_check(T, 1000)
    assert rep.satisfied


# -- nested families and dimension -----------------------------------------


def test_nested_family_rejects_escaping_child():
    outer = Polygon2D(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    escape = Polygon2D(np.array([[0.5, 0.5], [2.0, 0.5], [2.0, 2.0]]))
    with pytest.raises(UsageError):
        make_nested_family([[outer], [escape]], [[None], [0]])


def test_cantor_product_family_shape():
    fam = cantor_product_family(3)
    assert fam.depth == 4
    assert len(fam.levels[-1]) == 4**3
    for a in fam.a[1:]:
        assert a == pytest.approx(4 / 9)
    r_max = [r[0] for r in fam.radii]
    assert r_max == sorted(r_max, reverse=True)


def test_build_nested_family_nests(reference_run, reference_planes):
    families = build_nested_family(reference_run, reference_planes, planes=3, seed=3)
    assert len(families) == 3
    for nf in families:
        assert nf.depth == 3
        areas = [sum(p.area for p in lev) for lev in nf.levels]
        assert areas == sorted(areas, reverse=True)
        assert all(0 < a <= 1 for a in nf.a)
        r_max = [r[0] for r in nf.radii]
        assert r_max == sorted(r_max, reverse=True)


def _square_cell(i: int, j: int, n: int) -> Polygon2D:
    return Polygon2D(
        np.array(
            [
                [i / n, j / n],
                [(i + 1) / n, j / n],
                [(i + 1) / n, (j + 1) / n],
                [i / n, (j + 1) / n],
            ]
        )
    )


def test_frostman_uniform_subdivision_is_area_measure():
    """Full quadtree subdivision carries plain area measure: exponent 2.

    The ball-mass grid only spans the family's own diameter range, so the
    planar scaling needs several levels of range to show up.
    """
    levels = []
    parents = []
    for depth in range(6):
        n = 2**depth
        levels.append([_square_cell(i, j, n) for i in range(n) for j in range(n)])
        if depth == 0:
            parents.append([None])
        else:
            parents.append(
                [
                    (i // 2) * (n // 2) + (j // 2)
                    for i in range(n)
                    for j in range(n)
                ]
            )
    fam = make_nested_family(levels, parents)
    fro = frostman_measure(fam)
    assert all(a == pytest.approx(1.0) for a in fam.a)
    assert fro.exponent == pytest.approx(2.0, abs=0.2)


def test_frostman_cantor_product_exponent():
    fam = cantor_product_family(6)
    fro = frostman_measure(fam)
    assert fro.exponent == pytest.approx(2 * math.log(2) / math.log(3), abs=0.05)


def test_frostman_sibling_weights_sum_to_parent():
    fam = cantor_product_family(3)
    fro = frostman_measure(fam)
    for lv in range(1, fam.depth):
        sums: dict[int, float] = {}
        for w, par in zip(fro.weights[lv], fam.parents[lv]):
            sums[par] = sums.get(par, 0.0) + w
        for par, total in sums.items():
            assert total == pytest.approx(fro.weights[lv - 1][par])


def test_box_dimension_segment_and_square():
    seg = (np.linspace(0, 1, 2048, endpoint=False) + 0.5 / 2048).reshape(-1, 1)
    fit = box_dimension(seg, [2.0**-k for k in range(1, 10)])
    assert fit.estimate == pytest.approx(1.0, abs=0.02)
    g = np.linspace(0, 1, 64, endpoint=False) + 0.5 / 64
    square = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
    fit = box_dimension(square, [2.0**-k for k in range(1, 6)])
    assert fit.estimate == pytest.approx(2.0, abs=0.02)


def cantor_midpoints(k: int) -> np.ndarray:
    pts = [0.0]
    for _ in range(k):
        pts = [p / 3 for p in pts] + [2 / 3 + p / 3 for p in pts]
    return np.array([p + 0.5 * 3.0**-k for p in pts])


def test_box_dimension_cantor():
    fit = box_dimension(
        cantor_midpoints(10).reshape(-1, 1), [3.0**-k for k in range(1, 10)]
    )
    assert fit.estimate == pytest.approx(math.log(2) / math.log(3), abs=0.02)


def test_box_dimension_needs_two_scales():
    with pytest.raises(UsageError):
        box_dimension(np.zeros((5, 1)), [10.0])


# -- illumination -----------------------------------------------------------


def test_illumination_stage_one(reference_run):
    rep = illumination_proportion(reference_run, stage=1, c=0.5, samples=200, seed=0)
    assert 0.0 <= rep.estimate <= 1.0
    assert rep.samples == 200
    assert "survival_fraction" in rep.extras
    assert rep.extras["t_k"] < 1


def test_illumination_slice_domain(reference_run):
    with pytest.raises(UsageError):
        illumination_proportion(reference_run, stage=1, c=0.95, samples=10, seed=0)
