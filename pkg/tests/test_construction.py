"""Staged path generation, schedules, and the per-stage conditions."""
from __future__ import annotations

import math
from random import Random

import pytest

from ietkit.construction import (
    ExponentScale,
    FREEDOM_LHS,
    RESTRICTION_LHS,
    check_condition_double_star,
    check_conditions_star,
    check_nue_angles,
    check_size_recursions,
    gen_freedom_lhs,
    gen_restriction_rhs,
    gen_transition,
    hyperplane_avoiding_paths,
    make_schedule,
    run_construction,
    validate_phase,
)
from ietkit.errors import ScheduleOverflowError, UsageError
from ietkit.perm import hyperelliptic_permutation, special_permutations


@pytest.fixture(scope="module")
def reference_run():
    schedule = make_schedule(1, ExponentScale.linear(), stages=3)
    return run_construction(4, schedule, seed=11)


def test_schedule_windows_monotone():
    s = make_schedule(1, ExponentScale.linear(), stages=4)
    for attr in ("Aprime", "B", "Bprime"):
        lows = [getattr(s.stage(k), attr).lo_exp for k in range(1, 5)]
        assert lows == sorted(lows)
    assert all(s.stage(k).t < 1 for k in range(1, 5))


def test_schedule_needs_a_stage():
    with pytest.raises(UsageError):
        make_schedule(1, ExponentScale.linear(), stages=0)


def test_unscaled_powers_overflow_numeric_windows():
    s = make_schedule(1, ExponentScale.tower(), stages=1)
    with pytest.raises(ScheduleOverflowError):
        _ = s.stage(1).s


def test_run_is_deterministic(reference_run):
    schedule = make_schedule(1, ExponentScale.linear(), stages=3)
    again = run_construction(4, schedule, seed=11)
    assert again.cumulative == reference_run.cumulative
    other = run_construction(4, schedule, seed=12)
    assert other.cumulative != reference_run.cumulative


def test_all_phases_pass_grammar_scans(reference_run):
    for st in reference_run.stages:
        for name, phase in st.phases.items():
            if phase is None:
                continue
            assert validate_phase(phase) == [], f"stage {st.k} phase {name}"


def test_conditions_star(reference_run):
    for rep in check_conditions_star(reference_run):
        if rep.c1_pass is not None:
            assert rep.c1_pass
        assert rep.c2_pass
        assert rep.c3_pass
        assert rep.c4_pass
        assert rep.c4_ratio <= 2.0


def test_condition_double_star(reference_run):
    for rep in check_condition_double_star(reference_run):
        if rep.lhs_pass is not None:
            assert rep.lhs_pass
        assert rep.rhs_pass


def test_size_recursion_upper_bounds(reference_run):
    reports = check_size_recursions(reference_run)
    assert len(reports) == 2
    for rep in reports:
        assert rep.upper_pass
        assert rep.measured_U <= rep.upper_bound


def test_within_stage_angle_monotonicity(reference_run):
    for rep in check_nue_angles(reference_run):
        assert rep.lhs_monotone, rep
        assert rep.rhs_monotone, rep


def test_contamination_ratio_decreases(reference_run):
    """The opposite-side contamination V_k/u_{k+1} shrinks stage over stage."""
    stats = [st.stats for st in reference_run.stages]
    ratios = [
        float(stats[i]["V"]) / float(stats[i + 1]["u"])
        for i in range(len(stats) - 1)
    ]
    assert all(r1 > r2 for r1, r2 in zip(ratios, ratios[1:])) or len(ratios) < 2
    assert all(r < 1 for r in ratios)


def test_limit_cluster_geometry(reference_run):
    lim = reference_run.limit
    assert lim.intra_lhs < 1e-3
    assert lim.intra_rhs < 1e-3
    assert lim.inter > 0.5
    assert sum(lim.representative.lengths) == 1


def test_freedom_lhs_shape():
    pi_l, _, _ = special_permutations(4)
    s = make_schedule(1, ExponentScale.linear(), stages=2)
    phase = gen_freedom_lhs(pi_l, s.stage(2).A, Random(0))
    assert phase.phase == FREEDOM_LHS
    assert phase.runs[0][0] == 1  # symbol 1 wins first
    assert phase.end == hyperelliptic_permutation(4)
    assert all(w <= 2 for w in phase.winners())


def test_restriction_lhs_leaves_last_columns(reference_run):
    d = 4
    for st in reference_run.stages:
        phase = st.phases["Aprime"]
        assert phase.phase == RESTRICTION_LHS
        M = phase.matrix
        # row 1 of the product is (1, 0, ..., 0) and the last two columns
        # are untouched: symbol 1 never wins, d-1 and d are never compared
        assert M.rows[0] == (1, 0, 0, 0)
        for j in (d - 1, d):
            col = M.column(j)
            assert col == tuple(1 if i == j - 1 else 0 for i in range(d))


def test_transition_avoids_restriction_entry():
    pi_l, _, _ = special_permutations(4)
    phase = gen_transition(pi_l, Random(3))
    assert phase.end == hyperelliptic_permutation(4)
    # intermediate vertices never revisit the restriction entry point
    assert pi_l not in [e.target for e in _edges_of(phase)][:-1]


def _edges_of(phase):
    from ietkit.induction import drive_path

    sides = []
    for winner, loser, side, count in phase.runs:
        sides.extend([side] * count)
    _, _, edges = drive_path(phase.start, sides)
    return edges


def test_restriction_rhs_window_enforced():
    s = make_schedule(1, ExponentScale.linear(), stages=1)
    pi_s = hyperelliptic_permutation(4)
    w = s.stage(1)
    with pytest.raises(UsageError):
        gen_restriction_rhs(pi_s, ell=w.s * 3, stage=w)


def test_avoiding_path_first_vertex_half():
    phase = hyperplane_avoiding_paths(4, 1)
    M = phase.matrix
    for j in range(1, 5):
        col = M.column(j)
        assert col[0] * 2 >= sum(col)  # first coordinate of the vertex >= 1/2


@pytest.mark.parametrize("d,i", [(4, 2), (5, 2), (5, 3), (6, 4)])
def test_avoiding_path_hugs_target_vertex(d, i):
    eps0 = 0.1
    phase = hyperplane_avoiding_paths(d, i, eps0=eps0)
    M = phase.matrix
    for j in range(1, d - 1):
        col = M.column(j)
        total = sum(col)
        dist = math.sqrt(
            sum(
                (col[r] / total - (1.0 if r == i - 1 else 0.0)) ** 2
                for r in range(d)
            )
        )
        assert dist <= eps0
    assert phase.end == hyperelliptic_permutation(d)
