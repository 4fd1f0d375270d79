"""Mean-field free energies, saddle solver, classification, transitions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pspin_aff.errors import DomainError
from pspin_aff.meanfield import (
    INFINITE,
    Magnetization,
    PhaseLabel,
    SchedulePoint,
    classify_grid,
    classify_phase,
    detect_jump,
    enumerate_solutions,
    f_qp,
    f_qp2,
    free_energy,
    pinf_ff_boundary,
    pinf_free_energies,
    pinf_second_order_boundary,
    qp2_magnetization,
    solve_saddle,
)

import oracles


# ---------------------------------------------------------------------------
# free energy
# ---------------------------------------------------------------------------


def test_t0_free_energy_matches_qp_closed_form():
    pt = SchedulePoint(0.2, 0.1)
    f = free_energy(3, pt, Magnetization(0.0, 1.0))
    assert f == pytest.approx(-0.62, abs=1e-15)
    assert f == pytest.approx(f_qp(pt), abs=1e-15)


def test_t0_free_energy_pure_target():
    f = free_energy(3, SchedulePoint(1.0, 1.0), Magnetization(1.0, 0.0))
    assert f == pytest.approx(-1.0, abs=1e-15)


def test_finite_beta_free_spin():
    f = free_energy(5, SchedulePoint(0.0, 0.3), Magnetization(0.0, 0.4), beta=1.0)
    assert f == pytest.approx(-math.log(2.0 * math.cosh(1.0)), abs=1e-14)


def test_finite_beta_requires_positive_beta():
    with pytest.raises(ValueError):
        free_energy(3, SchedulePoint(0.5, 0.5), Magnetization(0.0, 1.0), beta=-2.0)


@given(
    p=st.sampled_from([3, 5, 7, 11]),
    s=st.floats(0.0, 1.0),
    lam=st.floats(0.0, 1.0),
    mz=st.floats(0.0, 1.0),
    mx=st.floats(-1.0, 1.0),
)
@settings(max_examples=80, deadline=None)
def test_large_beta_approaches_t0_form(p, s, lam, mz, mx):
    pt = SchedulePoint(s, lam)
    m = Magnetization(mz, mx)
    assert free_energy(p, pt, m, beta=1e8) == pytest.approx(
        free_energy(p, pt, m), abs=1e-7
    )


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def test_f_qp_values():
    assert f_qp(SchedulePoint(1.0 / 3.0, 0.0)) == pytest.approx(-1.0 / 3.0, abs=1e-15)
    assert f_qp(SchedulePoint(0.0, 0.8)) == pytest.approx(-1.0, abs=1e-15)
    assert f_qp(SchedulePoint(0.2, 0.5)) == pytest.approx(-0.7, abs=1e-15)


def test_f_qp_domain_error():
    with pytest.raises(DomainError):
        f_qp(SchedulePoint(0.5, 0.0))  # edge is 1/3


def test_f_qp2_value_and_edge_contact():
    assert f_qp2(SchedulePoint(0.5, 0.5)) == pytest.approx(-0.25, abs=1e-15)
    lam = 0.3
    edge = 1.0 / (3.0 - 2.0 * lam)
    assert edge == pytest.approx(0.4167, abs=1e-4)
    m = qp2_magnetization(SchedulePoint(edge, lam))
    assert m.mx == pytest.approx(1.0, abs=1e-12)
    assert f_qp2(SchedulePoint(edge, lam)) == pytest.approx(
        f_qp(SchedulePoint(edge - 1e-12, lam)), abs=1e-9
    )


def test_f_qp2_domain_errors():
    with pytest.raises(DomainError):
        f_qp2(SchedulePoint(0.2, 0.1))  # below the domain
    with pytest.raises(DomainError):
        f_qp2(SchedulePoint(1.0, 0.1))  # open at s = 1
    with pytest.raises(DomainError):
        f_qp2(SchedulePoint(0.9, 1.0))  # lambda = 1 disabled


# ---------------------------------------------------------------------------
# solve_saddle
# ---------------------------------------------------------------------------


def test_solver_finds_qp_fixed_point_immediately():
    sol = solve_saddle(3, SchedulePoint(0.2, 0.1), (0.0, 1.0))
    assert sol.converged
    assert sol.phase is PhaseLabel.QP
    assert sol.mz == 0.0
    assert sol.mx == pytest.approx(1.0, abs=1e-15)


def test_solver_pure_ferromagnet_corner():
    sol = solve_saddle(3, SchedulePoint(1.0, 1.0), (0.9, 0.1))
    assert sol.converged
    assert sol.mz == pytest.approx(1.0, abs=1e-12)
    assert sol.mx == pytest.approx(0.0, abs=1e-12)
    assert sol.free_energy == pytest.approx(-1.0, abs=1e-12)


def test_solver_rejects_bad_seed():
    with pytest.raises(ValueError):
        solve_saddle(3, SchedulePoint(0.5, 0.5), (1.5, 0.0))


def test_solver_polishes_enumerated_f_root():
    pt = SchedulePoint(0.45, 0.1)
    f_branch = [q for q in enumerate_solutions(5, pt) if q.phase is PhaseLabel.F]
    sol = solve_saddle(5, pt, (f_branch[0].mz, f_branch[0].mx))
    assert sol.converged
    assert sol.mz == pytest.approx(0.805187486800, abs=1e-9)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def test_minimum_f_solution_is_ferromagnetic():
    # frozen from the Newton multistart oracle
    sol = classify_phase(5, SchedulePoint(0.45, 0.1))
    assert sol.phase is PhaseLabel.F
    assert sol.mz == pytest.approx(0.805187486800, abs=1e-9)
    assert sol.mx == pytest.approx(0.593020329416, abs=1e-9)
    assert sol.free_energy == pytest.approx(-0.198963490369, abs=1e-11)


def test_classify_examples():
    assert classify_phase(11, SchedulePoint(0.50, 0.3)).phase is PhaseLabel.F
    assert classify_phase(5, SchedulePoint(0.20, 0.1)).phase is PhaseLabel.QP


def test_classify_lambda_zero_flag():
    sol = classify_phase(7, SchedulePoint(0.2, 0.0))
    assert "lambda_zero_no_fluctuations" in sol.flags


def test_classify_even_p_flag():
    sol = classify_phase(4, SchedulePoint(0.2, 0.5))
    assert "even_p_outside_scope" in sol.flags


def test_enumerated_solutions_satisfy_circle_identity():
    for (p, s, lam) in [(3, 0.3545, 0.1), (5, 0.45, 0.1), (11, 0.46, 0.3), (7, 0.8, 0.6)]:
        for sol in enumerate_solutions(p, SchedulePoint(s, lam)):
            if sol.phase is PhaseLabel.QP2:
                continue  # singular limit point, off the unit circle
            assert abs(sol.mz**2 + sol.mx**2 - 1.0) < 1e-8
            assert sol.residual < 1e-12


def test_qp_candidate_consistency_across_domain():
    rng = np.random.default_rng(3)
    for _ in range(200):
        lam = rng.uniform(0.0, 1.0)
        s = rng.uniform(0.0, 1.0 / (3.0 - 2.0 * lam) * 0.999)
        pt = SchedulePoint(s, lam)
        sols = enumerate_solutions(5, pt)
        qp = [q for q in sols if q.phase is PhaseLabel.QP]
        assert len(qp) == 1
        assert qp[0].residual < 1e-12
        assert qp[0].free_energy == pytest.approx(-s * lam + 2 * s - 1, abs=1e-12)
        assert all(q.mx > -1.0 for q in sols)  # mx = -1 never a solution


def test_classification_minimizes_over_candidates():
    rng = np.random.default_rng(11)
    for _ in range(50):
        p = int(rng.choice([3, 5, 7, 11]))
        s, lam = rng.uniform(0.01, 0.99, size=2)
        pt = SchedulePoint(s, lam)
        win = classify_phase(p, pt)
        for sol in enumerate_solutions(p, pt):
            assert win.free_energy <= sol.free_energy + 1e-11


def test_qp2_suppressed_at_finite_p():
    for p in (3, 5, 11, 21):
        lams = np.linspace(0.0, 0.98, 50)
        for lam in lams:
            edge = 1.0 / (3.0 - 2.0 * lam)
            ss = np.linspace(edge, 0.9999, 51)[:50]
            g = classify_grid(p, ss, np.full(ss.shape, lam))
            fq2 = -((1.0 - ss) ** 2) / (4.0 * ss * (1.0 - lam))
            assert np.max(g.f - fq2) <= 1e-10


def test_oracle_equivalence_on_random_parameters():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(100):
        p = int(rng.choice([3, 5, 7, 11]))
        s = rng.uniform(0.02, 0.98)
        lam = rng.uniform(0.0, 0.98)
        mz_o, mx_o, f_o = oracles.t0_stable_solution(p, s, lam)
        win = classify_phase(p, SchedulePoint(s, lam))
        assert win.free_energy == pytest.approx(f_o, abs=1e-8)
        assert win.mz == pytest.approx(mz_o, abs=1e-6)
        assert win.mx == pytest.approx(mx_o, abs=1e-6)
        checked += 1
    assert checked == 100


def test_finite_beta_matches_t0_at_large_beta():
    for (p, s, lam) in [(3, 0.2, 0.1), (5, 0.45, 0.1), (11, 0.5, 0.3), (5, 0.8, 0.7)]:
        cold = classify_phase(p, SchedulePoint(s, lam), beta=1e4)
        t0 = classify_phase(p, SchedulePoint(s, lam))
        assert cold.converged
        assert cold.mz == pytest.approx(t0.mz, abs=1e-3)
        assert cold.mx == pytest.approx(t0.mx, abs=1e-3)


# ---------------------------------------------------------------------------
# transition detection
# ---------------------------------------------------------------------------


def test_second_order_only_slice_p5():
    ts = detect_jump(5, 0.1, np.linspace(0.0, 0.9, 901))
    assert len(ts) == 1
    assert ts[0].order == 2
    assert ts[0].s == pytest.approx(1.0 / 2.8, abs=1e-5)


def test_first_order_slice_p3():
    ts = detect_jump(3, 0.1, np.linspace(0.0, 0.6, 601))
    assert len(ts) == 1
    assert ts[0].order == 1
    assert ts[0].s == pytest.approx(0.3544, abs=1e-3)
    assert abs(ts[0].delta_mz) > 0.1  # sizable mz jump despite "small" mx jump


def test_two_transitions_p11_lam03():
    ts = detect_jump(11, 0.3, np.linspace(0.0, 0.7, 701))
    assert [t.order for t in ts] == [2, 1]
    assert ts[0].s == pytest.approx(1.0 / 2.4, abs=1e-4)
    assert ts[1].s == pytest.approx(0.4701, abs=2e-3)
    assert ts[1].left_phase is PhaseLabel.F and ts[1].right_phase is PhaseLabel.F


@pytest.mark.parametrize("p", [3, 5, 11, 21])
def test_lambda_zero_single_second_order_transition(p):
    ts = detect_jump(p, 0.0, np.linspace(0.0, 0.9, 301))
    assert len(ts) == 1
    assert ts[0].order == 2
    assert ts[0].s == pytest.approx(1.0 / 3.0, abs=1e-4)
    assert "lambda_zero_no_fluctuations" in ts[0].flags


def test_detect_jump_validates_grid():
    with pytest.raises(ValueError):
        detect_jump(3, 0.1, np.array([0.2, 0.2, 0.3]))
    with pytest.raises(ValueError):
        detect_jump(3, 0.1, np.array([0.5, 1.0]))


# ---------------------------------------------------------------------------
# p -> infinity closed forms
# ---------------------------------------------------------------------------


def test_pinf_ff_boundary_value():
    assert pinf_ff_boundary(0.75) == pytest.approx(
        (1.0 - 2.0 * math.sqrt(3.0 / 16.0)) / 0.25, abs=1e-12
    )
    assert pinf_ff_boundary(0.75) == pytest.approx(0.5359, abs=1e-4)


def test_pinf_boundary_laws():
    for lam in (0.0, 0.2, 0.5):
        assert pinf_second_order_boundary(lam) == pytest.approx(
            1.0 / (3.0 - 2.0 * lam), abs=1e-15
        )
    fe = pinf_free_energies(SchedulePoint(0.6, 0.8))
    assert fe.qp_valid and fe.f_valid and not fe.qp2_valid
    assert fe.f_f < fe.f_qp  # QP metastable beyond s = 1/2 at lambda > 1/2
    # QP-F first-order boundary at s = 1/2 for lambda > 1/2
    just_left = classify_phase(INFINITE, SchedulePoint(0.499, 0.8))
    just_right = classify_phase(INFINITE, SchedulePoint(0.501, 0.8))
    assert just_left.phase is PhaseLabel.QP
    assert just_right.phase is PhaseLabel.F and just_right.branch == "upper"


def test_pinf_lower_branch_magnetization():
    pt = SchedulePoint(0.55, 0.2)
    fe = pinf_free_energies(pt)
    assert fe.qp2_valid
    mx2 = (1.0 - 0.55) / (2.0 * 0.55 * 0.8)
    assert fe.mz_lower_f == pytest.approx(math.sqrt(1.0 - mx2**2), abs=1e-12)
    assert fe.f_qp2 == pytest.approx(-((1 - 0.55) ** 2) / (4 * 0.55 * 0.8), abs=1e-15)


def test_pinf_slice_transitions():
    ts = detect_jump(INFINITE, 0.3, np.linspace(0.0, 0.9, 901))
    assert [t.order for t in ts] == [2, 1]
    assert ts[0].s == pytest.approx(1.0 / 2.4, abs=1e-5)
    assert ts[1].s == pytest.approx(pinf_ff_boundary(0.3), abs=1e-5)
    ts = detect_jump(INFINITE, 0.75, np.linspace(0.0, 0.9, 901))
    assert [t.order for t in ts] == [1]
    assert ts[0].s == pytest.approx(0.5, abs=1e-5)
