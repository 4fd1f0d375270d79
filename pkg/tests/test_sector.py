"""Operator construction in the maximal-spin sector vs the 2^N oracle."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pspin_aff.meanfield import SchedulePoint
from pspin_aff.sector import (
    BandedSymmetricOperator,
    ModelParams,
    SectorBasis,
    assemble,
    build_h0,
    build_vaff,
    build_vtf,
    combine,
)

from oracles import full_spectrum


def test_basis_dim_and_m_values():
    b = SectorBasis(4)
    assert b.dim == 5
    assert np.array_equal(b.m_values(), [-4, -2, 0, 2, 4])


def test_basis_rejects_zero_spins():
    with pytest.raises(ValueError):
        SectorBasis(0)


def test_h0_n2_p3_diagonal():
    op = build_h0(SectorBasis(2), 3)
    assert op.half_bandwidth == 0
    np.testing.assert_allclose(op.diag, [2.0, 0.0, -2.0], atol=1e-15)


def test_h0_n1_p1_diagonal():
    op = build_h0(SectorBasis(1), 1)
    np.testing.assert_allclose(op.diag, [1.0, -1.0], atol=1e-15)


def test_h0_n4_p3_single_entry():
    op = build_h0(SectorBasis(4), 3)
    assert op.diag[3] == pytest.approx(-0.5, abs=1e-15)


def test_h0_rejects_bad_p():
    with pytest.raises(ValueError):
        build_h0(SectorBasis(3), 0)


def test_vtf_single_spin_is_minus_sigma_x():
    op = build_vtf(SectorBasis(1))
    np.testing.assert_allclose(op.to_dense(), [[0, -1], [-1, 0]], atol=1e-15)


def test_vtf_n2_superdiagonal():
    op = build_vtf(SectorBasis(2))
    np.testing.assert_allclose(op.super1, [-np.sqrt(2), -np.sqrt(2)], atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 7, 16])
def test_vtf_ground_energy_is_minus_n(n):
    w = np.linalg.eigvalsh(build_vtf(SectorBasis(n)).to_dense())
    assert w[0] == pytest.approx(-n, abs=1e-12)


def test_vaff_n2_matrix():
    op = build_vaff(SectorBasis(2))
    expected = [[1, 0, 1], [0, 2, 0], [1, 0, 1]]
    np.testing.assert_allclose(op.to_dense(), expected, atol=1e-14)


def test_vaff_single_spin_is_identity():
    op = build_vaff(SectorBasis(1))
    np.testing.assert_allclose(op.to_dense(), np.eye(2), atol=1e-15)


@pytest.mark.parametrize("n", [1, 2, 5, 12, 40])
def test_vaff_positive_semidefinite(n):
    w = np.linalg.eigvalsh(build_vaff(SectorBasis(n)).to_dense())
    assert w.min() >= -1e-10


def test_assemble_boundaries_match_constituents():
    basis = SectorBasis(6)
    at_s0 = assemble(basis, 3, SchedulePoint(0.0, 0.7))
    np.testing.assert_array_equal(at_s0.to_dense(), build_vtf(basis).to_dense())
    at_target = assemble(basis, 3, SchedulePoint(1.0, 1.0))
    np.testing.assert_array_equal(at_target.to_dense(), build_h0(basis, 3).to_dense())


def test_assemble_rejects_out_of_range():
    with pytest.raises(ValueError):
        assemble(SectorBasis(2), 3, type("P", (), {"s": 1.2, "lam": 0.0})())


@pytest.mark.parametrize("n,p", [(2, 3), (3, 3), (4, 5), (6, 3), (8, 7)])
def test_sector_spectrum_within_full_spectrum(n, p):
    rng = np.random.default_rng(n * 100 + p)
    s, lam = rng.uniform(size=2)
    sector = np.linalg.eigvalsh(assemble(SectorBasis(n), p, SchedulePoint(s, lam)).to_dense())
    full = full_spectrum(n, p, s, lam)
    for e in sector:
        assert np.min(np.abs(full - e)) < 1e-9


def test_ground_state_at_target_is_all_up_for_odd_p():
    for n in (3, 8, 13):
        op = assemble(SectorBasis(n), 5, SchedulePoint(1.0, 1.0))
        w, v = np.linalg.eigh(op.to_dense())
        assert w[0] == pytest.approx(-n, abs=1e-12)
        assert np.argmax(np.abs(v[:, 0])) == n


@given(
    n=st.integers(min_value=1, max_value=8),
    p=st.integers(min_value=1, max_value=7),
    s=st.floats(min_value=0.0, max_value=1.0),
    lam=st.floats(min_value=0.0, max_value=1.0),
)
@settings(max_examples=40, deadline=None)
def test_sector_eigenvalues_subset_of_full(n, p, s, lam):
    sector = np.linalg.eigvalsh(
        assemble(SectorBasis(n), p, SchedulePoint(s, lam)).to_dense()
    )
    full = full_spectrum(n, p, s, lam)
    assert max(np.min(np.abs(full - e)) for e in sector) < 1e-9


@given(
    n=st.integers(min_value=2, max_value=30),
    c0=st.floats(min_value=-2, max_value=2),
    c1=st.floats(min_value=-2, max_value=2),
    c2=st.floats(min_value=-2, max_value=2),
)
@settings(max_examples=30, deadline=None)
def test_band_combination_is_symmetric_and_banded(n, c0, c1, c2):
    basis = SectorBasis(n)
    op = combine(
        [(c0, build_h0(basis, 3)), (c1, build_vtf(basis)), (c2, build_vaff(basis))]
    )
    dense = op.to_dense()
    assert np.array_equal(dense, dense.T)
    for i in range(n + 1):
        for j in range(n + 1):
            if abs(i - j) > 2:
                assert dense[i, j] == 0.0


def test_banded_operator_validation():
    with pytest.raises(ValueError):
        BandedSymmetricOperator(3, np.array([1.0, np.inf, 0.0]))
    with pytest.raises(ValueError):
        BandedSymmetricOperator(3, np.zeros(2))


def test_banded_matvec_matches_dense():
    basis = SectorBasis(9)
    op = assemble(basis, 3, SchedulePoint(0.4, 0.6))
    rng = np.random.default_rng(7)
    v = rng.normal(size=basis.dim)
    np.testing.assert_allclose(op.matvec(v), op.to_dense() @ v, atol=1e-12)


def test_entries_cover_both_triangles():
    op = assemble(SectorBasis(2), 3, SchedulePoint(1.0, 1.0))
    entries = {(i, j): val for i, j, val in op.entries()}
    assert entries[(0, 0)] == pytest.approx(2.0)
    assert entries[(1, 1)] == pytest.approx(0.0)
    assert entries[(2, 2)] == pytest.approx(-2.0)
    assert (0, 2) in entries and (2, 0) in entries


def test_model_params_flags_even_p():
    assert ModelParams(4, 10).outside_mean_field_scope
    assert not ModelParams(5, 10).outside_mean_field_scope
    with pytest.raises(ValueError):
        ModelParams(2, 10)
