"""Phase-diagram scans, boundary tracing, and path safety."""

import math

import numpy as np
import pytest

from pspin_aff.meanfield import INFINITE, PhaseLabel, pinf_ff_boundary
from pspin_aff.phasediagram import (
    KIND_F_F_FIRST,
    KIND_QP_F_FIRST,
    KIND_QP_F_SECOND,
    AnnealPath,
    PhaseDiagram,
    path_is_safe,
    scan,
)


@pytest.fixture(scope="module")
def diagram_p5() -> PhaseDiagram:
    return scan(5, s_res=81, lam_res=81)


@pytest.fixture(scope="module")
def diagram_p11() -> PhaseDiagram:
    return scan(11, s_res=81, lam_res=81)


@pytest.fixture(scope="module")
def diagram_pinf() -> PhaseDiagram:
    return scan(INFINITE, s_res=201, lam_res=201)


def _kinds(diagram: PhaseDiagram) -> set:
    return {seg.kind for seg in diagram.boundaries}


def test_p5_has_second_order_segment_reaching_small_lambda(diagram_p5):
    seconds = [s for s in diagram_p5.boundaries if s.kind == KIND_QP_F_SECOND]
    assert seconds
    pts = [q for seg in seconds for q in seg.points]
    min_lam = min(lam for _, lam in pts)
    assert min_lam <= 0.05
    # the second-order boundary tracks s = 1/(3 - 2 lambda)
    for s, lam in pts:
        if lam <= 0.25:
            assert s == pytest.approx(1.0 / (3.0 - 2.0 * lam), abs=5e-3)


def test_p5_and_p11_have_ff_segments(diagram_p5, diagram_p11):
    assert KIND_F_F_FIRST in _kinds(diagram_p5)
    assert KIND_F_F_FIRST in _kinds(diagram_p11)


def test_lambda_zero_axis_single_second_order(diagram_p5, diagram_p11):
    for diagram in (diagram_p5, diagram_p11):
        row = diagram.phase_code[0]  # lambda = 0
        labels = [diagram.phase_at(0, i) for i in range(diagram.s_values.size)]
        changes = [
            (diagram.s_values[i], labels[i], labels[i + 1])
            for i in range(len(labels) - 1)
            if labels[i] != labels[i + 1] and labels[i + 1] is not None
        ]
        transitions = [c for c in changes if c[1] is PhaseLabel.QP]
        assert len(transitions) == 1
        s_c = transitions[0][0]
        assert abs(s_c - 1.0 / 3.0) <= 2.0 / (diagram.s_values.size - 1)


def test_boundary_points_separate_distinct_cells(diagram_p11):
    grid_step = diagram_p11.s_values[1] - diagram_p11.s_values[0]
    for seg in diagram_p11.boundaries:
        for s, lam in seg.points[:: max(1, len(seg.points) // 10)]:
            i_lam = int(np.argmin(np.abs(diagram_p11.lam_values - lam)))
            i_lo = int(np.clip(np.searchsorted(diagram_p11.s_values, s) - 1, 0, None))
            i_hi = min(i_lo + 1, diagram_p11.s_values.size - 1)
            same_label = diagram_p11.phase_code[i_lam, i_lo] == diagram_p11.phase_code[i_lam, i_hi]
            dm = max(
                abs(diagram_p11.mz[i_lam, i_lo] - diagram_p11.mz[i_lam, i_hi]),
                abs(diagram_p11.mx[i_lam, i_lo] - diagram_p11.mx[i_lam, i_hi]),
            )
            assert (not same_label) or dm > 1e-3 or not (
                diagram_p11.converged[i_lam, i_lo] and diagram_p11.converged[i_lam, i_hi]
            )


def test_pinf_boundaries_match_closed_forms(diagram_pinf):
    tol = 2.5 / (diagram_pinf.s_values.size - 1)
    for seg in diagram_pinf.boundaries:
        for s, lam in seg.points:
            if seg.kind == KIND_QP_F_SECOND:
                assert lam <= 0.5 + tol
                assert s == pytest.approx(1.0 / (3.0 - 2.0 * lam), abs=tol)
            elif seg.kind == KIND_QP_F_FIRST:
                assert lam >= 0.5 - tol
                assert s == pytest.approx(0.5, abs=tol)
            else:
                assert 0.0 < lam <= 0.5 + tol
                assert s == pytest.approx(pinf_ff_boundary(max(lam, 1e-9)), abs=tol)


def test_safe_path_p5_lambda01(diagram_p5):
    path = AnnealPath.constant_lambda(0.1)
    report = path_is_safe(5, path, diagram_p5)
    assert report.safe
    assert not report.on_lambda_zero


def test_unsafe_path_p11_lambda03(diagram_p11):
    path = AnnealPath.constant_lambda(0.3)
    report = path_is_safe(11, path, diagram_p11)
    assert not report.safe
    kinds = {kind for kind, _ in report.crossings}
    assert KIND_F_F_FIRST in kinds
    ff = [pt for kind, pt in report.crossings if kind == KIND_F_F_FIRST]
    assert any(abs(s - 0.4701) < 0.01 for s, _ in ff)


def test_pinf_every_standard_path_unsafe(diagram_pinf):
    for lam0 in (0.05, 0.1, 0.3, 0.5, 0.9):
        path = AnnealPath.constant_lambda(lam0)
        assert not path_is_safe(INFINITE, path, diagram_pinf).safe
    zigzag = AnnealPath.from_pairs(
        [(0.0, 0.02), (0.8, 0.02), (0.8, 0.95), (1.0, 1.0)]
    )
    assert not path_is_safe(INFINITE, zigzag, diagram_pinf).safe


def test_lambda_zero_portion_flagged(diagram_p5):
    path = AnnealPath.from_pairs([(0.0, 0.0), (0.9, 0.0), (1.0, 1.0)])
    report = path_is_safe(5, path, diagram_p5)
    assert report.on_lambda_zero


def test_path_validation(diagram_p5):
    with pytest.raises(ValueError):
        path_is_safe(7, AnnealPath.constant_lambda(0.1), diagram_p5)


def test_path_point_interpolation():
    path = AnnealPath.constant_lambda(0.1)
    start = path.point_at(0.0)
    end = path.point_at(1.0)
    assert (start.s, start.lam) == (0.0, 0.1)
    assert (end.s, end.lam) == (1.0, 1.0)
    assert path.is_standard
    mid = path.point_at(0.25)
    assert mid.lam == pytest.approx(0.1)
    lengths = path.arc_lengths()
    assert lengths[-1] == pytest.approx(0.99 + math.hypot(0.01, 0.9))


def test_scan_rejects_tiny_grids():
    with pytest.raises(ValueError):
        scan(5, s_res=1, lam_res=10)
