"""Full (s, lambda) phase diagrams and annealing-path safety checks.

A diagram is a grid of stable-phase classifications plus boundary
polylines traced between cells with differing labels or magnetization
jumps.  Boundary points are refined by bisection along grid edges; the
transition order is decided by the refined magnetization step, mirroring
:func:`pspin_aff.meanfield.detect_jump`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pspin_aff.meanfield import (
    INFINITE,
    GridClassification,
    PhaseLabel,
    SchedulePoint,
    classify_grid,
    classify_phase,
)

__all__ = [
    "AnnealPath",
    "BoundarySegment",
    "PathSafety",
    "PhaseDiagram",
    "scan",
    "path_is_safe",
]

#: Boundary kinds, keyed by (mz zero on one side?, order).
KIND_QP_F_SECOND = "qp_f_second_order"
KIND_QP_F_FIRST = "qp_f_first_order"
KIND_F_F_FIRST = "f_f_first_order"

_FIRST_ORDER_KINDS = frozenset({KIND_QP_F_FIRST, KIND_F_F_FIRST})


@dataclass(frozen=True)
class BoundarySegment:
    """A polyline of refined boundary points sharing one transition kind."""

    kind: str
    order: int
    points: tuple[tuple[float, float], ...]  # (s, lambda) pairs

    @property
    def first_order(self) -> bool:
        return self.order == 1


@dataclass(frozen=True)
class PhaseDiagram:
    """Grid classification plus traced boundaries for one value of p."""

    p: object  # int or math.inf
    s_values: np.ndarray
    lam_values: np.ndarray
    phase_code: np.ndarray  # (n_lam, n_s)
    mz: np.ndarray
    mx: np.ndarray
    f: np.ndarray
    converged: np.ndarray
    branch: np.ndarray
    boundaries: tuple[BoundarySegment, ...]

    def phase_at(self, i_lam: int, i_s: int) -> PhaseLabel | None:
        code = int(self.phase_code[i_lam, i_s])
        return {0: PhaseLabel.QP, 1: PhaseLabel.QP2, 2: PhaseLabel.F}.get(code)


@dataclass(frozen=True)
class AnnealPath:
    """Piecewise-linear path in the (s, lambda) plane.

    A standard annealing path starts at s = 0 and ends at (1, 1); that
    shape is required by the CLI but not by :func:`pspin_aff.anneal.evolve`,
    which also accepts frozen or partial paths for diagnostics.
    """

    points: tuple[SchedulePoint, ...]

    def __post_init__(self) -> None:
        if len(self.points) < 1:
            raise ValueError("path needs at least one point")

    @classmethod
    def from_pairs(cls, pairs) -> "AnnealPath":
        return cls(tuple(SchedulePoint(float(s), float(lam)) for s, lam in pairs))

    @classmethod
    def constant_lambda(
        cls, lam: float, s_knee: float = 0.99, s_start: float = 0.0
    ) -> "AnnealPath":
        """Standard path: hold lambda fixed to s_knee, then rise to (1, 1)."""
        return cls.from_pairs([(s_start, lam), (s_knee, lam), (1.0, 1.0)])

    @property
    def is_standard(self) -> bool:
        return (
            self.points[0].s == 0.0
            and self.points[-1].s == 1.0
            and self.points[-1].lam == 1.0
        )

    def arc_lengths(self) -> np.ndarray:
        pts = np.array([(q.s, q.lam) for q in self.points])
        seg = np.hypot(*(np.diff(pts, axis=0).T)) if len(pts) > 1 else np.array([])
        return np.concatenate([[0.0], np.cumsum(seg)])

    def point_at(self, fraction: float) -> SchedulePoint:
        """Point at a fraction in [0, 1] of total arc length (uniform speed)."""
        s, lam = self.points_at(np.array([fraction]))
        return SchedulePoint(float(s[0]), float(lam[0]))

    def points_at(self, fractions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized arc-length-uniform sampling; returns (s, lambda) arrays."""
        frac = np.clip(np.asarray(fractions, dtype=float), 0.0, 1.0)
        cum = self.arc_lengths()
        total = cum[-1]
        s_pts = np.array([q.s for q in self.points])
        lam_pts = np.array([q.lam for q in self.points])
        if total == 0.0 or len(self.points) == 1:
            return np.full(frac.shape, s_pts[0]), np.full(frac.shape, lam_pts[0])
        target = frac * total
        return np.interp(target, cum, s_pts), np.interp(target, cum, lam_pts)


@dataclass(frozen=True)
class PathSafety:
    """Result of checking a path against first-order boundaries."""

    safe: bool
    crossings: tuple[tuple[str, tuple[float, float]], ...]
    on_lambda_zero: bool


# ---------------------------------------------------------------------------
# scanning
# ---------------------------------------------------------------------------


def _refine_edge(
    p, fixed: float, lo: float, hi: float, axis: str, tol: float
) -> tuple[float, dict, dict]:
    """Bisect a grid edge (s- or lambda-directed) down to ``tol``."""

    def classify(x: float):
        pt = SchedulePoint(x, fixed) if axis == "s" else SchedulePoint(fixed, x)
        sol = classify_phase(p, pt)
        return {"phase": sol.phase, "mz": sol.mz, "mx": sol.mx}

    a, b = lo, hi
    ca, cb = classify(a), classify(b)
    while b - a > tol:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        cm = classify(mid)
        if cm["phase"] == ca["phase"] != cb["phase"]:
            a, ca = mid, cm
        elif cm["phase"] == cb["phase"] != ca["phase"]:
            b, cb = mid, cm
        else:
            da = max(abs(cm["mz"] - ca["mz"]), abs(cm["mx"] - ca["mx"]))
            db = max(abs(cm["mz"] - cb["mz"]), abs(cm["mx"] - cb["mx"]))
            if da <= db:
                a, ca = mid, cm
            else:
                b, cb = mid, cm
    return 0.5 * (a + b), ca, cb


def _boundary_kind(ca: dict, cb: dict, jump_threshold: float) -> tuple[str, int]:
    jump = max(abs(ca["mz"] - cb["mz"]), abs(ca["mx"] - cb["mx"])) > jump_threshold
    both_f = ca["phase"] == PhaseLabel.F and cb["phase"] == PhaseLabel.F
    if both_f:
        return KIND_F_F_FIRST, 1
    if jump:
        return KIND_QP_F_FIRST, 1
    return KIND_QP_F_SECOND, 2


def _cell_event(g: GridClassification, i: int, j: int, thr: float) -> bool:
    if bool(g.converged[i]) != bool(g.converged[j]):
        return False  # against the unclassifiable (1, 0) corner, no boundary
    if g.phase_code[i] != g.phase_code[j]:
        return True
    if g.branch[i] != g.branch[j]:
        return True
    return max(abs(g.mz[i] - g.mz[j]), abs(g.mx[i] - g.mx[j])) > thr


def scan(
    p,
    s_res: int = 201,
    lam_res: int = 201,
    refine_tol: float = 1e-4,
    jump_threshold: float = 1e-3,
) -> PhaseDiagram:
    """Classify a full (s, lambda) grid and trace phase boundaries.

    ``p`` is an integer >= 3 or ``math.inf``.  Boundary points are
    refined along both grid directions to ``refine_tol`` and assembled
    into polylines per transition kind, ordered by lambda then s, with
    no smoothing.
    """
    if s_res < 2 or lam_res < 2:
        raise ValueError("need at least 2 grid cells per axis")
    s_vals = np.linspace(0.0, 1.0, s_res)
    lam_vals = np.linspace(0.0, 1.0, lam_res)
    ss, ll = np.meshgrid(s_vals, lam_vals)
    g = classify_grid(p, ss.ravel(), ll.ravel())
    shape = (lam_res, s_res)

    def idx(i_lam: int, i_s: int) -> int:
        return i_lam * s_res + i_s

    raw_points: dict[str, list[tuple[float, float]]] = {
        KIND_QP_F_SECOND: [],
        KIND_QP_F_FIRST: [],
        KIND_F_F_FIRST: [],
    }
    # horizontal edges: transition along s within one lambda row
    for i_lam in range(lam_res):
        lam = float(lam_vals[i_lam])
        for i_s in range(s_res - 1):
            a, b = idx(i_lam, i_s), idx(i_lam, i_s + 1)
            if not _cell_event(g, a, b, jump_threshold):
                continue
            s_c, ca, cb = _refine_edge(
                p, lam, float(s_vals[i_s]), float(s_vals[i_s + 1]), "s", refine_tol
            )
            kind, _ = _boundary_kind(ca, cb, jump_threshold)
            raw_points[kind].append((s_c, lam))
    # vertical edges: transition along lambda within one s column
    for i_s in range(s_res):
        s = float(s_vals[i_s])
        for i_lam in range(lam_res - 1):
            a, b = idx(i_lam, i_s), idx(i_lam + 1, i_s)
            if not _cell_event(g, a, b, jump_threshold):
                continue
            lam_c, ca, cb = _refine_edge(
                p,
                s,
                float(lam_vals[i_lam]),
                float(lam_vals[i_lam + 1]),
                "lam",
                refine_tol,
            )
            kind, _ = _boundary_kind(ca, cb, jump_threshold)
            raw_points[kind].append((s, lam_c))

    ds = float(s_vals[1] - s_vals[0])
    segments = []
    for kind, pts in raw_points.items():
        if not pts:
            continue
        order = 1 if kind in _FIRST_ORDER_KINDS else 2
        pts = sorted(set(pts), key=lambda q: (q[1], q[0]))
        # split the polyline where consecutive points are not grid neighbours
        run: list[tuple[float, float]] = []
        for q in pts:
            if run and (
                abs(q[1] - run[-1][1]) > 2.5 / max(lam_res - 1, 1)
                or (q[1] == run[-1][1] and abs(q[0] - run[-1][0]) > 2.5 * ds)
            ):
                segments.append(BoundarySegment(kind, order, tuple(run)))
                run = []
            run.append(q)
        if run:
            segments.append(BoundarySegment(kind, order, tuple(run)))

    return PhaseDiagram(
        p=p,
        s_values=s_vals,
        lam_values=lam_vals,
        phase_code=g.phase_code.reshape(shape),
        mz=g.mz.reshape(shape),
        mx=g.mx.reshape(shape),
        f=g.f.reshape(shape),
        converged=g.converged.reshape(shape),
        branch=g.branch.reshape(shape),
        boundaries=tuple(segments),
    )


# ---------------------------------------------------------------------------
# path safety
# ---------------------------------------------------------------------------


def _segments_intersect(p1, p2, q1, q2, eps: float = 1e-12) -> bool:
    """Proper or touching intersection of segments p1-p2 and q1-q2."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a, b, c):
        return (
            min(a[0], b[0]) - eps <= c[0] <= max(a[0], b[0]) + eps
            and min(a[1], b[1]) - eps <= c[1] <= max(a[1], b[1]) + eps
        )

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and (
        (d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)
    ):
        return True
    for d, a, b, c in ((d1, q1, q2, p1), (d2, q1, q2, p2), (d3, p1, p2, q1), (d4, p1, p2, q2)):
        if abs(d) <= eps and on_seg(a, b, c):
            return True
    return False


def path_is_safe(p, path: AnnealPath, diagram: PhaseDiagram) -> PathSafety:
    """Check a path against the diagram's first-order boundary polylines.

    Returns safe=True iff no path segment crosses (or touches) a
    first-order boundary segment.  Any positive-length portion of the
    path lying exactly on lambda = 0 is flagged: that line supports no
    quantum fluctuations and cannot drive annealing dynamics.
    """
    if diagram.p != p and not (
        isinstance(p, float) and math.isinf(p) and math.isinf(float(diagram.p))
    ):
        raise ValueError(f"diagram was computed for p={diagram.p}, not p={p}")
    for q in path.points:
        if not (0.0 <= q.s <= 1.0 and 0.0 <= q.lam <= 1.0):
            raise ValueError("path leaves the unit square")

    pts = [(q.s, q.lam) for q in path.points]
    crossings: list[tuple[str, tuple[float, float]]] = []
    for seg in diagram.boundaries:
        if not seg.first_order:
            continue
        for k in range(len(pts) - 1):
            for j in range(len(seg.points) - 1):
                if _segments_intersect(
                    pts[k], pts[k + 1], seg.points[j], seg.points[j + 1]
                ):
                    mid = (
                        0.5 * (seg.points[j][0] + seg.points[j + 1][0]),
                        0.5 * (seg.points[j][1] + seg.points[j + 1][1]),
                    )
                    crossings.append((seg.kind, mid))
    on_zero = any(
        pts[k][1] == 0.0 and pts[k + 1][1] == 0.0 and pts[k][0] != pts[k + 1][0]
        for k in range(len(pts) - 1)
    )
    return PathSafety(
        safe=not crossings, crossings=tuple(crossings), on_lambda_zero=on_zero
    )
