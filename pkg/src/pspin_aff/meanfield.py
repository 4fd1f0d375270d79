"""Static mean-field analysis of the driven p-spin ferromagnet.

The per-spin pseudo free energy at inverse temperature beta is

    f(beta,s,l;mz,mx) = (p-1)*s*l*mz^p - s*(1-l)*mx^2
                        - (1/beta) * ln 2 cosh(beta * R(mz, mx)),

    R = sqrt{ (p*s*l*mz^(p-1))^2 + (1 - s - 2 s (1-l) mx)^2 },

and the self-consistent equations for the magnetization pair are

    mz = (p*s*l*mz^(p-1) / R) * tanh(beta R),
    mx = ((1 - s - 2 s (1-l) mx) / R) * tanh(beta R).

``beta = INFINITE`` (math.inf) selects the exact zero-temperature limit
(tanh -> 1 for R > 0), not a large-beta approximation.

Zero-temperature solution structure, used heavily below:

* every R > 0 solution satisfies mz^2 + mx^2 = 1, so all ferromagnetic
  (F) branches are roots of a single scalar function on the quarter
  circle mz = sin(theta), mx = cos(theta);
* mz = 0 forces mx = +1 (the quantum-paramagnetic QP solution, valid
  for s < 1/(3-2*lambda); mx = -1 is not self-consistent);
* the R -> 0 limit yields the QP2 point mx = (1-s)/(2s(1-lambda)) on
  1/(3-2*lambda) <= s < 1, with free energy -(1-s)^2/(4s(1-lambda)).

Stable-phase classification compares the free energies of all
self-consistent solutions (never of off-solution magnetization values,
whose pseudo free energy has no variational meaning).  Root enumeration
on the circle is used instead of seeded fixed-point iteration because
the damped iteration map is linearly unstable at typical F solutions
(circle-map multiplier below -1), so no fixed seed set can reach them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from pspin_aff.errors import DomainError

__all__ = [
    "INFINITE",
    "DEFAULT_SEEDS",
    "SchedulePoint",
    "Magnetization",
    "PhaseLabel",
    "SaddleSolution",
    "Transition",
    "PInfFreeEnergies",
    "free_energy",
    "solve_saddle",
    "f_qp",
    "f_qp2",
    "qp_domain",
    "qp2_domain",
    "qp2_magnetization",
    "enumerate_solutions",
    "classify_phase",
    "classify_grid",
    "detect_jump",
    "pinf_free_energies",
    "pinf_second_order_boundary",
    "pinf_ff_boundary",
    "PINF_QP_F_BOUNDARY",
]

#: Distinguished inverse temperature selecting the exact T -> 0 equations.
INFINITE = math.inf

#: Fixed seed set for ferromagnetic-branch searches with solve_saddle.
DEFAULT_SEEDS = ((1.0, 0.0), (0.9, 0.1), (0.5, 0.5), (0.1, 0.9))

#: First-order QP-F boundary in the p -> infinity limit (lambda > 1/2).
PINF_QP_F_BOUNDARY = 0.5

_RESIDUAL_TOL = 1e-12
_MZ_ZERO_TOL = 1e-7


@dataclass(frozen=True)
class SchedulePoint:
    """A point (s, lambda) in the control-parameter unit square."""

    s: float
    lam: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.s <= 1.0) or not (0.0 <= self.lam <= 1.0):
            raise ValueError(
                f"(s, lambda) must lie in [0,1]^2, got ({self.s}, {self.lam})"
            )


@dataclass(frozen=True)
class Magnetization:
    """Order-parameter pair (m^z, m^x)."""

    mz: float
    mx: float

    def __post_init__(self) -> None:
        if not (-1.0 <= self.mz <= 1.0) or not (-1.0 <= self.mx <= 1.0):
            raise ValueError(f"magnetization out of [-1,1]: ({self.mz}, {self.mx})")


class PhaseLabel(Enum):
    QP = "QP"
    QP2 = "QP2"
    F = "F"


@dataclass(frozen=True)
class SaddleSolution:
    """A self-consistent solution with its free energy and classification."""

    magnetization: Magnetization
    free_energy: float
    phase: PhaseLabel | None
    converged: bool
    iterations: int
    residual: float = math.nan
    branch: str | None = None  # "upper"/"lower" F branch in the p->inf diagram
    flags: tuple[str, ...] = ()

    @property
    def mz(self) -> float:
        return self.magnetization.mz

    @property
    def mx(self) -> float:
        return self.magnetization.mx


@dataclass(frozen=True)
class Transition:
    """A phase transition located on a constant-lambda slice."""

    s: float
    order: int  # 1 = magnetization jump, 2 = continuous contact
    delta_mz: float
    delta_mx: float
    left_phase: PhaseLabel | None
    right_phase: PhaseLabel | None
    flags: tuple[str, ...] = ()


def _uvr(p: int, s: float, lam: float, mz: float, mx: float):
    u = p * s * lam * mz ** (p - 1)
    v = 1.0 - s - 2.0 * s * (1.0 - lam) * mx
    return u, v, math.hypot(u, v)


def free_energy(
    p: int, point: SchedulePoint, m: Magnetization, beta: float = INFINITE
) -> float:
    """Pseudo free energy per spin at (s, lambda) for magnetization m.

    ``beta = INFINITE`` gives the zero-temperature form; finite beta must
    be positive.  The square-root argument is a sum of squares, so the
    expression is defined for every magnetization in [-1, 1]^2.
    """
    s, lam = point.s, point.lam
    u, v, r = _uvr(p, s, lam, m.mz, m.mx)
    head = (p - 1) * s * lam * m.mz**p - s * (1.0 - lam) * m.mx**2
    if math.isinf(beta):
        return head - r
    if not beta > 0.0:
        raise ValueError(f"beta must be positive or INFINITE, got {beta}")
    # (1/beta) ln 2cosh(beta r) = r + log1p(exp(-2 beta r))/beta, overflow-safe
    return head - (r + math.log1p(math.exp(-2.0 * beta * r)) / beta)


def solve_saddle(
    p: int,
    point: SchedulePoint,
    seed: Magnetization | tuple[float, float],
    beta: float = INFINITE,
    damping: float = 0.5,
    tol: float = _RESIDUAL_TOL,
    max_iter: int = 100_000,
) -> SaddleSolution:
    """Damped fixed-point iteration of the self-consistent equations.

    The update is ``m <- (1-a) m + a * proposal`` with step ``a`` starting
    at ``damping``.  If the residual stalls for a full 16-iteration
    window the step is halved (down to 1/256); without this safeguard
    the plain damped map diverges from solutions whose local multiplier
    lies below -1, which includes most ferromagnetic branches.

    Returns ``converged=False`` when the iteration cap is reached or the
    square-root argument vanishes exactly (the singular QP2 limit, which
    is not an R > 0 fixed point).  The caller decides whether to retry.
    """
    if isinstance(seed, Magnetization):
        mz, mx = seed.mz, seed.mx
    else:
        mz, mx = float(seed[0]), float(seed[1])
    if not (-1.0 <= mz <= 1.0 and -1.0 <= mx <= 1.0):
        raise ValueError(f"seed components must lie in [-1,1], got ({mz}, {mx})")
    if not math.isinf(beta) and not beta > 0.0:
        raise ValueError(f"beta must be positive or INFINITE, got {beta}")

    s, lam = point.s, point.lam
    alpha = damping
    window_best = math.inf
    prev_window_best = math.inf
    flags: list[str] = []
    residual = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        u, v, r = _uvr(p, s, lam, mz, mx)
        if r == 0.0:
            if math.isinf(beta):
                flags.append("singular_sqrt")
                break
            factor = beta  # tanh(beta r)/r -> beta as r -> 0
        else:
            factor = (1.0 if math.isinf(beta) else math.tanh(beta * r)) / r
        prop_mz = factor * u
        prop_mx = factor * v
        residual = max(abs(mz - prop_mz), abs(mx - prop_mx))
        if residual < tol:
            mz, mx = prop_mz, prop_mx
            break
        window_best = min(window_best, residual)
        if it % 16 == 0:
            if window_best > 0.9 * prev_window_best:
                alpha = max(alpha * 0.5, 1.0 / 256.0)
            prev_window_best = window_best
            window_best = math.inf
        mz = (1.0 - alpha) * mz + alpha * prop_mz
        mx = (1.0 - alpha) * mx + alpha * prop_mx

    converged = residual < tol
    mz = min(max(mz, -1.0), 1.0)
    mx = min(max(mx, -1.0), 1.0)
    m = Magnetization(mz, mx)
    phase = _label_magnetization(point, mz, mx) if converged else None
    if point.lam == 0.0:
        flags.append("lambda_zero_no_fluctuations")
    if p % 2 == 0:
        flags.append("even_p_outside_scope")
    return SaddleSolution(
        magnetization=m,
        free_energy=free_energy(p, point, m, beta),
        phase=phase,
        converged=converged,
        iterations=it,
        residual=residual,
        flags=tuple(flags),
    )


def _label_magnetization(point: SchedulePoint, mz: float, mx: float) -> PhaseLabel:
    if mz > _MZ_ZERO_TOL:
        return PhaseLabel.F
    if qp2_domain(point) and abs(mx - qp2_magnetization(point).mx) <= 1e-6:
        return PhaseLabel.QP2
    return PhaseLabel.QP


# ---------------------------------------------------------------------------
# closed-form phases
# ---------------------------------------------------------------------------


def qp_domain(point: SchedulePoint) -> bool:
    """True where the QP solution (mz, mx) = (0, 1) is self-consistent."""
    return point.s < 1.0 / (3.0 - 2.0 * point.lam)


def f_qp(point: SchedulePoint) -> float:
    """Free energy of the QP phase, -s*lambda + 2s - 1 (independent of p).

    The QP solution is self-consistent for s < 1/(3-2*lambda); the
    closed edge is accepted here because the free energy continues
    smoothly onto the QP2 contact there.
    """
    if point.s > 1.0 / (3.0 - 2.0 * point.lam):
        raise DomainError(
            f"QP solution requires s <= 1/(3-2*lambda); got s={point.s}, "
            f"lambda={point.lam}"
        )
    return -point.s * point.lam + 2.0 * point.s - 1.0


def qp2_domain(point: SchedulePoint) -> bool:
    """True on 1/(3-2*lambda) <= s < 1 with lambda < 1."""
    return (
        point.lam < 1.0
        and point.s < 1.0
        and point.s >= 1.0 / (3.0 - 2.0 * point.lam)
    )


def qp2_magnetization(point: SchedulePoint) -> Magnetization:
    """QP2 limit magnetization (0, (1-s)/(2s(1-lambda)))."""
    if not qp2_domain(point):
        raise DomainError(
            f"QP2 requires 1/(3-2*lambda) <= s < 1 and lambda < 1; got "
            f"s={point.s}, lambda={point.lam}"
        )
    return Magnetization(0.0, (1.0 - point.s) / (2.0 * point.s * (1.0 - point.lam)))


def f_qp2(point: SchedulePoint) -> float:
    """Free energy of the QP2 phase, -(1-s)^2 / (4s(1-lambda))."""
    if not qp2_domain(point):
        raise DomainError(
            f"QP2 requires 1/(3-2*lambda) <= s < 1 and lambda < 1; got "
            f"s={point.s}, lambda={point.lam}"
        )
    return -((1.0 - point.s) ** 2) / (4.0 * point.s * (1.0 - point.lam))


# ---------------------------------------------------------------------------
# zero-temperature solution enumeration on the unit circle
# ---------------------------------------------------------------------------

# Quarter-circle angle grid used to bracket ferromagnetic roots.  The
# geometric head resolves onsets mz ~ sqrt(s - s_c) arbitrarily close to a
# second-order contact; the uniform tail covers the rest of the branch.
_THETA_GRID = np.concatenate(
    [
        np.geomspace(1e-9, 0.15, 384, endpoint=False),
        np.linspace(0.15, math.pi / 2.0, 1280),
    ]
)
_MAX_ROOTS = 6
_BISECT_ITERS = 64


def _hhat(theta, p, s, lam):
    """Scalar root function for F branches on mz = sin(theta), mx = cos(theta).

    hhat = v(mx) - p*s*lam*sin^(p-2)(theta)*cos(theta); its roots with
    u > 0 are exactly the R > 0 solutions with mz > 0.
    """
    ct = np.cos(theta)
    st = np.sin(theta)
    return (1.0 - s) - 2.0 * s * (1.0 - lam) * ct - p * s * lam * st ** (p - 2) * ct


def _circle_roots_block(p: int, s: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """F-branch angles for a block of points; (n, _MAX_ROOTS), nan-padded."""
    n = s.size
    theta = _THETA_GRID
    hh = _hhat(theta[None, :], p, s[:, None], lam[:, None])
    sgn = np.where(hh >= 0.0, 1.0, -1.0)
    cross = sgn[:, :-1] * sgn[:, 1:] < 0.0

    roots = np.full((n, _MAX_ROOTS), np.nan)
    pt_idx, cell_idx = np.nonzero(cross)
    if pt_idx.size:
        # rank sign changes left-to-right within each point, keep first _MAX_ROOTS
        order = np.argsort(pt_idx, kind="stable")
        pt_idx, cell_idx = pt_idx[order], cell_idx[order]
        rank = np.zeros(pt_idx.size, dtype=int)
        same = np.nonzero(pt_idx[1:] == pt_idx[:-1])[0]
        for k in same:  # cumulative rank within runs (runs are tiny, <= 4)
            rank[k + 1] = rank[k] + 1
        keep = rank < _MAX_ROOTS
        pt_idx, cell_idx, rank = pt_idx[keep], cell_idx[keep], rank[keep]

        lo = theta[cell_idx].copy()
        hi = theta[cell_idx + 1].copy()
        sb, lb = s[pt_idx], lam[pt_idx]
        f_lo = _hhat(lo, p, sb, lb)
        sgn_lo = np.where(f_lo >= 0.0, 1.0, -1.0)
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            f_mid = _hhat(mid, p, sb, lb)
            go_right = np.where(f_mid >= 0.0, 1.0, -1.0) == sgn_lo
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        roots[pt_idx, rank] = 0.5 * (lo + hi)

    # endpoint root at theta = pi/2 (mx = 0), present on the s = 1 edge
    end = np.abs(_hhat(math.pi / 2.0, p, s, lam)) < 1e-12
    if np.any(end):
        for i in np.nonzero(end)[0]:
            slot = np.count_nonzero(~np.isnan(roots[i]))
            if slot < _MAX_ROOTS and not np.any(
                np.abs(roots[i] - math.pi / 2.0) < 1e-9
            ):
                roots[i, slot] = math.pi / 2.0
    return roots


_PHASE_CODES = {PhaseLabel.QP: 0, PhaseLabel.QP2: 1, PhaseLabel.F: 2}
_CODE_PHASES = {v: k for k, v in _PHASE_CODES.items()}


@dataclass(frozen=True)
class GridClassification:
    """Vectorized classification result over flat parameter arrays."""

    s: np.ndarray
    lam: np.ndarray
    phase_code: np.ndarray  # 0 QP, 1 QP2, 2 F, -1 none
    mz: np.ndarray
    mx: np.ndarray
    f: np.ndarray
    converged: np.ndarray
    branch: np.ndarray  # 0 none, 1 upper-F, 2 lower-F (p = inf only)

    def phase(self, i: int) -> PhaseLabel | None:
        return _CODE_PHASES.get(int(self.phase_code[i]))


def _classify_block_t0(p: int, s: np.ndarray, lam: np.ndarray) -> GridClassification:
    n = s.size
    edge = 1.0 / (3.0 - 2.0 * lam)

    thetas = _circle_roots_block(p, s, lam)
    mz_roots = np.sin(thetas)
    mx_roots = np.cos(thetas)
    u = p * s[:, None] * lam[:, None] * mz_roots ** (p - 1)
    v = 1.0 - s[:, None] - 2.0 * s[:, None] * (1.0 - lam[:, None]) * mx_roots
    r = np.hypot(u, v)
    with np.errstate(invalid="ignore"):
        f_roots = (
            (p - 1) * s[:, None] * lam[:, None] * mz_roots**p
            - s[:, None] * (1.0 - lam[:, None]) * mx_roots**2
            - r
        )
        root_valid = ~np.isnan(thetas) & (u > 0.0) & (r > 0.0)

    qp_valid = s < edge
    f_qp_arr = np.where(qp_valid, -s * lam + 2.0 * s - 1.0, np.nan)

    qp2_valid = (lam < 1.0) & (s < 1.0) & (s >= edge) & (s > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        mx2 = np.where(qp2_valid, (1.0 - s) / (2.0 * s * (1.0 - lam)), np.nan)
        f_qp2_arr = np.where(
            qp2_valid, -((1.0 - s) ** 2) / (4.0 * s * (1.0 - lam)), np.nan
        )

    # candidate table: column 0 QP, column 1 QP2, columns 2.. F roots.
    # The QP2 column carries a 1e-12 handicap in the comparison only: near a
    # second-order onset the F branch departs from the QP2 envelope at high
    # order (O(theta^(p-2)) in the free energy), which double precision cannot
    # resolve in a narrow sliver; ties there must go to the F branch, which is
    # the stable phase wherever it exists at finite p.
    f_qp2_cmp = f_qp2_arr + 1e-12 * (1.0 + np.abs(f_qp2_arr))
    f_all = np.column_stack([f_qp_arr, f_qp2_cmp, np.where(root_valid, f_roots, np.nan)])
    valid_any = ~np.all(np.isnan(f_all), axis=1)
    winner = np.full(n, -1, dtype=int)
    with np.errstate(invalid="ignore"):
        winner[valid_any] = np.nanargmin(f_all[valid_any], axis=1)

    phase_code = np.full(n, -1, dtype=int)
    mz = np.full(n, np.nan)
    mx = np.full(n, np.nan)
    f = np.full(n, np.nan)
    qp_w = valid_any & (winner == 0)
    qp2_w = valid_any & (winner == 1)
    f_w = valid_any & (winner >= 2)
    phase_code[qp_w] = _PHASE_CODES[PhaseLabel.QP]
    mz[qp_w], mx[qp_w], f[qp_w] = 0.0, 1.0, f_qp_arr[qp_w]
    phase_code[qp2_w] = _PHASE_CODES[PhaseLabel.QP2]
    mz[qp2_w], mx[qp2_w], f[qp2_w] = 0.0, mx2[qp2_w], f_qp2_arr[qp2_w]
    if np.any(f_w):
        cols = winner[f_w] - 2
        rows = np.nonzero(f_w)[0]
        phase_code[f_w] = _PHASE_CODES[PhaseLabel.F]
        mz[f_w] = mz_roots[rows, cols]
        mx[f_w] = mx_roots[rows, cols]
        f[f_w] = f_roots[rows, cols]

    return GridClassification(
        s=s,
        lam=lam,
        phase_code=phase_code,
        mz=mz,
        mx=mx,
        f=f,
        converged=valid_any,
        branch=np.zeros(n, dtype=int),
    )


def _classify_block_pinf(s: np.ndarray, lam: np.ndarray) -> GridClassification:
    n = s.size
    edge = 1.0 / (3.0 - 2.0 * lam)

    qp_valid = s < edge
    f_qp_arr = np.where(qp_valid, -s * lam + 2.0 * s - 1.0, np.nan)

    upper_valid = s * lam > 0.0
    f_upper = np.where(upper_valid, -s * lam, np.nan)

    lower_valid = (lam < 1.0) & (s < 1.0) & (s >= edge) & (s > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        mx2 = np.where(lower_valid, (1.0 - s) / (2.0 * s * (1.0 - lam)), np.nan)
        f_lower = np.where(
            lower_valid, -((1.0 - s) ** 2) / (4.0 * s * (1.0 - lam)), np.nan
        )
        mz_lower = np.sqrt(np.clip(1.0 - mx2**2, 0.0, None))

    f_all = np.column_stack([f_qp_arr, f_lower, f_upper])
    valid_any = ~np.all(np.isnan(f_all), axis=1)
    winner = np.full(n, -1, dtype=int)
    with np.errstate(invalid="ignore"):
        winner[valid_any] = np.nanargmin(f_all[valid_any], axis=1)

    phase_code = np.full(n, -1, dtype=int)
    mz = np.full(n, np.nan)
    mx = np.full(n, np.nan)
    f = np.full(n, np.nan)
    branch = np.zeros(n, dtype=int)

    qp_w = valid_any & (winner == 0)
    low_w = valid_any & (winner == 1)
    up_w = valid_any & (winner == 2)
    phase_code[qp_w] = _PHASE_CODES[PhaseLabel.QP]
    mz[qp_w], mx[qp_w], f[qp_w] = 0.0, 1.0, f_qp_arr[qp_w]
    # on lambda = 0 the fluctuation-free line hosts the true QP2 solution
    low_qp2 = low_w & (lam == 0.0)
    low_f = low_w & (lam > 0.0)
    phase_code[low_qp2] = _PHASE_CODES[PhaseLabel.QP2]
    mz[low_qp2], mx[low_qp2], f[low_qp2] = 0.0, mx2[low_qp2], f_lower[low_qp2]
    phase_code[low_f] = _PHASE_CODES[PhaseLabel.F]
    mz[low_f], mx[low_f], f[low_f] = mz_lower[low_f], mx2[low_f], f_lower[low_f]
    branch[low_f] = 2
    phase_code[up_w] = _PHASE_CODES[PhaseLabel.F]
    mz[up_w], mx[up_w], f[up_w] = 1.0, 0.0, f_upper[up_w]
    branch[up_w] = 1

    return GridClassification(
        s=s,
        lam=lam,
        phase_code=phase_code,
        mz=mz,
        mx=mx,
        f=f,
        converged=valid_any,
        branch=branch,
    )


def classify_grid(
    p, s_values, lam_values, beta: float = INFINITE, block: int = 4096
) -> GridClassification:
    """Classify the stable phase at each point of flat (s, lambda) arrays.

    ``p`` is an integer >= 3 or ``math.inf`` for the closed-form limit
    diagram.  Only ``beta = INFINITE`` is supported here; use
    :func:`classify_phase` for finite temperature at single points.
    """
    if not math.isinf(beta):
        raise ValueError("classify_grid supports beta=INFINITE only")
    s = np.atleast_1d(np.asarray(s_values, dtype=float))
    lam = np.atleast_1d(np.asarray(lam_values, dtype=float))
    s, lam = np.broadcast_arrays(s, lam)
    s = s.ravel().copy()
    lam = lam.ravel().copy()
    if np.any((s < 0) | (s > 1) | (lam < 0) | (lam > 1)):
        raise ValueError("(s, lambda) values must lie in [0,1]^2")

    parts = []
    for start in range(0, s.size, block):
        sb, lb = s[start : start + block], lam[start : start + block]
        if p is INFINITE or (isinstance(p, float) and math.isinf(p)):
            parts.append(_classify_block_pinf(sb, lb))
        else:
            if not isinstance(p, (int, np.integer)) or p < 3:
                raise ValueError(f"p must be an integer >= 3 or inf, got {p!r}")
            parts.append(_classify_block_t0(int(p), sb, lb))
    cat = lambda name: np.concatenate([getattr(b, name) for b in parts])
    return GridClassification(
        s=s,
        lam=lam,
        phase_code=cat("phase_code"),
        mz=cat("mz"),
        mx=cat("mx"),
        f=cat("f"),
        converged=cat("converged"),
        branch=cat("branch"),
    )


def _point_flags(p, point: SchedulePoint) -> tuple[str, ...]:
    flags = []
    if point.lam == 0.0:
        flags.append("lambda_zero_no_fluctuations")
    if isinstance(p, (int, np.integer)) and p % 2 == 0:
        flags.append("even_p_outside_scope")
    return tuple(flags)


def enumerate_solutions(p: int, point: SchedulePoint) -> tuple[SaddleSolution, ...]:
    """All zero-temperature self-consistent solutions at one point.

    Returns the QP and QP2 candidates (where their domains apply) and
    every ferromagnetic circle root, each with its verified
    self-consistency residual, ordered QP, QP2, then F roots by
    increasing mz.
    """
    if not isinstance(p, (int, np.integer)) or p < 3:
        raise ValueError(f"p must be an integer >= 3, got {p!r}")
    s, lam = point.s, point.lam
    flags = _point_flags(p, point)
    out: list[SaddleSolution] = []

    if qp_domain(point):
        m = Magnetization(0.0, 1.0)
        _, v, r = _uvr(p, s, lam, 0.0, 1.0)
        out.append(
            SaddleSolution(
                m, f_qp(point), PhaseLabel.QP, True, 0,
                residual=abs(1.0 - v / r) if r > 0 else 0.0, flags=flags,
            )
        )
    if qp2_domain(point):
        m = qp2_magnetization(point)
        out.append(
            SaddleSolution(
                m, f_qp2(point), PhaseLabel.QP2, True, 0, residual=0.0,
                flags=flags + ("singular_sqrt_limit",),
            )
        )

    thetas = _circle_roots_block(int(p), np.array([s]), np.array([lam]))[0]
    for theta in thetas[~np.isnan(thetas)]:
        mz, mx = math.sin(theta), math.cos(theta)
        u, v, r = _uvr(p, s, lam, mz, mx)
        if not (u > 0.0 and r > 0.0):
            continue
        residual = max(abs(mz - u / r), abs(mx - v / r))
        m = Magnetization(mz, mx)
        out.append(
            SaddleSolution(
                m,
                free_energy(p, point, m),
                PhaseLabel.F,
                residual < _RESIDUAL_TOL,
                _BISECT_ITERS,
                residual=residual,
                flags=flags,
            )
        )
    return tuple(out)


def classify_phase(
    p, point: SchedulePoint, beta: float = INFINITE
) -> SaddleSolution:
    """Stable phase at one point: the minimum-free-energy solution.

    At ``beta = INFINITE`` all zero-temperature solutions are enumerated
    exactly.  At finite beta the damped iteration is run from the
    zero-temperature solutions plus :data:`DEFAULT_SEEDS` and the
    converged minimum is returned.
    """
    if math.isinf(beta):
        g = classify_grid(p, [point.s], [point.lam])
        flags = _point_flags(p, point)
        if not g.converged[0]:
            return SaddleSolution(
                Magnetization(0.0, 0.0), math.nan, None, False, 0,
                flags=flags + ("no_candidate",),
            )
        branch = {0: None, 1: "upper", 2: "lower"}[int(g.branch[0])]
        return SaddleSolution(
            Magnetization(float(g.mz[0]), float(g.mx[0])),
            float(g.f[0]),
            g.phase(0),
            True,
            0,
            residual=0.0,
            branch=branch,
            flags=flags,
        )

    if not isinstance(p, (int, np.integer)):
        raise ValueError("finite-beta classification requires finite integer p")
    seeds = [(sol.mz, sol.mx) for sol in enumerate_solutions(p, point)]
    seeds += list(DEFAULT_SEEDS)
    best: SaddleSolution | None = None
    for seed in seeds:
        sol = solve_saddle(p, point, seed, beta=beta)
        if not sol.converged:
            continue
        if best is None or sol.free_energy < best.free_energy:
            best = sol
    if best is None:
        return SaddleSolution(
            Magnetization(0.0, 0.0), math.nan, None, False, 0,
            flags=_point_flags(p, point) + ("no_candidate",),
        )
    return best


# ---------------------------------------------------------------------------
# transition detection along constant-lambda slices
# ---------------------------------------------------------------------------


def _side(mid: SaddleSolution, left: SaddleSolution, right: SaddleSolution) -> str:
    if mid.phase == left.phase != right.phase:
        return "left"
    if mid.phase == right.phase != left.phase:
        return "right"
    d_left = max(abs(mid.mz - left.mz), abs(mid.mx - left.mx))
    d_right = max(abs(mid.mz - right.mz), abs(mid.mx - right.mx))
    return "left" if d_left <= d_right else "right"


def _event(a: SaddleSolution, b: SaddleSolution, thr: float) -> bool:
    if a.phase != b.phase:
        return True
    return max(abs(a.mz - b.mz), abs(a.mx - b.mx)) > thr


def _refine_transition(
    p,
    lam: float,
    a: float,
    b: float,
    sol_a: SaddleSolution,
    sol_b: SaddleSolution,
    jump_threshold: float,
    refine_tol: float,
    order_bracket: float,
    extra_flags: tuple[str, ...],
) -> Transition | None:
    s_located: float | None = None
    while b - a > order_bracket:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:  # float exhaustion
            break
        sol_m = classify_phase(p, SchedulePoint(mid, lam))
        if _side(sol_m, sol_a, sol_b) == "left":
            a, sol_a = mid, sol_m
        else:
            b, sol_b = mid, sol_m
        if s_located is None and (b - a) <= refine_tol:
            s_located = 0.5 * (a + b)
    if s_located is None:
        s_located = 0.5 * (a + b)
    d_mz = sol_b.mz - sol_a.mz
    d_mx = sol_b.mx - sol_a.mx
    if max(abs(d_mz), abs(d_mx)) > jump_threshold:
        order = 1
    elif sol_a.phase != sol_b.phase:
        order = 2
    else:
        return None  # continuous variation, no transition
    flags = extra_flags
    if lam == 0.0:
        flags = flags + ("lambda_zero_no_fluctuations",)
    return Transition(
        s=s_located,
        order=order,
        delta_mz=d_mz,
        delta_mx=d_mx,
        left_phase=sol_a.phase,
        right_phase=sol_b.phase,
        flags=flags,
    )


def detect_jump(
    p,
    lam: float,
    s_grid,
    jump_threshold: float = 1e-3,
    refine_tol: float = 1e-6,
    order_bracket: float = 1e-9,
    subdivide: int = 8,
) -> list[Transition]:
    """Locate and classify phase transitions along a constant-lambda slice.

    Scans the stable classification over ``s_grid``, flags every cell
    with a label change or a magnetization step above ``jump_threshold``,
    subdivides flagged cells (catching multiple transitions per cell,
    which are additionally tagged ``grid_too_coarse``), and refines each
    event by bisection.  The transition location is read off once the
    bracket reaches ``refine_tol``; bisection then continues to
    ``order_bracket`` and the residual magnetization step across that
    bracket decides first order (above ``jump_threshold``) versus second
    order (label change with continuous magnetization).  Events whose
    step dissolves under refinement with no label change are discarded
    as smooth variation.
    """
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("s_grid must be a 1-D array with at least two points")
    if np.any(np.diff(s) <= 0.0):
        raise ValueError("s_grid must be strictly increasing")
    if s[0] < 0.0 or s[-1] >= 1.0:
        raise ValueError("s_grid must lie within [0, 1)")

    grid = classify_grid(p, s, np.full(s.shape, lam))
    sols = [_solution_from_grid(grid, i, p) for i in range(s.size)]

    transitions: list[Transition] = []
    for i in range(s.size - 1):
        if not _event(sols[i], sols[i + 1], jump_threshold):
            continue
        # one level of subdivision guards against two transitions per cell
        sub_s = np.linspace(s[i], s[i + 1], subdivide + 1)
        sub_grid = classify_grid(p, sub_s, np.full(sub_s.shape, lam))
        sub_sols = [_solution_from_grid(sub_grid, k, p) for k in range(sub_s.size)]
        sub_events = [
            k
            for k in range(subdivide)
            if _event(sub_sols[k], sub_sols[k + 1], jump_threshold)
        ]
        coarse: tuple[str, ...] = (
            ("grid_too_coarse",) if len(sub_events) > 1 else ()
        )
        for k in sub_events:
            t = _refine_transition(
                p,
                lam,
                float(sub_s[k]),
                float(sub_s[k + 1]),
                sub_sols[k],
                sub_sols[k + 1],
                jump_threshold,
                refine_tol,
                order_bracket,
                coarse,
            )
            if t is not None:
                transitions.append(t)

    transitions.sort(key=lambda t: t.s)
    merged: list[Transition] = []
    for t in transitions:
        if merged and abs(t.s - merged[-1].s) <= refine_tol:
            continue
        merged.append(t)
    return merged


def _solution_from_grid(g: GridClassification, i: int, p) -> SaddleSolution:
    if not g.converged[i]:
        return SaddleSolution(
            Magnetization(0.0, 0.0), math.nan, None, False, 0, flags=("no_candidate",)
        )
    branch = {0: None, 1: "upper", 2: "lower"}[int(g.branch[i])]
    return SaddleSolution(
        Magnetization(float(g.mz[i]), float(g.mx[i])),
        float(g.f[i]),
        g.phase(i),
        True,
        0,
        residual=0.0,
        branch=branch,
    )


# ---------------------------------------------------------------------------
# p -> infinity closed forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PInfFreeEnergies:
    """Closed-form free energies of the p -> infinity limit at one point.

    Values outside their domains are nan with the matching flag False.
    ``mz_lower_f`` is the magnetization of the ferromagnetic branch that
    shadows the QP2 envelope, sqrt(1 - ((1-s)/(2s(1-lambda)))^2).
    """

    f_qp: float
    qp_valid: bool
    f_f: float
    f_valid: bool
    f_qp2: float
    qp2_valid: bool
    mz_lower_f: float


def pinf_free_energies(point: SchedulePoint) -> PInfFreeEnergies:
    s, lam = point.s, point.lam
    qp_ok = qp_domain(point)
    qp2_ok = qp2_domain(point)
    upper_ok = s * lam > 0.0
    if qp2_ok:
        mx2 = qp2_magnetization(point).mx
        mz_lower = math.sqrt(max(1.0 - mx2 * mx2, 0.0))
        fq2 = f_qp2(point)
    else:
        mz_lower = math.nan
        fq2 = math.nan
    return PInfFreeEnergies(
        f_qp=f_qp(point) if qp_ok else math.nan,
        qp_valid=qp_ok,
        f_f=-s * lam if upper_ok else math.nan,
        f_valid=upper_ok,
        f_qp2=fq2,
        qp2_valid=qp2_ok,
        mz_lower_f=mz_lower,
    )


def pinf_second_order_boundary(lam: float) -> float:
    """QP-F second-order boundary s = 1/(3-2*lambda), lambda <= 1/2."""
    if not 0.0 <= lam <= 0.5:
        raise DomainError(f"second-order boundary requires lambda <= 1/2, got {lam}")
    return 1.0 / (3.0 - 2.0 * lam)


def pinf_ff_boundary(lam: float) -> float:
    """First-order F-F boundary s = (1 - 2 sqrt(lambda - lambda^2)) / (2 lambda - 1)^2.

    Written in the equivalent form 1/(1 + 2 sqrt(lambda - lambda^2)) to
    stay finite at lambda = 1/2, where the boundary meets (1/2, 1/2).
    Physical for 0 < lambda <= 1/2.
    """
    if not 0.0 < lam <= 1.0:
        raise DomainError(f"F-F boundary requires 0 < lambda, got {lam}")
    return 1.0 / (1.0 + 2.0 * math.sqrt(lam - lam * lam))
