"""Collective-spin operators in the maximal total-spin sector.

Every operator used in this package is a polynomial in the collective
spin components ``S^z = (1/2) sum_i sigma_i^z`` and ``S^x``, so it
commutes with the total spin and leaves the S = N/2 multiplet invariant.
That subspace has dimension N + 1; basis state ``i`` (i = 0..N) is the
symmetric Dicke state with ``i`` up spins, i.e. total-sigma^z eigenvalue
``M = -N + 2i``.  Working there reduces a 2^N problem to a banded
(N+1)x(N+1) one.

Operators are kept in exact band storage (half-bandwidth <= 2); dense
expansion happens only at the eigensolver boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "SectorBasis",
    "BandedSymmetricOperator",
    "ModelParams",
    "build_h0",
    "build_vtf",
    "build_vaff",
    "assemble",
    "combine",
]


def _readonly(values, length: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != (length,):
        raise ValueError(f"{name} must have shape ({length},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SectorBasis:
    """Index labels for the S = N/2 subspace of N spins."""

    N: int

    def __post_init__(self) -> None:
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")

    @property
    def dim(self) -> int:
        return self.N + 1

    def m_values(self) -> np.ndarray:
        """Total-sigma^z eigenvalues M = -N + 2i for i = 0..N."""
        return -self.N + 2.0 * np.arange(self.dim)


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Interaction order p and system size N.

    The mean-field treatment in :mod:`pspin_aff.meanfield` assumes odd
    p >= 3; even p is accepted for matrix construction only and is
    flagged via :attr:`outside_mean_field_scope`.
    """

    p: int
    N: int

    def __post_init__(self) -> None:
        if not isinstance(self.p, (int, np.integer)) or self.p < 3:
            raise ValueError(f"p must be an integer >= 3, got {self.p!r}")
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")

    @property
    def outside_mean_field_scope(self) -> bool:
        """True for even p, where only the matrix construction is defined."""
        return self.p % 2 == 0

    @property
    def basis(self) -> SectorBasis:
        return SectorBasis(self.N)


@dataclass(frozen=True, eq=False)
class BandedSymmetricOperator:
    """Real symmetric (dim x dim) matrix with half-bandwidth <= 2.

    Only the diagonal and up to two super-diagonals are stored; symmetry
    supplies the sub-diagonals.  Instances are immutable (arrays are
    read-only) and therefore safe to share across workers.
    """

    dim: int
    diag: np.ndarray
    super1: np.ndarray | None = None
    super2: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        object.__setattr__(self, "diag", _readonly(self.diag, self.dim, "diag"))
        if self.super1 is not None:
            object.__setattr__(
                self, "super1", _readonly(self.super1, self.dim - 1, "super1")
            )
        if self.super2 is not None:
            if self.dim < 2:
                raise ValueError("super2 requires dim >= 2")
            object.__setattr__(
                self, "super2", _readonly(self.super2, self.dim - 2, "super2")
            )

    @property
    def half_bandwidth(self) -> int:
        if self.super2 is not None:
            return 2
        if self.super1 is not None:
            return 1
        return 0

    def band(self, k: int) -> np.ndarray:
        """k-th super-diagonal (k = 0, 1, 2), zero-filled if not stored."""
        if k == 0:
            return self.diag
        stored = self.super1 if k == 1 else self.super2 if k == 2 else None
        if stored is not None:
            return stored
        return np.zeros(max(self.dim - k, 0))

    def to_dense(self) -> np.ndarray:
        out = np.diag(self.diag)
        for k in (1, 2):
            b = self.band(k)
            if b.size:
                out += np.diag(b, k) + np.diag(b, -k)
        return out

    def band_matrix(self) -> np.ndarray:
        """Upper band storage (3, dim) as consumed by scipy.linalg.eig_banded."""
        ab = np.zeros((3, self.dim))
        ab[2] = self.diag
        for k in (1, 2):
            b = self.band(k)
            ab[2 - k, k : k + b.size] = b
        return ab

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        out = self.diag * vec
        for k in (1, 2):
            b = self.band(k)
            if b.size:
                out[:-k] += b * vec[k:]
                out[k:] += b * vec[:-k]
        return out

    def entries(self) -> Iterator[tuple[int, int, float]]:
        """All structurally stored entries, both triangles, sorted by (row, col)."""
        for i in range(self.dim):
            for j in range(max(0, i - 2), min(self.dim, i + 3)):
                k = abs(i - j)
                if k > self.half_bandwidth:
                    continue
                yield i, j, float(self.band(k)[min(i, j)])


def combine(
    terms: Sequence[tuple[float, BandedSymmetricOperator]],
) -> BandedSymmetricOperator:
    """Linear combination of band operators on a common basis."""
    if not terms:
        raise ValueError("combine requires at least one term")
    dim = terms[0][1].dim
    if any(op.dim != dim for _, op in terms):
        raise ValueError("operators must share the same dimension")
    diag = sum(c * op.band(0) for c, op in terms)
    bands = {}
    for k in (1, 2):
        if any(op.half_bandwidth >= k for _, op in terms):
            bands[k] = sum(c * op.band(k) for c, op in terms)
    return BandedSymmetricOperator(dim, diag, bands.get(1), bands.get(2))


def _ladder_weights_sq(N: int) -> np.ndarray:
    """Exact integer values c_i^2 = (i+1)(N-i), i = 0..N-1.

    c_i is the matrix element of 2 S^x between Dicke states i and i+1.
    """
    i = np.arange(N, dtype=float)
    return (i + 1.0) * (N - i)


def build_h0(basis: SectorBasis, p: int) -> BandedSymmetricOperator:
    """Target Hamiltonian -N * ((sum_i sigma_i^z)/N)^p, diagonal in the sector.

    Extensive normalization: entries are energies, not energies per spin.
    """
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise ValueError(f"p must be an integer >= 1, got {p!r}")
    m_norm = basis.m_values() / basis.N
    return BandedSymmetricOperator(basis.dim, -basis.N * m_norm ** int(p))


def build_vtf(basis: SectorBasis) -> BandedSymmetricOperator:
    """Transverse-field driver -sum_i sigma_i^x = -2 S^x (half-bandwidth 1)."""
    return BandedSymmetricOperator(
        basis.dim,
        np.zeros(basis.dim),
        -np.sqrt(_ladder_weights_sq(basis.N)),
    )


def build_vaff(basis: SectorBasis) -> BandedSymmetricOperator:
    """Antiferromagnetic fluctuation driver +N * ((sum_i sigma_i^x)/N)^2.

    Equals (2 S^x)^2 / N.  The square is formed symbolically from the
    integer band weights of 2 S^x, so the only rounding is one sqrt per
    stored entry and there is no spurious fill-in.
    """
    N = basis.N
    csq = _ladder_weights_sq(N)  # c_i^2, exact integers in float
    diag = np.zeros(basis.dim)
    diag[:-1] += csq
    diag[1:] += csq
    super2 = np.sqrt(csq[:-1] * csq[1:]) if N >= 2 else None
    return BandedSymmetricOperator(
        basis.dim, diag / N, None, None if super2 is None else super2 / N
    )


def assemble(basis: SectorBasis, p: int, point) -> BandedSymmetricOperator:
    """Total Hamiltonian s*{lambda*H0 + (1-lambda)*V_AFF} + (1-s)*V_TF.

    ``point`` is anything with ``s`` and ``lam`` attributes, both in [0, 1].
    Returned with half-bandwidth-2 storage regardless of which coefficients
    vanish.
    """
    s, lam = float(point.s), float(point.lam)
    if not (0.0 <= s <= 1.0 and 0.0 <= lam <= 1.0):
        raise ValueError(f"(s, lambda) must lie in [0,1]^2, got ({s}, {lam})")
    op = combine(
        [
            (s * lam, build_h0(basis, p)),
            (s * (1.0 - lam), build_vaff(basis)),
            (1.0 - s, build_vtf(basis)),
        ]
    )
    # force half-bandwidth-2 storage even at the s=0 / lambda=1 boundaries
    if basis.dim >= 2:
        return BandedSymmetricOperator(op.dim, op.band(0), op.band(1), op.band(2))
    return op
