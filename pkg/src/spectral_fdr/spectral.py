"""Dense spectral factorizations, spacings and projector overlaps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

# Tolerances; override per call where a keyword is offered.
SYMMETRY_TOL = 1e-8
ORTHONORMAL_TOL = 1e-6


class SpectralError(ValueError):
    """Raised when a matrix or basis violates a factorization precondition."""


@dataclass(frozen=True)
class Spectrum:
    """Ordered spectrum of one matrix.

    ``values`` is nonincreasing. For ``kind == "singular"`` the stored
    orientation always has ``n <= m``; ``transposed`` records whether the
    input had to be flipped to get there. ``left_basis`` and ``right_basis``
    refer to the *original* orientation of the input.
    """

    kind: str
    values: np.ndarray
    n: int
    m: int
    left_basis: Optional[np.ndarray] = None
    right_basis: Optional[np.ndarray] = None
    transposed: bool = False

    def __post_init__(self):
        if self.kind not in ("eigen", "singular"):
            raise SpectralError(f"unknown spectrum kind {self.kind!r}")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise SpectralError("spectrum values must be one-dimensional")
        if np.any(np.diff(vals) > 0):
            raise SpectralError("spectrum values must be nonincreasing")
        if self.kind == "singular":
            if vals.size and vals[-1] < 0:
                raise SpectralError("singular values must be nonnegative")
            if self.n > self.m:
                raise SpectralError("singular spectra are stored with n <= m")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    @property
    def aspect(self) -> float:
        """Finite-size ratio n/m (1 for eigen spectra)."""
        return self.n / self.m

    def top_left(self, k: int) -> np.ndarray:
        if self.left_basis is None:
            raise SpectralError("spectrum carries no basis vectors")
        return self.left_basis[:, :k]

    def top_right(self, k: int) -> np.ndarray:
        if self.right_basis is None:
            raise SpectralError("spectrum carries no right basis vectors")
        return self.right_basis[:, :k]


@dataclass(frozen=True)
class SpacingProfile:
    """Spacings ``deltas[i] = values[i] - values[i + 1]``.

    In one-based notation ``deltas[j - 2]`` is the gap between positions
    ``j - 1`` and ``j``.
    """

    deltas: np.ndarray
    n: int

    def delta(self, j: int) -> float:
        """One-based gap ``values[j-1] - values[j]`` for ``j = 2..n``."""
        if not 2 <= j <= self.n:
            raise IndexError(f"spacing index {j} outside 2..{self.n}")
        return float(self.deltas[j - 2])


def _check_finite(M):
    if not np.all(np.isfinite(M)):
        raise SpectralError("matrix has non-finite entries")


def is_symmetric(M, tol: float = SYMMETRY_TOL) -> bool:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    return float(np.max(np.abs(M - M.T), initial=0.0)) <= tol * scale


def symmetric_spectrum(M, tol: float = SYMMETRY_TOL, vectors: bool = True) -> Spectrum:
    """Eigendecomposition of a real symmetric matrix, largest eigenvalue first."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SpectralError(f"expected a square matrix, got shape {M.shape}")
    if M.size == 0:
        raise SpectralError("empty matrix")
    _check_finite(M)
    if not is_symmetric(M, tol):
        raise SpectralError("matrix is not symmetric within tolerance")
    n = M.shape[0]
    if vectors:
        w, U = np.linalg.eigh(M)
        U = U[:, ::-1].copy()
    else:
        w = np.linalg.eigvalsh(M)
        U = None
    return Spectrum("eigen", w[::-1].copy(), n, n, left_basis=U)


def singular_spectrum(M, vectors: bool = True) -> Spectrum:
    """Thin SVD with orientation normalized to ``n <= m``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise SpectralError(f"expected a nonempty 2-d matrix, got shape {M.shape}")
    _check_finite(M)
    rows, cols = M.shape
    transposed = rows > cols
    if vectors:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        left, right = U, Vt.T
    else:
        s = np.linalg.svd(M, compute_uv=False)
        left = right = None
    n, m = min(rows, cols), max(rows, cols)
    return Spectrum("singular", s, n, m, left_basis=left, right_basis=right,
                    transposed=transposed)


def spacings(spec: Spectrum) -> SpacingProfile:
    vals = spec.values
    if vals.size < 2:
        raise SpectralError("need at least two values to form spacings")
    return SpacingProfile(vals[:-1] - vals[1:], vals.size)


def check_orthonormal(B, tol: float = ORTHONORMAL_TOL) -> None:
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise SpectralError("basis must be a 2-d array")
    gram = B.T @ B
    err = float(np.max(np.abs(gram - np.eye(B.shape[1])), initial=0.0))
    if err > tol:
        raise SpectralError(f"basis columns not orthonormal (max |B'B - I| = {err:.3g})")


def projection_overlap(B1, B2, tol: float = ORTHONORMAL_TOL) -> float:
    """``tr(P1 P2)`` for the projectors onto the column spans of ``B1`` and ``B2``."""
    B1 = np.asarray(B1, dtype=float)
    B2 = np.asarray(B2, dtype=float)
    if B1.ndim != 2 or B2.ndim != 2 or B1.shape[0] != B2.shape[0]:
        raise SpectralError(f"ambient dimensions differ: {B1.shape} vs {B2.shape}")
    check_orthonormal(B1, tol)
    check_orthonormal(B2, tol)
    value = float(np.sum((B1.T @ B2) ** 2))
    return min(max(value, 0.0), float(min(B1.shape[1], B2.shape[1])))
