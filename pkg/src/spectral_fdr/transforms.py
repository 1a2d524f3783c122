"""Plug-in estimates of the Cauchy, phi and D transforms of a noise bulk.

Every estimator is a discrete average over the bulk atoms, i.e. the
eigenvalues (or singular values) left over once the top ``r_hat`` have been
set aside as signal. Evaluation is only legal at points on or above the
largest atom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Spectrum

COLLISION_RTOL = 1e-12


class BulkEvaluationError(ValueError):
    """Evaluation point lies inside the estimated bulk."""


@dataclass(frozen=True)
class BulkSpectrum:
    values: np.ndarray
    source_n: int
    source_m: int
    r_hat: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("bulk must contain at least one atom")
        if np.any(np.diff(vals) > 0):
            raise ValueError("bulk values must be nonincreasing")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def count(self) -> int:
        return self.values.size

    @property
    def edge(self) -> float:
        return float(self.values[0])

    @property
    def aspect(self) -> float:
        return self.source_n / self.source_m

    @classmethod
    def from_atoms(cls, atoms, r_hat: int = 0, n=None, m=None) -> "BulkSpectrum":
        vals = np.sort(np.asarray(atoms, dtype=float))[::-1]
        n = vals.size + r_hat if n is None else n
        return cls(vals, n, n if m is None else m, r_hat)


@dataclass(frozen=True)
class TransformValue:
    g: float
    g_prime: float
    at: float


def split_bulk(spec: Spectrum, r_hat: int) -> BulkSpectrum:
    """Bulk made of the values with (one-based) index above ``r_hat``."""
    if not 0 <= r_hat < len(spec):
        raise ValueError(f"r_hat={r_hat} must lie in [0, {len(spec) - 1}]")
    return BulkSpectrum(spec.values[r_hat:], spec.n, spec.m, r_hat)


def _guard(y: float) -> float:
    return COLLISION_RTOL * max(1.0, abs(y))


def _collided_mass(bulk: BulkSpectrum, y: float) -> float:
    """Validate ``y`` against the bulk and return the fraction of atoms at ``y``."""
    if not np.isfinite(y):
        raise BulkEvaluationError(f"evaluation point {y!r} is not finite")
    eps = _guard(y)
    if y < bulk.edge - eps:
        raise BulkEvaluationError(
            f"evaluation inside estimated bulk: y={y!r} < edge={bulk.edge!r}")
    return float(np.count_nonzero(np.abs(y - bulk.values) <= eps)) / bulk.count


def _locate(bulk: BulkSpectrum, y: float) -> bool:
    return _collided_mass(bulk, y) > 0


def cauchy_estimate(bulk: BulkSpectrum, y: float) -> TransformValue:
    y = float(y)
    if _locate(bulk, y):
        return TransformValue(np.inf, -np.inf, y)
    inv = 1.0 / (y - bulk.values)
    return TransformValue(float(np.mean(inv)), -float(np.mean(inv * inv)), y)


def _check_q(q):
    if not 0.0 < q <= 1.0:
        raise ValueError(f"q must lie in (0, 1], got {q!r}")


def _phi_parts(bulk: BulkSpectrum, y: float, q: float):
    d = y * y - bulk.values ** 2
    g = q * float(np.mean(y / d)) + (1.0 - q) / y
    gp = -q * float(np.mean((y * y + bulk.values ** 2) / (d * d))) - (1.0 - q) / (y * y)
    return g, gp


def phi_estimate(bulk: BulkSpectrum, y: float, q: float) -> TransformValue:
    y = float(y)
    _check_q(q)
    if y <= 0:
        raise BulkEvaluationError(f"phi transform needs y > 0, got {y!r}")
    if _locate(bulk, y):
        return TransformValue(np.inf, -np.inf, y)
    g, gp = _phi_parts(bulk, y, q)
    return TransformValue(g, gp, y)


def d_transform_estimate(bulk: BulkSpectrum, y: float, aspect=None) -> TransformValue:
    """``D(y) = phi(y; 1) * phi(y; aspect)`` and its product-rule derivative."""
    y = float(y)
    aspect = bulk.aspect if aspect is None else aspect
    _check_q(aspect)
    if y <= 0:
        raise BulkEvaluationError(f"D transform needs y > 0, got {y!r}")
    if _locate(bulk, y):
        return TransformValue(np.inf, -np.inf, y)
    f1, f1p = _phi_parts(bulk, y, 1.0)
    fq, fqp = _phi_parts(bulk, y, aspect)
    return TransformValue(f1 * fq, f1p * fq + f1 * fqp, y)


def _clip_ratio(value: float) -> float:
    return min(0.0, max(-1.0, value))


def ratio_symmetric(bulk: BulkSpectrum, y: float) -> float:
    """``G(y)^2 / G'(y)``, which lies in [-1, 0].

    At an atom carrying a fraction ``w`` of the bulk the ratio is replaced by
    its limit from above, ``-w``.
    """
    y = float(y)
    w = _collided_mass(bulk, y)
    if w > 0:
        return -w
    inv = 1.0 / (y - bulk.values)
    g = np.mean(inv)
    return _clip_ratio(float(g * g / -np.mean(inv * inv)))


def ratio_asymmetric(bulk: BulkSpectrum, y: float, aspect=None, side: str = "left") -> float:
    """``2 D(y) phi(y; q) / D'(y)`` with ``q = 1`` (left) or ``q = aspect`` (right).

    Lies in [-1, 0]. At a positive atom carrying a fraction ``w`` of the bulk
    the limit from above is returned: ``-w / 2`` on the left and
    ``-aspect * w / 2`` on the right.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    y = float(y)
    aspect = bulk.aspect if aspect is None else aspect
    _check_q(aspect)
    if y <= 0:
        raise BulkEvaluationError(f"D transform needs y > 0, got {y!r}")
    w = _collided_mass(bulk, y)
    if w > 0:
        return -0.5 * w * (1.0 if side == "left" else aspect)
    f1, f1p = _phi_parts(bulk, y, 1.0)
    fq, fqp = _phi_parts(bulk, y, aspect)
    d = f1 * fq
    dp = f1p * fq + f1 * fqp
    chosen = f1 if side == "left" else fq
    return _clip_ratio(2.0 * d * chosen / dp)
