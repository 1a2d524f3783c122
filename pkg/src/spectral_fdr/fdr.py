"""FDR curves for principal subspaces and the selection rule on top of them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rank import RankConfig, rank_estimate
from .spectral import Spectrum
from .transforms import ratio_asymmetric, ratio_symmetric, split_bulk

SIDES = ("symmetric", "left", "right", "both")


@dataclass(frozen=True)
class FdrCurve:
    """``estimates[k - 1]`` is the estimated FDR of the top-``k`` subspace."""

    estimates: np.ndarray
    r_hat: int
    side: str
    aspect: Optional[float] = None

    def __post_init__(self):
        est = np.asarray(self.estimates, dtype=float)
        if est.ndim != 1 or est.size < 1:
            raise ValueError("an FDR curve needs at least one value")
        if self.side not in SIDES:
            raise ValueError(f"unknown side {self.side!r}")
        est.setflags(write=False)
        object.__setattr__(self, "estimates", est)

    @property
    def k_max(self) -> int:
        return self.estimates.size

    def __getitem__(self, k: int) -> float:
        """One-based access, ``curve[k] = FDR(k)``."""
        if not 1 <= k <= self.k_max:
            raise IndexError(f"k={k} outside 1..{self.k_max}")
        return float(self.estimates[k - 1])


@dataclass(frozen=True)
class SelectionResult:
    k_hat: int
    alpha: float
    curve: FdrCurve
    r_hat: int
    p_used: Optional[float] = None


def _check_args(spec: Spectrum, r_hat: int, k_max: int):
    n = len(spec)
    if not 0 <= r_hat < n:
        raise ValueError(f"r_hat={r_hat} must lie in [0, {n - 1}]")
    if not 1 <= k_max <= n:
        raise ValueError(f"k_max={k_max} must lie in [1, {n}]")


def _curve_from_ratios(ratios, r_hat: int, k_max: int) -> np.ndarray:
    terms = np.zeros(k_max)
    r = min(r_hat, k_max)
    terms[:r] = ratios[:r]
    est = 1.0 + np.cumsum(terms) / np.arange(1, k_max + 1)
    return np.clip(est, 0.0, 1.0)


def fdr_curve_symmetric(spec: Spectrum, r_hat: int, k_max: int) -> FdrCurve:
    """``FDR(k) = 1 + (1/k) sum_{i <= min(k, r_hat)} G(l_i)^2 / G'(l_i)``."""
    if spec.kind != "eigen":
        raise ValueError("symmetric FDR curve needs an eigenvalue spectrum")
    _check_args(spec, r_hat, k_max)
    ratios = []
    if r_hat:
        bulk = split_bulk(spec, r_hat)
        ratios = [ratio_symmetric(bulk, lam) for lam in spec.values[: min(r_hat, k_max)]]
    return FdrCurve(_curve_from_ratios(np.asarray(ratios), r_hat, k_max), r_hat, "symmetric")


def _stored_side(spec: Spectrum, side: str) -> str:
    # Stored orientation has n <= m; flip labels when the input was tall.
    if spec.transposed:
        return {"left": "right", "right": "left"}[side]
    return side


def fdr_curve_asymmetric(spec: Spectrum, r_hat: int, k_max: int, side: str = "left") -> FdrCurve:
    """Column-space (left), row-space (right) or joint (both) FDR estimate.

    Uses ``FDR(k) = 1 + (1/k) sum_i 2 D(s_i) phi(s_i; q) / D'(s_i)``; each
    summand lies in [-1, 0], so the curve stays in [0, 1].
    """
    if spec.kind != "singular":
        raise ValueError("asymmetric FDR curve needs a singular value spectrum")
    if side not in ("left", "right", "both"):
        raise ValueError(f"side must be left, right or both, got {side!r}")
    _check_args(spec, r_hat, k_max)
    if side == "both":
        left = fdr_curve_asymmetric(spec, r_hat, k_max, "left")
        right = fdr_curve_asymmetric(spec, r_hat, k_max, "right")
        return FdrCurve(np.maximum(left.estimates, right.estimates), r_hat, "both", spec.aspect)
    ratios = []
    if r_hat:
        bulk = split_bulk(spec, r_hat)
        stored = _stored_side(spec, side)
        ratios = [ratio_asymmetric(bulk, s, spec.aspect, stored)
                  for s in spec.values[: min(r_hat, k_max)]]
    est = _curve_from_ratios(np.asarray(ratios), r_hat, k_max)
    return FdrCurve(est, r_hat, side, spec.aspect)


def select_dimension(curve: FdrCurve, alpha: float) -> SelectionResult:
    """Largest ``k`` with ``FDR(k) <= alpha``; 0 if there is none."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    ok = np.flatnonzero(curve.estimates <= alpha)
    k_hat = int(ok[-1]) + 1 if ok.size else 0
    return SelectionResult(k_hat, float(alpha), curve, curve.r_hat)


def default_k_max(n: int, r_hat: int) -> int:
    return min(n, 2 * max(r_hat, 1) + 10)


def select(spec: Spectrum, alpha: float, side: str = None, config: RankConfig = None,
           r_hat: int = None, k_max: int = None) -> SelectionResult:
    """Run rank estimation, build the FDR curve and select ``k``.

    ``r_hat`` overrides rank estimation; ``config=None`` uses the data-driven
    threshold.
    """
    p_used = None
    if r_hat is None:
        rank = rank_estimate(spec, config)
        r_hat = rank.r_hat
        p_used = rank.p
    if k_max is None:
        k_max = default_k_max(len(spec), r_hat)
    if spec.kind == "eigen":
        curve = fdr_curve_symmetric(spec, r_hat, k_max)
    else:
        curve = fdr_curve_asymmetric(spec, r_hat, k_max, side or "left")
    result = select_dimension(curve, alpha)
    return SelectionResult(result.k_hat, result.alpha, curve, r_hat, p_used)
