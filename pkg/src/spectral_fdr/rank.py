"""Rank estimation from spectral gaps.

A component is counted as signal when the gap right below it exceeds
``p / sqrt(n)``; bulk spacings of rigid noise spectra shrink faster than
that, so only signal gaps survive for large ``n``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import SpacingProfile, Spectrum, spacings

DEFAULT_P = 1.0
HEURISTIC_FACTOR = 0.6


class DegenerateMedianWarning(UserWarning):
    """Median spacing is zero, so the data-driven threshold is unusable."""


@dataclass(frozen=True)
class RankConfig:
    p: float = DEFAULT_P
    source: str = "user"

    def __post_init__(self):
        if not (self.p > 0 and math.isfinite(self.p)):
            raise ValueError(f"threshold constant p must be positive, got {self.p!r}")
        if self.source not in ("user", "default_heuristic"):
            raise ValueError(f"unknown RankConfig source {self.source!r}")


@dataclass(frozen=True)
class RankResult:
    r_hat: int
    threshold: float
    qualifying_indices: tuple
    p: float = DEFAULT_P


def default_threshold(spacing: SpacingProfile, n: int) -> RankConfig:
    """``p = 0.6 * median(spacings) * n``, falling back to ``p = 1``."""
    deltas = np.asarray(spacing.deltas)
    if deltas.size == 0:
        raise ValueError("empty spacing profile")
    p = HEURISTIC_FACTOR * float(np.median(deltas)) * n
    if not p > 0:
        warnings.warn("degenerate median spacing; falling back to p = 1",
                      DegenerateMedianWarning, stacklevel=2)
        p = DEFAULT_P
    return RankConfig(p, "default_heuristic")


def rank_estimate(spec: Spectrum, config: RankConfig = None) -> RankResult:
    """Largest ``j <= n // 2`` whose following gap ``Delta_{j+1}`` beats the threshold.

    With ``config=None`` the data-driven default threshold is used.
    """
    n = len(spec)
    if n < 4:
        raise ValueError(f"rank estimation needs at least 4 values, got {n}")
    prof = spacings(spec)
    if config is None:
        config = default_threshold(prof, n)
    threshold = config.p / math.sqrt(n)
    # deltas[j - 1] is Delta_{j+1} = values[j-1] - values[j] (one-based).
    head = prof.deltas[: n // 2]
    qualifying = tuple(int(j) for j in np.flatnonzero(head > threshold) + 1)
    r_hat = qualifying[-1] if qualifying else 0
    return RankResult(r_hat, threshold, qualifying, config.p)
