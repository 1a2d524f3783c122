"""Monte Carlo ground truth for subspace FDR and the experiment driver.

Trials are independent: trial ``i`` draws from the stream
``(master_seed, i)``, so results do not depend on how trials are scheduled
across threads. Reductions always run in trial-index order.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import oracle
from .ensembles import (NoiseSpec, SignalSpec, EnsembleInstance, bbp_estimate, make_rng,
                        sample_instance, sample_noise)
from .fdr import fdr_curve_asymmetric, fdr_curve_symmetric, select_dimension
from .rank import RankConfig, rank_estimate
from .spectral import singular_spectrum, symmetric_spectrum

WORKERS_ENV = "SPECTRAL_FDR_MAX_WORKERS"
COMPUTE_FLAGS = ("mc_truth", "estimate", "oracle")


@dataclass(frozen=True)
class TrialFdr:
    """Per-``k`` truth for one instance (index ``k - 1``).

    ``fdr`` uses the full signal frame, ``fdr_upper`` only its first
    ``r_star`` columns. Right-side arrays are ``None`` for symmetric data.
    """

    fd: np.ndarray
    fdr: np.ndarray
    fdr_upper: np.ndarray
    fd_right: Optional[np.ndarray] = None
    fdr_right: Optional[np.ndarray] = None
    fdr_upper_right: Optional[np.ndarray] = None


def _false_discovery(U_hat, U):
    """``k - tr(P_{U_hat[:, :k]} P_U)`` for every ``k``; returns ``(fd, fdr)``."""
    M = U_hat.T @ U
    captured = np.cumsum(np.sum(M * M, axis=1))
    k = np.arange(1, U_hat.shape[1] + 1)
    fd = np.clip(k - captured, 0.0, k.astype(float))
    return fd, fd / k


def true_fdr_trial(instance: EnsembleInstance, k_max: int, r_star: Optional[int] = None,
                   left=None, right=None) -> TrialFdr:
    """Realised ``tr(P_{U_k} P_{U_perp}) / k`` for ``k = 1..k_max``.

    ``left``/``right`` are precomputed estimated frames (top singular or
    eigenvectors of ``instance.X``); they are computed when omitted.
    """
    if instance.signal_left_basis is None:
        raise ValueError("instance carries no signal basis")
    n = instance.X.shape[0]
    if not 1 <= k_max <= n:
        raise ValueError(f"k_max={k_max} must lie in [1, {n}]")
    r = instance.signal_left_basis.shape[1]
    r_star = r if r_star is None else int(r_star)
    if left is None:
        if instance.symmetric:
            left = symmetric_spectrum(instance.X).left_basis
        else:
            spec = singular_spectrum(instance.X)
            left, right = spec.left_basis, spec.right_basis
    left = left[:, :k_max]
    fd, fdr = _false_discovery(left, instance.signal_left_basis)
    _, upper = _false_discovery(left, instance.signal_left_basis[:, :r_star])
    if instance.symmetric:
        return TrialFdr(fd, fdr, upper)
    right = right[:, :k_max]
    fd_r, fdr_r = _false_discovery(right, instance.signal_right_basis)
    _, upper_r = _false_discovery(right, instance.signal_right_basis[:, :r_star])
    return TrialFdr(fd, fdr, upper, fd_r, fdr_r, upper_r)


@dataclass(frozen=True)
class ExperimentConfig:
    noise: NoiseSpec
    signal: SignalSpec
    repetitions: int = 100
    k_max: Optional[int] = None
    alpha: float = 0.1
    master_seed: int = 0
    compute: tuple = ("mc_truth", "estimate")
    side: str = "left"
    rank_config: Optional[RankConfig] = None
    zero_noise: bool = False
    workers: Optional[int] = None
    record_timings: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        k_max = 2 * self.signal.r if self.k_max is None else int(self.k_max)
        k_max = min(k_max, self.noise.n)
        if k_max < 1:
            raise ValueError("k_max must be at least 1")
        object.__setattr__(self, "k_max", k_max)
        bad = set(self.compute) - set(COMPUTE_FLAGS)
        if bad:
            raise ValueError(f"unknown compute flags {sorted(bad)}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.side not in ("left", "right", "both"):
            raise ValueError(f"unknown side {self.side!r}")


@dataclass
class ExperimentReport:
    columns: dict
    rank_estimates: list
    k_hat_distribution: dict
    metadata: dict
    trial_curves: list = field(default_factory=list, repr=False)

    def rows(self) -> list:
        names = list(self.columns)
        return [{c: float(self.columns[c][i]) if c != "k" else int(self.columns[c][i])
                 for c in names} for i in range(len(self.columns["k"]))]


@dataclass(frozen=True)
class _Trial:
    index: int
    r_hat: Optional[int]
    k_hat: Optional[int]
    estimate: Optional[np.ndarray]
    estimate_right: Optional[np.ndarray]
    truth: Optional[TrialFdr]


def observable_rank(thetas, threshold: float) -> int:
    """Number of strengths strictly above the BBP threshold (up to roundoff)."""
    th = np.asarray(thetas, dtype=float)
    return int(np.count_nonzero(th > threshold * (1 + 1e-12)))


def _run_trial(cfg: ExperimentConfig, index: int, r_star: int) -> _Trial:
    inst = sample_instance(cfg.noise, cfg.signal, make_rng(cfg.master_seed, index),
                           zero_noise=cfg.zero_noise)
    k_max = cfg.k_max
    if inst.symmetric:
        spec = symmetric_spectrum(inst.X)
    else:
        spec = singular_spectrum(inst.X)
    truth = None
    if "mc_truth" in cfg.compute:
        truth = true_fdr_trial(inst, k_max, r_star, spec.left_basis, spec.right_basis)
    r_hat = k_hat = est = est_r = None
    if "estimate" in cfg.compute:
        r_hat = rank_estimate(spec, cfg.rank_config).r_hat
        if inst.symmetric:
            curve = fdr_curve_symmetric(spec, r_hat, k_max)
            est = curve.estimates
        else:
            left = fdr_curve_asymmetric(spec, r_hat, k_max, "left")
            right = fdr_curve_asymmetric(spec, r_hat, k_max, "right")
            est, est_r = left.estimates, right.estimates
            curve = {"left": left, "right": right}.get(cfg.side)
            if curve is None:
                curve = fdr_curve_asymmetric(spec, r_hat, k_max, "both")
        k_hat = select_dimension(curve, cfg.alpha).k_hat
    return _Trial(index, r_hat, k_hat, est, est_r, truth)


def resolve_workers(requested: Optional[int] = None) -> int:
    if requested is not None:
        if requested < 1:
            raise ValueError("workers must be at least 1")
        return int(requested)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def limit_law(noise: NoiseSpec):
    """Oracle law for a family; ``(law, exact)`` with ``exact=False`` for pilot histograms."""
    fam = noise.family
    if fam == "wigner":
        return oracle.LimitLaw.semicircle(), True
    if fam == "wishart":
        return oracle.LimitLaw.marchenko_pastur(noise.aspect), True
    if fam == "wishart-factor":
        return oracle.LimitLaw.wishart_factor(noise.aspect), True
    E = sample_noise(noise, make_rng(0, 2 ** 32 - 2))
    if noise.symmetric:
        vals = symmetric_spectrum(E, vectors=False).values
        return oracle.LimitLaw.from_samples(vals), False
    vals = singular_spectrum(E, vectors=False).values
    return oracle.LimitLaw.from_samples(vals, "singular", noise.aspect), False


def _mean_stderr(stack):
    mean = stack.mean(axis=0)
    if stack.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, stack.std(axis=0, ddof=1) / np.sqrt(stack.shape[0])


def run_experiment(config: ExperimentConfig, keep_trials: bool = False) -> ExperimentReport:
    """Run ``config.repetitions`` independent trials and average per ``k``."""
    t0 = time.perf_counter()
    noise, signal = config.noise, config.signal
    threshold = bbp_estimate(noise)
    r_star = observable_rank(signal.thetas, threshold)
    workers = min(resolve_workers(config.workers), config.repetitions)
    indices = range(config.repetitions)
    if workers == 1:
        trials = [_run_trial(config, i, r_star) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map() yields in submission order, i.e. by trial index.
            trials = list(pool.map(lambda i: _run_trial(config, i, r_star), indices))

    k = np.arange(1, config.k_max + 1)
    cols = {"k": k}
    symmetric = noise.symmetric
    if "estimate" in config.compute:
        cols["fdr_estimate_mean"] = np.mean([t.estimate for t in trials], axis=0)
        if not symmetric:
            cols["fdr_estimate_right_mean"] = np.mean([t.estimate_right for t in trials], axis=0)
    if "mc_truth" in config.compute:
        suffixes = [("", "fdr", "fdr_upper", "fd")]
        if not symmetric:
            suffixes.append(("_right", "fdr_right", "fdr_upper_right", "fd_right"))
        for suf, fdr_name, upper_name, fd_name in suffixes:
            mean, se = _mean_stderr(np.array([getattr(t.truth, fdr_name) for t in trials]))
            cols[f"fdr_mc{suf}_mean"] = mean
            cols[f"fdr_mc{suf}_stderr"] = se
            cols[f"fdr_mc_upper{suf}_mean"] = np.mean(
                [getattr(t.truth, upper_name) for t in trials], axis=0)
            cols[f"fd_mc{suf}_mean"] = np.mean([getattr(t.truth, fd_name) for t in trials], axis=0)
    oracle_exact = None
    if "oracle" in config.compute:
        law, oracle_exact = limit_law(noise)
        if symmetric:
            cols["fdr_oracle"] = oracle.fdr_infinity_curve(law, signal.thetas, config.k_max)
        else:
            cols["fdr_oracle"] = oracle.fdr_infinity_curve(
                law, signal.thetas, config.k_max, side="left")
            cols["fdr_oracle_right"] = oracle.fdr_infinity_curve(
                law, signal.thetas, config.k_max, side="right")

    r_hats = [t.r_hat for t in trials] if "estimate" in config.compute else []
    k_hats = {}
    for t in trials:
        if t.k_hat is not None:
            k_hats[t.k_hat] = k_hats.get(t.k_hat, 0) + 1
    meta = {
        "family": noise.family,
        "n": noise.n,
        "m": noise.shape[1],
        "symmetric": symmetric,
        "signal": signal.kind,
        "r": signal.r,
        "thetas": [float(x) for x in signal.thetas],
        "bbp_estimate": float(threshold),
        "r_star": r_star,
        "repetitions": config.repetitions,
        "k_max": config.k_max,
        "alpha": config.alpha,
        "side": config.side if not symmetric else "symmetric",
        "seed": config.master_seed,
    }
    if oracle_exact is not None:
        meta["oracle_law"] = "exact" if oracle_exact else "empirical"
    if config.record_timings:
        meta["wall_time_s"] = time.perf_counter() - t0
        meta["workers"] = workers
    curves = []
    if keep_trials:
        curves = [{"index": t.index, "estimate": t.estimate, "truth": t.truth} for t in trials]
    return ExperimentReport(cols, r_hats, dict(sorted(k_hats.items())), meta, curves)
