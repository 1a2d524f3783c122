"""Seeded noise ensembles, signal spectra and spiked instances ``X = A + E``.

Every family starts from ``F = G W`` where ``G`` has iid ``N(0, 1/m)``
entries (``m`` columns; ``m = n`` for the square families) and ``W`` is the
identity, a Wishart matrix or a uniform diagonal. Symmetric families use the
template ``(F + F^T) / sqrt(2)`` (or ``F F^T`` for Wishart), so the Wigner
bulk sits on ``[-2, 2]`` and the Wishart bulk on ``[(1 - sqrt(c))^2, (1 + sqrt(c))^2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import oracle
from .spectral import singular_spectrum, symmetric_spectrum
from .transforms import BulkSpectrum, cauchy_estimate, d_transform_estimate

SYMMETRIC_FAMILIES = ("wigner", "wishart", "fisher", "uniform")
RECTANGULAR_FAMILIES = ("wishart-factor", "fisher-factor", "uniform-factor")
FAMILIES = SYMMETRIC_FAMILIES + RECTANGULAR_FAMILIES
SIGNAL_KINDS = ("well_separated", "barely_separated", "entangled")

SHIFTS = {
    "well_separated": 1.0,
    "barely_separated": 0.0,
    "entangled": -10.0 * 1.3 ** -9,
}

# Stream index reserved for pilot samples used to estimate BBP constants.
PILOT_STREAM = 2 ** 32 - 1
PILOT_SEED = 0


def _family(name: str) -> str:
    key = name.strip().lower().replace("_", "-")
    key = {"wishartfactor": "wishart-factor", "fisherfactor": "fisher-factor",
           "uniformfactor": "uniform-factor"}.get(key, key)
    if key not in FAMILIES:
        raise ValueError(f"unknown noise family {name!r}; choose from {', '.join(FAMILIES)}")
    return key


def _kind(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key not in SIGNAL_KINDS and key != "custom":
        raise ValueError(f"unknown signal kind {name!r}")
    return key


def make_rng(seed, index: Optional[int] = None) -> np.random.Generator:
    """Counter-based Philox stream for ``seed`` (and sub-stream ``index``)."""
    if isinstance(seed, np.random.Generator):
        return seed
    entropy = [int(seed)] if index is None else [int(seed), int(index)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class NoiseSpec:
    family: str
    n: int
    m: Optional[int] = None

    def __post_init__(self):
        fam = _family(self.family)
        object.__setattr__(self, "family", fam)
        if self.n < 4:
            raise ValueError(f"need n >= 4, got {self.n}")
        m = self.m
        if fam in ("wigner", "fisher", "uniform"):
            if m is not None and m != self.n:
                raise ValueError(f"{fam} noise is square, got m={m} != n={self.n}")
            m = self.n
        elif m is None:
            m = 2 * self.n
        if m < self.n:
            raise ValueError(f"need m >= n for {fam}, got m={m} < n={self.n}")
        object.__setattr__(self, "m", int(m))

    @property
    def symmetric(self) -> bool:
        return self.family in SYMMETRIC_FAMILIES

    @property
    def shape(self) -> tuple:
        return (self.n, self.n) if self.symmetric else (self.n, self.m)

    @property
    def aspect(self) -> float:
        return self.n / self.m


@dataclass(frozen=True)
class SignalSpec:
    """Signal strengths ``theta_i = bbp + shift + 10 * 1.3**(1 - i)``.

    Pass ``thetas`` explicitly (with ``kind="custom"``) for hand-built spikes.
    """

    r: int = 20
    kind: str = "well_separated"
    bbp_estimate: float = 1.0
    shift: Optional[float] = None
    thetas: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        kind = _kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.thetas is not None:
            th = np.asarray(self.thetas, dtype=float).ravel()
            if th.size < 1 or np.any(th <= 0) or np.any(np.diff(th) > 0):
                raise ValueError("thetas must be positive and nonincreasing")
            object.__setattr__(self, "r", int(th.size))
        else:
            if kind == "custom":
                raise ValueError("custom signal needs explicit thetas")
            if self.shift is None:
                object.__setattr__(self, "shift", SHIFTS[kind])
            th = signal_spectrum(self)
        th.setflags(write=False)
        object.__setattr__(self, "thetas", th)

    @classmethod
    def spikes(cls, thetas) -> "SignalSpec":
        th = np.atleast_1d(np.asarray(thetas, dtype=float))
        return cls(r=th.size, kind="custom", bbp_estimate=float("nan"), thetas=th)


def signal_spectrum(spec: SignalSpec) -> np.ndarray:
    if spec.r < 1:
        raise ValueError("signal rank must be at least 1")
    if not spec.bbp_estimate > 0:
        raise ValueError("bbp_estimate must be positive")
    shift = SHIFTS[spec.kind] if spec.shift is None else spec.shift
    i = np.arange(1, spec.r + 1)
    th = spec.bbp_estimate + shift + 10.0 * 1.3 ** (1 - i)
    if th[-1] <= 0:
        raise ValueError(f"signal spectrum reaches theta_r = {th[-1]:.4g} <= 0")
    return th


@dataclass(frozen=True)
class EnsembleInstance:
    X: np.ndarray
    A: np.ndarray
    E: np.ndarray
    signal_left_basis: np.ndarray
    signal_right_basis: Optional[np.ndarray]
    thetas: np.ndarray
    seed: object = None

    @property
    def symmetric(self) -> bool:
        return self.signal_right_basis is None


def _gaussian(rng, rows, cols, var):
    return rng.standard_normal((rows, cols)) * math.sqrt(var)


def _mixing(family: str, m: int, rng) -> Optional[np.ndarray]:
    base = family.split("-")[0]
    if base == "fisher":
        Z = _gaussian(rng, m, 2 * m, 1.0 / (2 * m))
        return Z @ Z.T
    if base == "uniform":
        return rng.uniform(0.0, 1.0, size=m)
    return None


def sample_noise(spec: NoiseSpec, seed) -> np.ndarray:
    """Draw one noise matrix of shape ``spec.shape``."""
    rng = make_rng(seed)
    n, m = spec.n, spec.m
    G = _gaussian(rng, n, m, 1.0 / m)
    W = _mixing(spec.family, m, rng)
    if W is None:
        F = G
    elif W.ndim == 1:
        F = G * W
    else:
        F = G @ W
    if spec.family == "wishart":
        E = F @ F.T
        return 0.5 * (E + E.T)
    if spec.symmetric:
        return (F + F.T) / math.sqrt(2.0)
    return F


def haar_frame(rng, n: int, r: int) -> np.ndarray:
    """``n x r`` orthonormal frame, uniformly distributed (sign-fixed QR)."""
    if r > n:
        raise ValueError(f"cannot fit {r} orthonormal columns in dimension {n}")
    Q, R = np.linalg.qr(rng.standard_normal((n, r)))
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return Q * s


def sample_instance(noise: NoiseSpec, signal: SignalSpec, seed,
                    zero_noise: bool = False) -> EnsembleInstance:
    """Spiked instance with Haar-distributed signal frames."""
    rng = make_rng(seed)
    n, m = noise.shape
    r = signal.r
    if r > min(n, m):
        raise ValueError(f"signal rank {r} exceeds matrix dimensions {noise.shape}")
    E = np.zeros((n, m)) if zero_noise else sample_noise(noise, rng)
    th = np.asarray(signal.thetas)
    U = haar_frame(rng, n, r)
    if noise.symmetric:
        A = (U * th) @ U.T
        A = 0.5 * (A + A.T)
        V = None
    else:
        V = haar_frame(rng, m, r)
        A = (U * th) @ V.T
    return EnsembleInstance(A + E, A, E, U, V, th, seed)


# -- BBP constants per family ---------------------------------------------------


def _pilot_threshold(values, mode: str, aspect: float, n: int) -> float:
    bulk = BulkSpectrum.from_atoms(values, 0, n, round(n / aspect))
    lo, hi = float(values[-1]), float(values[0])
    y = hi + n ** (-2.0 / 3.0) * (hi - lo)
    if mode == "eigen":
        return 1.0 / cauchy_estimate(bulk, y).g
    return d_transform_estimate(bulk, y, aspect).g ** -0.5


@lru_cache(maxsize=64)
def _pilot_bbp(family: str, n: int, m: int) -> float:
    spec = NoiseSpec(family, n, m)
    E = sample_noise(spec, make_rng(PILOT_SEED, PILOT_STREAM))
    if spec.symmetric:
        vals = symmetric_spectrum(E, vectors=False).values
        return _pilot_threshold(vals, "eigen", 1.0, n)
    vals = singular_spectrum(E, vectors=False).values
    return _pilot_threshold(vals, "singular", spec.aspect, n)


def bbp_estimate(noise: NoiseSpec) -> float:
    """BBP constant of a noise family at the dimensions of ``noise``.

    Closed forms are used for Wigner, Wishart and Wishart-factor noise; the
    other families map the edge of a fixed pilot sample through the plug-in
    transform, evaluated slightly above the edge so the value errs high.
    """
    fam = noise.family
    if fam == "wigner":
        return 1.0
    if fam == "wishart":
        return oracle.bbp_threshold(oracle.LimitLaw.marchenko_pastur(noise.aspect))
    if fam == "wishart-factor":
        return oracle.bbp_threshold(oracle.LimitLaw.wishart_factor(noise.aspect))
    return _pilot_bbp(fam, noise.n, noise.m)


def preset(family: str, kind: str, n: int, m: Optional[int] = None, r: int = 20) -> tuple:
    """``(NoiseSpec, SignalSpec)`` for a named family and signal type."""
    noise = NoiseSpec(family, n, m)
    signal = SignalSpec(r=r, kind=kind, bbp_estimate=bbp_estimate(noise))
    return noise, signal


def preset_names() -> list:
    kinds = [k.replace("_", "-") for k in SIGNAL_KINDS]
    return [f"{fam}/{k}" for fam in FAMILIES for k in kinds]
