"""Limiting spectral laws and the asymptotic quantities derived from them.

These are the deterministic counterparts of the plug-in estimators: Cauchy,
phi and D transforms of a limit law, BBP thresholds, outlier locations,
limiting eigenvector overlaps and the limiting FDR. They serve as ground
truth in tests and as an optional oracle column in experiment reports.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .transforms import TransformValue

QUAD_TOL = 1e-11
QUAD_ACCEPT = 1e-7



class LawDomainError(ValueError):
    """Transform requested at a point inside the support of the law."""


class DivergentTransformError(ArithmeticError):
    """Edge transform of a density is infinite (the BBP threshold degenerates)."""


@dataclass(frozen=True)
class LimitLaw:
    """A compactly supported spectral law.

    ``mode`` says whether the law describes eigenvalues (``"eigen"``) or
    singular values (``"singular"``; then ``aspect`` is the limiting ratio
    n/m). Tabulated laws with a single grid point are point masses.
    """

    family: str
    support: tuple
    mode: str = "eigen"
    aspect: Optional[float] = None
    grid: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        a, b = self.support
        if self.family != "tabulated" or self.grid is None or len(self.grid) > 1:
            if not a < b:
                raise ValueError(f"support must satisfy a < b, got {self.support}")
        if self.mode not in ("eigen", "singular"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "singular":
            if self.aspect is None or not 0 < self.aspect <= 1:
                raise ValueError("singular laws need an aspect ratio in (0, 1]")
            if a < 0:
                raise ValueError("singular value laws live on [0, inf)")

    # -- constructors -------------------------------------------------------

    @classmethod
    def semicircle(cls) -> "LimitLaw":
        return cls("semicircle", (-2.0, 2.0))

    @classmethod
    def marchenko_pastur(cls, ratio: float) -> "LimitLaw":
        """Eigenvalue law of ``Y Y^T`` with ``Y`` n x m, entry variance 1/m, n/m -> ratio."""
        if not 0 < ratio <= 1:
            raise ValueError("Marchenko-Pastur ratio must lie in (0, 1]")
        s = math.sqrt(ratio)
        return cls("marchenko-pastur", ((1 - s) ** 2, (1 + s) ** 2), aspect=ratio)

    @classmethod
    def wishart_factor(cls, ratio: float) -> "LimitLaw":
        """Singular value law of the factor ``Y`` itself."""
        if not 0 < ratio <= 1:
            raise ValueError("Wishart-factor ratio must lie in (0, 1]")
        s = math.sqrt(ratio)
        return cls("wishart-factor", (1 - s, 1 + s), mode="singular", aspect=ratio)

    @classmethod
    def tabulated(cls, grid, density, mode="eigen", aspect=None) -> "LimitLaw":
        """Piecewise-linear density through ``(grid, density)``, renormalized to unit mass."""
        t = np.asarray(grid, dtype=float)
        f = np.asarray(density, dtype=float)
        if t.ndim != 1 or t.shape != f.shape or t.size < 2:
            raise ValueError("tabulated law needs matching 1-d grid and density, length >= 2")
        if np.any(np.diff(t) <= 0):
            raise ValueError("tabulated grid must be strictly increasing")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ValueError("tabulated density must be finite and nonnegative")
        mass = float(np.trapezoid(f, t))
        if not mass > 0:
            raise ValueError("tabulated density has zero mass")
        f = f / mass
        t.setflags(write=False)
        f.setflags(write=False)
        return cls("tabulated", (float(t[0]), float(t[-1])), mode, aspect, t, f)

    @classmethod
    def atom(cls, x: float = 0.0, mode="eigen", aspect=None) -> "LimitLaw":
        grid = np.array([float(x)])
        return cls("tabulated", (float(x), float(x)), mode, aspect, grid, np.ones(1))

    @classmethod
    def from_samples(cls, values, mode="eigen", aspect=None, bins=None) -> "LimitLaw":
        """Empirical tabulated law: histogram heights pinned to zero at the extremes."""
        v = np.asarray(values, dtype=float)
        bins = bins or max(8, int(math.sqrt(v.size)))
        h, edges = np.histogram(v, bins=bins, density=True)
        centers = 0.5 * (edges[1:] + edges[:-1])
        grid = np.concatenate([[edges[0]], centers, [edges[-1]]])
        dens = np.concatenate([[0.0], h, [0.0]])
        return cls.tabulated(grid, dens, mode, aspect)

    # -- basic properties ---------------------------------------------------

    @property
    def is_atom(self) -> bool:
        return self.family == "tabulated" and self.grid is not None and self.grid.size == 1

    @property
    def edge(self) -> float:
        return float(self.support[1])

    def density(self, t):
        t = np.asarray(t, dtype=float)
        a, b = self.support
        if self.family == "semicircle":
            return np.sqrt(np.clip(4.0 - t * t, 0.0, None)) / (2 * math.pi)
        if self.family == "marchenko-pastur":
            return _mp_density(t, self.aspect)
        if self.family == "wishart-factor":
            return 2.0 * t * _mp_density(t * t, self.aspect)
        if self.is_atom:
            raise ValueError("a point mass has no density")
        return np.interp(t, self.grid, self.weights, left=0.0, right=0.0)

    def density_below_edge(self, s):
        """``density(edge - s)``, computed without forming ``edge - s`` where possible."""
        s = np.asarray(s, dtype=float)
        b = self.edge
        if self.family == "marchenko-pastur":
            lo, hi = self.support
            return np.sqrt(np.clip(s * ((hi - lo) - s), 0.0, None)) / (
                2 * math.pi * self.aspect * (hi - s))
        if self.family == "wishart-factor":
            r = math.sqrt(self.aspect)
            lo2, hi2 = (1 - r) ** 2, (1 + r) ** 2
            t = b - s
            gap = s * (2 * b - s)  # hi2 - t^2
            inner = np.sqrt(np.clip(gap * ((hi2 - lo2) - gap), 0.0, None))
            return 2 * t * inner / (2 * math.pi * self.aspect * t * t)
        return self.density(b - s)

    def mass(self, lo: float, hi: float) -> float:
        """Probability of ``[lo, hi]``."""
        a, b = self.support
        lo, hi = max(lo, a), min(hi, b)
        if self.is_atom:
            return 1.0 if lo <= a <= hi else 0.0
        if hi <= lo:
            return 0.0
        if self.family == "semicircle":
            return _semicircle_cdf(hi) - _semicircle_cdf(lo)
        if self.family == "tabulated":
            return _pl_mass(self.grid, self.weights, lo, hi)
        return _edge_quad(self.density, a, b, lo, hi)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        a = self.support[0]
        out = np.array([self.mass(a, float(xi)) if xi >= a else 0.0 for xi in x.ravel()])
        return out.reshape(x.shape) if x.ndim else float(out[0])

    # -- Cauchy transform of the (eigen- or singular-value) density ----------

    def cauchy(self, z: float, derivative: bool = True) -> tuple:
        """``(G(z), G'(z))`` of the law viewed as a measure on the line.

        With ``derivative=False`` the second entry is NaN and no quadrature is
        spent on it.
        """
        a, b = self.support
        if a < z < b:
            raise LawDomainError(f"z={z} lies inside the support {self.support}")
        if self.is_atom:
            if z == a:
                return math.inf, -math.inf
            d = z - a
            return 1.0 / d, -1.0 / (d * d)
        if self.family == "semicircle":
            return _semicircle_cauchy(z)
        if self.family == "tabulated":
            return _pl_cauchy(self.grid, self.weights, z)
        g = _pole_integral(self, z, 1)
        if not derivative:
            gp = math.nan
        elif z in (a, b):
            gp = -math.inf
        else:
            gp = -_pole_integral(self, z, 2)
        return g, gp

    def phi(self, z: float, q: float, derivative: bool = True) -> tuple:
        """``(phi(z; q), phi'(z; q))`` for a singular value law, ``z > 0``."""
        if not 0 < q <= 1:
            raise ValueError(f"q must lie in (0, 1], got {q!r}")
        if z <= 0:
            raise LawDomainError("phi transform needs z > 0")
        gp_, gpp = self.cauchy(z, derivative)
        gm, gmp = self.cauchy(-z, derivative)
        val = q * 0.5 * (gp_ - gm) + (1 - q) / z
        der = q * 0.5 * (gpp + gmp) - (1 - q) / (z * z)
        return val, der

    def d_transform(self, z: float, derivative: bool = True) -> tuple:
        f1, f1p = self.phi(z, 1.0, derivative)
        fq, fqp = self.phi(z, self.aspect, derivative)
        return f1 * fq, f1p * fq + f1 * fqp


def _mp_density(t, ratio):
    s = math.sqrt(ratio)
    lo, hi = (1 - s) ** 2, (1 + s) ** 2
    t = np.asarray(t, dtype=float)
    inside = (t > lo) & (t < hi)
    out = np.zeros_like(t)
    ti = t[inside]
    out[inside] = np.sqrt((hi - ti) * (ti - lo)) / (2 * math.pi * ratio * ti)
    return out


def mp_cauchy_closed_form(z: float, ratio: float) -> tuple:
    """Marchenko-Pastur ``(G(z), G'(z))`` from the quadratic equation; cross-check only."""
    lo, hi = (1 - math.sqrt(ratio)) ** 2, (1 + math.sqrt(ratio)) ** 2
    sgn = 1.0 if z >= hi else -1.0
    root = math.sqrt(max((z - hi) * (z - lo), 0.0))
    num = z + ratio - 1 - sgn * root
    g = num / (2 * ratio * z)
    if root == 0:
        return g, -math.inf
    num_p = 1 - sgn * (2 * z - hi - lo) / (2 * root)
    return g, (num_p * z - num) / (2 * ratio * z * z)


def _semicircle_cdf(x: float) -> float:
    if x <= -2:
        return 0.0
    if x >= 2:
        return 1.0
    return 0.5 + (x * math.sqrt(4 - x * x) + 4 * math.asin(x / 2)) / (4 * math.pi)


def _semicircle_cauchy(z: float) -> tuple:
    if z >= 2:
        r = math.sqrt(z * z - 4)
        g = (z - r) / 2
        gp = -math.inf if r == 0 else (1 - z / r) / 2
    else:
        r = math.sqrt(z * z - 4)
        g = (z + r) / 2
        gp = -math.inf if r == 0 else (1 + z / r) / 2
    return g, gp


def _quad(func, lo, hi, points=None, epsabs=QUAD_TOL):
    """Adaptive quadrature; an integrator warning only counts when the error is large."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        val, err = integrate.quad(func, lo, hi, epsabs=epsabs, epsrel=QUAD_TOL,
                                  limit=500, points=points)
    if not math.isfinite(val) or (caught and err > max(QUAD_ACCEPT * abs(val), 10 * epsabs)):
        msg = str(caught[0].message) if caught else "non-finite integral"
        raise DivergentTransformError(f"quadrature failed on [{lo}, {hi}]: {msg}")
    return val


def _edge_quad(func, a, b, lo=None, hi=None):
    """Integrate ``func`` over ``[lo, hi]`` within support ``[a, b]``.

    Square-root edge behaviour is removed with ``t = a + u^2`` on the lower
    half of the support and ``t = b - u^2`` on the upper half.
    """
    lo = a if lo is None else lo
    hi = b if hi is None else hi
    c = 0.5 * (a + b)
    total = 0.0
    lo1, hi1 = lo, min(hi, c)
    if hi1 > lo1:
        total += _quad(lambda u: 2 * u * float(func(a + u * u)), math.sqrt(lo1 - a), math.sqrt(hi1 - a))
    lo2, hi2 = max(lo, c), hi
    if hi2 > lo2:
        total += _quad(lambda u: 2 * u * float(func(b - u * u)), math.sqrt(b - hi2), math.sqrt(b - lo2))
    return total


def _pole_integral(law, z, power):
    """``int density(t) / (z - t)**power dt`` for ``z`` outside ``[a, b]``.

    Above the support, the upper half is mapped to ``u`` with ``t = b - u^2``,
    where the integrand is ``g(u) u^2 / (d + u^2)^power`` with ``d = z - b``
    and ``g`` smooth for square-root edges. The peak of width ``sqrt(d)`` is
    integrated in closed form against ``g(0)``; only a mild remainder is left
    to adaptive quadrature, so points arbitrarily close to the edge are fine.
    Below the support, or well away from the edge, plain edge-substituted
    quadrature is used.
    """
    a, b = law.support
    density = law.density
    c = 0.5 * (a + b)
    U = math.sqrt(b - c)
    d = z - b
    if z < b or d > 1e-4 * U * U:
        return _edge_quad(lambda t: density(t) / (z - t) ** power, a, b)
    # Below u_min, g(u) - g(0) is lost to rounding; the omitted sliver is O(u_min * d).
    u_min = 1e-6 * U

    def g(u):
        return 2.0 * float(law.density_below_edge(u * u)) / u

    eps = 1e-3 * U
    g0 = (4.0 * g(eps) - g(2 * eps)) / 3.0
    rd = math.sqrt(d)
    pts = [p for p in (rd, 10 * rd) if u_min < p < U] or None
    tol = QUAD_TOL / max(d, 1e-300)
    if power == 1:
        # u^2 / (d + u^2) = 1 - d / (d + u^2)
        near = _quad(lambda u: g(u) if u > 0 else g0, 0.0, U)
        if d > 0:
            rest = _quad(lambda u: (g(u) - g0) / (d + u * u), u_min, U, pts, min(tol, 1.0))
            near -= d * (rest + g0 * math.atan(U / rd) / rd)
    else:
        peak = 0.5 * (math.atan(U / rd) / rd - U / (d + U * U))
        rest = _quad(lambda u: (g(u) - g0) * u * u / (d + u * u) ** 2, u_min, U, pts,
                     QUAD_TOL * max(1.0, g0 * peak))
        near = g0 * peak + rest
    far = _edge_quad(lambda t: density(t) / (z - t) ** power, a, b, a, c)
    return near + far


def _pl_mass(t, f, lo, hi):
    xs = np.concatenate([[lo], t[(t > lo) & (t < hi)], [hi]])
    return float(np.trapezoid(np.interp(xs, t, f), xs))


def _pl_cauchy(t, f, z):
    """Exact Cauchy transform of a piecewise-linear density and its derivative."""
    t0, t1 = t[:-1], t[1:]
    f0, f1 = f[:-1], f[1:]
    beta = (f1 - f0) / (t1 - t0)
    fz = f0 + beta * (z - t0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(np.abs(z - t0)) - np.log(np.abs(z - t1))
        lead = np.where(fz == 0, 0.0, fz * log_ratio)
        g = float(np.sum(lead - beta * (t1 - t0)))
        inv = np.where(fz == 0, 0.0, fz * (1.0 / (z - t1) - 1.0 / (z - t0)))
        gp = -float(np.sum(inv - beta * log_ratio))
    if not math.isfinite(g):
        g = math.inf
    if not math.isfinite(gp):
        gp = -math.inf
    return g, gp


# -- public oracle operations -------------------------------------------------


def _mode(law: LimitLaw, mode):
    mode = law.mode if mode is None else mode
    if mode != law.mode:
        raise ValueError(f"law is an {law.mode} law, cannot be used in {mode} mode")
    return mode


def law_transform(law: LimitLaw, z: float, which: str = None, q: float = 1.0) -> TransformValue:
    """Transform of a limit law at ``z`` outside its support.

    ``which`` is ``"cauchy"`` (default for eigen laws), ``"phi"`` or ``"d"``
    (default for singular laws).
    """
    which = which or ("cauchy" if law.mode == "eigen" else "d")
    if which == "cauchy":
        g, gp = law.cauchy(z)
    elif which == "phi":
        g, gp = law.phi(z, q)
    elif which == "d":
        if law.mode != "singular":
            raise ValueError("the D transform is defined for singular value laws")
        g, gp = law.d_transform(z)
    else:
        raise ValueError(f"unknown transform {which!r}")
    return TransformValue(float(g), float(gp), float(z))


def bbp_threshold(law: LimitLaw, mode: str = None) -> float:
    """Signal strength a spike must exceed to separate from the bulk."""
    mode = _mode(law, mode)
    b = law.edge
    if law.is_atom:
        return 0.0
    if mode == "eigen":
        g, _ = law.cauchy(b, derivative=False)
        if not math.isfinite(g):
            raise DivergentTransformError("Cauchy transform diverges at the upper edge")
        return 1.0 / g
    if b <= 0:
        return 0.0
    d, _ = law.d_transform(b, derivative=False)
    if not math.isfinite(d):
        raise DivergentTransformError("D transform diverges at the upper edge")
    return d ** -0.5


@dataclass(frozen=True)
class SpikeForecast:
    theta: float
    location: float
    overlap: float
    above_threshold: bool


def _bisect_decreasing(func, target, lo, hi, tol=1e-10, max_iter=400):
    """Solve ``func(z) = target`` for a decreasing ``func`` on ``[lo, hi]``."""
    try:
        f_lo = func(lo) - target
    except DivergentTransformError:
        f_lo = math.inf
    if f_lo <= 0:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = func(mid) - target
        if abs(f_mid) <= tol or hi - lo <= 4e-16 * max(1.0, abs(mid)):
            return mid
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def spike_forecast(law: LimitLaw, theta: float, mode: str = None, side: str = "left") -> SpikeForecast:
    """Limiting outlier location and squared eigen/singular vector overlap."""
    mode = _mode(law, mode)
    if not theta > 0:
        raise ValueError("signal strength must be positive")
    b = law.edge
    thr = bbp_threshold(law, mode)
    if not theta > thr:
        return SpikeForecast(float(theta), b, 0.0, False)
    lo, hi = b + 1e-12, b + 10 * theta + 10
    if mode == "eigen":
        rho = _bisect_decreasing(lambda z: law.cauchy(z, False)[0], 1.0 / theta, lo, hi)
        g, gp = law.cauchy(rho)
        overlap = -g * g / gp
    else:
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        rho = _bisect_decreasing(lambda z: law.d_transform(z, False)[0], 1.0 / theta ** 2, lo, hi)
        d, dp = law.d_transform(rho)
        phi, _ = law.phi(rho, 1.0 if side == "left" else law.aspect, False)
        overlap = -2.0 * d * phi / dp
    overlap = min(1.0, max(0.0, overlap))
    return SpikeForecast(float(theta), float(rho), float(overlap), True)


def fdr_infinity_curve(law: LimitLaw, thetas, k_max: int, mode: str = None,
                       side: str = "left") -> np.ndarray:
    """``fdr_infinity(law, thetas, k)`` for ``k = 1..k_max`` in one pass."""
    if k_max < 1:
        raise ValueError("k must be at least 1")
    ks = np.arange(1, k_max + 1)
    sides = ("left", "right") if side == "both" else (side,)
    best = np.zeros(k_max)
    for s in sides:
        forecasts = (spike_forecast(law, t, mode, s) for t in sorted(thetas, reverse=True))
        overlaps = [f.overlap for f in forecasts if f.above_threshold]
        terms = np.zeros(k_max)
        r = min(k_max, len(overlaps))
        terms[:r] = overlaps[:r]
        best = np.maximum(best, np.clip(1.0 - np.cumsum(terms) / ks, 0.0, 1.0))
    return best


def fdr_infinity(law: LimitLaw, thetas, k: int, mode: str = None, side: str = "left") -> float:
    """Limiting FDR of the top-``k`` subspace for signal strengths ``thetas``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return float(fdr_infinity_curve(law, thetas, k, mode, side)[-1])


def law_quantile(law: LimitLaw, i: int, n: int, tol: float = 1e-10) -> float:
    """Typical location ``gamma_i``: the law puts mass ``i/n`` above it."""
    if not 1 <= i <= n:
        raise ValueError(f"need 1 <= i <= n, got i={i}, n={n}")
    a, b = law.support
    target = i / n
    if i == n:
        return float(a)
    lo, hi = a, b
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        tail = law.mass(mid, b)
        if abs(tail - target) <= tol:
            return mid
        if tail > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
