"""Effort distributions: analytic moments, CDF/quantile, inverse-transform
sampling, method-of-moments fitting and Kolmogorov-Smirnov fit quality.

Values are dimensionless effort units (person-days by convention). All
sampling goes through the quantile function, so one uniform variate in
[0, 1) maps to exactly one sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar, Sequence, Union

import numpy as np
from scipy.special import expit, ndtr, ndtri

__all__ = [
    "FAMILIES",
    "Distribution",
    "PointValue",
    "Normal",
    "Triangular",
    "Uniform",
    "Logistic",
    "FitResult",
    "DistributionError",
    "FitError",
    "InsufficientDataError",
    "InfeasibleFamilyError",
    "validate",
    "mean",
    "variance",
    "support",
    "cdf",
    "quantile",
    "sample",
    "fit_family",
    "ks_statistic",
    "best_fit",
]

# Default search order for fitting; also the canonical family-tag order.
FAMILIES = ("point", "normal", "triangular", "uniform", "logistic")

# Smallest p forwarded to unbounded quantiles so a u == 0.0 variate cannot
# produce -inf samples.
_TINY_P = 5e-324


class DistributionError(ValueError):
    """An operation was applied to a distribution violating its invariants."""


class FitError(ValueError):
    """Base class for fitting failures."""


class InsufficientDataError(FitError):
    """Too few data points to fit."""


class InfeasibleFamilyError(FitError):
    """The requested family cannot represent the data (or no family can)."""


@dataclass(frozen=True)
class PointValue:
    """Degenerate distribution: a known quantity with zero variance."""

    value: float
    family: ClassVar[str] = "point"
    param_count: ClassVar[int] = 1

    def violations(self) -> list[str]:
        if not math.isfinite(self.value):
            return ["value must be finite"]
        return []

    def params(self) -> dict[str, float]:
        return {"value": float(self.value)}


@dataclass(frozen=True)
class Normal:
    mean: float
    sd: float
    family: ClassVar[str] = "normal"
    param_count: ClassVar[int] = 2

    def violations(self) -> list[str]:
        out = []
        if not (math.isfinite(self.mean) and math.isfinite(self.sd)):
            out.append("parameters must be finite")
        if not self.sd > 0:
            out.append("sd must be > 0")
        return out

    def params(self) -> dict[str, float]:
        return {"mean": float(self.mean), "sd": float(self.sd)}


@dataclass(frozen=True)
class Triangular:
    """Three-point estimate: minimum, most likely and maximum effort."""

    min: float
    mode: float
    max: float
    family: ClassVar[str] = "triangular"
    param_count: ClassVar[int] = 3

    def violations(self) -> list[str]:
        out = []
        if not all(math.isfinite(v) for v in (self.min, self.mode, self.max)):
            return ["parameters must be finite"]
        if not self.min < self.max:
            out.append("min must be < max")
        if not self.min <= self.mode <= self.max:
            out.append("mode must lie within [min, max]")
        return out

    def params(self) -> dict[str, float]:
        return {"min": float(self.min), "mode": float(self.mode), "max": float(self.max)}


@dataclass(frozen=True)
class Uniform:
    min: float
    max: float
    family: ClassVar[str] = "uniform"
    param_count: ClassVar[int] = 2

    def violations(self) -> list[str]:
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            return ["parameters must be finite"]
        if not self.min < self.max:
            return ["min must be < max"]
        return []

    def params(self) -> dict[str, float]:
        return {"min": float(self.min), "max": float(self.max)}


@dataclass(frozen=True)
class Logistic:
    """Logistic distribution; appears as the winning fit on sparse history."""

    location: float
    scale: float
    family: ClassVar[str] = "logistic"
    param_count: ClassVar[int] = 2

    def violations(self) -> list[str]:
        out = []
        if not (math.isfinite(self.location) and math.isfinite(self.scale)):
            out.append("parameters must be finite")
        if not self.scale > 0:
            out.append("scale must be > 0")
        return out

    def params(self) -> dict[str, float]:
        return {"location": float(self.location), "scale": float(self.scale)}


Distribution = Union[PointValue, Normal, Triangular, Uniform, Logistic]

_FAMILY_CLASSES: dict[str, type] = {
    "point": PointValue,
    "normal": Normal,
    "triangular": Triangular,
    "uniform": Uniform,
    "logistic": Logistic,
}


@dataclass(frozen=True)
class FitResult:
    """One fitted family with its goodness-of-fit score (lower is better)."""

    family: str
    fitted: Distribution
    ks_statistic: float
    sample_count: int


def validate(d: Distribution) -> list[str]:
    """Return every invariant violation; an empty list means the distribution is valid."""
    return d.violations()


def _check(d: Distribution) -> None:
    bad = d.violations()
    if bad:
        raise DistributionError(f"invalid {d.family} distribution: " + "; ".join(bad))


def _check_prob(p: np.ndarray) -> None:
    if np.any(np.isnan(p)) or np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("probability must lie in [0, 1]")


def _arr(x) -> tuple[np.ndarray, bool]:
    a = np.asarray(x, dtype=float)
    return a, a.ndim == 0


def _ret(a, scalar: bool):
    return float(a) if scalar else a


def mean(d: Distribution) -> float:
    """Exact analytic mean."""
    _check(d)
    if isinstance(d, PointValue):
        return float(d.value)
    if isinstance(d, Normal):
        return float(d.mean)
    if isinstance(d, Triangular):
        return (d.min + d.mode + d.max) / 3.0
    if isinstance(d, Uniform):
        return (d.min + d.max) / 2.0
    return float(d.location)


def variance(d: Distribution) -> float:
    """Exact analytic variance."""
    _check(d)
    if isinstance(d, PointValue):
        return 0.0
    if isinstance(d, Normal):
        return float(d.sd) ** 2
    if isinstance(d, Triangular):
        a, m, b = d.min, d.mode, d.max
        return (a * a + m * m + b * b - a * m - a * b - m * b) / 18.0
    if isinstance(d, Uniform):
        return (d.max - d.min) ** 2 / 12.0
    return (math.pi * d.scale) ** 2 / 3.0


def support(d: Distribution) -> tuple[float, float]:
    if isinstance(d, PointValue):
        return (float(d.value), float(d.value))
    if isinstance(d, (Normal, Logistic)):
        return (-math.inf, math.inf)
    return (float(d.min), float(d.max))


def cdf(d: Distribution, x):
    """Cumulative distribution function, vectorized over x."""
    _check(d)
    xs, scalar = _arr(x)
    if isinstance(d, PointValue):
        out = np.where(xs >= d.value, 1.0, 0.0)
    elif isinstance(d, Normal):
        out = ndtr((xs - d.mean) / d.sd)
    elif isinstance(d, Uniform):
        out = np.clip((xs - d.min) / (d.max - d.min), 0.0, 1.0)
    elif isinstance(d, Logistic):
        out = expit((xs - d.location) / d.scale)
    else:
        a, m, b = d.min, d.mode, d.max
        span = b - a
        left = (xs - a) ** 2 / (span * (m - a)) if m > a else np.zeros_like(xs)
        right = 1.0 - (b - xs) ** 2 / (span * (b - m)) if m < b else np.ones_like(xs)
        out = np.where(xs <= m, left, right)
        out = np.where(xs <= a, 0.0, out)
        out = np.where(xs >= b, 1.0, out)
    return _ret(out, scalar)


def quantile(d: Distribution, p):
    """Inverse CDF on the support, vectorized over p in [0, 1]."""
    _check(d)
    ps, scalar = _arr(p)
    _check_prob(ps)
    if isinstance(d, PointValue):
        out = np.full_like(ps, float(d.value))
    elif isinstance(d, Normal):
        out = d.mean + d.sd * ndtri(ps)
    elif isinstance(d, Uniform):
        out = d.min + ps * (d.max - d.min)
    elif isinstance(d, Logistic):
        with np.errstate(divide="ignore"):
            out = d.location + d.scale * (np.log(ps) - np.log1p(-ps))
    else:
        a, m, b = d.min, d.mode, d.max
        span = b - a
        fc = (m - a) / span
        lower = a + np.sqrt(ps * span * (m - a))
        upper = b - np.sqrt((1.0 - ps) * span * (b - m))
        out = np.where(ps <= fc, lower, upper)
    return _ret(out, scalar)


def sample(d: Distribution, u):
    """Inverse-transform sample: ``quantile(d, u)`` for a uniform variate in [0, 1).

    For unbounded families a u of exactly 0.0 is nudged to the smallest
    positive double so samples stay finite.
    """
    if isinstance(d, (Normal, Logistic)):
        us, scalar = _arr(u)
        us = np.where(us == 0.0, _TINY_P, us)
        return quantile(d, _ret(us, scalar))
    return quantile(d, u)


def fit_family(data: Sequence[float], family: str) -> Distribution:
    """Method-of-moments fit of one family to observed effort values.

    Bounded families (uniform, triangular) are widened, with a 1e-9 relative
    margin, whenever the moment-matched support would exclude observed points.
    """
    if family not in _FAMILY_CLASSES:
        raise ValueError(f"unknown distribution family: {family!r}")
    xs = np.asarray(list(data), dtype=float)
    if xs.size < 3:
        raise InsufficientDataError(f"need at least 3 data points, got {xs.size}")
    m = float(np.mean(xs))
    s = float(np.std(xs, ddof=1))
    if family == "point":
        return PointValue(m)
    if s <= 0.0:
        raise InfeasibleFamilyError(
            f"zero-variance data admits only the point family, not {family!r}"
        )
    if family == "normal":
        return Normal(m, s)
    if family == "logistic":
        return Logistic(m, s * math.sqrt(3.0) / math.pi)
    if family == "uniform":
        lo, hi = _cover(m - math.sqrt(3.0) * s, m + math.sqrt(3.0) * s, xs)
        return Uniform(lo, hi)
    # triangular: symmetric fallback, three-parameter MoM from mean/sd alone
    # is underdetermined
    lo, hi = _cover(m - math.sqrt(6.0) * s, m + math.sqrt(6.0) * s, xs)
    return Triangular(lo, m, hi)


def _cover(lo: float, hi: float, xs: np.ndarray) -> tuple[float, float]:
    dmin, dmax = float(xs.min()), float(xs.max())
    pad = 1e-9 * max(abs(dmin), abs(dmax), 1.0)
    if dmin < lo:
        lo = dmin - pad
    if dmax > hi:
        hi = dmax + pad
    return lo, hi


def ks_statistic(data: Sequence[float], d: Distribution) -> float:
    """Two-sided Kolmogorov-Smirnov statistic of data against d.

    D = max over the sorted sample of max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n).
    """
    xs = np.sort(np.asarray(list(data), dtype=float))
    n = xs.size
    if n == 0:
        raise ValueError("data must be nonempty")
    f = np.asarray(cdf(d, xs), dtype=float)
    i = np.arange(1, n + 1, dtype=float)
    d_plus = float(np.max(i / n - f))
    d_minus = float(np.max(f - (i - 1) / n))
    return max(d_plus, d_minus)


def best_fit(data: Sequence[float], families: Sequence[str] = FAMILIES) -> list[FitResult]:
    """Fit every feasible family and rank ascending by K-S statistic.

    Ties break on fewer parameters, then on position in ``families``.
    """
    xs = np.asarray(list(data), dtype=float)
    if xs.size < 3:
        raise InsufficientDataError(f"need at least 3 data points, got {xs.size}")
    ranked: list[tuple[float, int, int, FitResult]] = []
    for pos, fam in enumerate(families):
        if fam not in _FAMILY_CLASSES:
            raise ValueError(f"unknown distribution family: {fam!r}")
        try:
            fitted = fit_family(xs, fam)
        except InfeasibleFamilyError:
            continue
        ks = ks_statistic(xs, fitted)
        ranked.append(
            (ks, _FAMILY_CLASSES[fam].param_count, pos,
             FitResult(fam, fitted, ks, int(xs.size)))
        )
    if not ranked:
        raise InfeasibleFamilyError("no feasible family for the given data")
    ranked.sort(key=lambda t: t[:3])
    return [r[-1] for r in ranked]
