"""Summary statistics and per-phase risk rankings for simulation output.

Conventions that downstream readers depend on:

* sd is the sample standard deviation (n - 1 denominator); a single sample
  reports sd 0.
* skewness and excess kurtosis use population central moments (n
  denominator): g1 = m3 / m2^1.5, g2 = m4 / m2**2 - 3. Excess means a
  normal distribution scores 0; negative values read as flatter-than-normal.
* quartiles interpolate linearly between order statistics (the type-7
  rule), so IQR values are comparable with most spreadsheet software.
* zero-variance streams report skewness and kurtosis as None rather than
  0 or an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "SummaryStats",
    "RiskReport",
    "summarize",
    "histogram",
    "rank_risks",
]

Bin = tuple[float, float, int]

AUTO_BIN_MIN = 10
AUTO_BIN_MAX = 100


@dataclass(frozen=True)
class SummaryStats:
    """Moments, quartiles and histogram of one output stream."""

    count: int
    mean: float
    sd: float
    minimum: float
    maximum: float
    median: float
    q1: float
    q3: float
    iqr: float
    variance: float
    skewness: float | None
    excess_kurtosis: float | None
    histogram: tuple[Bin, ...]

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "sd": self.sd,
            "minimum": self.minimum,
            "maximum": self.maximum,
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "iqr": self.iqr,
            "variance": self.variance,
            "skewness": self.skewness,
            "excess_kurtosis": self.excess_kurtosis,
            "histogram": [[lo, hi, n] for lo, hi, n in self.histogram],
        }


@dataclass(frozen=True)
class RiskReport:
    """Phase statistics plus the two orderings used for risk reading.

    spread_ranking: ascending excess kurtosis, most negative (widest,
    flattest outcome spread) first. overrun_ranking: descending skewness,
    most right-tailed (overrun-prone) first. Degenerate phases carry no
    shape statistics and always rank last, in input order.
    """

    per_phase: tuple[tuple[str, SummaryStats], ...]
    spread_ranking: tuple[str, ...]
    overrun_ranking: tuple[str, ...]
    degenerate: tuple[str, ...]


def auto_bin_count(n: int) -> int:
    return min(AUTO_BIN_MAX, max(AUTO_BIN_MIN, math.ceil(math.sqrt(n))))


def bin_edges(minimum: float, maximum: float, bin_count: int) -> np.ndarray:
    """Equal-width edges over [minimum, maximum]; a zero-width range gets a
    single unit-width bin centered on the value."""
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    if minimum == maximum:
        return np.array([minimum - 0.5, minimum + 0.5])
    return np.linspace(minimum, maximum, bin_count + 1)


def count_into(samples: np.ndarray, edges: np.ndarray) -> np.ndarray:
    # np.histogram closes the last bin on the right, so the maximum lands in
    # the final bin rather than spilling over.
    counts, _ = np.histogram(samples, bins=edges)
    return counts


def histogram(samples: Sequence[float], bin_count: int | None = None) -> tuple[Bin, ...]:
    """Equal-width histogram over [min, max]; bin_count None picks
    ceil(sqrt(n)) clamped to [10, 100]."""
    xs = np.asarray(samples, dtype=float)
    if xs.size == 0:
        raise ValueError("samples must be nonempty")
    k = auto_bin_count(xs.size) if bin_count is None else bin_count
    edges = bin_edges(float(xs.min()), float(xs.max()), k)
    counts = count_into(xs, edges)
    return tuple(
        (float(edges[i]), float(edges[i + 1]), int(counts[i]))
        for i in range(len(edges) - 1)
    )


def summarize(samples: Sequence[float], bin_count: int | None = None) -> SummaryStats:
    """Full summary of one sample stream. Raises ValueError on empty input."""
    xs = np.asarray(samples, dtype=float)
    if xs.size == 0:
        raise ValueError("samples must be nonempty")
    n = int(xs.size)
    m = float(np.mean(xs))
    sd = float(np.std(xs, ddof=1)) if n > 1 else 0.0
    q1, med, q3 = (float(v) for v in np.quantile(xs, [0.25, 0.5, 0.75]))
    if sd > 0.0:
        centered = xs - m
        m2 = float(np.mean(centered**2))
        m3 = float(np.mean(centered**3))
        m4 = float(np.mean(centered**4))
        skew: float | None = m3 / m2**1.5
        kurt: float | None = m4 / m2**2 - 3.0
    else:
        skew = None
        kurt = None
    return SummaryStats(
        count=n,
        mean=m,
        sd=sd,
        minimum=float(xs.min()),
        maximum=float(xs.max()),
        median=med,
        q1=q1,
        q3=q3,
        iqr=q3 - q1,
        variance=sd * sd,
        skewness=skew,
        excess_kurtosis=kurt,
        histogram=histogram(xs, bin_count),
    )


def rank_risks(per_phase: Sequence[tuple[str, SummaryStats]]) -> RiskReport:
    """Order phases by spread risk (kurtosis) and overrun risk (skewness).

    Ties break toward the larger IQR, then input order. Degenerate phases
    (sd 0, no shape statistics) always come last in both rankings.
    """
    degenerate = tuple(name for name, s in per_phase if s.sd == 0.0)

    def ordering(key_of) -> tuple[str, ...]:
        keyed = []
        for pos, (name, s) in enumerate(per_phase):
            if s.sd == 0.0:
                keyed.append(((1, 0.0, 0.0, pos), name))
            else:
                keyed.append(((0, key_of(s), -s.iqr, pos), name))
        keyed.sort(key=lambda t: t[0])
        return tuple(name for _, name in keyed)

    return RiskReport(
        per_phase=tuple(per_phase),
        spread_ranking=ordering(lambda s: s.excess_kurtosis),
        overrun_ranking=ordering(lambda s: -s.skewness),
        degenerate=degenerate,
    )
