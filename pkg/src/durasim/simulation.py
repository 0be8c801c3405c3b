"""Monte Carlo propagation of work-package effort through the project sum.

The model is additive: each iteration draws one effort value per work
package and the project outcome is their sum. Draw i of item j comes from a
substream that is a pure function of (seed, j, i), so results are
bit-identical for any worker count.

Summation order is fixed and documented because exact additivity is part of
the contract: a phase value is the left fold of its items' values in
document order, and the total is the left fold of the phase values in phase
order. Tests that recompute sums must use the same grouping.

Runs up to RETAIN_LIMIT iterations keep the total sample vector in memory
and compute exact statistics. Longer runs stream in fixed-size chunks:
moments come from shifted power sums, histograms are exact, and quartiles
are interpolated from a fine fixed-bin histogram (a deterministic
approximation, noted in the docs).
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import rng
from .distributions import Distribution, best_fit, mean as dist_mean, sample
from .history import HistoryStore
from .stats import (
    SummaryStats,
    auto_bin_count,
    bin_edges,
    count_into,
    summarize,
)
from .wbs import (
    HistoricalEstimate,
    ManualEstimate,
    Phase,
    Project,
    WorkPackage,
    distribution_to_dict,
)

__all__ = [
    "RETAIN_LIMIT",
    "SimulationConfig",
    "SimulationResult",
    "ComparisonRow",
    "ComparisonReport",
    "InsufficientHistoryError",
    "resolve_estimate",
    "run",
    "compare",
    "result_to_json",
    "summary_from_dict",
    "LoadedResult",
    "load_result",
]

# Iteration count above which per-sample vectors are no longer retained.
RETAIN_LIMIT = 1_000_000

_CHUNK = 1 << 18
_FINE_BINS = 4096

# Hard floor for fitting; resolution thresholds below it are meaningless.
_FIT_FLOOR = 3


class InsufficientHistoryError(ValueError):
    def __init__(self, key: str, found: int, required: int, item_id: str | None = None):
        prefix = f"work package {item_id!r}: " if item_id else ""
        super().__init__(
            f"{prefix}history key {key!r} has {found} usable record(s), {required} required"
        )
        self.key = key
        self.found = found
        self.required = required
        self.item_id = item_id


@dataclass(frozen=True)
class SimulationConfig:
    """n, the seed, and the resolution threshold for historical estimates.

    The recommended band for iterations is 5,000 to 10,000; the default sits
    at the top of it.
    """

    iterations: int = 10_000
    seed: int = 0
    min_history_points: int = 5

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.min_history_points < 1:
            raise ValueError("min_history_points must be >= 1")

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "seed": self.seed,
            "min_history_points": self.min_history_points,
        }


@dataclass(frozen=True)
class SimulationResult:
    project: Project
    config: SimulationConfig
    resolved: dict[str, Distribution]
    per_item: dict[str, SummaryStats]
    per_phase: dict[str, SummaryStats]
    total: SummaryStats
    total_samples: np.ndarray | None
    phase_samples: dict[str, np.ndarray] | None = None


def resolve_estimate(
    spec, history: HistoryStore, min_history_points: int = 5
) -> Distribution:
    """Manual estimates pass through; historical ones become the best-fitting
    family over the key's stored actuals."""
    if isinstance(spec, ManualEstimate):
        return spec.distribution
    if isinstance(spec, HistoricalEstimate):
        values = history.records_for(spec.key)
        required = max(min_history_points, _FIT_FLOOR)
        if len(values) < required:
            raise InsufficientHistoryError(spec.key, len(values), required)
        return best_fit(values, spec.families)[0].fitted
    raise TypeError(f"unknown estimate spec {type(spec).__name__}")


def _resolve_all(
    project: Project, history: HistoryStore, min_points: int
) -> tuple[list[tuple[Phase, WorkPackage, Distribution]], dict[str, Distribution]]:
    rows = []
    resolved: dict[str, Distribution] = {}
    for phase, wp in project.items():
        try:
            d = resolve_estimate(wp.estimate, history, min_points)
        except InsufficientHistoryError as e:
            raise InsufficientHistoryError(e.key, e.found, e.required, wp.id) from None
        rows.append((phase, wp, d))
        resolved[wp.id] = d
    return rows, resolved


def run(
    project: Project,
    config: SimulationConfig,
    history: HistoryStore | None = None,
    *,
    workers: int = 1,
    retain_limit: int = RETAIN_LIMIT,
    keep_phase_samples: bool = False,
) -> SimulationResult:
    """Simulate the project sum for config.iterations draws."""
    history = history if history is not None else HistoryStore()
    rows, resolved = _resolve_all(project, history, config.min_history_points)
    n = config.iterations
    if n <= retain_limit:
        return _run_retained(project, config, rows, resolved, workers, keep_phase_samples)
    return _run_streamed(project, config, rows, resolved, workers)


def _item_vector(seed: int, index: int, d: Distribution, start: int, count: int) -> np.ndarray:
    us = rng.item_uniforms(seed, index, start, count)
    return np.asarray(sample(d, us), dtype=float)


def _run_retained(project, config, rows, resolved, workers, keep_phase_samples):
    n = config.iterations
    per_item: dict[str, SummaryStats] = {}
    phase_vectors: dict[str, np.ndarray] = {}

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [
            pool.submit(_item_vector, config.seed, j, d, 0, n)
            for j, (_, _, d) in enumerate(rows)
        ]
        vectors = [f.result() for f in futures]

    for (phase, wp, _), xs in zip(rows, vectors):
        per_item[wp.id] = summarize(xs)
        acc = phase_vectors.get(phase.name)
        phase_vectors[phase.name] = xs if acc is None else acc + xs

    total = None
    for phase in project.phases:
        v = phase_vectors[phase.name]
        total = v if total is None else total + v

    per_phase = {p.name: summarize(phase_vectors[p.name]) for p in project.phases}
    return SimulationResult(
        project=project,
        config=config,
        resolved=resolved,
        per_item=per_item,
        per_phase=per_phase,
        total=summarize(total),
        total_samples=total,
        phase_samples=dict(phase_vectors) if keep_phase_samples else None,
    )


class _StreamAcc:
    """Running min/max and power sums around a fixed pivot for one stream."""

    __slots__ = ("pivot", "count", "minimum", "maximum", "s1", "s2", "s3", "s4")

    def __init__(self, pivot: float):
        self.pivot = pivot
        self.count = 0
        self.minimum = np.inf
        self.maximum = -np.inf
        self.s1 = self.s2 = self.s3 = self.s4 = 0.0

    def update(self, xs: np.ndarray) -> None:
        self.count += xs.size
        self.minimum = min(self.minimum, float(xs.min()))
        self.maximum = max(self.maximum, float(xs.max()))
        d = xs - self.pivot
        d2 = d * d
        self.s1 += float(np.sum(d))
        self.s2 += float(np.sum(d2))
        self.s3 += float(np.sum(d2 * d))
        self.s4 += float(np.sum(d2 * d2))

    def moments(self) -> tuple[float, float, float | None, float | None]:
        n = self.count
        a1 = self.s1 / n
        m2 = self.s2 / n - a1 * a1
        ss = max(0.0, self.s2 - self.s1 * self.s1 / n)
        sd = float(np.sqrt(ss / (n - 1))) if n > 1 else 0.0
        if sd == 0.0 or m2 <= 0.0:
            return self.pivot + a1, sd, None, None
        a2, a3, a4 = self.s2 / n, self.s3 / n, self.s4 / n
        m3 = a3 - 3.0 * a1 * a2 + 2.0 * a1**3
        m4 = a4 - 4.0 * a1 * a3 + 6.0 * a1 * a1 * a2 - 3.0 * a1**4
        return self.pivot + a1, sd, m3 / m2**1.5, m4 / (m2 * m2) - 3.0


def _hist_quantile(edges: np.ndarray, cum: np.ndarray, n: int, q: float) -> float:
    # type-7 rank, interpolated linearly inside the covering bin
    r = (n - 1) * q + 1.0
    k = int(np.searchsorted(cum, r, side="left"))
    if k == 0:
        return float(edges[0])
    k = min(k, len(edges) - 1)
    span = cum[k] - cum[k - 1]
    frac = (r - cum[k - 1]) / span if span > 0 else 1.0
    return float(edges[k - 1] + frac * (edges[k] - edges[k - 1]))


def _finish_stream(acc: _StreamAcc, counts: np.ndarray, edges: np.ndarray,
                   fine_counts: np.ndarray, fine_edges: np.ndarray) -> SummaryStats:
    n = acc.count
    mean_, sd, skew, kurt = acc.moments()
    if acc.minimum == acc.maximum:
        q1 = med = q3 = acc.minimum
    else:
        cum = np.concatenate([[0.0], np.cumsum(fine_counts)])
        q1 = _hist_quantile(fine_edges, cum, n, 0.25)
        med = _hist_quantile(fine_edges, cum, n, 0.5)
        q3 = _hist_quantile(fine_edges, cum, n, 0.75)
    hist = tuple(
        (float(edges[i]), float(edges[i + 1]), int(counts[i]))
        for i in range(len(edges) - 1)
    )
    return SummaryStats(
        count=n, mean=mean_, sd=sd, minimum=acc.minimum, maximum=acc.maximum,
        median=med, q1=q1, q3=q3, iqr=q3 - q1, variance=sd * sd,
        skewness=skew, excess_kurtosis=kurt, histogram=hist,
    )


def _run_streamed(project, config, rows, resolved, workers):
    n = config.iterations
    seed = config.seed
    phase_names = [p.name for p in project.phases]
    item_pivots = [dist_mean(d) for _, _, d in rows]
    phase_pivots = {name: 0.0 for name in phase_names}
    for (phase, _, _), m in zip(rows, item_pivots):
        phase_pivots[phase.name] += m

    item_accs = [_StreamAcc(m) for m in item_pivots]
    phase_accs = {name: _StreamAcc(phase_pivots[name]) for name in phase_names}
    total_acc = _StreamAcc(sum(phase_pivots[name] for name in phase_names))

    def chunks():
        lo = 0
        while lo < n:
            hi = min(lo + _CHUNK, n)
            yield lo, hi - lo
            lo = hi

    def fold_chunk(pool, start, count):
        futures = [
            pool.submit(_item_vector, seed, j, d, start, count)
            for j, (_, _, d) in enumerate(rows)
        ]
        vectors = [f.result() for f in futures]
        phase_vecs: dict[str, np.ndarray] = {}
        for (phase, _, _), xs in zip(rows, vectors):
            acc = phase_vecs.get(phase.name)
            phase_vecs[phase.name] = xs if acc is None else acc + xs
        total = None
        for name in phase_names:
            v = phase_vecs[name]
            total = v if total is None else total + v
        return vectors, phase_vecs, total

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        # pass 1: extrema and moment sums
        for start, count in chunks():
            vectors, phase_vecs, total = fold_chunk(pool, start, count)
            for acc, xs in zip(item_accs, vectors):
                acc.update(xs)
            for name in phase_names:
                phase_accs[name].update(phase_vecs[name])
            total_acc.update(total)

        # pass 2: regenerate identically and bin against the final edges
        k = auto_bin_count(n)
        item_edges = [bin_edges(a.minimum, a.maximum, k) for a in item_accs]
        phase_edges = {nm: bin_edges(a.minimum, a.maximum, k) for nm, a in phase_accs.items()}
        total_edges = bin_edges(total_acc.minimum, total_acc.maximum, k)
        item_fine = [bin_edges(a.minimum, a.maximum, _FINE_BINS) for a in item_accs]
        phase_fine = {nm: bin_edges(a.minimum, a.maximum, _FINE_BINS) for nm, a in phase_accs.items()}
        total_fine = bin_edges(total_acc.minimum, total_acc.maximum, _FINE_BINS)

        item_counts = [np.zeros(len(e) - 1, dtype=np.int64) for e in item_edges]
        phase_counts = {nm: np.zeros(len(e) - 1, dtype=np.int64) for nm, e in phase_edges.items()}
        total_counts = np.zeros(len(total_edges) - 1, dtype=np.int64)
        item_fine_counts = [np.zeros(len(e) - 1, dtype=np.int64) for e in item_fine]
        phase_fine_counts = {nm: np.zeros(len(e) - 1, dtype=np.int64) for nm, e in phase_fine.items()}
        total_fine_counts = np.zeros(len(total_fine) - 1, dtype=np.int64)

        for start, count in chunks():
            vectors, phase_vecs, total = fold_chunk(pool, start, count)
            for i, xs in enumerate(vectors):
                item_counts[i] += count_into(xs, item_edges[i])
                item_fine_counts[i] += count_into(xs, item_fine[i])
            for name in phase_names:
                phase_counts[name] += count_into(phase_vecs[name], phase_edges[name])
                phase_fine_counts[name] += count_into(phase_vecs[name], phase_fine[name])
            total_counts += count_into(total, total_edges)
            total_fine_counts += count_into(total, total_fine)

    per_item = {
        wp.id: _finish_stream(acc, item_counts[i], item_edges[i],
                              item_fine_counts[i], item_fine[i])
        for i, ((_, wp, _), acc) in enumerate(zip(rows, item_accs))
    }
    per_phase = {
        name: _finish_stream(phase_accs[name], phase_counts[name], phase_edges[name],
                             phase_fine_counts[name], phase_fine[name])
        for name in phase_names
    }
    total_stats = _finish_stream(total_acc, total_counts, total_edges,
                                 total_fine_counts, total_fine)
    return SimulationResult(
        project=project, config=config, resolved=resolved,
        per_item=per_item, per_phase=per_phase, total=total_stats,
        total_samples=None,
    )


@dataclass(frozen=True)
class ComparisonRow:
    scope: str
    metric: str
    before: float | None
    after: float | None
    delta: float | None
    verdict: str


@dataclass(frozen=True)
class ComparisonReport:
    project_name: str
    iterations: int
    rows: tuple[ComparisonRow, ...]


# Direction of improvement per metric: sd and iqr shrink toward certainty;
# kurtosis growing means a more pronounced central spike; mean is neutral
# information.
_METRICS = (
    ("mean", lambda s: s.mean, None),
    ("sd", lambda s: s.sd, -1),
    ("iqr", lambda s: s.iqr, -1),
    ("excess_kurtosis", lambda s: s.excess_kurtosis, +1),
)


def compare(before: SimulationResult, after: SimulationResult) -> ComparisonReport:
    """Tabulate metric deltas between two runs of the same project shape."""
    if before.project.name != after.project.name:
        raise ValueError(
            f"cannot compare different projects: {before.project.name!r} vs {after.project.name!r}"
        )
    if before.config.iterations != after.config.iterations:
        raise ValueError("cannot compare runs with different iteration counts")
    if list(before.per_phase) != list(after.per_phase):
        raise ValueError("cannot compare runs with different phase structure")
    rows: list[ComparisonRow] = []
    scopes = [("total", before.total, after.total)] + [
        (name, before.per_phase[name], after.per_phase[name]) for name in before.per_phase
    ]
    for scope, b, a in scopes:
        for metric, get, sign in _METRICS:
            bv, av = get(b), get(a)
            if bv is None or av is None:
                rows.append(ComparisonRow(scope, metric, bv, av, None, "n/a"))
                continue
            delta = av - bv
            if sign is None:
                verdict = "n/a"
            elif delta == 0:
                verdict = "unchanged"
            else:
                verdict = "improved" if delta * sign > 0 else "worsened"
            rows.append(ComparisonRow(scope, metric, bv, av, delta, verdict))
    return ComparisonReport(before.project.name, before.config.iterations, tuple(rows))


def comparison_to_dict(report: ComparisonReport) -> dict:
    return {
        "project": report.project_name,
        "iterations": report.iterations,
        "rows": [
            {
                "scope": r.scope,
                "metric": r.metric,
                "before": r.before,
                "after": r.after,
                "delta": r.delta,
                "verdict": r.verdict,
            }
            for r in report.rows
        ],
    }


def result_to_json(result: SimulationResult, include_samples: bool = False) -> str:
    """Canonical result document; sample vector included only on request."""
    doc: dict = {
        "project": result.project.name,
        "config": result.config.as_dict(),
        "resolved": {k: distribution_to_dict(d) for k, d in result.resolved.items()},
        "per_item": {k: s.as_dict() for k, s in result.per_item.items()},
        "per_phase": {k: s.as_dict() for k, s in result.per_phase.items()},
        "total": result.total.as_dict(),
    }
    if include_samples:
        if result.total_samples is None:
            raise ValueError("total samples were not retained for this run")
        doc["total_samples"] = [float(v) for v in result.total_samples]
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def summary_from_dict(obj: Mapping) -> SummaryStats:
    try:
        hist = tuple((float(lo), float(hi), int(c)) for lo, hi, c in obj["histogram"])
        return SummaryStats(
            count=int(obj["count"]), mean=float(obj["mean"]), sd=float(obj["sd"]),
            minimum=float(obj["minimum"]), maximum=float(obj["maximum"]),
            median=float(obj["median"]), q1=float(obj["q1"]), q3=float(obj["q3"]),
            iqr=float(obj["iqr"]), variance=float(obj["variance"]),
            skewness=None if obj["skewness"] is None else float(obj["skewness"]),
            excess_kurtosis=None if obj["excess_kurtosis"] is None else float(obj["excess_kurtosis"]),
            histogram=hist,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"malformed summary statistics block: {e}") from None


@dataclass(frozen=True)
class LoadedResult:
    """A result document read back for reporting."""

    project_name: str
    config: dict
    per_item: dict[str, SummaryStats]
    per_phase: dict[str, SummaryStats]
    total: SummaryStats


def load_result(document: str | bytes) -> LoadedResult:
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as e:
        raise ValueError(f"invalid result JSON: {e}") from None
    try:
        return LoadedResult(
            project_name=doc["project"],
            config=dict(doc["config"]),
            per_item={k: summary_from_dict(v) for k, v in doc["per_item"].items()},
            per_phase={k: summary_from_dict(v) for k, v in doc["per_phase"].items()},
            total=summary_from_dict(doc["total"]),
        )
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed result document: {e}") from None
