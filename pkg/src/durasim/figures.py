"""Figure rendering for the report workflow.

Charts are drawn from the already-computed statistics, never from raw
samples: the histogram uses the result's own bins so the picture and the
numbers cannot disagree, and the radar charts plot per-phase shape metrics
with distance from center encoding risk (outermost = riskiest). The
kurtosis axis is inverted for that reason: the most negative excess
kurtosis, the widest and flattest outcome spread, sits outermost.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .stats import SummaryStats

__all__ = ["render_histogram", "render_risk_radar", "render_report_figures"]


def render_histogram(stats: SummaryStats, title: str, path: str | Path) -> Path:
    """Bar chart of the stored histogram bins."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    lefts = [lo for lo, _, _ in stats.histogram]
    widths = [hi - lo for lo, hi, _ in stats.histogram]
    counts = [c for _, _, c in stats.histogram]
    ax.bar(lefts, counts, width=widths, align="edge", color="#4878a8", edgecolor="white", linewidth=0.4)
    ax.set_title(title)
    ax.set_xlabel("effort (person-days)")
    ax.set_ylabel("iterations")
    ax.axvline(stats.mean, color="#c44e52", linestyle="--", linewidth=1.2, label=f"mean {stats.mean:.1f}")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def _risk_scores(values: list[float | None], invert: bool) -> list[float]:
    present = [v for v in values if v is not None]
    if not present:
        return [0.0 for _ in values]
    lo, hi = min(present), max(present)
    span = hi - lo
    scores = []
    for v in values:
        if v is None:
            scores.append(0.0)
        elif span == 0.0:
            scores.append(0.5)
        elif invert:
            scores.append((hi - v) / span)
        else:
            scores.append((v - lo) / span)
    return scores


def render_risk_radar(
    per_phase: list[tuple[str, float | None]],
    metric_label: str,
    title: str,
    path: str | Path,
    invert: bool = False,
) -> Path:
    """Radar of one shape metric across phases; axes are phases in project
    order. With fewer than three phases a radar is unreadable, so a bar
    chart stands in."""
    path = Path(path)
    names = [name for name, _ in per_phase]
    values = [v for _, v in per_phase]
    scores = _risk_scores(values, invert)
    labels = [
        f"{name}\n({metric_label} {'n/a' if v is None else format(v, '.3f')})"
        for name, v in per_phase
    ]
    if len(per_phase) < 3:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.barh(names, scores, color="#4878a8")
        ax.set_xlim(0, 1.05)
        ax.set_xlabel("relative risk (1 = riskiest)")
        for i, v in enumerate(values):
            ax.text(0.02, i, "n/a" if v is None else format(v, ".3f"), va="center", color="white")
        ax.set_title(title)
    else:
        angles = np.linspace(0, 2 * np.pi, len(per_phase), endpoint=False)
        closed_angles = np.concatenate([angles, angles[:1]])
        closed_scores = np.array(scores + scores[:1])
        fig, ax = plt.subplots(figsize=(7.5, 7), subplot_kw={"projection": "polar"})
        ax.plot(closed_angles, closed_scores, color="#4878a8", linewidth=1.6)
        ax.fill(closed_angles, closed_scores, color="#4878a8", alpha=0.25)
        ax.set_xticks(angles)
        ax.set_xticklabels(labels, fontsize=8)
        ax.set_yticks([0.25, 0.5, 0.75, 1.0])
        ax.set_yticklabels([])
        ax.set_ylim(0, 1.05)
        ax.set_title(title, pad=24)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_report_figures(
    per_phase: dict[str, SummaryStats], total: SummaryStats, out_dir: str | Path, stem: str
) -> list[Path]:
    """The report's three figures: total histogram, kurtosis radar (spread
    risk), skewness radar (overrun risk)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kurt = [(name, s.excess_kurtosis) for name, s in per_phase.items()]
    skew = [(name, s.skewness) for name, s in per_phase.items()]
    return [
        render_histogram(total, "Total duration distribution", out_dir / f"{stem}_total_histogram.png"),
        render_risk_radar(
            kurt, "excess kurtosis", "Spread risk by phase (outermost = widest spread)",
            out_dir / f"{stem}_kurtosis_radar.png", invert=True,
        ),
        render_risk_radar(
            skew, "skewness", "Overrun risk by phase (outermost = most overrun-prone)",
            out_dir / f"{stem}_skewness_radar.png",
        ),
    ]
