"""Risk-report rendering shared by the CLI and the HTTP service.

The CSV table carries one row per phase in project order; the rankings and
degeneracy flags ride alongside in the JSON form and in console output.
"""

from __future__ import annotations

import csv
import io
import json

from .stats import RiskReport, SummaryStats, rank_risks

__all__ = ["CSV_COLUMNS", "build_report", "report_to_dict", "report_to_json", "report_to_csv"]

CSV_COLUMNS = ("phase", "mean", "sd", "q1", "q3", "iqr", "skewness", "excess_kurtosis")


def build_report(per_phase: dict[str, SummaryStats]) -> RiskReport:
    return rank_risks(list(per_phase.items()))


def report_to_dict(project_name: str, report: RiskReport, total: SummaryStats) -> dict:
    return {
        "project": project_name,
        "per_phase": {name: s.as_dict() for name, s in report.per_phase},
        "total": total.as_dict(),
        "spread_ranking": list(report.spread_ranking),
        "overrun_ranking": list(report.overrun_ranking),
        "degenerate": list(report.degenerate),
    }


def report_to_json(project_name: str, report: RiskReport, total: SummaryStats) -> str:
    return json.dumps(report_to_dict(project_name, report, total), indent=2, ensure_ascii=False) + "\n"


def _cell(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def report_to_csv(report: RiskReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for name, s in report.per_phase:
        writer.writerow(
            (
                name,
                _cell(s.mean),
                _cell(s.sd),
                _cell(s.q1),
                _cell(s.q3),
                _cell(s.iqr),
                _cell(s.skewness),
                _cell(s.excess_kurtosis),
            )
        )
    return out.getvalue()
