"""Command line entry point.

Commands: template, simulate, report, freeze, whatif, history add|import|fit.
Exit codes: 0 success, 1 validation or domain error, 2 usage error.
The default history store path comes from DURASIM_HISTORY, falling back to
./history.jsonl.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import date
from pathlib import Path

from .distributions import FAMILIES, FitError
from .history import HistoryError, HistoryRecord, HistoryStore
from .reporting import build_report, report_to_csv, report_to_json
from .simulation import (
    InsufficientHistoryError,
    SimulationConfig,
    compare,
    comparison_to_dict,
    load_result,
    result_to_json,
    run,
)
from .wbs import (
    HistoricalEstimate,
    ManualEstimate,
    ProjectError,
    default_template,
    freeze,
    parse_distribution,
    parse_project,
    serialize_project,
    set_estimate,
)

_DOMAIN_ERRORS = (ProjectError, HistoryError, FitError, InsufficientHistoryError, OSError)


def _default_store() -> str:
    return os.environ.get("DURASIM_HISTORY", "history.jsonl")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _nonnegative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _freeze_override(text: str) -> tuple[str, float]:
    item_id, sep, actual = text.partition("=")
    if not sep or not item_id:
        raise argparse.ArgumentTypeError("expected ID=ACTUAL")
    return item_id, _nonnegative_float(actual)


def _estimate_override(text: str) -> tuple[str, object]:
    """ID=TYPE:p1,p2,... — e.g. CR=uniform:30,100 or QP=historical:quality-plan."""
    item_id, sep, spec = text.partition("=")
    if not sep or not item_id:
        raise argparse.ArgumentTypeError("expected ID=TYPE:params")
    family, sep, params = spec.partition(":")
    if family == "historical":
        if not params:
            raise argparse.ArgumentTypeError("historical estimate needs a key")
        return item_id, HistoricalEstimate(params)
    from .wbs import _FAMILY_PARSERS  # family -> (class, field names)

    if family not in _FAMILY_PARSERS:
        raise argparse.ArgumentTypeError(f"unknown distribution type {family!r}")
    _, fields = _FAMILY_PARSERS[family]
    parts = params.split(",") if params else []
    if len(parts) != len(fields):
        raise argparse.ArgumentTypeError(
            f"{family} takes {len(fields)} parameter(s): {','.join(fields)}"
        )
    try:
        values = {f: float(p) for f, p in zip(fields, parts)}
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric parameter in {params!r}") from None
    try:
        d = parse_distribution({"type": family, "params": values}, "estimate")
    except ProjectError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    return item_id, ManualEstimate(d)


def _family_list(text: str) -> tuple[str, ...]:
    families = tuple(f.strip() for f in text.split(",") if f.strip())
    if not families:
        raise argparse.ArgumentTypeError("expected a comma-separated family list")
    for f in families:
        if f not in FAMILIES:
            raise argparse.ArgumentTypeError(f"unknown family {f!r}")
    return families


def _iso_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected YYYY-MM-DD") from None


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.2f}"


def _print_total(result) -> None:
    s = result.total
    cfg = result.config
    print(f"Project {result.project.name!r}: {cfg.iterations} iterations, seed {cfg.seed}")
    print("Total duration")
    for label, value in (
        ("mean", s.mean), ("sd", s.sd), ("minimum", s.minimum), ("q1", s.q1),
        ("median", s.median), ("q3", s.q3), ("maximum", s.maximum), ("iqr", s.iqr),
        ("skewness", s.skewness), ("excess kurtosis", s.excess_kurtosis),
    ):
        print(f"  {label:<16}{_fmt(value)}")


def cmd_template(args) -> int:
    Path(args.output).write_text(serialize_project(default_template()), encoding="utf-8")
    print(f"wrote {args.output}")
    return 0


def _derive_result_path(project_path: str) -> Path:
    p = Path(project_path)
    return p.with_suffix(".result.json") if p.suffix == ".json" else Path(str(p) + ".result.json")


def cmd_simulate(args) -> int:
    project = parse_project(Path(args.project).read_text(encoding="utf-8"))
    store = HistoryStore.load(args.history)
    config = SimulationConfig(
        iterations=args.iterations, seed=args.seed, min_history_points=args.min_history_points
    )
    result = run(project, config, store, workers=args.workers)
    out = Path(args.out) if args.out else _derive_result_path(args.project)
    out.write_text(result_to_json(result, include_samples=args.emit_samples), encoding="utf-8")
    _print_total(result)
    print(f"wrote {out}")
    return 0


def cmd_report(args) -> int:
    loaded = load_result(Path(args.result).read_text(encoding="utf-8"))
    report = build_report(loaded.per_phase)
    if args.format == "json":
        body = report_to_json(loaded.project_name, report, loaded.total)
    else:
        body = report_to_csv(report)
    if args.out:
        Path(args.out).write_text(body, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(body)
    print("Spread risk (widest outcome spread first): " + " > ".join(report.spread_ranking))
    print("Overrun risk (most overrun-prone first): " + " > ".join(report.overrun_ranking))
    if report.degenerate:
        print("Degenerate (zero-variance) phases: " + ", ".join(report.degenerate))
    if not args.no_figures:
        from .figures import render_report_figures

        anchor = Path(args.out) if args.out else Path(args.result)
        out_dir = anchor.parent if str(anchor.parent) else Path(".")
        stem = anchor.stem
        for path in render_report_figures(loaded.per_phase, loaded.total, out_dir, stem):
            print(f"wrote {path}")
    return 0


def cmd_freeze(args) -> int:
    project = parse_project(Path(args.project).read_text(encoding="utf-8"))
    frozen = freeze(project, args.id, args.actual)
    out = args.out or args.project
    Path(out).write_text(serialize_project(frozen), encoding="utf-8")
    print(f"froze {args.id} at {args.actual}; wrote {out}")
    return 0


def cmd_whatif(args) -> int:
    project = parse_project(Path(args.project).read_text(encoding="utf-8"))
    store = HistoryStore.load(args.history)
    scenario = project
    for item_id, actual in args.freeze or []:
        scenario = freeze(scenario, item_id, actual)
    for item_id, estimate in args.estimate or []:
        scenario = set_estimate(scenario, item_id, estimate)
    config = SimulationConfig(
        iterations=args.iterations, seed=args.seed, min_history_points=args.min_history_points
    )
    before = run(project, config, store, workers=args.workers)
    after = run(scenario, config, store, workers=args.workers)
    report = compare(before, after)
    if args.format == "json":
        import json

        sys.stdout.write(json.dumps(comparison_to_dict(report), indent=2, ensure_ascii=False) + "\n")
        return 0
    print(f"What-if for {report.project_name!r} ({report.iterations} iterations, shared seed {args.seed})")
    print(f"  {'scope':<28}{'metric':<18}{'before':>12}{'after':>12}{'delta':>12}  verdict")
    for r in report.rows:
        print(
            f"  {r.scope:<28}{r.metric:<18}{_fmt(r.before):>12}{_fmt(r.after):>12}"
            f"{_fmt(r.delta):>12}  {r.verdict}"
        )
    return 0


def cmd_history_add(args) -> int:
    store = HistoryStore.load(args.store)
    record = HistoryRecord(
        project_name=args.project,
        key=args.key,
        actual=args.actual,
        recorded_at=args.date,
        typical=not args.atypical,
    )
    store = store.add(record)
    store.save(args.store)
    count = len(store.records_for(args.key, include_atypical=True))
    print(f"recorded {args.actual} under {store.records[-1].key!r} ({count} record(s) total)")
    return 0


def cmd_history_import(args) -> int:
    store = HistoryStore.load(args.store)
    store, report = store.import_csv(Path(args.csv).read_text(encoding="utf-8"))
    store.save(args.store)
    print(f"imported {report.added} row(s), rejected {len(report.rejected)}")
    for lineno, reason in report.rejected:
        print(f"  line {lineno}: {reason}")
    return 0


def cmd_history_fit(args) -> int:
    store = HistoryStore.load(args.store)
    results = store.refit_ranked(args.key, args.families)
    print(f"fit ranking for key {args.key!r} ({results[0].sample_count} values)")
    print(f"  {'family':<12}{'ks':>10}  parameters")
    for fit in results:
        params = ", ".join(f"{k}={v:.4g}" for k, v in fit.fitted.params().items())
        print(f"  {fit.family:<12}{fit.ks_statistic:>10.5f}  {params}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="durasim",
        description="Monte Carlo duration estimation over a work breakdown structure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("template", help="write the default project template")
    p.add_argument("output", help="path for the project JSON file")
    p.set_defaults(handler=cmd_template)

    p = sub.add_parser("simulate", help="run the Monte Carlo simulation")
    p.add_argument("project", help="project JSON file")
    p.add_argument("--iterations", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--history", default=None, help="history store path (default: DURASIM_HISTORY or ./history.jsonl)")
    p.add_argument("--out", default=None, help="result JSON path (default: <project>.result.json)")
    p.add_argument("--emit-samples", action="store_true", help="include the total sample vector in the result file")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--min-history-points", type=_positive_int, default=5)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("report", help="per-phase risk report from a result file")
    p.add_argument("result", help="result JSON file from simulate")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="write the table here instead of stdout")
    p.add_argument("--no-figures", action="store_true", help="skip rendering histogram/radar images")
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("freeze", help="record a completed item's actual effort")
    p.add_argument("project", help="project JSON file")
    p.add_argument("id", help="work package id")
    p.add_argument("actual", type=_nonnegative_float, help="actual effort")
    p.add_argument("--out", default=None, help="output path (default: overwrite the project file)")
    p.set_defaults(handler=cmd_freeze)

    p = sub.add_parser("whatif", help="compare a scenario against the current project")
    p.add_argument("project", help="project JSON file")
    p.add_argument("--freeze", action="append", type=_freeze_override, metavar="ID=ACTUAL")
    p.add_argument("--estimate", action="append", type=_estimate_override, metavar="ID=TYPE:params")
    p.add_argument("--iterations", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--history", default=None)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--min-history-points", type=_positive_int, default=5)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(handler=cmd_whatif)

    p = sub.add_parser("history", help="manage the historical effort store")
    hsub = p.add_subparsers(dest="history_command", required=True)

    h = hsub.add_parser("add", help="append one actual-effort record")
    h.add_argument("--store", default=None)
    h.add_argument("--project", required=True, help="source project name")
    h.add_argument("--key", required=True, help="item or phase label (normalized)")
    h.add_argument("--actual", required=True, type=_nonnegative_float)
    h.add_argument("--date", type=_iso_date, default=None, help="YYYY-MM-DD (default: today)")
    h.add_argument("--atypical", action="store_true", help="exclude from default retrieval")
    h.set_defaults(handler=cmd_history_add)

    h = hsub.add_parser("import", help="bulk import records from CSV")
    h.add_argument("csv", help="CSV file with header project_name,key,actual,recorded_at,typical")
    h.add_argument("--store", default=None)
    h.set_defaults(handler=cmd_history_import)

    h = hsub.add_parser("fit", help="rank distribution fits for a key")
    h.add_argument("key")
    h.add_argument("--store", default=None)
    h.add_argument("--families", type=_family_list, default=FAMILIES)
    h.set_defaults(handler=cmd_history_fit)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "history", None) is None and hasattr(args, "history"):
        args.history = _default_store()
    if getattr(args, "store", None) is None and hasattr(args, "store"):
        args.store = _default_store()
    if getattr(args, "date", None) is None and hasattr(args, "date"):
        args.date = date.today()
    try:
        return args.handler(args)
    except _DOMAIN_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
