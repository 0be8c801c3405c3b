"""File-backed store of actual per-item efforts from past projects.

One JSON object per line, append-ordered. Keys are normalized (lowercased,
trimmed, internal whitespace collapsed to hyphens) so differently spelled
labels for the same work share history. Atypical projects are stored but
excluded from retrieval unless asked for.
"""

from __future__ import annotations

import csv
import fcntl
import io
import json
import os
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import Sequence

from .distributions import FAMILIES, FitResult, best_fit

__all__ = [
    "HistoryError",
    "HistoryRecord",
    "HistoryStore",
    "ImportReport",
    "normalize_key",
]

CSV_HEADER = ("project_name", "key", "actual", "recorded_at", "typical")


class HistoryError(ValueError):
    """A record or store file violated the history contract."""


def normalize_key(label: str) -> str:
    """Lowercase, trim and collapse internal whitespace to single hyphens."""
    return "-".join(label.strip().lower().split())


@dataclass(frozen=True)
class HistoryRecord:
    project_name: str
    key: str
    actual: float
    recorded_at: date
    typical: bool = True

    def violations(self) -> list[str]:
        out = []
        if not self.project_name.strip():
            out.append("project_name must be nonempty")
        if not self.key:
            out.append("key must be nonempty")
        if not self.actual >= 0:
            out.append("actual must be >= 0")
        return out

    def as_dict(self) -> dict:
        return {
            "project_name": self.project_name,
            "key": self.key,
            "actual": self.actual,
            "recorded_at": self.recorded_at.isoformat(),
            "typical": self.typical,
        }


@dataclass(frozen=True)
class ImportReport:
    added: int
    rejected: tuple[tuple[int, str], ...]


def _parse_line(line: str, lineno: int) -> HistoryRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise HistoryError(f"line {lineno}: invalid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise HistoryError(f"line {lineno}: expected an object")
    missing = [f for f in CSV_HEADER if f not in obj]
    if missing:
        raise HistoryError(f"line {lineno}: missing fields {missing}")
    unknown = [f for f in obj if f not in CSV_HEADER]
    if unknown:
        raise HistoryError(f"line {lineno}: unknown fields {unknown}")
    if not isinstance(obj["project_name"], str) or not isinstance(obj["key"], str):
        raise HistoryError(f"line {lineno}: project_name and key must be strings")
    if isinstance(obj["actual"], bool) or not isinstance(obj["actual"], (int, float)):
        raise HistoryError(f"line {lineno}: actual must be a number")
    if not isinstance(obj["typical"], bool):
        raise HistoryError(f"line {lineno}: typical must be a boolean")
    try:
        recorded = date.fromisoformat(obj["recorded_at"])
    except (TypeError, ValueError):
        raise HistoryError(f"line {lineno}: recorded_at must be an ISO date (YYYY-MM-DD)") from None
    record = HistoryRecord(
        obj["project_name"], normalize_key(obj["key"]), float(obj["actual"]), recorded, obj["typical"]
    )
    bad = record.violations()
    if bad:
        raise HistoryError(f"line {lineno}: " + "; ".join(bad))
    return record


@dataclass(frozen=True)
class HistoryStore:
    """Immutable snapshot of the history file; mutators return new stores."""

    records: tuple[HistoryRecord, ...] = ()

    @classmethod
    def load(cls, path: str | os.PathLike) -> "HistoryStore":
        """Load a store snapshot; a missing file is an empty store."""
        p = Path(path)
        if not p.exists():
            return cls()
        records = []
        with open(p, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if line.strip():
                    records.append(_parse_line(line, lineno))
        return cls(tuple(records))

    def save(self, path: str | os.PathLike) -> None:
        """Rewrite the store file under an exclusive advisory lock."""
        with open(path, "a+", encoding="utf-8") as fh:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
            try:
                fh.seek(0)
                fh.truncate()
                for record in self.records:
                    fh.write(json.dumps(record.as_dict(), ensure_ascii=False) + "\n")
            finally:
                fcntl.flock(fh.fileno(), fcntl.LOCK_UN)

    def add(self, record: HistoryRecord) -> "HistoryStore":
        """Append one record, normalizing its key. Raises HistoryError on an
        invalid record."""
        record = replace(record, key=normalize_key(record.key))
        bad = record.violations()
        if bad:
            raise HistoryError("; ".join(bad))
        return HistoryStore(self.records + (record,))

    def records_for(self, key: str, include_atypical: bool = False) -> list[float]:
        """Actual values under key in insertion order; atypical records are
        skipped unless asked for. Unknown keys yield an empty list."""
        key = normalize_key(key)
        return [
            r.actual
            for r in self.records
            if r.key == key and (include_atypical or r.typical)
        ]

    def refit(self, key: str, families: Sequence[str] = FAMILIES) -> FitResult:
        """Best fit over the key's typical values."""
        return self.refit_ranked(key, families)[0]

    def refit_ranked(self, key: str, families: Sequence[str] = FAMILIES) -> list[FitResult]:
        """All feasible fits over the key's typical values, best first."""
        return best_fit(self.records_for(key), families)

    def import_csv(self, document: str) -> tuple["HistoryStore", ImportReport]:
        """Append the valid rows of a CSV document; malformed rows are
        reported with line numbers, a bad header refuses the whole import."""
        reader = csv.reader(io.StringIO(document))
        try:
            header = next(reader)
        except StopIteration:
            raise HistoryError("empty CSV document") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise HistoryError(
                f"CSV header must be {','.join(CSV_HEADER)}, got {','.join(header)}"
            )
        store = self
        added = 0
        rejected: list[tuple[int, str]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                store = store.add(_record_from_row(row))
                added += 1
            except (HistoryError, ValueError) as e:
                rejected.append((lineno, str(e)))
        return store, ImportReport(added, tuple(rejected))


def _record_from_row(row: list[str]) -> HistoryRecord:
    if len(row) != len(CSV_HEADER):
        raise HistoryError(f"expected {len(CSV_HEADER)} columns, got {len(row)}")
    project_name, key, actual_text, recorded_text, typical_text = (c.strip() for c in row)
    try:
        actual = float(actual_text)
    except ValueError:
        raise HistoryError(f"actual must be a number, got {actual_text!r}") from None
    try:
        recorded = date.fromisoformat(recorded_text)
    except ValueError:
        raise HistoryError(f"recorded_at must be an ISO date, got {recorded_text!r}") from None
    lowered = typical_text.lower()
    if lowered in ("true", ""):
        typical = True
    elif lowered == "false":
        typical = False
    else:
        raise HistoryError(f"typical must be true or false, got {typical_text!r}")
    return HistoryRecord(project_name, key, actual, recorded, typical)
