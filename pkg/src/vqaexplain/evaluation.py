"""Metrics over human relevance ratings and win/loss/tie comparison of two systems.

Ratings CSV columns: ``qa_id,system_id,position,relevance`` with relevance
in [-5, 5] (0 means redundant, > 0 relevant). Meta CSV columns:
``qa_id,explainability`` with explainability in [1, 5].
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DataError, SchemaError

__all__ = [
    "RatingRecord",
    "QaMeta",
    "ComparisonResult",
    "METRICS",
    "parse_ratings",
    "parse_meta",
    "load_ratings",
    "load_meta",
    "weighted_explanation_score",
    "first_relevant_position",
    "num_relevant_top5",
    "compare_systems",
    "results_from_tallies",
    "render_table",
]

METRICS = ("explanation_score", "position", "number")
METRIC_LABELS = {
    "explanation_score": "Explanation score",
    "position": "Position score",
    "number": "Number score",
}
MAX_POSITION = 5


@dataclass(frozen=True)
class RatingRecord:
    qa_id: str
    system_id: str
    position: int
    relevance: int


@dataclass(frozen=True)
class QaMeta:
    qa_id: str
    explainability: int


@dataclass(frozen=True)
class ComparisonResult:
    metric: str
    win_pct: float
    loss_pct: float
    tie_pct: float
    wins: int = 0
    losses: int = 0
    ties: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


# --- reading -----------------------------------------------------------------


def _rows(text: str, columns: Sequence[str]):
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in columns if c not in (reader.fieldnames or [])]
    if missing:
        raise SchemaError(f"missing column {missing[0]!r} (row 1)", field=missing[0], row=1)
    for row_no, row in enumerate(reader, start=2):
        if None in row or any(row[c] is None for c in columns):
            raise SchemaError(f"row {row_no}: wrong number of fields", row=row_no)
        yield row_no, {c: row[c].strip() for c in columns}


def _int(value: str, column: str, row_no: int, lo: int, hi: int | None) -> int:
    try:
        n = int(value)
    except ValueError:
        raise SchemaError(f"row {row_no}: {column} must be an integer, got {value!r}",
                          field=column, row=row_no) from None
    if n < lo or (hi is not None and n > hi):
        bound = f"[{lo}, {hi}]" if hi is not None else f">= {lo}"
        raise SchemaError(f"row {row_no}: {column}={n} outside {bound}", field=column, row=row_no)
    return n


def parse_ratings(text: str) -> list[RatingRecord]:
    records = []
    slots: dict[tuple[str, str], set[int]] = defaultdict(set)
    for row_no, row in _rows(text, ("qa_id", "system_id", "position", "relevance")):
        if not row["qa_id"] or not row["system_id"]:
            raise SchemaError(f"row {row_no}: empty qa_id or system_id", row=row_no)
        pos = _int(row["position"], "position", row_no, 1, MAX_POSITION)
        rel = _int(row["relevance"], "relevance", row_no, -5, 5)
        key = (row["qa_id"], row["system_id"])
        if pos in slots[key]:
            raise SchemaError(f"row {row_no}: duplicate position {pos} for {key}", row=row_no)
        slots[key].add(pos)
        records.append(RatingRecord(row["qa_id"], row["system_id"], pos, rel))
    for key, positions in slots.items():
        if positions != set(range(1, len(positions) + 1)):
            raise DataError(f"positions for qa {key[0]!r}, system {key[1]!r} are not "
                            f"consecutive from 1: {sorted(positions)}")
    return records


def parse_meta(text: str) -> dict[str, QaMeta]:
    meta: dict[str, QaMeta] = {}
    for row_no, row in _rows(text, ("qa_id", "explainability")):
        if row["qa_id"] in meta:
            raise SchemaError(f"row {row_no}: duplicate qa_id {row['qa_id']!r}", row=row_no)
        meta[row["qa_id"]] = QaMeta(row["qa_id"],
                                    _int(row["explainability"], "explainability", row_no, 1, 5))
    return meta


def load_ratings(path) -> list[RatingRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_ratings(fh.read())


def load_meta(path) -> dict[str, QaMeta]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_meta(fh.read())


# --- per-list metrics ----------------------------------------------------------


def _exact_explanation_score(ratings: Iterable[RatingRecord], meta) -> Fraction:
    ratings = list(ratings)
    if isinstance(meta, QaMeta):
        qa_meta = meta
    else:
        qa_ids = {r.qa_id for r in ratings}
        qa_meta = None
        if meta is not None and len(qa_ids) == 1:
            qa_meta = meta.get(next(iter(qa_ids)))
        if qa_meta is None:
            raise DataError(f"no explainability rating for qa {sorted(qa_ids)}")
    weighted = sum((Fraction(r.relevance, r.position) for r in ratings), Fraction(0))
    return qa_meta.explainability * weighted


def weighted_explanation_score(ratings: Iterable[RatingRecord],
                               meta: QaMeta | Mapping[str, QaMeta]) -> float:
    """Explainability times the sum of relevance / position.

    >>> rs = [RatingRecord("q", "s", 1, 4), RatingRecord("q", "s", 2, -2),
    ...       RatingRecord("q", "s", 3, 1)]
    >>> weighted_explanation_score(rs, QaMeta("q", 3))
    10.0
    """
    return float(_exact_explanation_score(ratings, meta))


def first_relevant_position(ratings: Iterable[RatingRecord]) -> int | None:
    """Lowest position rated > 0, or None."""
    positions = [r.position for r in ratings if r.relevance > 0]
    return min(positions) if positions else None


def num_relevant_top5(ratings: Iterable[RatingRecord]) -> int:
    return sum(1 for r in ratings if r.position <= MAX_POSITION and r.relevance > 0)


# --- system comparison ---------------------------------------------------------


def _cmp(a, b) -> int:
    return (a > b) - (a < b)


def _outcomes(ra: list[RatingRecord], rb: list[RatingRecord], meta) -> dict[str, int]:
    fa, fb = first_relevant_position(ra), first_relevant_position(rb)
    # absent first-relevant position is worse than any present one
    pa = MAX_POSITION + 1 if fa is None else fa
    pb = MAX_POSITION + 1 if fb is None else fb
    return {
        "explanation_score": _cmp(_exact_explanation_score(ra, meta),
                                  _exact_explanation_score(rb, meta)),
        "position": _cmp(pb, pa),
        "number": _cmp(num_relevant_top5(ra), num_relevant_top5(rb)),
    }


def _pct(n: int, total: int) -> float:
    return 100.0 * n / total


def compare_systems(ratings: Iterable[RatingRecord], meta: Mapping[str, QaMeta],
                    sys_a: str, sys_b: str) -> list[ComparisonResult]:
    """Per metric, the share of shared questions on which ``sys_a`` wins, loses or ties."""
    by_key: dict[tuple[str, str], list[RatingRecord]] = defaultdict(list)
    for r in ratings:
        by_key[r.qa_id, r.system_id].append(r)
    qa_a = {q for q, s in by_key if s == sys_a}
    qa_b = {q for q, s in by_key if s == sys_b}
    shared = sorted(qa_a & qa_b)
    if not shared:
        raise DataError(f"systems {sys_a!r} and {sys_b!r} share no rated questions")
    tally = {m: [0, 0, 0] for m in METRICS}
    for qa_id in shared:
        for metric, outcome in _outcomes(by_key[qa_id, sys_a], by_key[qa_id, sys_b],
                                         meta).items():
            tally[metric][{1: 0, -1: 1, 0: 2}[outcome]] += 1
    return results_from_tallies({m: tuple(t) for m, t in tally.items()})


def results_from_tallies(tallies: Mapping[str, Sequence[int]]) -> list[ComparisonResult]:
    """Turn ``{metric: (wins, losses, ties)}`` counts into percentages."""
    out = []
    for metric in METRICS:
        if metric not in tallies:
            continue
        w, l, t = tallies[metric]
        n = w + l + t
        if n <= 0:
            raise DataError(f"empty tally for {metric}")
        out.append(ComparisonResult(metric, _pct(w, n), _pct(l, n), _pct(t, n), w, l, t))
    return out


def format_pct(value: float) -> str:
    return f"{round(value, 1):g}%"


def render_table(results: Sequence[ComparisonResult]) -> str:
    """Plain-text table with columns Type, Win, Loss, Tie."""
    header = ("Type", "Win", "Loss", "Tie")
    rows = [(METRIC_LABELS.get(r.metric, r.metric), format_pct(r.win_pct),
             format_pct(r.loss_pct), format_pct(r.tie_pct)) for r in results]
    widths = [max(len(row[i]) for row in [header, *rows]) for i in range(4)]
    lines = []
    for row in [header, *rows]:
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"
