"""Precision-recall curves and precision-at-recall readouts.

Scores are ranked descending with ties broken by ascending document id,
and cumulative precision/recall is emitted at every prefix. Precision at
recall level R is the precision of the smallest prefix whose recall
reaches R; no interpolation is applied anywhere.
"""

from __future__ import annotations

import bisect
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import UndefinedRecallError, ValidationError
from .util import format_percent

DEFAULT_RECALL_LEVELS = (0.50, 0.75, 0.90)
TABLE_LEVELS = (0.90, 0.75, 0.50)  # column order of the report tables


@dataclass(frozen=True)
class ScoredSet:
    """(document id, score, true label) triples for one scored population."""

    items: tuple[tuple[str, float, int], ...]

    def __post_init__(self):
        for doc_id, score, label in self.items:
            if not 0.0 <= score <= 1.0:
                raise ValidationError(f"score for {doc_id!r} outside [0, 1]")
            if label not in (0, 1):
                raise ValidationError(f"label for {doc_id!r} must be 0 or 1")


@dataclass(frozen=True)
class PRCurve:
    """Cumulative (rank prefix k, recall, precision) points for k = 1..N."""

    points: tuple[tuple[int, float, float], ...]

    def recalls(self) -> list[float]:
        return [r for _, r, _ in self.points]


def pr_curve(scored: ScoredSet) -> PRCurve:
    if not scored.items:
        raise ValidationError("scored set is empty")
    n_pos = sum(label for _, _, label in scored.items)
    if n_pos == 0:
        raise UndefinedRecallError("scored set has zero positives")
    ranked = sorted(scored.items, key=lambda item: (-item[1], item[0]))
    points = []
    tp = 0
    for k, (_, _, label) in enumerate(ranked, start=1):
        tp += label
        points.append((k, tp / n_pos, tp / k))
    return PRCurve(tuple(points))


def prefix_at_recall(curve: PRCurve, level: float) -> int:
    """Smallest prefix k whose recall reaches `level`."""
    if not 0.0 < level <= 1.0:
        raise ValidationError("recall level must lie in (0, 1]")
    recalls = curve.recalls()
    i = bisect.bisect_left(recalls, level)
    if i == len(recalls):  # float slack: recall(N) is exactly 1.0 by construction
        i = len(recalls) - 1
    return curve.points[i][0]


def precision_at_recall(curve: PRCurve, level: float) -> float:
    k = prefix_at_recall(curve, level)
    return curve.points[k - 1][2]


def curve_to_csv(curve: PRCurve) -> str:
    buf = io.StringIO()
    buf.write("k,recall,precision\n")
    for k, recall, precision in curve.points:
        buf.write(f"{k},{recall!r},{precision!r}\n")
    return buf.getvalue()


def report_table(
    results: Sequence[Mapping],
    seed_size: int,
    levels: Sequence[float] = TABLE_LEVELS,
    sort_level: float = 0.75,
) -> list[dict]:
    """Rank strategies of one seed size by precision at the sort level.

    Each result is a metrics mapping as produced by the harness, with
    keys `strategy`, `seed_size`, `test_set_sha256`, and `precision_at`
    (recall level -> precision). All results must share one test set.
    Rows are ordered by precision at `sort_level` descending, ties by
    strategy name ascending.
    """
    rows = [r for r in results if r["seed_size"] == seed_size]
    if not rows:
        return []
    hashes = {r["test_set_sha256"] for r in rows}
    if len(hashes) != 1:
        raise ValidationError("results mix different test sets")

    def level_value(r: Mapping, level: float) -> float:
        p = r["precision_at"]
        key = level if level in p else repr(level)
        # JSON round-trips dict keys as strings
        if key not in p:
            key = str(level)
        return float(p[key])

    table = [
        {
            "strategy": r["strategy"],
            "precision": {level: level_value(r, level) for level in levels},
        }
        for r in rows
    ]
    table.sort(key=lambda row: (-row["precision"][sort_level], row["strategy"]))
    return table


def table_to_csv(table: Sequence[Mapping], levels: Sequence[float] = TABLE_LEVELS) -> str:
    buf = io.StringIO()
    buf.write("strategy," + ",".join(f"precision@{int(level * 100)}" for level in levels) + "\n")
    for row in table:
        cells = ",".join(format_percent(row["precision"][level]) for level in levels)
        buf.write(f"{row['strategy']},{cells}\n")
    return buf.getvalue()


def table_to_text(table: Sequence[Mapping], levels: Sequence[float] = TABLE_LEVELS) -> str:
    if not table:
        return "(no results)\n"
    width = max(len(row["strategy"]) for row in table)
    width = max(width, len("strategy"))
    header = "strategy".ljust(width) + "".join(
        f"  {f'{int(level * 100)}%':>8}" for level in levels
    )
    lines = [header, "-" * len(header)]
    for row in table:
        cells = "".join(f"  {format_percent(row['precision'][level]):>8}" for level in levels)
        lines.append(row["strategy"].ljust(width) + cells)
    return "\n".join(lines) + "\n"
