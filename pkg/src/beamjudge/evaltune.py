"""Accuracy metrics, threshold tuning, and report emission.

Beam-hit rate is the fraction of entries whose candidate list contains
the gold query at all; no re-ranking can beat it, so every accuracy this
module computes is bounded above by it. Accuracy at threshold t is the
fraction of entries whose post-rerank top candidate is gold; t = +inf
disables re-ranking and recovers the base generator accuracy.

Report files are deterministic: fixed key order, floats rendered with
exactly six decimal places, +inf spelled `inf`.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from beamjudge import rerank as rerank_mod
from beamjudge.beamset import BeamSet
from beamjudge.sqlcanon import (
    HARDNESS_RULES_VERSION,
    Hardness,
    SqlParseError,
    parse_sql,
    hardness,
)

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = "1"
EQUIVALENCE_POLICY = "value-exact"


@dataclass
class ThresholdCurve:
    """Accuracy at each grid threshold, plus the winning threshold."""

    points: List[Tuple[float, float]]
    best_threshold: float

    def best_accuracy(self) -> float:
        return dict(self.points)[self.best_threshold]


@dataclass
class EvalReport:
    overall_accuracy: float
    beam_hit_rate: float
    entry_count: int
    threshold_used: float
    per_hardness_accuracy: Dict[Hardness, float] = field(default_factory=dict)
    per_hardness_counts: Dict[Hardness, Tuple[int, int]] = field(default_factory=dict)
    hardness_excluded_entries: int = 0
    generator_name: str = "unknown"
    rule_set_version: str = HARDNESS_RULES_VERSION
    equivalence_policy: str = EQUIVALENCE_POLICY


def default_grid() -> List[float]:
    """0.00 .. 1.00 in steps of 0.01, plus +inf (the off switch)."""
    return [round(i * 0.01, 2) for i in range(101)] + [math.inf]


def _require_labeled(beamset: BeamSet) -> None:
    for entry in beamset.entries:
        if not entry.is_labeled():
            raise ValueError(f"entry {entry.id!r} is not labeled")


def _require_scored(beamset: BeamSet) -> None:
    for entry in beamset.entries:
        if not entry.is_scored():
            raise ValueError(
                f"entry {entry.id!r} is not scored; a finite threshold requires scores"
            )


def beam_hit_rate(beamset: BeamSet) -> float:
    """Fraction of entries whose beam contains the gold query anywhere."""
    _require_labeled(beamset)
    if not beamset.entries:
        raise ValueError("beamset is empty")
    hits = sum(
        1 for e in beamset.entries if any(c.is_gold for c in e.candidates)
    )
    return hits / len(beamset.entries)


def _entry_correct(entry, threshold: float) -> bool:
    if math.isinf(threshold):
        return bool(entry.candidates[0].is_gold)
    perm = rerank_mod.rerank([c.score for c in entry.candidates], threshold)
    return bool(entry.candidates[perm[0]].is_gold)


def accuracy(beamset: BeamSet, threshold: float) -> float:
    """Fraction of entries whose post-rerank top candidate is gold."""
    _require_labeled(beamset)
    if not beamset.entries:
        raise ValueError("beamset is empty")
    if not math.isinf(threshold):
        _require_scored(beamset)
    correct = sum(1 for e in beamset.entries if _entry_correct(e, threshold))
    return correct / len(beamset.entries)


def _gold_hardness(entry) -> Optional[Hardness]:
    try:
        return hardness(parse_sql(entry.gold_sql))
    except SqlParseError:
        return None


def _bucket_entries(beamset: BeamSet):
    """Group entries by gold hardness; unparseable golds are set aside."""
    buckets: Dict[Hardness, list] = {}
    excluded = []
    for entry in beamset.entries:
        level = _gold_hardness(entry)
        if level is None:
            excluded.append(entry)
        else:
            buckets.setdefault(level, []).append(entry)
    if excluded:
        logger.warning(
            "%d entries excluded from hardness breakdown (gold query unparseable)",
            len(excluded),
        )
    return buckets, excluded


def accuracy_by_hardness(
    beamset: BeamSet, threshold: float
) -> Dict[Hardness, float]:
    """Per-hardness accuracy map; empty buckets are absent, not 0.0."""
    _require_labeled(beamset)
    if not math.isinf(threshold):
        _require_scored(beamset)
    buckets, _excluded = _bucket_entries(beamset)
    out: Dict[Hardness, float] = {}
    for level in sorted(buckets):
        entries = buckets[level]
        correct = sum(1 for e in entries if _entry_correct(e, threshold))
        out[level] = correct / len(entries)
    return out


def tune_threshold(tune_set: BeamSet, grid: Sequence[float]) -> ThresholdCurve:
    """Sweep the grid on the tune split and pick the best threshold.

    Ties break toward the largest threshold: fewer promotions, so the
    base ordering is disturbed least. The grid must contain +inf so the
    no-op configuration is always in the running.
    """
    grid = list(grid) if grid is not None else []
    if not grid:
        raise ValueError("threshold grid must be non-empty")
    thresholds = sorted(set(float(t) for t in grid))
    for t in thresholds:
        if math.isnan(t) or t < 0:
            raise ValueError(f"grid thresholds must be >= 0 or +inf, got {t}")
    if not math.isinf(thresholds[-1]):
        raise ValueError("threshold grid must include +inf (the off switch)")
    _require_labeled(tune_set)
    _require_scored(tune_set)
    if not tune_set.entries:
        raise ValueError("tune split is empty")

    score_lists = [[c.score for c in e.candidates] for e in tune_set.entries]
    gold_flags = [[bool(c.is_gold) for c in e.candidates] for e in tune_set.entries]
    top_matrix = rerank_mod.grid_top_indices(score_lists, thresholds)

    n = len(tune_set.entries)
    points: List[Tuple[float, float]] = []
    best_t = thresholds[0]
    best_acc = -1.0
    for t, tops in zip(thresholds, top_matrix):
        correct = sum(1 for flags, top in zip(gold_flags, tops) if flags[top])
        acc = correct / n
        points.append((t, acc))
        if acc >= best_acc:  # >= so later (larger) thresholds win ties
            best_acc = acc
            best_t = t
    return ThresholdCurve(points=points, best_threshold=best_t)


def evaluate(beamset: BeamSet, threshold: float) -> EvalReport:
    """Full report at one threshold: overall, hit rate, hardness table."""
    _require_labeled(beamset)
    if not math.isinf(threshold):
        _require_scored(beamset)
    overall = accuracy(beamset, threshold)
    hit_rate = beam_hit_rate(beamset)
    buckets, excluded = _bucket_entries(beamset)
    per_acc: Dict[Hardness, float] = {}
    per_counts: Dict[Hardness, Tuple[int, int]] = {}
    for level in sorted(buckets):
        entries = buckets[level]
        correct = sum(1 for e in entries if _entry_correct(e, threshold))
        per_acc[level] = correct / len(entries)
        per_counts[level] = (correct, len(entries))
    return EvalReport(
        overall_accuracy=overall,
        beam_hit_rate=hit_rate,
        entry_count=len(beamset.entries),
        threshold_used=threshold,
        per_hardness_accuracy=per_acc,
        per_hardness_counts=per_counts,
        hardness_excluded_entries=len(excluded),
        generator_name=beamset.generator_name,
    )


# ---------------------------------------------------------------------------
# Deterministic serialization
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def render_json(value) -> str:
    """Minimal JSON emitter with reproducible float formatting.

    Floats print with exactly six decimal places and +inf becomes the
    string "inf" (JSON numbers cannot express it). Key order is the
    dict's insertion order, so documents built here diff cleanly.
    """
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return '"inf"' if math.isinf(value) else f"{value:.6f}"
    if isinstance(value, dict):
        inner = ", ".join(f"{render_json(k)}: {render_json(v)}" for k, v in value.items())
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(render_json(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def report_document(report: EvalReport) -> dict:
    """Report as a plain dict in canonical key order."""
    per_hardness = {}
    for level in sorted(report.per_hardness_accuracy):
        correct, count = report.per_hardness_counts.get(level, (0, 0))
        per_hardness[level.label] = {
            "accuracy": report.per_hardness_accuracy[level],
            "correct": correct,
            "count": count,
        }
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "rule_set_version": report.rule_set_version,
        "equivalence_policy": report.equivalence_policy,
        "generator_name": report.generator_name,
        "entry_count": report.entry_count,
        "threshold_used": report.threshold_used,
        "overall_accuracy": report.overall_accuracy,
        "beam_hit_rate": report.beam_hit_rate,
        "per_hardness": per_hardness,
        "hardness_excluded_entries": report.hardness_excluded_entries,
    }


def write_report_json(report: EvalReport, path) -> None:
    text = render_json(report_document(report))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.write("\n")


def curve_csv_text(curve: ThresholdCurve) -> str:
    lines = ["threshold,accuracy"]
    for t, acc in curve.points:
        lines.append(f"{format_float(t)},{acc:.6f}")
    return "\n".join(lines) + "\n"


def write_curve_csv(curve: ThresholdCurve, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(curve_csv_text(curve))


def sweep_curve(beamset: BeamSet, grid: Sequence[float]) -> ThresholdCurve:
    """Accuracy curve over a grid without split handling (report data)."""
    return tune_threshold(beamset, grid)


def write_hardness_curve_bundle(
    beamset: BeamSet, grid: Sequence[float], out_dir
) -> List[str]:
    """One curve CSV per nonempty hardness bucket, plus the overall curve.

    Returns the written paths: curve_overall.csv and curve_<level>.csv.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    overall_path = os.path.join(out_dir, "curve_overall.csv")
    write_curve_csv(sweep_curve(beamset, grid), overall_path)
    written.append(overall_path)
    buckets, _excluded = _bucket_entries(beamset)
    for level in sorted(buckets):
        subset = BeamSet(
            entries=buckets[level],
            generator_name=beamset.generator_name,
            beam_size=beamset.beam_size,
        )
        path = os.path.join(out_dir, f"curve_{level.label}.csv")
        write_curve_csv(sweep_curve(subset, grid), path)
        written.append(path)
    return written
