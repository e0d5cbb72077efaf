"""Beam-search output data model and JSONL interchange format.

A beamset file is newline-delimited JSON, one entry per line:

    {"id": ..., "utterance": ..., "schema_id": ...,
     "schema_tables": [{"table": ..., "columns": [...]}],   # optional
     "gold_sql": ...,
     "candidates": [{"sql": ..., "token_log_probs": [...],  # optional
                     "log_prob": ..., "score": ...,          # score optional
                     "is_gold": ...}]}                       # is_gold optional

Candidates are kept sorted by descending generation log-probability;
ties preserve file order. All probabilities are stored in natural-log
space so 40-token sequences do not underflow; the linear-space product
is recovered by exponentiation only when displayed.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field, replace
from typing import Callable, IO, Iterable, List, Optional, Tuple

logger = logging.getLogger(__name__)

# Absolute slack allowed between a stored cumulative log-prob and the sum
# of its per-token log-probs.
LOG_PROB_SUM_TOLERANCE = 1e-9

_CANDIDATE_REQUIRED = ("sql", "log_prob")
_ENTRY_REQUIRED = ("id", "utterance", "schema_id", "gold_sql", "candidates")


class BeamsetFormatError(ValueError):
    """A beamset file or record violates the interchange format."""


@dataclass
class Candidate:
    """One beam entry: a SQL hypothesis with its generation probability."""

    sql_text: str
    generation_log_prob: float
    token_log_probs: Optional[List[float]] = None
    score: Optional[float] = None
    is_gold: Optional[bool] = None

    def generation_prob(self) -> float:
        """Linear-space generation probability (display only)."""
        return math.exp(self.generation_log_prob)


@dataclass
class BeamEntry:
    """One utterance with its gold query and candidate beam."""

    id: str
    utterance: str
    schema_id: str
    gold_sql: str
    candidates: List[Candidate]
    schema_tables: Optional[List[dict]] = None
    # Set when gold_sql could not be parsed and labeling fell back or failed.
    label_error: Optional[str] = None

    def is_labeled(self) -> bool:
        return all(c.is_gold is not None for c in self.candidates)

    def is_scored(self) -> bool:
        return all(c.score is not None for c in self.candidates)


@dataclass
class BeamSet:
    """A collection of beam entries from one generator run."""

    entries: List[BeamEntry]
    generator_name: str = "unknown"
    beam_size: int = 1

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class LabelStats:
    """Bookkeeping emitted by labeling."""

    entries: int = 0
    candidate_parse_failures: int = 0
    gold_parse_failures: int = 0
    fallback_labeled_entries: int = 0
    gold_in_beam: int = 0


def generation_log_prob(token_log_probs: Iterable[float]) -> float:
    """Cumulative sequence log-probability: the sum of token log-probs.

    Exponentiating the result gives the product of the per-token
    probabilities.
    """
    probs = list(token_log_probs)
    if not probs:
        raise ValueError("token_log_probs must be non-empty")
    for i, lp in enumerate(probs):
        if lp > 0:
            raise ValueError(
                f"token log-prob at index {i} is {lp}; log-probabilities must be <= 0"
            )
    return math.fsum(probs)


def top_candidate(entry: BeamEntry) -> Candidate:
    """The candidate with the highest generation probability.

    Candidates are kept sorted, so this is the head of the list; equal
    log-probs resolve to the one emitted first by the generator.
    """
    if not entry.candidates:
        raise ValueError(f"entry {entry.id!r} has no candidates")
    return entry.candidates[0]


def _sort_candidates(candidates: List[Candidate]) -> List[Candidate]:
    # sorted() is stable: ties keep file order.
    return sorted(candidates, key=lambda c: -c.generation_log_prob)


def _is_sorted(candidates: List[Candidate]) -> bool:
    return all(
        candidates[i].generation_log_prob >= candidates[i + 1].generation_log_prob
        for i in range(len(candidates) - 1)
    )


def label_candidates(
    entry: BeamEntry, equiv: Callable[[str, str], bool]
) -> Tuple[BeamEntry, LabelStats]:
    """Mark every candidate gold/not-gold against the entry's gold query.

    `equiv` is an equivalence predicate over SQL strings; it may raise on
    unparseable input. Candidates that fail to parse are labeled not-gold
    (generators emit malformed SQL; dropping them would skew beam
    statistics). If the gold query itself fails, the entry is returned
    unlabeled with `label_error` set.
    """
    stats = LabelStats(entries=1)
    try:
        equiv(entry.gold_sql, entry.gold_sql)
    except Exception as exc:
        stats.gold_parse_failures = 1
        flagged = replace(
            entry,
            candidates=[replace(c, is_gold=None) for c in entry.candidates],
            label_error=f"gold query unparseable: {exc}",
        )
        return flagged, stats

    labeled = []
    hit = False
    for cand in entry.candidates:
        try:
            is_gold = bool(equiv(cand.sql_text, entry.gold_sql))
        except Exception:
            stats.candidate_parse_failures += 1
            is_gold = False
        hit = hit or is_gold
        labeled.append(replace(cand, is_gold=is_gold))
    stats.gold_in_beam = int(hit)
    return replace(entry, candidates=labeled, label_error=None), stats


def _string_fallback_equiv(a: str, b: str) -> bool:
    """Exact match after case folding and whitespace collapsing."""
    return " ".join(a.lower().split()) == " ".join(b.lower().split())


def label_beamset(
    beamset: BeamSet,
    equiv: Callable[[str, str], bool],
    string_fallback: bool = True,
) -> Tuple[BeamSet, LabelStats]:
    """Label every entry; optionally fall back to string matching.

    Entries whose gold query does not parse cannot use the canonical
    equivalence. With `string_fallback` they are labeled by normalized
    exact string match so headline accuracy never silently shrinks;
    `label_error` stays set so hardness reports can exclude them.
    """
    totals = LabelStats()
    labeled_entries = []
    for entry in beamset.entries:
        labeled, stats = label_candidates(entry, equiv)
        if labeled.label_error is not None and string_fallback:
            fallback, fb_stats = label_candidates(entry, _string_fallback_equiv)
            labeled = replace(fallback, label_error=labeled.label_error)
            stats.fallback_labeled_entries = 1
            stats.gold_in_beam = fb_stats.gold_in_beam
        totals.entries += stats.entries
        totals.candidate_parse_failures += stats.candidate_parse_failures
        totals.gold_parse_failures += stats.gold_parse_failures
        totals.fallback_labeled_entries += stats.fallback_labeled_entries
        totals.gold_in_beam += stats.gold_in_beam
        labeled_entries.append(labeled)
    out = replace(beamset, entries=labeled_entries)
    if totals.candidate_parse_failures:
        logger.info(
            "labeled %d entries; %d candidates unparseable (marked not-gold)",
            totals.entries,
            totals.candidate_parse_failures,
        )
    if totals.gold_parse_failures:
        logger.warning(
            "%d entries have unparseable gold queries%s",
            totals.gold_parse_failures,
            " (labeled by exact string match)" if string_fallback else " (left unlabeled)",
        )
    return out, totals


def _require_field(record: dict, name: str, line_no: int):
    if name not in record:
        raise BeamsetFormatError(f"missing field {name} at line {line_no}")
    return record[name]


def _candidate_from_record(rec: dict, line_no: int, cand_idx: int) -> Candidate:
    if not isinstance(rec, dict):
        raise BeamsetFormatError(
            f"candidate {cand_idx} at line {line_no} is not an object"
        )
    for name in _CANDIDATE_REQUIRED:
        if name not in rec:
            raise BeamsetFormatError(
                f"missing field {name} in candidate {cand_idx} at line {line_no}"
            )
    sql = rec["sql"]
    log_prob = rec["log_prob"]
    if not isinstance(sql, str):
        raise BeamsetFormatError(f"field sql must be a string at line {line_no}")
    if not isinstance(log_prob, (int, float)) or isinstance(log_prob, bool):
        raise BeamsetFormatError(f"field log_prob must be a number at line {line_no}")
    if log_prob > 0:
        raise BeamsetFormatError(
            f"log_prob {log_prob} > 0 in candidate {cand_idx} at line {line_no}"
        )
    token_log_probs = rec.get("token_log_probs")
    if token_log_probs is not None:
        if not isinstance(token_log_probs, list) or not token_log_probs:
            raise BeamsetFormatError(
                f"token_log_probs must be a non-empty list at line {line_no}"
            )
        for lp in token_log_probs:
            if not isinstance(lp, (int, float)) or isinstance(lp, bool) or lp > 0:
                raise BeamsetFormatError(
                    f"token_log_probs must be numbers <= 0 at line {line_no}"
                )
        if abs(math.fsum(token_log_probs) - log_prob) > LOG_PROB_SUM_TOLERANCE:
            raise BeamsetFormatError(
                f"log_prob does not equal sum of token_log_probs at line {line_no}"
            )
    score = rec.get("score")
    if score is not None:
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise BeamsetFormatError(f"score must be a number at line {line_no}")
        if not 0.0 <= score <= 1.0:
            raise BeamsetFormatError(
                f"score {score} outside [0, 1] in candidate {cand_idx} at line {line_no}"
            )
    is_gold = rec.get("is_gold")
    if is_gold is not None and not isinstance(is_gold, bool):
        raise BeamsetFormatError(f"is_gold must be a boolean at line {line_no}")
    return Candidate(
        sql_text=sql,
        generation_log_prob=float(log_prob),
        token_log_probs=[float(x) for x in token_log_probs] if token_log_probs else None,
        score=float(score) if score is not None else None,
        is_gold=is_gold,
    )


def _entry_from_record(record: dict, line_no: int) -> BeamEntry:
    if not isinstance(record, dict):
        raise BeamsetFormatError(f"record at line {line_no} is not an object")
    for name in _ENTRY_REQUIRED:
        _require_field(record, name, line_no)
    cand_records = record["candidates"]
    if not isinstance(cand_records, list) or not cand_records:
        raise BeamsetFormatError(f"candidates must be a non-empty list at line {line_no}")
    candidates = [
        _candidate_from_record(rec, line_no, i) for i, rec in enumerate(cand_records)
    ]
    schema_tables = record.get("schema_tables")
    if schema_tables is not None and not isinstance(schema_tables, list):
        raise BeamsetFormatError(f"schema_tables must be a list at line {line_no}")
    return BeamEntry(
        id=str(record["id"]),
        utterance=str(record["utterance"]),
        schema_id=str(record["schema_id"]),
        gold_sql=str(record["gold_sql"]),
        candidates=candidates,
        schema_tables=schema_tables,
    )


def load_beamset(path, generator_name: str = "unknown") -> BeamSet:
    """Read and validate a beamset JSONL file.

    Candidate lists arriving out of order are re-sorted by descending
    log_prob with a warning. The beam size is the largest candidate list
    observed; the file format itself carries no generator metadata.
    """
    entries = []
    resorted = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BeamsetFormatError(
                    f"malformed JSON at line {line_no}: {exc.msg}"
                ) from exc
            entry = _entry_from_record(record, line_no)
            if not _is_sorted(entry.candidates):
                entry.candidates = _sort_candidates(entry.candidates)
                resorted += 1
            entries.append(entry)
    if not entries:
        raise BeamsetFormatError(f"no entries in beamset file {path}")
    if resorted:
        logger.warning(
            "%d entries had candidates out of generation-probability order; re-sorted",
            resorted,
        )
    beam_size = max(len(e.candidates) for e in entries)
    return BeamSet(entries=entries, generator_name=generator_name, beam_size=beam_size)


def _candidate_to_record(c: Candidate) -> dict:
    rec: dict = {"sql": c.sql_text}
    if c.token_log_probs is not None:
        rec["token_log_probs"] = c.token_log_probs
    rec["log_prob"] = c.generation_log_prob
    if c.score is not None:
        rec["score"] = c.score
    if c.is_gold is not None:
        rec["is_gold"] = c.is_gold
    return rec


def entry_to_record(entry: BeamEntry) -> dict:
    rec: dict = {
        "id": entry.id,
        "utterance": entry.utterance,
        "schema_id": entry.schema_id,
    }
    if entry.schema_tables is not None:
        rec["schema_tables"] = entry.schema_tables
    rec["gold_sql"] = entry.gold_sql
    rec["candidates"] = [_candidate_to_record(c) for c in entry.candidates]
    return rec


def dump_beamset(beamset: BeamSet, fh: IO[str]) -> None:
    for entry in beamset.entries:
        fh.write(json.dumps(entry_to_record(entry), ensure_ascii=False))
        fh.write("\n")


def save_beamset(beamset: BeamSet, path) -> None:
    """Write the canonical JSONL serialization (stable field order)."""
    with open(path, "w", encoding="utf-8") as fh:
        dump_beamset(beamset, fh)


def split_for_tuning(
    beamset: BeamSet, ratio: float, seed: int
) -> Tuple[BeamSet, BeamSet]:
    """Deterministic seeded split into (tune, eval) beamsets.

    Entries are shuffled (a contiguous split would bias toward whole
    databases, since entries arrive grouped) and the first ceil(ratio*n)
    go to the tune side. The small epsilon guards against float noise in
    ratio*n landing just above an integer.
    """
    if not beamset.entries:
        raise ValueError("cannot split an empty beamset")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must be in (0, 1), got {ratio}")
    order = list(beamset.entries)
    random.Random(seed).shuffle(order)
    n_tune = math.ceil(ratio * len(order) - 1e-9)
    tune = replace(beamset, entries=order[:n_tune])
    evalset = replace(beamset, entries=order[n_tune:])
    return tune, evalset
