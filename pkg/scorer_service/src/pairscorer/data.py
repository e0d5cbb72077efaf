"""Training-set construction from labeled beamset files.

Reads the beamset JSONL interchange format (one entry per line with
`utterance`, `gold_sql`, `schema_tables` and a `candidates` list whose
items carry `sql` and `is_gold`) and flattens it into one binary
classification example per candidate.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingExample:
    utterance: str
    sql: str
    label: int  # 1 iff the candidate was marked gold in the beamset
    schema: Optional[str] = None
    entry_id: str = ""


@dataclass
class ClassBalance:
    positives: int = 0
    negatives: int = 0

    @property
    def total(self) -> int:
        return self.positives + self.negatives

    @property
    def positive_rate(self) -> float:
        return self.positives / self.total if self.total else 0.0


def serialize_schema_tables(schema_tables: Optional[list]) -> Optional[str]:
    """`table(col, col); table2(...)` — matches the wire protocol docs."""
    if not schema_tables:
        return None
    parts = []
    for table in schema_tables:
        name = table.get("table", "")
        cols = ", ".join(table.get("columns", []))
        parts.append(f"{name}({cols})")
    return "; ".join(parts)


def load_labeled_entries(path) -> List[dict]:
    """Minimal reader for the labeled beamset interchange format."""
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"malformed JSON at line {line_no}: {exc.msg}") from exc
            for field in ("id", "utterance", "gold_sql", "candidates"):
                if field not in record:
                    raise ValueError(f"missing field {field} at line {line_no}")
            entries.append(record)
    if not entries:
        raise ValueError(f"no entries in {path}")
    return entries


def build_training_set(
    entries: List[dict],
) -> Tuple[List[TrainingExample], ClassBalance]:
    """One example per candidate; positives are the gold-marked ones.

    Negatives are kept in full despite the class imbalance a wide beam
    produces; weighting is the training loop's (optional) job, not a
    dataset transformation.
    """
    examples: List[TrainingExample] = []
    balance = ClassBalance()
    for entry in entries:
        schema = serialize_schema_tables(entry.get("schema_tables"))
        for i, cand in enumerate(entry["candidates"]):
            if "is_gold" not in cand or cand["is_gold"] is None:
                raise ValueError(
                    f"candidate {i} of entry {entry['id']!r} is unlabeled; "
                    "label the beamset first"
                )
            label = 1 if cand["is_gold"] else 0
            balance.positives += label
            balance.negatives += 1 - label
            examples.append(
                TrainingExample(
                    utterance=entry["utterance"],
                    sql=cand["sql"],
                    label=label,
                    schema=schema,
                    entry_id=str(entry["id"]),
                )
            )
    logger.info(
        "built %d examples: %d positive / %d negative (%.1f%% positive)",
        balance.total, balance.positives, balance.negatives,
        100.0 * balance.positive_rate,
    )
    return examples, balance


def build_training_set_from_file(path) -> Tuple[List[TrainingExample], ClassBalance]:
    return build_training_set(load_labeled_entries(path))
