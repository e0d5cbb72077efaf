"""Scoring contract and the two built-in scorers.

A scorer maps (utterance, sql) pairs to correctness probabilities in
[0, 1]. Two implementations ship here:

  * LexicalScorer — deterministic Jaccard overlap between utterance
    tokens and non-keyword SQL tokens. Exists so the whole pipeline is
    testable and runnable without any model service.
  * RemoteScorer — client for the HTTP wire protocol (POST /v1/score,
    GET /v1/health) served by a model process.

Scores outside [0, 1] are a protocol violation and are never clamped.
"""

from __future__ import annotations

import concurrent.futures
import logging
import re
import time
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence

import requests

from beamjudge.beamset import BeamSet

logger = logging.getLogger(__name__)

# Keyword list "lexical-keywords-v1": stripped from the SQL side before
# token overlap. Versioned so baseline scores stay comparable.
SQL_KEYWORDS_V1 = frozenset(
    """
    select from where group by having order limit join inner on as and or
    not in like between exists union except intersect distinct count sum
    avg min max asc desc
    """.split()
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")

DEFAULT_TIMEOUT = 10.0
DEFAULT_RETRIES = 3


class ScoringError(Exception):
    """Base class for scorer failures."""


class TransportError(ScoringError):
    """The scorer endpoint could not be reached (after retries)."""


class ProtocolError(ScoringError):
    """The endpoint answered, but not with a valid protocol response."""


@dataclass(frozen=True)
class ScoreRequest:
    utterance: str
    sql: str
    schema_tables: Optional[str] = None

    def __post_init__(self):
        if not self.utterance:
            raise ValueError("utterance must be non-empty")
        if not self.sql:
            raise ValueError("sql must be non-empty")


@dataclass(frozen=True)
class ScoreResponse:
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of range: {self.score}")


def tokenize(text: str) -> frozenset:
    """Lower-cased alphanumeric token set."""
    return frozenset(_TOKEN_RE.findall(text.lower()))


def lexical_overlap_score(utterance: str, sql: str) -> float:
    """Jaccard similarity of utterance tokens vs non-keyword SQL tokens.

    Defined as 0 when both token sets are empty.
    """
    if not utterance:
        raise ValueError("utterance must be non-empty")
    if not sql:
        raise ValueError("sql must be non-empty")
    a = tokenize(utterance)
    b = tokenize(sql) - SQL_KEYWORDS_V1
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


class LexicalScorer:
    """Deterministic baseline scorer built on lexical overlap."""

    name = "lexical"

    def score_batch(self, requests_: Sequence[ScoreRequest]) -> List[ScoreResponse]:
        return [
            ScoreResponse(lexical_overlap_score(r.utterance, r.sql)) for r in requests_
        ]


class RemoteScorer:
    """Client for the scorer wire protocol.

    Connection failures are retried with exponential backoff before
    giving up; any malformed or out-of-range response fails immediately
    as a protocol error.
    """

    name = "remote"

    def __init__(
        self,
        endpoint: str,
        timeout: float = DEFAULT_TIMEOUT,
        max_retries: int = DEFAULT_RETRIES,
        backoff: float = 0.1,
        sleep: Callable[[float], None] = time.sleep,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self._sleep = sleep
        self._session = session or requests.Session()

    def health_check(self) -> bool:
        try:
            resp = self._session.get(
                f"{self.endpoint}/v1/health", timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"health check failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolError(f"health check returned status {resp.status_code}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"health check returned non-JSON body: {resp.text!r}") from exc
        if body.get("status") != "ok":
            raise ProtocolError(f"health check returned {body!r}")
        return True

    def _post_with_retries(self, payload: dict) -> requests.Response:
        last_exc: Optional[Exception] = None
        for attempt in range(self.max_retries + 1):
            try:
                return self._session.post(
                    f"{self.endpoint}/v1/score", json=payload, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_exc = exc
                if attempt < self.max_retries:
                    delay = self.backoff * (2 ** attempt)
                    logger.warning(
                        "scorer request failed (%s); retry %d/%d in %.2fs",
                        exc, attempt + 1, self.max_retries, delay,
                    )
                    self._sleep(delay)
        raise TransportError(
            f"scorer endpoint unreachable after {self.max_retries} retries: {last_exc}"
        ) from last_exc

    def score_batch(self, requests_: Sequence[ScoreRequest]) -> List[ScoreResponse]:
        if not requests_:
            raise ValueError("batch must contain at least one request")
        pairs = []
        for r in requests_:
            pair = {"utterance": r.utterance, "sql": r.sql}
            if r.schema_tables is not None:
                pair["schema"] = r.schema_tables
            pairs.append(pair)
        resp = self._post_with_retries({"pairs": pairs})
        if resp.status_code != 200:
            raise ProtocolError(
                f"scorer returned status {resp.status_code}: {resp.text[:200]!r}"
            )
        try:
            body = resp.json()
        except ValueError as exc:
            raise ProtocolError(f"non-JSON scorer response: {resp.text[:200]!r}") from exc
        if not isinstance(body, dict) or "scores" not in body:
            raise ProtocolError(f"scorer response missing 'scores': {body!r}")
        scores = body["scores"]
        if not isinstance(scores, list) or len(scores) != len(requests_):
            raise ProtocolError(
                f"scorer returned {len(scores) if isinstance(scores, list) else 'non-list'}"
                f" scores for {len(requests_)} pairs"
            )
        out = []
        for s in scores:
            if not isinstance(s, (int, float)) or isinstance(s, bool):
                raise ProtocolError(f"non-numeric score in response: {s!r}")
            if not 0.0 <= s <= 1.0:
                raise ProtocolError(f"score out of range: {s}")
            out.append(ScoreResponse(float(s)))
        return out


def serialize_schema_tables(schema_tables: Optional[list]) -> Optional[str]:
    """Flatten the interchange schema listing to `table(col, col); ...`."""
    if not schema_tables:
        return None
    parts = []
    for table in schema_tables:
        name = table.get("table", "")
        cols = ", ".join(table.get("columns", []))
        parts.append(f"{name}({cols})")
    return "; ".join(parts)


def attach_scores(
    beamset: BeamSet,
    scorer,
    include_schema: bool = False,
    parallelism: int = 1,
) -> BeamSet:
    """Populate every candidate's score, one batch per beam entry.

    All-or-nothing: any scorer failure aborts the run with the entry id
    and candidate index, and no partially scored beamset is returned.
    Schema context is omitted by default; the discriminator performs
    better without it, but the flag keeps the ablation runnable.
    """
    def score_entry(entry):
        schema = serialize_schema_tables(entry.schema_tables) if include_schema else None
        batch = []
        for i, c in enumerate(entry.candidates):
            try:
                batch.append(
                    ScoreRequest(
                        utterance=entry.utterance, sql=c.sql_text, schema_tables=schema
                    )
                )
            except ValueError as exc:
                raise ScoringError(f"entry {entry.id!r} candidate {i}: {exc}") from exc
        try:
            responses = scorer.score_batch(batch)
        except ScoringError as exc:
            raise ScoringError(f"entry {entry.id!r}: {exc}") from exc
        if len(responses) != len(entry.candidates):
            raise ScoringError(
                f"entry {entry.id!r}: scorer returned {len(responses)} scores "
                f"for {len(entry.candidates)} candidates"
            )
        return replace(
            entry,
            candidates=[
                replace(c, score=r.score)
                for c, r in zip(entry.candidates, responses)
            ],
        )

    if parallelism <= 1:
        scored = [score_entry(e) for e in beamset.entries]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=parallelism) as pool:
            scored = list(pool.map(score_entry, beamset.entries))
    return replace(beamset, entries=scored)
