"""beamjudge: re-ranking and evaluation for text-to-SQL beam outputs.

Takes the n-best candidate lists any text-to-SQL generator emits,
scores each (utterance, query) pair with a discriminator, and promotes
higher-scoring candidates past their neighbors with a threshold-gated
single pass. Ships the full evaluation harness around that: logical-form
equivalence over a canonical SQL form, beam-hit rate, hardness-stratified
accuracy, and threshold tuning on a held-out split.

Modules:
    beamset  — data model, JSONL ingestion, gold labeling, splits
    sqlcanon — SQL canonical form, equivalence, hardness buckets
    rerank   — the threshold-gated promotion pass (compiled or pure)
    scoring  — scorer contract, lexical baseline, HTTP client
    evaltune — metrics, threshold tuning, report emission
    cli      — the `beamjudge` command
"""

__version__ = "0.1.0"

from beamjudge.beamset import BeamEntry, BeamSet, Candidate
from beamjudge.rerank import RerankConfig
from beamjudge.sqlcanon import Hardness

__all__ = ["BeamEntry", "BeamSet", "Candidate", "Hardness", "RerankConfig"]
