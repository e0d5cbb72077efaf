"""Threshold-gated single-pass re-ranking of scored beams.

The core operation is one backward pass over the candidate list (top of
beam at index 0): walking from the bottom boundary upward, a candidate
is promoted over its immediate predecessor when its score is at least
`threshold` larger (>=, so an exact margin promotes). A promoted
candidate keeps rising on later iterations of the same pass, so a strong
bottom candidate can surface to the top in one pass, while inversions
the pass has already walked past legitimately remain.

A threshold of +inf disallows every promotion and leaves the beam
untouched. The comparison is on score *differences*, so permutations are
invariant under adding a constant to all scores (but not under scaling).

Two interchangeable kernel backends exist: a compiled extension
(built from _rerank_core.pyx) and a pure-Python fallback. The compiled
one is picked automatically at import when present; set
BEAMJUDGE_PURE_PYTHON=1 to force the fallback.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace
from typing import List, Sequence

from beamjudge import _rerank_py

if os.environ.get("BEAMJUDGE_PURE_PYTHON"):
    _kernels = _rerank_py
else:
    try:
        from beamjudge import _rerank_core as _kernels  # type: ignore[no-redef]
    except ImportError:
        _kernels = _rerank_py

INFINITE_THRESHOLD = math.inf


def backend_name() -> str:
    """Which kernel backend is active ("compiled" or "python")."""
    return _kernels.BACKEND


@dataclass(frozen=True)
class RerankConfig:
    """Re-ranking parameters.

    threshold: minimum score margin for a promotion; +inf disables
        re-ranking entirely.
    score_scale: informational note on the score units; the built-in
        scorers emit probabilities in [0, 1].
    """

    threshold: float
    score_scale: str = "probability"

    def __post_init__(self):
        if math.isnan(self.threshold) or self.threshold < 0:
            raise ValueError(f"threshold must be >= 0 or +inf, got {self.threshold}")


def _validate_scores(scores: Sequence[float]) -> None:
    if len(scores) == 0:
        raise ValueError("scores must be non-empty")
    for i, s in enumerate(scores):
        if math.isnan(s):
            raise ValueError(f"score at index {i} is NaN")
        if math.isinf(s):
            raise ValueError(f"score at index {i} is not finite")


def rerank(
    scores: Sequence[float], threshold: float, until_fixpoint: bool = False
) -> List[int]:
    """Permutation of candidate indices after the promotion pass.

    The result lists original indices in their new order; element 0 is
    the new top of the beam. `until_fixpoint` repeats the pass until no
    promotion fires; that variant is an experiment knob, not the default
    behavior, which is exactly one pass.
    """
    _validate_scores(scores)
    if math.isnan(threshold) or threshold < 0:
        raise ValueError(f"threshold must be >= 0 or +inf, got {threshold}")
    scores = [float(s) for s in scores]
    perm = _kernels.rerank_pass(scores, threshold)
    if until_fixpoint:
        identity = list(range(len(perm)))
        # With >= semantics, all-equal scores would cycle forever; bound
        # the repeats by the beam length (enough for any strict ordering).
        for _ in range(len(perm)):
            reordered = [scores[i] for i in perm]
            again = _kernels.rerank_pass(reordered, threshold)
            if again == identity:
                break
            perm = [perm[i] for i in again]
    return perm


def grid_top_indices(
    score_lists: Sequence[Sequence[float]], thresholds: Sequence[float]
) -> List[List[int]]:
    """Top candidate index per (threshold, entry) over a threshold grid.

    Batched form of `rerank(...)[0]` used by threshold tuning, where the
    pass is replayed for every grid point.
    """
    for scores in score_lists:
        _validate_scores(scores)
    for t in thresholds:
        if math.isnan(t) or t < 0:
            raise ValueError(f"threshold must be >= 0 or +inf, got {t}")
    lists = [[float(s) for s in scores] for scores in score_lists]
    return _kernels.grid_top_indices(lists, [float(t) for t in thresholds])


def rerank_entry(entry, config: RerankConfig):
    """Reorder a beam entry's candidates by their discriminator scores.

    Generation log-probs travel with their candidates unchanged; only
    the ordering moves. Requires every candidate to carry a score.
    """
    for i, cand in enumerate(entry.candidates):
        if cand.score is None:
            raise ValueError(f"candidate {i} of entry {entry.id!r} has no score")
    perm = rerank([c.score for c in entry.candidates], config.threshold)
    return replace(entry, candidates=[entry.candidates[i] for i in perm])


def rerank_beamset(beamset, config: RerankConfig):
    """Apply `rerank_entry` across a whole beamset."""
    return replace(
        beamset, entries=[rerank_entry(e, config) for e in beamset.entries]
    )
