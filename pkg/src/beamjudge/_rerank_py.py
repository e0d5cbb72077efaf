"""Pure-Python re-ranking kernels.

Semantics are shared with the compiled twin (beamjudge._rerank_core):
one backward pass over the beam, promoting a candidate over its
immediate predecessor whenever its score is at least `threshold`
larger. The promoted candidate keeps bubbling upward on subsequent
iterations of the same pass.
"""

from typing import List, Sequence

BACKEND = "python"


def rerank_pass(scores: Sequence[float], threshold: float) -> List[int]:
    """One backward promotion pass; returns candidate indices in new order.

    Position 0 is the top of the beam. The loop visits each adjacent
    boundary once, from the bottom of the list upward, using `>=` so an
    exact margin of `threshold` promotes.
    """
    n = len(scores)
    perm = list(range(n))
    s = list(scores)
    for i in range(n - 1, 0, -1):
        if s[i] >= s[i - 1] + threshold:
            s[i], s[i - 1] = s[i - 1], s[i]
            perm[i], perm[i - 1] = perm[i - 1], perm[i]
    return perm


def grid_top_indices(
    score_lists: Sequence[Sequence[float]], thresholds: Sequence[float]
) -> List[List[int]]:
    """Post-rerank top candidate index per (threshold, entry).

    Returns a matrix indexed [threshold][entry]. Only the index that
    surfaces at position 0 is tracked, which is all accuracy sweeps need.
    """
    out = []
    for t in thresholds:
        row = []
        for scores in score_lists:
            row.append(rerank_pass(scores, t)[0])
        out.append(row)
    return out
