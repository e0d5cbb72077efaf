"""pairscorer: discriminative scorer for (utterance, SQL) pairs.

Trains a transformer-encoder binary classifier on labeled beam-search
outputs (was this candidate the gold query for the question?) and serves
the resulting correctness probabilities over the scoring wire protocol
consumed by re-ranking pipelines.
"""

__version__ = "0.1.0"
