"""Transformer-encoder pair classifier.

Bidirectional self-attention encoder over the [CLS]-utterance-[SEP]-
query-[SEP] sequence; the last layer's [CLS] hidden state goes through a
linear layer with tanh (the pooler) and then a linear classification
layer producing one logit. Sigmoid of that logit is the probability the
candidate query is correct for the utterance, trained with binary
cross-entropy.

The default geometry mirrors the standard base encoder (hidden 768,
12 blocks, 12 heads); tests and the demo use far smaller settings.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import torch
from torch import nn


@dataclass
class ModelConfig:
    vocab_size: int
    hidden_size: int = 768
    num_layers: int = 12
    num_heads: int = 12
    ff_size: Optional[int] = None  # defaults to 4 * hidden_size
    max_positions: int = 512
    num_segments: int = 3
    dropout: float = 0.1

    def __post_init__(self):
        if self.ff_size is None:
            self.ff_size = 4 * self.hidden_size
        if self.hidden_size % self.num_heads:
            raise ValueError("hidden_size must be divisible by num_heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


class PairClassifier(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        h = config.hidden_size
        self.token_embedding = nn.Embedding(config.vocab_size, h)
        self.position_embedding = nn.Embedding(config.max_positions, h)
        self.segment_embedding = nn.Embedding(config.num_segments, h)
        self.embed_norm = nn.LayerNorm(h)
        self.embed_dropout = nn.Dropout(config.dropout)
        layer = nn.TransformerEncoderLayer(
            d_model=h,
            nhead=config.num_heads,
            dim_feedforward=config.ff_size,
            dropout=config.dropout,
            activation="gelu",
            batch_first=True,
        )
        # nested-tensor fast path is nondeterministic across shapes; keep
        # the dense path so (config, seed) fully pins results
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=config.num_layers, enable_nested_tensor=False
        )
        self.pooler = nn.Linear(h, h)
        self.classifier = nn.Linear(h, 1)

    def encoder_parameters(self):
        """Everything below the pooling/classification head."""
        head = set(id(p) for p in self.head_parameters())
        return [p for p in self.parameters() if id(p) not in head]

    def head_parameters(self):
        return list(self.pooler.parameters()) + list(self.classifier.parameters())

    def forward_states(
        self,
        token_ids: torch.Tensor,
        segment_ids: torch.Tensor,
        padding_mask: torch.Tensor,
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """(sequence hidden states, pooled [CLS] vector, logits)."""
        batch, seq_len = token_ids.shape
        positions = torch.arange(seq_len, device=token_ids.device).unsqueeze(0)
        x = (
            self.token_embedding(token_ids)
            + self.position_embedding(positions)
            + self.segment_embedding(segment_ids)
        )
        x = self.embed_dropout(self.embed_norm(x))
        hidden = self.encoder(x, src_key_padding_mask=padding_mask)
        pooled = torch.tanh(self.pooler(hidden[:, 0]))
        logits = self.classifier(pooled).squeeze(-1)
        return hidden, pooled, logits

    def forward(self, token_ids, segment_ids, padding_mask) -> torch.Tensor:
        return self.forward_states(token_ids, segment_ids, padding_mask)[2]

    @torch.inference_mode()
    def score(self, token_ids, segment_ids, padding_mask) -> torch.Tensor:
        """Post-sigmoid correctness probabilities, in (0, 1)."""
        was_training = self.training
        self.eval()
        try:
            logits = self.forward(token_ids, segment_ids, padding_mask)
            return torch.sigmoid(logits)
        finally:
            if was_training:
                self.train()


def collate(encoded_pairs, pad_token_id: int):
    """Pad a list of EncodedPair to a dense batch."""
    max_len = max(len(p.token_ids) for p in encoded_pairs)
    batch = len(encoded_pairs)
    token_ids = torch.full((batch, max_len), pad_token_id, dtype=torch.long)
    segment_ids = torch.zeros((batch, max_len), dtype=torch.long)
    padding_mask = torch.ones((batch, max_len), dtype=torch.bool)
    for i, pair in enumerate(encoded_pairs):
        n = len(pair.token_ids)
        token_ids[i, :n] = torch.tensor(pair.token_ids, dtype=torch.long)
        segment_ids[i, :n] = torch.tensor(pair.segment_ids, dtype=torch.long)
        padding_mask[i, :n] = False
    return token_ids, segment_ids, padding_mask
