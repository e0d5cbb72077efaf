"""Training loop and model artifact handling.

Two learning rates: the pooling/classification head trains at
`classifier_lr` (1e-3) while the encoder underneath moves slowly at
`encoder_lr` (5e-6), both under Adam with binary cross-entropy loss.
Dropout defaults to 0.1. Batch size and epoch count are harness
defaults; runs are reproducible from (config, seed).

The artifact directory holds `model.pt`, `tokenizer.json` and
`manifest.json` (geometry, seed, include_schema, versions).
"""

from __future__ import annotations

import json
import logging
import os
import random
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import torch
from torch import nn

from pairscorer.data import ClassBalance, TrainingExample
from pairscorer.model import ModelConfig, PairClassifier, collate
from pairscorer.tokenization import (
    encode_pair,
    load_tokenizer,
    pad_id,
    save_tokenizer,
    train_wordpiece,
)

logger = logging.getLogger(__name__)

ARTIFACT_FORMAT_VERSION = "1"


@dataclass
class TrainConfig:
    hidden_size: int = 768
    num_layers: int = 12
    num_heads: int = 12
    dropout: float = 0.1
    classifier_lr: float = 1e-3
    encoder_lr: float = 5e-6
    batch_size: int = 16
    epochs: int = 20
    include_schema: bool = False
    seed: int = 0
    vocab_size: int = 2048
    max_len: int = 128
    class_weighting: bool = False  # off by default; beams are imbalanced by design
    init_from: Optional[str] = None  # existing artifact dir to warm-start from
    # multi-threaded CPU reductions are not bit-reproducible; single-thread
    # mode makes (config, seed) pin the run exactly
    deterministic: bool = True

    def __post_init__(self):
        if self.classifier_lr <= 0 or self.encoder_lr <= 0:
            raise ValueError("learning rates must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


@dataclass
class TrainResult:
    artifact_dir: str
    epoch_losses: List[float] = field(default_factory=list)
    final_train_accuracy: float = 0.0
    truncated_examples: int = 0
    balance: Optional[ClassBalance] = None


def _corpus(examples: Sequence[TrainingExample], include_schema: bool):
    for ex in examples:
        yield ex.utterance
        yield ex.sql
        if include_schema and ex.schema:
            yield ex.schema


def _encode_all(tokenizer, examples, config: TrainConfig):
    encoded = []
    truncated = 0
    for ex in examples:
        pair = encode_pair(
            tokenizer,
            ex.utterance,
            ex.sql,
            schema=ex.schema if config.include_schema else None,
            max_len=config.max_len,
        )
        truncated += int(pair.truncated)
        encoded.append(pair)
    if truncated:
        logger.info("truncated %d of %d sequences to max_len=%d",
                    truncated, len(examples), config.max_len)
    return encoded, truncated


def train(
    config: TrainConfig,
    examples: Sequence[TrainingExample],
    out_dir,
) -> TrainResult:
    """Fit the classifier and write a model artifact to `out_dir`."""
    labels = [ex.label for ex in examples]
    positives = sum(labels)
    if positives == 0 or positives == len(labels):
        raise ValueError(
            "training data must contain both classes "
            f"(got {positives} positives out of {len(labels)})"
        )

    torch.manual_seed(config.seed)
    rng = random.Random(config.seed)
    prior_threads = torch.get_num_threads()
    if config.deterministic:
        torch.set_num_threads(1)
    try:
        return _fit(config, examples, out_dir, labels, positives, rng)
    finally:
        torch.set_num_threads(prior_threads)


def _fit(config, examples, out_dir, labels, positives, rng) -> TrainResult:
    tokenizer = train_wordpiece(
        _corpus(examples, config.include_schema), vocab_size=config.vocab_size
    )
    encoded, truncated = _encode_all(tokenizer, examples, config)

    model_config = ModelConfig(
        vocab_size=tokenizer.get_vocab_size(),
        hidden_size=config.hidden_size,
        num_layers=config.num_layers,
        num_heads=config.num_heads,
        max_positions=max(config.max_len, 16),
        dropout=config.dropout,
    )
    model = PairClassifier(model_config)
    if config.init_from:
        state = torch.load(
            os.path.join(config.init_from, "model.pt"), map_location="cpu"
        )
        model.load_state_dict(state)
        logger.info("initialized weights from %s", config.init_from)

    optimizer = torch.optim.Adam([
        {"params": model.head_parameters(), "lr": config.classifier_lr},
        {"params": model.encoder_parameters(), "lr": config.encoder_lr},
    ])
    pos_weight = None
    if config.class_weighting:
        negatives = len(labels) - positives
        pos_weight = torch.tensor([negatives / positives])
    loss_fn = nn.BCEWithLogitsLoss(pos_weight=pos_weight)
    pad = pad_id(tokenizer)
    label_tensor = torch.tensor(labels, dtype=torch.float32)

    order = list(range(len(encoded)))
    epoch_losses: List[float] = []
    model.train()
    for epoch in range(config.epochs):
        rng.shuffle(order)
        total, batches = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            token_ids, segment_ids, mask = collate([encoded[i] for i in idx], pad)
            logits = model(token_ids, segment_ids, mask)
            loss = loss_fn(logits, label_tensor[idx])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item()
            batches += 1
        epoch_losses.append(total / batches)
        logger.info("epoch %d/%d: mean loss %.4f",
                    epoch + 1, config.epochs, epoch_losses[-1])

    accuracy = _train_accuracy(model, encoded, labels, pad, config.batch_size)
    logger.info("final training accuracy: %.3f", accuracy)

    os.makedirs(out_dir, exist_ok=True)
    torch.save(model.state_dict(), os.path.join(out_dir, "model.pt"))
    save_tokenizer(tokenizer, os.path.join(out_dir, "tokenizer.json"))
    manifest = {
        "format_version": ARTIFACT_FORMAT_VERSION,
        "model": model_config.to_dict(),
        "train": asdict(config),
        "examples": len(examples),
        "positives": positives,
        "truncated_examples": truncated,
        "final_train_accuracy": accuracy,
        "epoch_losses": epoch_losses,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    balance = ClassBalance(positives=positives, negatives=len(labels) - positives)
    return TrainResult(
        artifact_dir=str(out_dir),
        epoch_losses=epoch_losses,
        final_train_accuracy=accuracy,
        truncated_examples=truncated,
        balance=balance,
    )


def _train_accuracy(model, encoded, labels, pad, batch_size) -> float:
    correct = 0
    for start in range(0, len(encoded), batch_size):
        chunk = encoded[start:start + batch_size]
        token_ids, segment_ids, mask = collate(chunk, pad)
        scores = model.score(token_ids, segment_ids, mask)
        preds = (scores >= 0.5).long().tolist()
        correct += sum(
            int(p == l) for p, l in zip(preds, labels[start:start + batch_size])
        )
    return correct / len(encoded)


def load_artifact(artifact_dir):
    """(model in eval mode, tokenizer, manifest) from a saved artifact."""
    with open(os.path.join(artifact_dir, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    model = PairClassifier(ModelConfig(**manifest["model"]))
    state = torch.load(os.path.join(artifact_dir, "model.pt"), map_location="cpu")
    model.load_state_dict(state)
    model.eval()
    tokenizer = load_tokenizer(os.path.join(artifact_dir, "tokenizer.json"))
    return model, tokenizer, manifest
