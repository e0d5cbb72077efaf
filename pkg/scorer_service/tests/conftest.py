import json

import pytest

from pairscorer.data import TrainingExample
from pairscorer.train import TrainConfig, train

COLUMNS = ["name", "age", "country", "venue", "year", "title", "sales", "id"]


def overfit_examples(n_pairs=25):
    """Balanced synthetic set: positives pair an utterance with a query
    over the same column, negatives with a mismatched one."""
    examples = []
    for i in range(n_pairs):
        col = COLUMNS[i % len(COLUMNS)]
        wrong = COLUMNS[(i + 3) % len(COLUMNS)]
        examples.append(
            TrainingExample(
                utterance=f"what is the {col} number {i}",
                sql=f"select {col} from t{i % 4}",
                label=1,
                entry_id=f"e{i}",
            )
        )
        examples.append(
            TrainingExample(
                utterance=f"what is the {col} number {i}",
                sql=f"select {wrong} from z{i % 5}",
                label=0,
                entry_id=f"e{i}",
            )
        )
    return examples


def sanity_config(**overrides):
    """Small-geometry harness config that trains from scratch quickly.

    The stock learning rates assume a pretrained encoder; training from
    random init needs the encoder to actually move, so the harness raises
    its rate and drops dropout. These are harness constants, not defaults.
    """
    params = dict(
        hidden_size=64,
        num_layers=2,
        num_heads=2,
        dropout=0.0,
        encoder_lr=3e-4,
        batch_size=8,
        epochs=20,
        vocab_size=512,
        max_len=64,
        seed=1,
    )
    params.update(overrides)
    return TrainConfig(**params)


def write_labeled_beams(path, n_entries=6, beam=4):
    """Labeled beamset JSONL in the interchange format."""
    records = []
    for i in range(n_entries):
        col = COLUMNS[i % len(COLUMNS)]
        gold = f"select {col} from t"
        candidates = []
        for j in range(beam):
            is_gold = j == (i % beam)
            sql = gold if is_gold else f"select {COLUMNS[(i + j) % len(COLUMNS)]} from z{j}"
            candidates.append(
                {"sql": sql, "log_prob": -0.2 * (j + 1), "is_gold": is_gold}
            )
        records.append({
            "id": f"q{i}",
            "utterance": f"report the {col}",
            "schema_id": "db",
            "schema_tables": [{"table": "t", "columns": [col, "extra"]}],
            "gold_sql": gold,
            "candidates": candidates,
        })
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return records


@pytest.fixture(scope="session")
def trained_artifact(tmp_path_factory):
    """One small trained model shared by the serving tests."""
    out = tmp_path_factory.mktemp("artifact")
    result = train(sanity_config(epochs=8), overfit_examples(), out)
    return result.artifact_dir
