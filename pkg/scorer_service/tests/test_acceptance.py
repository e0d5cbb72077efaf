"""Acceptance suite for the scorer service; prints one PASS line each."""

import threading
import time

import pytest
import requests
import torch

from pairscorer.model import ModelConfig, PairClassifier, collate
from pairscorer.serve import create_server
from pairscorer.tokenization import encode_pair, pad_id, train_wordpiece
from pairscorer.train import train

import beamjudge.scoring as client

from conftest import overfit_examples, sanity_config


def _passed(name, detail=""):
    print(f"ACCEPTANCE {name}: PASS {detail}".rstrip())


def test_s01_protocol_conformance(trained_artifact):
    server = create_server(trained_artifact, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address
    url = f"http://{host}:{port}"
    try:
        scorer = client.RemoteScorer(url)
        assert scorer.health_check()

        pairs = [
            client.ScoreRequest("what is the name number 1", "select name from t1"),
            client.ScoreRequest("what is the age number 2", "select wrong from z9"),
            client.ScoreRequest("what is the country number 3", "select country from t0"),
        ]
        batch = [r.score for r in scorer.score_batch(pairs)]
        assert all(0.0 <= s <= 1.0 for s in batch)
        singles = [scorer.score_batch([p])[0].score for p in pairs]
        assert batch == pytest.approx(singles, abs=1e-6)  # positional alignment

        # range enforcement is the client's contract: a conformant service
        # never trips it across many distinct inputs
        fuzz = [
            client.ScoreRequest(f"random words {i} here", f"select c{i} from t{i % 3}")
            for i in range(30)
        ]
        assert all(0.0 <= r.score <= 1.0 for r in scorer.score_batch(fuzz))

        # malformed requests are rejected with a 400-class response
        for payload in ({"pairs": []}, {"oops": 1},
                        {"pairs": [{"utterance": "", "sql": "select a from t"}]}):
            resp = requests.post(f"{url}/v1/score", json=payload, timeout=10)
            assert resp.status_code == 400
    finally:
        server.shutdown()
        server.server_close()
    _passed("S1 scorer-protocol-conformance",
            "(health, alignment, range, malformed-request rejection)")


def test_s02_overfit_sanity(tmp_path):
    examples = overfit_examples()  # 50 examples, balanced
    assert len(examples) == 50

    start = time.time()
    result = train(sanity_config(), examples, tmp_path / "model")
    elapsed = time.time() - start
    assert elapsed < 600, f"training took {elapsed:.0f}s"
    assert result.final_train_accuracy >= 0.95

    # untrained-classifier loss on a balanced batch sits near ln 2
    corpus = [x for ex in examples[:8] for x in (ex.utterance, ex.sql)]
    tokenizer = train_wordpiece(corpus, vocab_size=256)
    torch.manual_seed(0)
    model = PairClassifier(ModelConfig(
        vocab_size=tokenizer.get_vocab_size(), hidden_size=64,
        num_layers=2, num_heads=2, max_positions=64,
    ))
    model.eval()
    encoded = [
        encode_pair(tokenizer, ex.utterance, ex.sql, max_len=64)
        for ex in examples[:8]
    ]
    ids, segs, mask = collate(encoded, pad_id(tokenizer))
    labels = torch.tensor([float(ex.label) for ex in examples[:8]])
    assert labels.sum().item() == 4.0
    with torch.no_grad():
        initial = torch.nn.BCEWithLogitsLoss()(model(ids, segs, mask), labels).item()
    assert abs(initial - 0.693) < 0.15, initial

    # classifier-head gradient vs central finite differences
    model64 = model.double()
    labels64 = labels.double()
    loss_fn = torch.nn.BCEWithLogitsLoss()

    def loss_value():
        return loss_fn(model64(ids, segs, mask), labels64)

    model64.zero_grad()
    loss_value().backward()
    weight = model64.classifier.weight
    grad = weight.grad.clone()
    eps = 1e-6
    worst = 0.0
    for j in (0, 11, 30, 63):
        with torch.no_grad():
            original = weight[0, j].item()
            weight[0, j] = original + eps
            plus = loss_value().item()
            weight[0, j] = original - eps
            minus = loss_value().item()
            weight[0, j] = original
        numeric = (plus - minus) / (2 * eps)
        analytic = grad[0, j].item()
        rel = abs(numeric - analytic) / max(abs(numeric), abs(analytic), 1e-12)
        worst = max(worst, rel)
        assert rel < 1e-4, (j, numeric, analytic)

    _passed(
        "S2 overfit-sanity",
        f"(train acc {result.final_train_accuracy:.2f} in {elapsed:.0f}s; "
        f"initial loss {initial:.3f}; grad check rel err {worst:.2e})",
    )
