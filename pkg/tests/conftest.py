import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from beamjudge.beamset import BeamEntry, BeamSet, Candidate


def make_candidate(sql, log_prob, score=None, is_gold=None, token_log_probs=None):
    return Candidate(
        sql_text=sql,
        generation_log_prob=log_prob,
        token_log_probs=token_log_probs,
        score=score,
        is_gold=is_gold,
    )


def make_entry(entry_id, gold="select a from t", candidates=None, utterance="show a"):
    """candidates: list of (sql, log_prob[, score[, is_gold]]) tuples."""
    cands = []
    for spec in candidates or [("select a from t", -0.1)]:
        cands.append(make_candidate(*spec))
    return BeamEntry(
        id=str(entry_id),
        utterance=utterance,
        schema_id="db1",
        gold_sql=gold,
        candidates=cands,
    )


def make_labeled_entry(entry_id, gold_flags, scores=None, log_probs=None):
    """Entry with is_gold flags (and optional scores) set positionally."""
    n = len(gold_flags)
    log_probs = log_probs or [-0.1 * (i + 1) for i in range(n)]
    cands = []
    for i, flag in enumerate(gold_flags):
        cands.append(
            Candidate(
                sql_text=f"select c{i} from t",
                generation_log_prob=log_probs[i],
                score=None if scores is None else scores[i],
                is_gold=flag,
            )
        )
    return BeamEntry(
        id=str(entry_id),
        utterance="which c",
        schema_id="db1",
        gold_sql="select c_gold from t",
        candidates=cands,
    )


def make_beamset(entries, generator_name="testgen"):
    beam_size = max(len(e.candidates) for e in entries)
    return BeamSet(entries=entries, generator_name=generator_name, beam_size=beam_size)


class _StubHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # keep test output quiet
        pass

    def do_GET(self):
        if self.path == "/v1/health":
            self._reply(200, self.server.health_body)
        else:
            self._reply(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/v1/score":
            self._reply(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        self.server.requests_seen.append(body)
        mode = self.server.mode
        pairs = body.get("pairs", [])
        if mode == "fixed":
            self._reply(200, {"scores": [self.server.fixed_score] * len(pairs)})
        elif mode == "hash":
            scores = [
                (hash((p["utterance"], p["sql"])) % 1000) / 1000.0 for p in pairs
            ]
            self._reply(200, {"scores": scores})
        elif mode == "out_of_range":
            self._reply(200, {"scores": [1.2] * len(pairs)})
        elif mode == "missing_scores":
            self._reply(200, {"result": "ok"})
        elif mode == "short":
            self._reply(200, {"scores": [0.5] * max(0, len(pairs) - 1)})
        elif mode == "error":
            self._reply(500, {"error": "boom"})
        else:
            raise AssertionError(f"unknown stub mode {mode}")

    def _reply(self, status, payload):
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class StubScorerServer:
    """In-process scorer endpoint with switchable behaviors."""

    def __init__(self):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self.server.mode = "fixed"
        self.server.fixed_score = 0.5
        self.server.health_body = {"status": "ok"}
        self.server.requests_seen = []
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self):
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    def set_mode(self, mode, **kwargs):
        self.server.mode = mode
        for key, value in kwargs.items():
            setattr(self.server, key, value)

    @property
    def requests_seen(self):
        return self.server.requests_seen

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub_scorer():
    server = StubScorerServer()
    yield server
    server.close()


_DEMO_TOPICS = [
    ("name", "singer"), ("age", "singer"), ("country", "singer"),
    ("venue", "concert"), ("year", "concert"), ("title", "album"),
    ("sales", "album"), ("id", "concert"),
]


def build_demo_entries(n_entries=16, with_token_log_probs=True):
    """Deterministic parseable beamset the lexical scorer does well on.

    Cycles through four shapes: gold on top, gold at rank 1 behind a
    lexically-poor rival, gold at rank 2, and a beam miss. One candidate
    in every fourth entry is deliberately malformed.
    """
    entries = []
    for i in range(n_entries):
        col, table = _DEMO_TOPICS[i % len(_DEMO_TOPICS)]
        gold = f"select {col} from {table}"
        rival = "select wrong from elsewhere"
        other = f"select max(unrelated) from mystery where junk = {i}"
        shape = i % 4
        if shape == 0:  # gold already on top
            specs = [(gold, -0.1), (rival, -0.6), (other, -0.9)]
        elif shape == 1:  # gold one below the top
            specs = [(rival, -0.2), (gold, -0.5), (other, -1.1)]
        elif shape == 2:  # gold at the bottom, plus a malformed candidate
            specs = [(rival, -0.3), ("selec broken frm", -0.7), (gold, -1.3)]
        else:  # beam miss
            specs = [(rival, -0.2), (other, -0.8), ("select nope from nowhere", -1.5)]
        cands = []
        for sql, lp in specs:
            tlp = None
            if with_token_log_probs:
                half = round(lp / 2, 6)
                tlp = [half, round(lp - half, 6)]
            cands.append(make_candidate(sql, lp, token_log_probs=tlp))
        entries.append(
            BeamEntry(
                id=f"q{i:03d}",
                utterance=f"{col} of each {table}",
                schema_id=f"db_{table}",
                gold_sql=gold,
                candidates=cands,
            )
        )
    return entries
