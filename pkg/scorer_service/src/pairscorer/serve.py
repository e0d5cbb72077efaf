"""Scoring service: the wire protocol over a stateless loaded model.

    GET  /v1/health -> {"status": "ok"}
    POST /v1/score  {"pairs": [{"utterance": str, "sql": str, "schema": str?}]}
                    -> {"scores": [float]}  # aligned with pairs, each in (0, 1)

Malformed requests get a 400 with an error body; model failures a 500.
The model is loaded once and shared read-only across requests; scores
are post-sigmoid probabilities. The schema field is only consulted when
the model was trained with include_schema.
"""

from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import List

from pairscorer.model import collate
from pairscorer.tokenization import encode_pair, pad_id
from pairscorer.train import load_artifact

logger = logging.getLogger(__name__)


class RequestValidationError(ValueError):
    pass


def validate_pairs(body) -> List[dict]:
    if not isinstance(body, dict):
        raise RequestValidationError("request body must be a JSON object")
    pairs = body.get("pairs")
    if not isinstance(pairs, list) or not pairs:
        raise RequestValidationError("'pairs' must be a non-empty list")
    for i, pair in enumerate(pairs):
        if not isinstance(pair, dict):
            raise RequestValidationError(f"pair {i} is not an object")
        for field in ("utterance", "sql"):
            value = pair.get(field)
            if not isinstance(value, str) or not value.strip():
                raise RequestValidationError(
                    f"pair {i}: '{field}' must be a non-empty string"
                )
        schema = pair.get("schema")
        if schema is not None and not isinstance(schema, str):
            raise RequestValidationError(f"pair {i}: 'schema' must be a string")
    return pairs


def score_pairs(model, tokenizer, manifest, pairs: List[dict]) -> List[float]:
    include_schema = manifest["train"]["include_schema"]
    max_len = manifest["train"]["max_len"]
    encoded = []
    for pair in pairs:
        schema = pair.get("schema") if include_schema else None
        try:
            encoded.append(
                encode_pair(
                    tokenizer, pair["utterance"], pair["sql"],
                    schema=schema, max_len=max_len,
                )
            )
        except ValueError as exc:
            raise RequestValidationError(str(exc)) from exc
    token_ids, segment_ids, mask = collate(encoded, pad_id(tokenizer))
    scores = model.score(token_ids, segment_ids, mask)
    return [float(s) for s in scores.tolist()]


class _ScorerHandler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):
        logger.debug("http: " + fmt, *args)

    def do_GET(self):
        if self.path == "/v1/health":
            self._reply(200, {"status": "ok"})
        else:
            self._reply(404, {"error": f"unknown path {self.path}"})

    def do_POST(self):
        if self.path != "/v1/score":
            self._reply(404, {"error": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw)
            except json.JSONDecodeError as exc:
                self._reply(400, {"error": f"invalid JSON: {exc.msg}"})
                return
            try:
                pairs = validate_pairs(body)
            except RequestValidationError as exc:
                self._reply(400, {"error": str(exc)})
                return
            scores = score_pairs(
                self.server.model, self.server.tokenizer, self.server.manifest, pairs
            )
            self._reply(200, {"scores": scores})
        except RequestValidationError as exc:
            self._reply(400, {"error": str(exc)})
        except Exception as exc:  # model/runtime failure
            logger.exception("scoring failed")
            self._reply(500, {"error": f"internal error: {exc}"})

    def _reply(self, status, payload):
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def create_server(artifact_dir, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Build (but do not run) the HTTP server; port 0 picks a free port."""
    model, tokenizer, manifest = load_artifact(artifact_dir)
    server = ThreadingHTTPServer((host, port), _ScorerHandler)
    server.model = model
    server.tokenizer = tokenizer
    server.manifest = manifest
    return server


def serve(artifact_dir, host: str = "127.0.0.1", port: int = 8765) -> None:
    server = create_server(artifact_dir, host, port)
    bound_host, bound_port = server.server_address
    logger.info("scorer listening on http://%s:%s", bound_host, bound_port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
