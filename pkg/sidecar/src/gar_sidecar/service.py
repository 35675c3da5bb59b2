"""Threaded HTTP server implementing the pointwise scoring protocol.

POST /score takes ``{"query_id": str, "query_text": str, "docs": [{"doc_id":
str, "text": str}, ...]}`` and answers ``{"scores": [{"doc_id": str, "score":
float}, ...]}`` covering exactly the requested ids, in request order. GET
/health answers ``ok``. Malformed requests get 400; a scorer that raises gets
500 with a JSON error body.

The server is stateless: scoring is a pure function of (query text, doc id,
doc text), so concurrent requests and repeated runs always agree.
"""

from __future__ import annotations

import hashlib
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

Scorer = Callable[[str, str, str], float]


def stable_hash_unit(doc_id: str) -> float:
    """Deterministic value in [0, 1) derived from the doc id alone."""
    digest = hashlib.blake2b(doc_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0**64


def stub_score(query_text: str, doc_id: str, doc_text: str) -> float:
    """Shared-lowercase-token count, plus a hash epsilon to break ties.

    The epsilon keeps equal-overlap documents in a deterministic order on
    both sides of the wire, which makes cross-process runs comparable byte
    for byte.
    """
    shared = set(query_text.lower().split()) & set(doc_text.lower().split())
    return len(shared) + 1e-6 * stable_hash_unit(doc_id)


class _BadRequest(Exception):
    pass


def _parse_score_request(body: bytes) -> tuple[str, str, list[dict]]:
    try:
        payload = json.loads(body)
    except (ValueError, UnicodeDecodeError):
        raise _BadRequest("body is not valid JSON") from None
    if not isinstance(payload, dict):
        raise _BadRequest("body must be a JSON object")
    query_text = payload.get("query_text")
    docs = payload.get("docs")
    if not isinstance(payload.get("query_id"), str) or not isinstance(query_text, str):
        raise _BadRequest("query_id and query_text must be strings")
    if not isinstance(docs, list):
        raise _BadRequest("docs must be a list")
    for doc in docs:
        if (
            not isinstance(doc, dict)
            or not isinstance(doc.get("doc_id"), str)
            or not isinstance(doc.get("text"), str)
        ):
            raise _BadRequest("each doc needs string doc_id and text fields")
    return payload["query_id"], query_text, docs


class _Handler(BaseHTTPRequestHandler):
    def _reply(self, status: int, content_type: str, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _reply_json(self, status: int, payload: dict) -> None:
        self._reply(status, "application/json", json.dumps(payload).encode("utf-8"))

    def do_GET(self):
        if self.path == "/health":
            self._reply(200, "text/plain", b"ok")
        else:
            self._reply_json(404, {"error": f"no such path: {self.path}"})

    def do_POST(self):
        if self.path != "/score":
            self._reply_json(404, {"error": f"no such path: {self.path}"})
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            _, query_text, docs = _parse_score_request(self.rfile.read(length))
        except _BadRequest as exc:
            self._reply_json(400, {"error": str(exc)})
            return
        try:
            scores = [
                {"doc_id": doc["doc_id"], "score": self.server.scorer(query_text, doc["doc_id"], doc["text"])}
                for doc in docs
            ]
        except Exception as exc:  # scorer failure, e.g. model inference error
            self._reply_json(500, {"error": f"{type(exc).__name__}: {exc}"})
            return
        self._reply_json(200, {"scores": scores})

    def log_message(self, format, *args):  # default logging spams stderr
        pass


class _Server(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, scorer: Scorer):
        super().__init__(address, _Handler)
        self.scorer = scorer


def resolve_scorer(model: str, prompt_file: str | None = None) -> Scorer:
    """Map a --model argument to a scoring function."""
    if model == "stub":
        return stub_score
    if model.startswith("hf:"):
        from gar_sidecar.hf import load_hf_scorer  # heavy import, only on demand

        return load_hf_scorer(model[3:], prompt_file)
    raise ValueError(f"unknown model {model!r}; expected 'stub' or 'hf:<model-id>'")


def create_server(
    host: str = "127.0.0.1",
    port: int = 8500,
    model: str = "stub",
    prompt_file: str | None = None,
    scorer: Scorer | None = None,
) -> _Server:
    """Bind a server (port 0 picks a free port; see ``server_address``)."""
    return _Server((host, port), scorer if scorer is not None else resolve_scorer(model, prompt_file))
