"""Pointwise scorers consumed by the reranking loop.

A scorer is anything with a ``score_batch(request) -> list[float]`` method.
The oracle family reads relevance grades straight from qrels (optionally
perturbed with deterministic noise), the lexical scorer delegates to BM25,
and the remote scorer speaks the HTTP protocol served by the scoring sidecar.

Noise is keyed on (seed, query_id, external_id), never on call order, so a
document receives the same score no matter when the loop schedules it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from hashlib import blake2b
from statistics import NormalDist

import requests

from gar.corpus import CorpusHandle, Query, tokenize
from gar.errors import RemoteProtocolError, RemoteUnavailableError
from gar.evaluation import Qrels
from gar.index import Bm25Params, InvertedIndex, bm25_score


@dataclass(frozen=True)
class ScoreBatchRequest:
    query: Query
    docs: list[tuple[str, str]]  # (external_id, text), order preserved in the reply


@dataclass(frozen=True)
class ScorerQuality:
    """Parsed scorer selection: which scorer, and its knobs."""

    kind: str  # oracle | noisy | anticorrelated | lexical | remote
    noise_sigma: float = 0.0
    seed: int = 0
    endpoint: str | None = None

    def __post_init__(self):
        if self.kind not in ("oracle", "noisy", "anticorrelated", "lexical", "remote"):
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


def score_batch(scorer, request: ScoreBatchRequest) -> list[float]:
    """Validate the request, delegate, and sanity-check the reply length."""
    if not request.docs:
        raise ValueError("score_batch request has no documents")
    ids = [d for d, _ in request.docs]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate external_id in score_batch request")
    scores = scorer.score_batch(request)
    if len(scores) != len(request.docs):
        raise ValueError(
            f"scorer returned {len(scores)} scores for {len(request.docs)} documents"
        )
    return scores


_NORMAL = NormalDist()


def _unit_noise(seed: int, query_id: str, external_id: str) -> float:
    """Deterministic standard-normal draw for a (seed, query, doc) triple."""
    key = f"{seed}\x1f{query_id}\x1f{external_id}".encode()
    h = int.from_bytes(blake2b(key, digest_size=8).digest(), "big")
    return _NORMAL.inv_cdf((h + 0.5) / 2.0**64)


class OracleScorer:
    def __init__(self, qrels: Qrels):
        self.qrels = qrels

    def score_batch(self, request: ScoreBatchRequest) -> list[float]:
        qid = request.query.query_id
        return [float(self.qrels.grade(qid, did)) for did, _ in request.docs]


class NoisyOracleScorer:
    def __init__(self, qrels: Qrels, sigma: float, seed: int):
        self.qrels = qrels
        self.sigma = sigma
        self.seed = seed

    def score_batch(self, request: ScoreBatchRequest) -> list[float]:
        qid = request.query.query_id
        return [
            self.qrels.grade(qid, did) + self.sigma * _unit_noise(self.seed, qid, did)
            for did, _ in request.docs
        ]


class AnticorrelatedScorer:
    """Actively misleading feedback: the grade with its sign flipped, plus jitter."""

    def __init__(self, qrels: Qrels, seed: int):
        self.qrels = qrels
        self.seed = seed

    def score_batch(self, request: ScoreBatchRequest) -> list[float]:
        qid = request.query.query_id
        return [
            -self.qrels.grade(qid, did) + 0.1 * _unit_noise(self.seed, qid, did)
            for did, _ in request.docs
        ]


class LexicalScorer:
    """BM25 as the reranker: a real, dependency-free non-oracle scorer."""

    def __init__(self, corpus: CorpusHandle, index: InvertedIndex, params: Bm25Params):
        self.corpus = corpus
        self.index = index
        self.params = params

    def score_batch(self, request: ScoreBatchRequest) -> list[float]:
        tokens = tokenize(request.query.text)
        return [
            bm25_score(self.index, self.params, tokens, self.corpus.internal_id(did))
            for did, _ in request.docs
        ]


class RemoteScorer:
    """Client for the HTTP scoring protocol.

    POST {endpoint}/score with {"query_id", "query_text", "docs": [{"doc_id",
    "text"}, ...]}; expects {"scores": [{"doc_id", "score"}, ...]} covering
    exactly the requested ids. Connection failures and non-200 statuses are
    retried, then raised as RemoteUnavailableError; a malformed reply is a
    RemoteProtocolError immediately (retrying will not fix a broken server).
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, max_retries: int = 2):
        self.url = endpoint.rstrip("/") + "/score"
        self.timeout = timeout
        self.max_retries = max_retries

    def score_batch(self, request: ScoreBatchRequest) -> list[float]:
        payload = {
            "query_id": request.query.query_id,
            "query_text": request.query.text,
            "docs": [{"doc_id": did, "text": text} for did, text in request.docs],
        }
        last_failure = None
        for _ in range(self.max_retries + 1):
            try:
                # requests.post per call: no shared session state, so concurrent
                # per-query runs can share one scorer instance.
                resp = requests.post(self.url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last_failure = str(exc)
                continue
            if resp.status_code != 200:
                last_failure = f"HTTP {resp.status_code}"
                continue
            return self._parse(resp, [did for did, _ in request.docs])
        raise RemoteUnavailableError(
            f"{self.url} unavailable after {self.max_retries + 1} attempts: {last_failure}"
        )

    def _parse(self, resp, requested_ids: list[str]) -> list[float]:
        try:
            body = resp.json()
        except ValueError:
            raise RemoteProtocolError("response body is not JSON") from None
        items = body.get("scores") if isinstance(body, dict) else None
        if not isinstance(items, list):
            raise RemoteProtocolError("response lacks a 'scores' list")
        by_id: dict[str, float] = {}
        for item in items:
            if not isinstance(item, dict) or "doc_id" not in item or "score" not in item:
                raise RemoteProtocolError(f"malformed score item: {item!r}")
            did, score = item["doc_id"], item["score"]
            if isinstance(score, bool) or not isinstance(score, (int, float)):
                raise RemoteProtocolError(f"non-numeric score for {did!r}")
            if not math.isfinite(score):
                raise RemoteProtocolError(f"non-finite score for {did!r}")
            if did in by_id:
                raise RemoteProtocolError(f"duplicate doc_id {did!r} in response")
            by_id[did] = float(score)
        if set(by_id) != set(requested_ids):
            raise RemoteProtocolError(
                f"response ids do not match request: got {len(by_id)}, expected {len(requested_ids)}"
            )
        return [by_id[did] for did in requested_ids]


def make_oracle(qrels: Qrels) -> OracleScorer:
    return OracleScorer(qrels)


def make_noisy(qrels: Qrels, sigma: float, seed: int = 0) -> NoisyOracleScorer:
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    return NoisyOracleScorer(qrels, sigma, seed)


def make_anticorrelated(qrels: Qrels, seed: int = 0) -> AnticorrelatedScorer:
    return AnticorrelatedScorer(qrels, seed)


def make_lexical(corpus: CorpusHandle, index: InvertedIndex, params: Bm25Params) -> LexicalScorer:
    return LexicalScorer(corpus, index, params)


def make_remote(endpoint: str, timeout: float = 10.0, max_retries: int = 2) -> RemoteScorer:
    return RemoteScorer(endpoint, timeout, max_retries)


def make_scorer(
    quality: ScorerQuality,
    *,
    qrels: Qrels | None = None,
    corpus: CorpusHandle | None = None,
    index: InvertedIndex | None = None,
    params: Bm25Params | None = None,
    timeout: float = 10.0,
    max_retries: int = 2,
):
    """Instantiate the scorer a ScorerQuality describes, given its inputs."""
    if quality.kind in ("oracle", "noisy", "anticorrelated"):
        if qrels is None:
            raise ValueError(f"scorer {quality.kind!r} requires qrels")
        if quality.kind == "oracle":
            return make_oracle(qrels)
        if quality.kind == "noisy":
            return make_noisy(qrels, quality.noise_sigma, quality.seed)
        return make_anticorrelated(qrels, quality.seed)
    if quality.kind == "lexical":
        if corpus is None or index is None:
            raise ValueError("lexical scorer requires a corpus and an index")
        return make_lexical(corpus, index, params or Bm25Params())
    if quality.endpoint is None:
        raise ValueError("remote scorer requires an endpoint")
    return make_remote(quality.endpoint, timeout=timeout, max_retries=max_retries)
