"""In-memory inverted index with BM25 scoring and exhaustive top-c retrieval.

The same scoring function serves first-stage retrieval, the lexical scorer,
and document-as-query graph construction, so the scalar and vectorized paths
are written against the *same* float expression tree: scoring one document
with bm25_score and reading that document's entry out of a full retrieval
pass give bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from gar.corpus import CorpusHandle, Query, tokenize
from gar.errors import DocOutOfRangeError


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


class ScoredDoc(NamedTuple):
    internal_id: int
    score: float


class Posting(NamedTuple):
    ids: np.ndarray  # internal doc ids, ascending, int64
    tfs: np.ndarray  # term frequencies aligned with ids, float64


class InvertedIndex:
    """Immutable after build; safe to share across threads."""

    def __init__(self, postings: dict[str, Posting], doc_len: np.ndarray):
        self.postings = postings
        self.doc_len = doc_len
        self.n_docs = int(doc_len.shape[0])
        self.avgdl = float(doc_len.sum()) / self.n_docs if self.n_docs else 0.0
        self._doc_len_f = doc_len.astype(np.float64)

    def df(self, term: str) -> int:
        post = self.postings.get(term)
        return 0 if post is None else int(post.ids.shape[0])

    def tf(self, term: str, doc: int) -> int:
        post = self.postings.get(term)
        if post is None:
            return 0
        pos = int(np.searchsorted(post.ids, doc))
        if pos < post.ids.shape[0] and post.ids[pos] == doc:
            return int(post.tfs[pos])
        return 0


def build_index(corpus: CorpusHandle) -> InvertedIndex:
    """Count term frequencies and document lengths over the whole corpus.

    Deterministic: postings lists come out ascending by internal id because
    documents are visited in internal-id order.
    """
    acc: dict[str, tuple[list[int], list[int]]] = {}
    doc_len = np.zeros(len(corpus), dtype=np.int64)
    for i, doc in enumerate(corpus.docs):
        tokens = tokenize(doc.text)
        doc_len[i] = len(tokens)
        counts: dict[str, int] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
        for t, tf in counts.items():
            if t not in acc:
                acc[t] = ([], [])
            ids, tfs = acc[t]
            ids.append(i)
            tfs.append(tf)
    postings = {
        t: Posting(np.asarray(ids, dtype=np.int64), np.asarray(tfs, dtype=np.float64))
        for t, (ids, tfs) in acc.items()
    }
    return InvertedIndex(postings, doc_len)


def _idf(index: InvertedIndex, df: int) -> float:
    # ln(1 + (N - df + 0.5)/(df + 0.5)): non-negative for every df <= N.
    return math.log(1.0 + (index.n_docs - df + 0.5) / (df + 0.5))


def _unique_in_order(tokens) -> list[str]:
    return list(dict.fromkeys(tokens))


def bm25_score(index: InvertedIndex, params: Bm25Params, query_tokens, doc: int) -> float:
    """BM25 score of one document against a token sequence.

    Duplicate query terms count once. Terms absent from the index contribute 0.
    """
    if not 0 <= doc < index.n_docs:
        raise DocOutOfRangeError(doc, index.n_docs)
    k1, b = params.k1, params.b
    k1p1 = k1 + 1.0
    norm = k1 * (1.0 - b + b * (float(index.doc_len[doc]) / index.avgdl)) if index.avgdl else 0.0
    total = 0.0
    for t in _unique_in_order(query_tokens):
        post = index.postings.get(t)
        if post is None:
            continue
        pos = int(np.searchsorted(post.ids, doc))
        if pos >= post.ids.shape[0] or post.ids[pos] != doc:
            continue
        tf = float(post.tfs[pos])
        idf = _idf(index, int(post.ids.shape[0]))
        total += idf * (tf * k1p1) / (tf + norm)
    return total


def _score_all(index: InvertedIndex, params: Bm25Params, tokens) -> np.ndarray:
    """Dense BM25 scores for every document, term-at-a-time.

    Mirrors bm25_score operation for operation so the two paths agree to the
    last bit.
    """
    scores = np.zeros(index.n_docs, dtype=np.float64)
    if index.n_docs == 0 or index.avgdl == 0.0:
        return scores
    k1, b = params.k1, params.b
    k1p1 = k1 + 1.0
    norms = k1 * (1.0 - b + b * (index._doc_len_f / index.avgdl))
    for t in _unique_in_order(tokens):
        post = index.postings.get(t)
        if post is None:
            continue
        idf = _idf(index, int(post.ids.shape[0]))
        tf = post.tfs
        scores[post.ids] += idf * (tf * k1p1) / (tf + norms[post.ids])
    return scores


def retrieve_topk(index: InvertedIndex, params: Bm25Params, query: Query, c: int) -> list[ScoredDoc]:
    """Exhaustive top-c retrieval: every positive-scoring document is ranked.

    Sorted by score descending, ties by ascending internal id, truncated to c —
    so the result for a smaller c is always a prefix of the result for a
    larger one.
    """
    if c < 1:
        raise ValueError(f"c must be >= 1, got {c}")
    scores = _score_all(index, params, tokenize(query.text))
    hits = np.flatnonzero(scores > 0.0)
    order = np.argsort(-scores[hits], kind="stable")  # stable keeps ties in id order
    top = hits[order][:c]
    return [ScoredDoc(int(d), float(scores[d])) for d in top]
