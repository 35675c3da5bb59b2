"""Synthetic corpora where part of the relevant set hides one graph hop away.

Every query owns a private vocabulary slice, split into a query block and
per-cluster blocks. A retrievable document is query block + cluster block; a
hidden document swaps the query block for throwaway filler tokens, so
first-stage retrieval cannot see it, but it still shares its cluster block
with a retrievable cluster-mate and therefore sits among that mate's nearest
graph neighbors. Generation asserts this reachability certificate on the
actually-built graph rather than trusting the construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gar.corpus import CorpusHandle, Document, Query
from gar.errors import InvalidSpecError
from gar.evaluation import Qrels
from gar.graph import build_graph
from gar.index import Bm25Params, build_index

CERTIFICATE_KMAX = 128


@dataclass(frozen=True)
class SynthSpec:
    num_queries: int = 10
    clusters_per_query: int = 3
    docs_per_cluster: int = 4
    relevant_per_query: int = 3
    frac_relevant_hidden: float = 0.5
    vocab_size: int = 20_000
    doc_len: int = 16
    seed: int = 0
    # Extra per-cluster documents (in clusters without relevant members) that,
    # like hidden relevant docs, carry no query tokens: reachable through the
    # graph but invisible to retrieval. They give a misleading scorer room to
    # waste its budget, which is what separates good from bad feedback when
    # the budget is scarce.
    hidden_decoys_per_cluster: int = 0

    def __post_init__(self):
        for name in ("num_queries", "clusters_per_query", "docs_per_cluster", "relevant_per_query", "vocab_size"):
            if getattr(self, name) < 1:
                raise InvalidSpecError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.frac_relevant_hidden <= 1.0:
            raise InvalidSpecError(
                f"frac_relevant_hidden must be in [0, 1], got {self.frac_relevant_hidden}"
            )
        if self.relevant_per_query > self.clusters_per_query * self.docs_per_cluster:
            raise InvalidSpecError(
                f"relevant_per_query ({self.relevant_per_query}) exceeds corpus capacity "
                f"({self.clusters_per_query} clusters x {self.docs_per_cluster} docs)"
            )
        if self.doc_len < 2:
            raise InvalidSpecError(
                f"doc_len must be >= 2 (a query block and a cluster block), got {self.doc_len}"
            )
        if self.seed < 0:
            raise InvalidSpecError(f"seed must be >= 0, got {self.seed}")
        if self.hidden_decoys_per_cluster < 0:
            raise InvalidSpecError(
                f"hidden_decoys_per_cluster must be >= 0, got {self.hidden_decoys_per_cluster}"
            )


@dataclass
class SynthMetadata:
    """Ground truth for assertions only; the engine never sees this."""

    hidden: dict[str, list[str]]  # query_id -> hidden relevant doc ids
    relevant: dict[str, list[str]]  # query_id -> all relevant doc ids
    clusters: dict[str, list[list[str]]]  # query_id -> per-cluster doc ids
    decoys: dict[str, list[str]]  # query_id -> hidden irrelevant doc ids
    certificate_kmax: int


def _hidden_count(spec: SynthSpec) -> int:
    return int(math.floor(spec.frac_relevant_hidden * spec.relevant_per_query + 0.5))


def _cluster_plan(spec: SynthSpec) -> list[tuple[int, int]]:
    """Per-cluster (visible_relevant, hidden_relevant) counts.

    Relevant docs fill clusters front to back. Hidden ones are placed first
    (each cluster keeps at least one retrievable slot, so every hidden doc has
    a retrievable cluster-mate), then visible relevant docs fill the remaining
    slots of the same clusters. Packing hidden next to visible keeps relevant
    clusters free of unjudged docs, so feedback from one relevant member
    points squarely at the others.
    """
    hidden = _hidden_count(spec)
    visible = spec.relevant_per_query - hidden
    plan = []
    for _ in range(spec.clusters_per_query):
        take_h = min(hidden, spec.docs_per_cluster - 1)
        take_v = min(visible, spec.docs_per_cluster - take_h)
        plan.append((take_v, take_h))
        visible -= take_v
        hidden -= take_h
    if hidden > 0:
        raise InvalidSpecError(
            f"cannot place {hidden} hidden relevant docs: every cluster keeps one "
            "retrievable slot; increase docs_per_cluster or clusters_per_query"
        )
    return plan


def generate(spec: SynthSpec) -> tuple[CorpusHandle, list[Query], Qrels, SynthMetadata]:
    """Deterministically build (corpus, queries, qrels, ground-truth metadata)."""
    qlen = max(1, spec.doc_len // 4)
    clen = spec.doc_len - qlen
    plan = _cluster_plan(spec)
    hidden_per_query = _hidden_count(spec)
    decoy_clusters = sum(1 for v, h in plan if v + h == 0)
    decoys_per_query = decoy_clusters * spec.hidden_decoys_per_cluster
    needed = spec.num_queries * (
        qlen + spec.clusters_per_query * clen + (hidden_per_query + decoys_per_query) * qlen
    )
    if needed > spec.vocab_size:
        raise InvalidSpecError(
            f"vocab_size {spec.vocab_size} too small: this spec needs {needed} distinct tokens"
        )

    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(spec.vocab_size)
    cursor = 0

    def take(n: int) -> list[str]:
        nonlocal cursor
        block = [f"t{perm[i]}" for i in range(cursor, cursor + n)]
        cursor += n
        return block

    docs: list[Document] = []
    queries: list[Query] = []
    grades: dict[tuple[str, str], int] = {}
    hidden_ids: dict[str, list[str]] = {}
    relevant_ids: dict[str, list[str]] = {}
    cluster_ids: dict[str, list[list[str]]] = {}
    decoy_ids: dict[str, list[str]] = {}

    for qi in range(spec.num_queries):
        qid = f"q{qi}"
        qblock = take(qlen)
        queries.append(Query(qid, " ".join(qblock)))
        hidden_ids[qid] = []
        relevant_ids[qid] = []
        cluster_ids[qid] = []
        decoy_ids[qid] = []
        for ci in range(spec.clusters_per_query):
            take_v, take_h = plan[ci]
            hidden_lo = max(take_v, 1)
            cblock = take(clen)
            members = []
            for si in range(spec.docs_per_cluster):
                did = f"q{qi}c{ci}d{si}"
                members.append(did)
                is_hidden = hidden_lo <= si < hidden_lo + take_h
                is_relevant = si < take_v or is_hidden
                if is_hidden:
                    text = " ".join(cblock + take(qlen))
                    hidden_ids[qid].append(did)
                else:
                    text = " ".join(qblock + cblock)
                if is_relevant:
                    grades[(qid, did)] = 1
                    relevant_ids[qid].append(did)
                docs.append(Document(did, text))
            if take_v + take_h == 0:
                for di in range(spec.hidden_decoys_per_cluster):
                    did = f"q{qi}c{ci}d{spec.docs_per_cluster + di}"
                    members.append(did)
                    decoy_ids[qid].append(did)
                    docs.append(Document(did, " ".join(cblock + take(qlen))))
            cluster_ids[qid].append(members)

    corpus = CorpusHandle(docs)
    qrels = Qrels(grades)
    meta = SynthMetadata(hidden_ids, relevant_ids, cluster_ids, decoy_ids, CERTIFICATE_KMAX)
    _assert_reachable(corpus, meta)
    return corpus, queries, qrels, meta


def _assert_reachable(corpus: CorpusHandle, meta: SynthMetadata) -> None:
    """Every hidden doc must be a stored neighbor of a retrievable cluster-mate.

    Applies to hidden relevant docs and hidden decoys alike: both are invisible
    to retrieval and only earn their keep if the graph can actually surface them.
    """
    unretrievable = {d for ids in meta.hidden.values() for d in ids}
    unretrievable |= {d for ids in meta.decoys.values() for d in ids}
    if not unretrievable:
        return
    graph = build_graph(corpus, build_index(corpus), Bm25Params(), meta.certificate_kmax)
    for by_query in (meta.hidden, meta.decoys):
        for qid, ids in by_query.items():
            for did in ids:
                h = corpus.internal_id(did)
                cluster = next(c for c in meta.clusters[qid] if did in c)
                mates = [corpus.internal_id(m) for m in cluster if m not in unretrievable]
                if not any(h in graph.adjacency[m] for m in mates):
                    raise RuntimeError(
                        f"reachability certificate violated: hidden doc {did} is not a "
                        f"neighbor of any retrievable cluster-mate at kmax={meta.certificate_kmax}"
                    )
