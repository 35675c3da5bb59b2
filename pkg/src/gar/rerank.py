"""The adaptive reranking loop and the standard rerank-everything baseline.

The loop alternates between two candidate sources — the initial retrieval
list and a graph frontier fed by reranker feedback — until the scoring
budget c is spent or both sources run dry. Frontier entries inherit the
reranker score of the document that introduced them; on collision the
maximum wins, so priorities only ever grow and are independent of
traversal order.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

from gar.corpus import CorpusHandle, Query
from gar.errors import InvalidConfigError
from gar.graph import CorpusGraph, neighbors
from gar.index import ScoredDoc
from gar.scorer import ScoreBatchRequest, score_batch

_BACKFILL_STEP = 1e-6


@dataclass(frozen=True)
class GarConfig:
    budget_c: int
    batch_b: int = 16
    neighbors_k: int = 16
    start_source: str = "initial"

    def __post_init__(self):
        if self.budget_c < 1:
            raise InvalidConfigError(f"budget_c must be >= 1, got {self.budget_c}")
        if self.batch_b < 1:
            raise InvalidConfigError(f"batch_b must be >= 1, got {self.batch_b}")
        if self.neighbors_k < 1:
            raise InvalidConfigError(f"neighbors_k must be >= 1, got {self.neighbors_k}")
        if self.batch_b > self.budget_c:
            raise InvalidConfigError(
                f"batch_b ({self.batch_b}) must not exceed budget_c ({self.budget_c})"
            )
        if self.start_source != "initial":
            raise InvalidConfigError(f"start_source must be 'initial', got {self.start_source!r}")


class Frontier:
    """Unscored candidates with priorities; extraction order is total:
    priority descending, then internal id ascending."""

    def __init__(self):
        self.entries: dict[int, float] = {}

    def add(self, doc: int, priority: float) -> None:
        cur = self.entries.get(doc)
        if cur is None or priority > cur:
            self.entries[doc] = priority

    def discard(self, doc: int) -> None:
        self.entries.pop(doc, None)

    def peek(self, n: int) -> list[int]:
        ordered = sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))
        return [doc for doc, _ in ordered[:n]]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, doc: int) -> bool:
        return doc in self.entries


@dataclass
class RerankState:
    r0: list[ScoredDoc]
    r1: dict[int, float] = field(default_factory=dict)
    frontier: Frontier = field(default_factory=Frontier)
    next_source: str = "initial"

    @property
    def scored_count(self) -> int:
        return len(self.r1)


def _other(source: str) -> str:
    return "frontier" if source == "initial" else "initial"


def select_batch(state: RerankState, config: GarConfig) -> tuple[str, list[int]]:
    """Next batch and the source it came from, without mutating state.

    Tries the scheduled source first and falls back to the other; the batch
    is capped by both batch_b and the remaining budget.
    """
    remaining = config.budget_c - state.scored_count
    if remaining <= 0:
        return state.next_source, []
    take = min(config.batch_b, remaining)
    for source in (state.next_source, _other(state.next_source)):
        if source == "initial":
            batch = [sd.internal_id for sd in state.r0 if sd.internal_id not in state.r1][:take]
        else:
            batch = state.frontier.peek(take)
        if batch:
            return source, batch
    return state.next_source, []


def _strictify(scores: list[float]) -> list[float]:
    """Force strict decrease without reordering: ties drop by one ulp."""
    out: list[float] = []
    for s in scores:
        if out and s >= out[-1]:
            s = math.nextafter(out[-1], -math.inf)
        out.append(s)
    return out


def _finalize(r1: dict[int, float], unscored_r0: list[ScoredDoc]) -> list[ScoredDoc]:
    """Scored docs by reranker score, then unscored R0 docs in retrieval order.

    Backfilled docs get synthetic scores stepping down from the scored
    minimum so the emitted scores are consistent with the emitted order.
    """
    ranked = sorted(r1.items(), key=lambda kv: (-kv[1], kv[0]))
    ids = [doc for doc, _ in ranked]
    raw = [s for _, s in ranked]
    if unscored_r0:
        base = raw[-1] if raw else 0.0
        for offset, sd in enumerate(unscored_r0, start=1):
            ids.append(sd.internal_id)
            raw.append(base - offset * _BACKFILL_STEP)
    return [ScoredDoc(doc, s) for doc, s in zip(ids, _strictify(raw))]


def _score(scorer, query: Query, batch: list[int], corpus: CorpusHandle) -> list[float]:
    request = ScoreBatchRequest(
        query=query, docs=[(corpus.external_id(d), corpus.text(d)) for d in batch]
    )
    return score_batch(scorer, request)


def gar_rerank(
    query: Query,
    r0: list[ScoredDoc],
    graph: CorpusGraph,
    scorer,
    config: GarConfig,
    *,
    corpus: CorpusHandle,
    stats: dict | None = None,
) -> list[ScoredDoc]:
    """Adaptively rerank: spend budget c across R0 and the graph frontier.

    R0 documents left unscored when the budget runs out keep their retrieval
    order at the tail of the output.
    """
    if len(r0) > config.budget_c:
        raise InvalidConfigError(
            f"initial ranking has {len(r0)} docs but budget_c is {config.budget_c}; "
            "retrieve with c = budget_c"
        )
    k = config.neighbors_k
    if k > graph.kmax:
        warnings.warn(
            f"neighbors_k={k} exceeds graph kmax={graph.kmax}; using kmax", stacklevel=2
        )
        k = graph.kmax
    t0 = time.perf_counter()
    state = RerankState(r0=list(r0))
    batches = 0
    while state.scored_count < config.budget_c:
        _, batch = select_batch(state, config)
        if not batch:
            break
        scores = _score(scorer, query, batch, corpus)
        for doc, s in zip(batch, scores):
            state.r1[doc] = s
            state.frontier.discard(doc)
        for doc, s in zip(batch, scores):
            for n in neighbors(graph, doc, k):
                if n not in state.r1:
                    state.frontier.add(n, s)
        state.next_source = _other(state.next_source)
        batches += 1
    unscored = [sd for sd in state.r0 if sd.internal_id not in state.r1]
    if stats is not None:
        stats.update(
            batches=batches,
            scored=state.scored_count,
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
    return _finalize(state.r1, unscored)


def standard_rerank(
    query: Query,
    r0: list[ScoredDoc],
    scorer,
    config: GarConfig,
    *,
    corpus: CorpusHandle,
    stats: dict | None = None,
) -> list[ScoredDoc]:
    """Score all of R0 (batched like the loop, for scorer-usage parity) and sort."""
    if len(r0) > config.budget_c:
        raise InvalidConfigError(
            f"initial ranking has {len(r0)} docs but budget_c is {config.budget_c}; "
            "retrieve with c = budget_c"
        )
    t0 = time.perf_counter()
    r1: dict[int, float] = {}
    batches = 0
    for i in range(0, len(r0), config.batch_b):
        batch = [sd.internal_id for sd in r0[i : i + config.batch_b]]
        for doc, s in zip(batch, _score(scorer, query, batch, corpus)):
            r1[doc] = s
        batches += 1
    if stats is not None:
        stats.update(batches=batches, scored=len(r1), wall_ms=(time.perf_counter() - t0) * 1e3)
    return _finalize(r1, [])
