"""Relevance judgments, ranking metrics, and TREC-style run file I/O.

Formats: qrels lines are whitespace-separated ``query_id 0 doc_id grade``; run
lines are ``query_id Q0 doc_id rank score tag``. Scores are written with
repr() so a written run parses back to the identical floats.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from gar.errors import ParseError


class Qrels:
    """Non-negative integer grades keyed by (query_id, external_id)."""

    def __init__(self, grades: Mapping[tuple[str, str], int]):
        self.grades: dict[tuple[str, str], int] = {}
        self._by_query: dict[str, dict[str, int]] = {}
        for (qid, did), g in grades.items():
            if g < 0:
                raise ValueError(f"negative grade {g} for ({qid}, {did})")
            self.grades[(qid, did)] = int(g)
            self._by_query.setdefault(qid, {})[did] = int(g)

    def grade(self, query_id: str, external_id: str) -> int:
        return self.grades.get((query_id, external_id), 0)

    def for_query(self, query_id: str) -> dict[str, int]:
        return self._by_query.get(query_id, {})

    def query_ids(self) -> list[str]:
        return list(self._by_query)

    @property
    def num_judged(self) -> int:
        return len(self.grades)

    def __len__(self) -> int:
        return len(self.grades)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Qrels):
            return NotImplemented
        return self.grades == other.grades


def load_qrels(path: str | Path) -> Qrels:
    path = Path(path)
    grades: dict[tuple[str, str], int] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(path, line_no, f"expected 4 fields, got {len(parts)}")
            qid, _, did, grade_s = parts
            try:
                grade = int(grade_s)
            except ValueError:
                raise ParseError(path, line_no, f"grade is not an integer: {grade_s!r}") from None
            if grade < 0:
                raise ParseError(path, line_no, f"negative grade {grade}")
            if (qid, did) in grades:
                raise ParseError(path, line_no, f"duplicate judgment for ({qid}, {did})")
            grades[(qid, did)] = grade
    return Qrels(grades)


def write_qrels(qrels: Qrels, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for (qid, did), g in qrels.grades.items():
            f.write(f"{qid} 0 {did} {g}\n")


class RunEntry(NamedTuple):
    query_id: str
    external_id: str
    rank: int
    score: float
    tag: str


def write_run(entries: Iterable[RunEntry], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for e in entries:
            f.write(f"{e.query_id} Q0 {e.external_id} {e.rank} {float(e.score)!r} {e.tag}\n")


def load_run(path: str | Path) -> list[RunEntry]:
    """Parse a run file, enforcing per-query rank/score/id invariants."""
    path = Path(path)
    entries: list[RunEntry] = []
    last_rank: dict[str, int] = {}
    last_score: dict[str, float] = {}
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ParseError(path, line_no, f"expected 6 fields, got {len(parts)}")
            qid, _, did, rank_s, score_s, tag = parts
            try:
                rank = int(rank_s)
                score = float(score_s)
            except ValueError:
                raise ParseError(path, line_no, f"bad rank/score: {rank_s!r} {score_s!r}") from None
            if rank != last_rank.get(qid, 0) + 1:
                raise ParseError(path, line_no, f"rank {rank} breaks contiguity for query {qid}")
            if qid in last_score and score > last_score[qid]:
                raise ParseError(path, line_no, f"score {score} increases with rank for query {qid}")
            if (qid, did) in seen:
                raise ParseError(path, line_no, f"duplicate document {did} for query {qid}")
            seen.add((qid, did))
            last_rank[qid] = rank
            last_score[qid] = score
            entries.append(RunEntry(qid, did, rank, score, tag))
    return entries


def ndcg_at(ranked_ids: Sequence[str], grades: Mapping[str, int], cutoff: int = 10) -> float:
    """nDCG with gain 2^grade - 1 and log2(rank+1) discount.

    The ideal DCG sorts every judged grade for the query (not just retrieved
    ones) and applies the same cutoff. 0.0 when nothing is judged relevant.
    """
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    dcg = 0.0
    for i, did in enumerate(ranked_ids[:cutoff], start=1):
        g = grades.get(did, 0)
        if g > 0:
            dcg += (2.0 ** g - 1.0) / math.log2(i + 1)
    ideal = sorted((g for g in grades.values() if g > 0), reverse=True)[:cutoff]
    idcg = 0.0
    for i, g in enumerate(ideal, start=1):
        idcg += (2.0 ** g - 1.0) / math.log2(i + 1)
    return dcg / idcg if idcg > 0.0 else 0.0


def recall_at(ranked_ids: Sequence[str], grades: Mapping[str, int], c: int) -> float:
    """Fraction of the query's relevant (grade > 0) documents in the top c."""
    if c < 1:
        raise ValueError(f"c must be >= 1, got {c}")
    relevant = {d for d, g in grades.items() if g > 0}
    if not relevant:
        warnings.warn("query has no relevant documents; recall reported as 0.0", stacklevel=2)
        return 0.0
    return len(relevant.intersection(ranked_ids[:c])) / len(relevant)


@dataclass
class EvalReport:
    per_query: dict[str, dict[str, float]]
    aggregate: dict[str, float]
    num_queries: int
    num_judged: int


def _resolve_metric(name: str, c: int | None) -> tuple[str, Callable]:
    kind, _, arg = name.partition("@")
    if arg == "c":
        if c is None:
            raise ValueError(f"metric {name!r} needs an explicit c")
        cutoff = c
    elif arg:
        try:
            cutoff = int(arg)
        except ValueError:
            raise ValueError(f"bad cutoff in metric {name!r}") from None
    else:
        cutoff = 10 if kind == "ndcg" else c
    if cutoff is not None and cutoff < 1:
        raise ValueError(f"metric {name!r} needs a cutoff >= 1")
    if kind == "ndcg":
        return f"ndcg@{cutoff}", lambda ids, grades: ndcg_at(ids, grades, cutoff)
    if kind == "recall":
        if cutoff is None:
            raise ValueError(f"metric {name!r} needs an explicit c")
        return f"recall@{cutoff}", lambda ids, grades: recall_at(ids, grades, cutoff)
    raise ValueError(f"unknown metric {name!r}")


def evaluate(
    run: Iterable[RunEntry],
    qrels: Qrels,
    metrics: Sequence[str] = ("ndcg@10", "recall@c"),
    c: int | None = None,
) -> EvalReport:
    """Per-query metrics plus their unweighted mean over all judged queries.

    Judged queries missing from the run score 0 on every metric; run-only
    queries are ignored.
    """
    resolved = [_resolve_metric(m, c) for m in metrics]
    by_query: dict[str, list[RunEntry]] = {}
    for e in run:
        by_query.setdefault(e.query_id, []).append(e)
    per_query: dict[str, dict[str, float]] = {}
    qids = sorted(qrels.query_ids())
    for qid in qids:
        ranked = sorted(by_query.get(qid, []), key=lambda e: e.rank)
        ids = [e.external_id for e in ranked]
        grades = qrels.for_query(qid)
        per_query[qid] = {label: fn(ids, grades) for label, fn in resolved}
    aggregate = {
        label: (sum(per_query[q][label] for q in qids) / len(qids)) if qids else 0.0
        for label, _ in resolved
    }
    return EvalReport(per_query, aggregate, len(qids), qrels.num_judged)
