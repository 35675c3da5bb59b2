"""Offline corpus-graph construction and its on-disk format.

Each document is issued as a BM25 query against the rest of the corpus; its
top-kmax neighbors (self excluded) form the adjacency list. The runtime k of
the reranking loop only ever truncates these stored lists, so one offline
build at a generous kmax serves every downstream configuration.

Disk layout (little-endian): magic "GARG" | version u32 | N u32 | kmax u32 |
N records of kmax u32 slots, unused slots 0xFFFFFFFF. The external-id mapping
lives in a sibling UTF-8 text file at <path>.ids, line i = external id of
internal id i.
"""

from __future__ import annotations

import struct
import warnings
from pathlib import Path

import numpy as np

from gar.corpus import CorpusHandle, tokenize
from gar.errors import DocOutOfRangeError, GraphFormatError
from gar.index import Bm25Params, InvertedIndex, _score_all

MAGIC = b"GARG"
VERSION = 1
_UNUSED = 0xFFFFFFFF


class CorpusGraph:
    def __init__(self, kmax: int, adjacency: list[list[int]], external_ids: list[str]):
        if len(adjacency) != len(external_ids):
            raise ValueError("adjacency and id map disagree on document count")
        self.kmax = kmax
        self.adjacency = adjacency
        self.external_ids = external_ids

    @property
    def n_docs(self) -> int:
        return len(self.adjacency)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorpusGraph):
            return NotImplemented
        return (
            self.kmax == other.kmax
            and self.adjacency == other.adjacency
            and self.external_ids == other.external_ids
        )

    def __repr__(self) -> str:
        return f"CorpusGraph(n_docs={self.n_docs}, kmax={self.kmax})"


def build_graph(
    corpus: CorpusHandle, index: InvertedIndex, params: Bm25Params, kmax: int
) -> CorpusGraph:
    """Score every document as a query and keep its top-kmax non-self hits.

    Neighbor lists are ordered by similarity descending, ties by ascending
    internal id; a document whose text matches nothing else stays isolated.
    """
    if kmax < 1:
        raise ValueError(f"kmax must be >= 1, got {kmax}")
    adjacency: list[list[int]] = []
    for d, doc in enumerate(corpus.docs):
        scores = _score_all(index, params, tokenize(doc.text))
        hits = np.flatnonzero(scores > 0.0)
        order = np.argsort(-scores[hits], kind="stable")
        ranked = hits[order]
        adjacency.append([int(x) for x in ranked if x != d][:kmax])
    return CorpusGraph(kmax, adjacency, list(corpus.external_ids))


def neighbors(graph: CorpusGraph, d: int, k: int) -> list[int]:
    """First min(k, stored) neighbors of d, most similar first."""
    if not 0 <= d < graph.n_docs:
        raise DocOutOfRangeError(d, graph.n_docs)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > graph.kmax:
        warnings.warn(
            f"requested k={k} exceeds stored kmax={graph.kmax}; truncating", stacklevel=2
        )
        k = graph.kmax
    return graph.adjacency[d][:k]


def write_graph(graph: CorpusGraph, path: str | Path) -> None:
    path = Path(path)
    n, kmax = graph.n_docs, graph.kmax
    slots = np.full((n, kmax), _UNUSED, dtype="<u4")
    for i, adj in enumerate(graph.adjacency):
        if adj:
            slots[i, : len(adj)] = adj
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", VERSION, n, kmax))
        f.write(slots.tobytes())
    with open(_id_map_path(path), "w", encoding="utf-8") as f:
        for ext in graph.external_ids:
            f.write(ext + "\n")


def read_graph(path: str | Path) -> CorpusGraph:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 16:
        raise GraphFormatError(len(data), "truncated header")
    if data[:4] != MAGIC:
        raise GraphFormatError(0, f"bad magic {data[:4]!r}")
    version, n, kmax = struct.unpack_from("<III", data, 4)
    if version != VERSION:
        raise GraphFormatError(4, f"unsupported version {version}")
    expected = 16 + n * kmax * 4
    if len(data) != expected:
        raise GraphFormatError(min(len(data), expected), f"expected {expected} bytes, got {len(data)}")
    slots = np.frombuffer(data, dtype="<u4", offset=16).reshape(n, kmax)
    adjacency: list[list[int]] = []
    for i in range(n):
        row = slots[i]
        end = int(np.argmax(row == _UNUSED)) if (row == _UNUSED).any() else kmax
        adj = [int(x) for x in row[:end]]
        for j, x in enumerate(adj):
            if x >= n:
                raise GraphFormatError(16 + (i * kmax + j) * 4, f"neighbor id {x} out of range")
        adjacency.append(adj)
    id_map_path = _id_map_path(path)
    external_ids = id_map_path.read_text(encoding="utf-8").splitlines()
    if len(external_ids) != n:
        raise GraphFormatError(0, f"id map has {len(external_ids)} lines for {n} documents")
    return CorpusGraph(kmax, adjacency, external_ids)


def _id_map_path(path: Path) -> Path:
    return path.with_name(path.name + ".ids")
