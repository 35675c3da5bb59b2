"""Document/query ingestion and the tokenizer shared by all lexical components.

Corpus files are JSONL (one object per line with "doc_id" and "text") or TSV
(two tab-separated columns, no header). Queries are TSV query_id\ttext.
Documents get dense internal ids 0..N-1 in file order; the external/internal
mapping is a bijection.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from gar.errors import DuplicateIdError, ParseError

# One token = a maximal run of alphanumeric codepoints (underscore splits too).
_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Unicode-lowercase, split on every non-alphanumeric codepoint, drop empties.

    No stemming, no stopword removal. Total function; deterministic.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Document:
    external_id: str
    text: str


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str


@dataclass
class CorpusHandle:
    """An ingested collection with dense internal ids in ingestion order.

    Immutable after construction; safe to share across threads.
    """

    docs: list[Document]
    id_map: dict[str, int] = field(init=False)

    def __post_init__(self):
        id_map: dict[str, int] = {}
        for i, doc in enumerate(self.docs):
            if not doc.external_id:
                raise ValueError(f"empty external_id at position {i}")
            if doc.external_id in id_map:
                raise DuplicateIdError(doc.external_id)
            id_map[doc.external_id] = i
        self.id_map = id_map

    def __len__(self) -> int:
        return len(self.docs)

    @property
    def n_docs(self) -> int:
        return len(self.docs)

    def internal_id(self, external_id: str) -> int:
        return self.id_map[external_id]

    def external_id(self, internal_id: int) -> str:
        return self.docs[internal_id].external_id

    def text(self, internal_id: int) -> str:
        return self.docs[internal_id].text

    @property
    def external_ids(self) -> list[str]:
        return [d.external_id for d in self.docs]


def load_corpus(path: str | Path, format: str = "jsonl") -> CorpusHandle:
    """Load a document collection, preserving file order.

    format: "jsonl" (fields doc_id/text) or "tsv" (id\ttext, no header).
    Raises ParseError with the 1-based line number on malformed records and
    DuplicateIdError on repeated ids.
    """
    path = Path(path)
    if format not in ("jsonl", "tsv"):
        raise ValueError(f"unknown corpus format: {format!r}")
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if format == "jsonl":
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
                if not isinstance(record, dict) or "doc_id" not in record or "text" not in record:
                    raise ParseError(path, line_no, "expected object with doc_id and text")
                doc_id, text = str(record["doc_id"]), str(record["text"])
            else:
                parts = line.split("\t", 1)
                if len(parts) != 2:
                    raise ParseError(path, line_no, "expected two tab-separated columns")
                doc_id, text = parts
            if not doc_id:
                raise ParseError(path, line_no, "empty doc_id")
            if doc_id in seen:
                raise DuplicateIdError(doc_id)
            seen.add(doc_id)
            docs.append(Document(doc_id, text))
    return CorpusHandle(docs)


def load_queries(path: str | Path) -> list[Query]:
    """Load queries from TSV query_id\ttext, preserving file order."""
    path = Path(path)
    queries: list[Query] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2:
                raise ParseError(path, line_no, "expected two tab-separated columns")
            query_id, text = parts
            if not query_id:
                raise ParseError(path, line_no, "empty query_id")
            if query_id in seen:
                raise DuplicateIdError(query_id)
            seen.add(query_id)
            queries.append(Query(query_id, text))
    return queries


def write_corpus(corpus: CorpusHandle, path: str | Path) -> None:
    """Write a corpus as JSONL (inverse of load_corpus for the jsonl format)."""
    with open(path, "w", encoding="utf-8") as f:
        for doc in corpus.docs:
            f.write(json.dumps({"doc_id": doc.external_id, "text": doc.text}) + "\n")


def write_queries(queries: list[Query], path: str | Path) -> None:
    """Write queries as TSV query_id\ttext."""
    with open(path, "w", encoding="utf-8") as f:
        for q in queries:
            f.write(f"{q.query_id}\t{q.text}\n")
