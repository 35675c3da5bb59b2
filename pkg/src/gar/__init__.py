"""Graph-based adaptive reranking: retrieve, build a corpus graph, then let
reranker feedback steer which documents get scored next."""

from gar.corpus import (
    CorpusHandle,
    Document,
    Query,
    load_corpus,
    load_queries,
    tokenize,
)
from gar.errors import (
    DocOutOfRangeError,
    DuplicateIdError,
    GarError,
    GraphFormatError,
    InvalidConfigError,
    InvalidSpecError,
    ParseError,
    RemoteProtocolError,
    RemoteUnavailableError,
)
from gar.evaluation import (
    EvalReport,
    Qrels,
    RunEntry,
    evaluate,
    load_qrels,
    load_run,
    ndcg_at,
    recall_at,
    write_qrels,
    write_run,
)
from gar.graph import CorpusGraph, build_graph, neighbors, read_graph, write_graph
from gar.index import (
    Bm25Params,
    InvertedIndex,
    ScoredDoc,
    bm25_score,
    build_index,
    retrieve_topk,
)
from gar.rerank import (
    Frontier,
    GarConfig,
    RerankState,
    gar_rerank,
    select_batch,
    standard_rerank,
)
from gar.scorer import (
    ScoreBatchRequest,
    ScorerQuality,
    make_anticorrelated,
    make_lexical,
    make_noisy,
    make_oracle,
    make_remote,
    make_scorer,
    score_batch,
)
from gar.synth import SynthMetadata, SynthSpec, generate

__version__ = "0.1.0"

__all__ = [
    "Bm25Params",
    "CorpusGraph",
    "CorpusHandle",
    "DocOutOfRangeError",
    "Document",
    "DuplicateIdError",
    "EvalReport",
    "Frontier",
    "GarConfig",
    "GarError",
    "GraphFormatError",
    "InvalidConfigError",
    "InvalidSpecError",
    "InvertedIndex",
    "ParseError",
    "Qrels",
    "Query",
    "RemoteProtocolError",
    "RemoteUnavailableError",
    "RerankState",
    "RunEntry",
    "ScoreBatchRequest",
    "ScoredDoc",
    "ScorerQuality",
    "SynthMetadata",
    "SynthSpec",
    "bm25_score",
    "build_graph",
    "build_index",
    "evaluate",
    "gar_rerank",
    "generate",
    "load_corpus",
    "load_qrels",
    "load_queries",
    "load_run",
    "make_anticorrelated",
    "make_lexical",
    "make_noisy",
    "make_oracle",
    "make_remote",
    "make_scorer",
    "ndcg_at",
    "neighbors",
    "read_graph",
    "recall_at",
    "retrieve_topk",
    "score_batch",
    "select_batch",
    "standard_rerank",
    "tokenize",
    "write_graph",
    "write_qrels",
    "write_run",
]
