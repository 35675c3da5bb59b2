"""Command-line front end: build artifacts, run pipelines, emit CSV reports.

Every command is reproducible — identical flags, files, and seeds yield
byte-identical outputs, regardless of --threads. Exit codes: 0 ok, 1 usage
error, 2 runtime error; failures leave no partial output files behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

from gar.corpus import (
    CorpusHandle,
    Query,
    load_corpus,
    load_queries,
    write_corpus,
    write_queries,
)
from gar.errors import GarError
from gar.evaluation import (
    RunEntry,
    evaluate,
    load_qrels,
    load_run,
    write_qrels,
    write_run,
)
from gar.graph import read_graph, write_graph, build_graph
from gar.index import Bm25Params, ScoredDoc, build_index, retrieve_topk
from gar.rerank import GarConfig, gar_rerank, standard_rerank
from gar.scorer import ScoreBatchRequest, ScorerQuality, make_scorer, score_batch
from gar.synth import SynthSpec, generate

EVAL_CSV_COLUMNS = "query_id,metric,value (aggregate row has query_id 'all')"
SWEEP_CSV_COLUMNS = "param,value,metric,mean"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; this project reserves 2 for runtime."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (GarError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gar", description="Graph-based adaptive reranking toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("index", help="validate a corpus and print index statistics")
    s.add_argument("--corpus", required=True)
    s.set_defaults(func=cmd_index)

    g = sub.add_parser("graph", help="corpus-graph operations")
    gsub = g.add_subparsers(dest="graph_command", required=True, parser_class=_Parser)
    s = gsub.add_parser("build", help="build the corpus graph offline and write it")
    s.add_argument("--corpus", required=True)
    s.add_argument("--kmax", type=int, default=128, help="neighbors stored per document")
    s.add_argument("--k1", type=float, default=0.9)
    s.add_argument("--b", type=float, default=0.4)
    s.add_argument("--out", required=True, help="graph path; id map goes to <out>.ids")
    s.set_defaults(func=cmd_graph_build)

    s = sub.add_parser("retrieve", help="first-stage retrieval to a run file")
    s.add_argument("--corpus", required=True)
    s.add_argument("--queries", required=True)
    s.add_argument("--c", type=int, required=True, help="retrieval depth")
    s.add_argument("--k1", type=float, default=0.9)
    s.add_argument("--b", type=float, default=0.4)
    s.add_argument("--tag", default="bm25")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_retrieve)

    s = sub.add_parser(
        "rerank",
        help="rerank a first-stage run",
        epilog="Scorers: oracle | noisy:<sigma> | anticorrelated | lexical | remote:<url>. "
        "The oracle family needs --qrels; gar mode needs --graph.",
    )
    s.add_argument("--mode", choices=("standard", "gar"), required=True)
    s.add_argument("--run", required=True, help="input run with the initial ranking")
    s.add_argument("--corpus", required=True)
    s.add_argument("--queries", required=True, help="query texts (TSV id\\ttext)")
    s.add_argument("--graph", help="corpus graph (gar mode)")
    s.add_argument("--scorer", required=True)
    s.add_argument("--qrels", help="judgments backing the oracle scorer family")
    s.add_argument("--c", type=int, required=True, help="reranking budget")
    s.add_argument("--batch", type=int, default=16)
    s.add_argument("--k", type=int, default=16, help="neighbors consulted per scored doc")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tag", help="run tag (defaults to the mode)")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_rerank)

    s = sub.add_parser(
        "eval",
        help="score a run against qrels",
        epilog=f"CSV columns: {EVAL_CSV_COLUMNS}; metric rows per query, then aggregates.",
    )
    s.add_argument("--run", required=True)
    s.add_argument("--qrels", required=True)
    s.add_argument("--metrics", default="ndcg@10,recall@c", help="comma-separated")
    s.add_argument("--c", type=int, help="resolves the 'c' in metrics like recall@c")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser(
        "sweep",
        help="ablate batch size or neighbor count over a value list",
        epilog=f"CSV columns: {SWEEP_CSV_COLUMNS}; one row per value per metric.",
    )
    s.add_argument("--param", choices=("batch", "k"), required=True)
    s.add_argument("--values", required=True, help="comma-separated integers")
    s.add_argument("--run", required=True)
    s.add_argument("--corpus", required=True)
    s.add_argument("--queries", required=True)
    s.add_argument("--graph", required=True)
    s.add_argument("--scorer", required=True)
    s.add_argument("--qrels", required=True)
    s.add_argument("--metrics", default="ndcg@10,recall@c")
    s.add_argument("--c", type=int, required=True)
    s.add_argument("--batch", type=int, default=16)
    s.add_argument("--k", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser(
        "synth",
        help="generate a synthetic corpus/queries/qrels suite",
        epilog="Spec keys: num_queries, clusters_per_query, docs_per_cluster, "
        "relevant_per_query, frac_relevant_hidden, vocab_size, doc_len, seed, "
        "hidden_decoys_per_cluster.",
    )
    s.add_argument("--spec", default="", help="key=value[,key=value...] or a JSON file")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_synth)

    return p


# ---------------------------------------------------------------- helpers


def _load_corpus_auto(path: str) -> CorpusHandle:
    fmt = "tsv" if Path(path).suffix == ".tsv" else "jsonl"
    return load_corpus(path, fmt)


def _replace_into(tmp: Path, final: Path) -> None:
    os.replace(tmp, final)


def _atomic(write_fn, final: Path, *, extra_suffixes: tuple[str, ...] = ()) -> None:
    """Write via <final>.tmp (plus parallel extras) and rename into place."""
    tmp = final.with_name(final.name + ".tmp")
    try:
        write_fn(tmp)
        for suffix in extra_suffixes:
            _replace_into(Path(str(tmp) + suffix), Path(str(final) + suffix))
        _replace_into(tmp, final)
    except BaseException:
        for suffix in ("", *extra_suffixes):
            Path(str(tmp) + suffix).unlink(missing_ok=True)
        raise


def _map_queries(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _parse_scorer(spec: str, seed: int) -> ScorerQuality:
    kind, _, arg = spec.partition(":")
    try:
        if kind == "noisy":
            return ScorerQuality("noisy", noise_sigma=float(arg), seed=seed)
        if kind == "remote":
            if not arg:
                raise ValueError("remote scorer needs an endpoint, e.g. remote:http://host:port")
            return ScorerQuality("remote", seed=seed, endpoint=arg)
        if arg:
            raise ValueError(f"scorer {kind!r} takes no parameter")
        return ScorerQuality(kind, seed=seed)
    except ValueError as exc:
        raise UsageError(f"bad --scorer {spec!r}: {exc}") from None


def _build_scorer(args, corpus: CorpusHandle):
    quality = _parse_scorer(args.scorer, args.seed)
    qrels = load_qrels(args.qrels) if getattr(args, "qrels", None) else None
    if quality.kind in ("oracle", "noisy", "anticorrelated") and qrels is None:
        raise UsageError(f"scorer {quality.kind!r} requires --qrels")
    index = build_index(corpus) if quality.kind == "lexical" else None
    return make_scorer(quality, qrels=qrels, corpus=corpus, index=index, params=Bm25Params())


def _ping_remote(scorer, queries: list[Query], corpus: CorpusHandle) -> None:
    """One-document probe so a dead endpoint fails before any budget is spent."""
    if not queries or len(corpus) == 0:
        return
    doc = corpus.docs[0]
    score_batch(scorer, ScoreBatchRequest(queries[0], [(doc.external_id, doc.text)]))


def _group_run(entries: list[RunEntry]) -> dict[str, list[RunEntry]]:
    grouped: dict[str, list[RunEntry]] = {}
    for e in entries:
        grouped.setdefault(e.query_id, []).append(e)
    for qid in grouped:
        grouped[qid].sort(key=lambda e: e.rank)
    return grouped


def _ranking_to_entries(qid, ranking, corpus, tag) -> list[RunEntry]:
    return [
        RunEntry(qid, corpus.external_id(sd.internal_id), rank, sd.score, tag)
        for rank, sd in enumerate(ranking, start=1)
    ]


def _rerank_all(args, corpus, queries_by_id, grouped, scorer, config, graph, tag):
    """Run one rerank mode over every query in the run, in sorted query order."""

    def one(qid: str) -> list[RunEntry]:
        query = queries_by_id.get(qid)
        if query is None:
            raise GarError(f"query {qid!r} appears in the run but not in --queries")
        r0 = []
        for e in grouped[qid][: config.budget_c]:
            try:
                internal = corpus.internal_id(e.external_id)
            except KeyError:
                raise GarError(f"run references unknown document {e.external_id!r}") from None
            r0.append(ScoredDoc(internal, e.score))
        if args.mode == "gar":
            ranking = gar_rerank(query, r0, graph, scorer, config, corpus=corpus)
        else:
            ranking = standard_rerank(query, r0, scorer, config, corpus=corpus)
        return _ranking_to_entries(qid, ranking, corpus, tag)

    per_query = _map_queries(one, sorted(grouped), args.threads)
    return [e for chunk in per_query for e in chunk]


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _parse_metrics(args) -> list[str]:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if not metrics:
        raise UsageError("--metrics is empty")
    return metrics


# ---------------------------------------------------------------- commands


def cmd_index(args) -> int:
    corpus = _load_corpus_auto(args.corpus)
    index = build_index(corpus)
    print(
        f"documents={index.n_docs} terms={len(index.postings)} "
        f"tokens={int(index.doc_len.sum())} avgdl={index.avgdl:.2f}"
    )
    return 0


def cmd_graph_build(args) -> int:
    if args.kmax < 1:
        raise UsageError(f"--kmax must be >= 1, got {args.kmax}")
    corpus = _load_corpus_auto(args.corpus)
    index = build_index(corpus)
    graph = build_graph(corpus, index, Bm25Params(k1=args.k1, b=args.b), args.kmax)
    out = Path(args.out)
    _atomic(lambda tmp: write_graph(graph, tmp), out, extra_suffixes=(".ids",))
    print(f"wrote graph: documents={graph.n_docs} kmax={graph.kmax} -> {out}")
    return 0


def cmd_retrieve(args) -> int:
    corpus = _load_corpus_auto(args.corpus)
    queries = load_queries(args.queries)
    index = build_index(corpus)
    params = Bm25Params(k1=args.k1, b=args.b)
    if args.c < 1:
        raise UsageError(f"--c must be >= 1, got {args.c}")

    def one(query: Query) -> list[RunEntry]:
        ranking = retrieve_topk(index, params, query, args.c)
        return _ranking_to_entries(query.query_id, ranking, corpus, args.tag)

    ordered = sorted(queries, key=lambda q: q.query_id)
    per_query = _map_queries(one, ordered, args.threads)
    entries = [e for chunk in per_query for e in chunk]
    _atomic(lambda tmp: write_run(entries, tmp), Path(args.out))
    print(f"wrote run: queries={len(queries)} entries={len(entries)} -> {args.out}")
    return 0


def cmd_rerank(args) -> int:
    corpus = _load_corpus_auto(args.corpus)
    queries_by_id = {q.query_id: q for q in load_queries(args.queries)}
    grouped = _group_run(load_run(args.run))
    if args.mode == "gar":
        if not args.graph:
            raise UsageError("--mode gar requires --graph")
        graph = read_graph(args.graph)
    else:
        graph = None
    scorer = _build_scorer(args, corpus)
    if args.scorer.startswith("remote"):
        _ping_remote(scorer, list(queries_by_id.values()), corpus)
    config = GarConfig(budget_c=args.c, batch_b=args.batch, neighbors_k=args.k)
    tag = args.tag or args.mode
    entries = _rerank_all(args, corpus, queries_by_id, grouped, scorer, config, graph, tag)
    _atomic(lambda tmp: write_run(entries, tmp), Path(args.out))
    print(f"wrote run: queries={len(grouped)} entries={len(entries)} -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    run = load_run(args.run)
    qrels = load_qrels(args.qrels)
    metrics = _parse_metrics(args)
    try:
        report = evaluate(run, qrels, metrics, c=args.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    labels = list(report.aggregate)
    rows = []
    for qid in sorted(report.per_query):
        for label in labels:
            rows.append([qid, label, repr(report.per_query[qid][label])])
    for label in labels:
        rows.append(["all", label, repr(report.aggregate[label])])
    _atomic(
        lambda tmp: tmp.write_text(_csv_text(["query_id", "metric", "value"], rows)),
        Path(args.out),
    )
    for label in labels:
        print(f"{label} mean={report.aggregate[label]:.4f} over {report.num_queries} queries")
    return 0


def cmd_sweep(args) -> int:
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values must be comma-separated integers, got {args.values!r}") from None
    if not values:
        raise UsageError("--values is empty")
    metrics = _parse_metrics(args)
    corpus = _load_corpus_auto(args.corpus)
    queries_by_id = {q.query_id: q for q in load_queries(args.queries)}
    grouped = _group_run(load_run(args.run))
    graph = read_graph(args.graph)
    qrels = load_qrels(args.qrels)
    scorer = _build_scorer(args, corpus)
    if args.scorer.startswith("remote"):
        _ping_remote(scorer, list(queries_by_id.values()), corpus)
    args.mode = "gar"  # sweeps ablate the adaptive loop
    rows = []
    for value in values:
        batch = value if args.param == "batch" else args.batch
        k = value if args.param == "k" else args.k
        config = GarConfig(budget_c=args.c, batch_b=batch, neighbors_k=k)
        entries = _rerank_all(args, corpus, queries_by_id, grouped, scorer, config, graph, "sweep")
        try:
            report = evaluate(entries, qrels, metrics, c=args.c)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for label, mean in report.aggregate.items():
            rows.append([args.param, value, label, repr(mean)])
    _atomic(
        lambda tmp: tmp.write_text(_csv_text(["param", "value", "metric", "mean"], rows)),
        Path(args.out),
    )
    print(f"swept {args.param} over {values} -> {args.out}")
    return 0


_SPEC_FIELD_TYPES = {
    "num_queries": int,
    "clusters_per_query": int,
    "docs_per_cluster": int,
    "relevant_per_query": int,
    "frac_relevant_hidden": float,
    "vocab_size": int,
    "doc_len": int,
    "seed": int,
    "hidden_decoys_per_cluster": int,
}


def _parse_synth_spec(text: str) -> SynthSpec:
    raw: dict = {}
    if text and Path(text).is_file():
        with open(text, encoding="utf-8") as f:
            raw = json.load(f)
    elif text:
        for pair in text.split(","):
            key, sep, value = pair.partition("=")
            if not sep:
                raise UsageError(f"bad --spec entry {pair!r} (expected key=value)")
            raw[key.strip()] = value.strip()
    fields = {}
    for key, value in raw.items():
        caster = _SPEC_FIELD_TYPES.get(key)
        if caster is None:
            raise UsageError(f"unknown synth spec key {key!r}")
        try:
            fields[key] = caster(value)
        except (TypeError, ValueError):
            raise UsageError(f"bad value for {key!r}: {value!r}") from None
    return SynthSpec(**fields)


def cmd_synth(args) -> int:
    spec = _parse_synth_spec(args.spec)
    corpus, queries, qrels, meta = generate(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name, write_fn in (
            ("corpus.jsonl", lambda tmp: write_corpus(corpus, tmp)),
            ("queries.tsv", lambda tmp: write_queries(queries, tmp)),
            ("qrels.txt", lambda tmp: write_qrels(qrels, tmp)),
            (
                "metadata.json",
                lambda tmp: tmp.write_text(
                    json.dumps(
                        {
                            "spec": asdict(spec),
                            "hidden": meta.hidden,
                            "relevant": meta.relevant,
                            "clusters": meta.clusters,
                            "decoys": meta.decoys,
                            "certificate_kmax": meta.certificate_kmax,
                        },
                        indent=2,
                    )
                    + "\n"
                ),
            ),
        ):
            final = out_dir / name
            _atomic(write_fn, final)
            written.append(final)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    print(f"wrote {len(corpus)} docs, {len(queries)} queries -> {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
