"""Rescuing relevant documents the first stage cannot see.

A reranker only reorders what retrieval hands it, so a relevant document
with no query-term overlap is lost no matter how good the reranker is.
This demo builds a tiny corpus where *every* relevant document is hidden
that way, then walks the corpus graph outward from whatever the reranker
liked so far: recall goes from 0.0 to 1.0 with the same scorer and the
same scoring budget.
"""

from gar.evaluation import recall_at
from gar.graph import build_graph
from gar.index import Bm25Params, build_index, retrieve_topk
from gar.rerank import GarConfig, gar_rerank, standard_rerank
from gar.scorer import make_oracle
from gar.synth import SynthSpec, generate

C = 12  # retrieval depth == scoring budget

spec = SynthSpec(
    num_queries=5,
    clusters_per_query=3,
    docs_per_cluster=4,
    relevant_per_query=3,
    frac_relevant_hidden=1.0,  # every relevant doc lacks the query's tokens
    vocab_size=2000,
    seed=42,
)
corpus, queries, qrels, meta = generate(spec)
params = Bm25Params()
index = build_index(corpus)
graph = build_graph(corpus, index, params, kmax=16)
oracle = make_oracle(qrels)
config = GarConfig(budget_c=C, batch_b=4, neighbors_k=16)

print(f"{corpus.n_docs} docs, {len(queries)} queries, "
      f"{spec.relevant_per_query} relevant per query (all hidden from retrieval)\n")

print(f"{'query':<6} {'baseline recall':>16} {'adaptive recall':>16}")
for query in queries:
    grades = qrels.for_query(query.query_id)
    r0 = retrieve_topk(index, params, query, C)

    # the reranker alone can only shuffle R0: recall stays at 0
    plain = standard_rerank(query, r0, oracle, config, corpus=corpus)
    plain_ids = [corpus.external_id(sd.internal_id) for sd in plain]

    # feedback-guided traversal pulls the hidden cluster-mates in
    adaptive = gar_rerank(query, r0, graph, oracle, config, corpus=corpus)
    adaptive_ids = [corpus.external_id(sd.internal_id) for sd in adaptive]

    print(f"{query.query_id:<6} {recall_at(plain_ids, grades, C):>16.2f} "
          f"{recall_at(adaptive_ids, grades, C):>16.2f}")

# zoom in on one query to see where the hidden docs surfaced
query = queries[0]
grades = qrels.for_query(query.query_id)
r0 = retrieve_topk(index, params, query, C)
stats = {}
adaptive = gar_rerank(query, r0, graph, oracle, config, corpus=corpus, stats=stats)

print(f"\ntop of the adaptive ranking for {query.query_id} "
      f"({stats['scored']} docs scored in {stats['batches']} batches):")
for rank, sd in enumerate(adaptive[:6], start=1):
    did = corpus.external_id(sd.internal_id)
    marks = []
    if did in meta.hidden[query.query_id]:
        marks.append("hidden")
    if grades.get(did, 0) > 0:
        marks.append("relevant")
    print(f"  {rank:>2}. {did:<10} score={sd.score:+.3f}  {' '.join(marks)}")
