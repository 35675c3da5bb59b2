import random

import pytest

from gar.corpus import CorpusHandle, Document, Query
from gar.errors import InvalidConfigError
from gar.graph import CorpusGraph
from gar.index import ScoredDoc
from gar.rerank import Frontier, GarConfig, RerankState, gar_rerank, select_batch, standard_rerank

from oracles import AffineScorer, CountingScorer, DictScorer, HashScorer, reachable_set

QUERY = Query("q1", "some query")


def corpus_n(n, prefix="d"):
    return CorpusHandle([Document(f"{prefix}{i}", f"body {i}") for i in range(n)])


def graph_from(n, kmax, edges):
    adjacency = [list(edges.get(i, [])) for i in range(n)]
    return CorpusGraph(kmax=kmax, adjacency=adjacency, external_ids=[f"d{i}" for i in range(n)])


def ids_of(ranking):
    return [sd.internal_id for sd in ranking]


def random_instance(rng, n_max=25):
    """A random corpus/R0/graph/config tuple for loop-level properties."""
    n = rng.randint(1, n_max)
    corpus = corpus_n(n)
    kmax = rng.randint(1, 4)
    edges = {}
    for d in range(n):
        others = [x for x in range(n) if x != d]
        rng.shuffle(others)
        edges[d] = others[: rng.randint(0, kmax)]
    graph = graph_from(n, kmax, edges)
    r0_size = rng.randint(0, n)
    r0_ids = rng.sample(range(n), r0_size)
    r0 = [ScoredDoc(d, float(r0_size - i)) for i, d in enumerate(r0_ids)]
    c = rng.randint(max(r0_size, 1), n + 5)
    b = rng.randint(1, c)
    k = rng.randint(1, kmax)
    return corpus, r0, graph, GarConfig(budget_c=c, batch_b=b, neighbors_k=k)


# --- the hand-traced golden run -------------------------------------------

def golden_setup():
    corpus = CorpusHandle([Document(f"d{i}", f"body {i}") for i in range(1, 7)])
    r0 = [ScoredDoc(0, 4.0), ScoredDoc(1, 3.0), ScoredDoc(2, 2.0), ScoredDoc(3, 1.0)]
    graph = graph_from(6, 16, {0: [4], 1: [5]})
    scorer = DictScorer({"d1": 0.9, "d2": 0.1, "d5": 1.0, "d6": 0.0})
    return corpus, r0, graph, scorer


def test_golden_trace_output():
    corpus, r0, graph, scorer = golden_setup()
    out = gar_rerank(QUERY, r0, graph, scorer, GarConfig(budget_c=4, batch_b=2), corpus=corpus)
    assert [(sd.internal_id, sd.score) for sd in out] == [
        (4, 1.0),
        (0, 0.9),
        (1, 0.1),
        (5, 0.0),
        (2, -1e-06),
        (3, -2e-06),
    ]


def test_golden_trace_batch_schedule():
    corpus, r0, graph, scorer = golden_setup()
    counting = CountingScorer(scorer)
    stats = {}
    gar_rerank(QUERY, r0, graph, counting, GarConfig(budget_c=4, batch_b=2), corpus=corpus, stats=stats)
    assert counting.batches == [["d1", "d2"], ["d5", "d6"]]
    assert stats["batches"] == 2
    assert stats["scored"] == 4
    assert stats["wall_ms"] >= 0.0


# --- select_batch ----------------------------------------------------------

def test_select_batch_falls_back_to_initial():
    state = RerankState(r0=[ScoredDoc(0, 2.0), ScoredDoc(1, 1.0)], next_source="frontier")
    source, batch = select_batch(state, GarConfig(budget_c=4, batch_b=2))
    assert source == "initial"
    assert batch == [0, 1]


def test_select_batch_falls_back_to_frontier():
    state = RerankState(r0=[], next_source="initial")
    state.frontier.add(3, 1.0)
    source, batch = select_batch(state, GarConfig(budget_c=4, batch_b=2))
    assert source == "frontier"
    assert batch == [3]


def test_select_batch_caps_at_remaining_budget():
    state = RerankState(r0=[ScoredDoc(i, 10.0 - i) for i in range(10)])
    state.r1 = {20: 1.0, 21: 0.5}  # already spent 2 of 5
    source, batch = select_batch(state, GarConfig(budget_c=5, batch_b=5))
    assert source == "initial"
    assert batch == [0, 1, 2]


def test_select_batch_frontier_priority_then_id():
    state = RerankState(r0=[], next_source="frontier")
    state.frontier.add(5, 0.9)
    state.frontier.add(6, 0.1)
    state.frontier.add(7, 0.9)
    _, batch = select_batch(state, GarConfig(budget_c=8, batch_b=2))
    assert batch == [5, 7]


def test_select_batch_skips_already_scored_r0():
    state = RerankState(r0=[ScoredDoc(0, 3.0), ScoredDoc(1, 2.0), ScoredDoc(2, 1.0)])
    state.r1 = {0: 0.4}
    _, batch = select_batch(state, GarConfig(budget_c=8, batch_b=8))
    assert batch == [1, 2]


def test_select_batch_is_pure():
    state = RerankState(r0=[ScoredDoc(0, 1.0)])
    state.frontier.add(9, 2.0)
    before = (dict(state.r1), dict(state.frontier.entries), state.next_source)
    select_batch(state, GarConfig(budget_c=2, batch_b=1))
    assert (dict(state.r1), dict(state.frontier.entries), state.next_source) == before


def test_select_batch_empty_when_budget_spent():
    state = RerankState(r0=[ScoredDoc(0, 1.0)])
    state.r1 = {7: 1.0, 8: 0.5}
    _, batch = select_batch(state, GarConfig(budget_c=2, batch_b=2))
    assert batch == []


# --- frontier --------------------------------------------------------------

def test_frontier_keeps_maximum_priority():
    f = Frontier()
    f.add(4, 0.3)
    f.add(4, 0.9)
    f.add(4, 0.5)
    assert f.entries[4] == 0.9


def test_frontier_discard_and_membership():
    f = Frontier()
    f.add(4, 0.3)
    assert 4 in f and len(f) == 1
    f.discard(4)
    f.discard(4)  # idempotent
    assert 4 not in f and len(f) == 0


# --- loop semantics --------------------------------------------------------

def test_alternation_interleaves_sources():
    corpus = corpus_n(10)
    r0 = [ScoredDoc(i, 6.0 - i) for i in range(6)]
    graph = graph_from(10, 4, {0: [6, 7, 8, 9]})
    scorer = CountingScorer(DictScorer({}, default=1.0))
    gar_rerank(QUERY, r0, graph, scorer, GarConfig(budget_c=8, batch_b=2, neighbors_k=4), corpus=corpus)
    assert scorer.batches == [
        ["d0", "d1"],
        ["d6", "d7"],
        ["d2", "d3"],
        ["d8", "d9"],
    ]


def test_fallback_still_flips_the_alternation_flag():
    # Frontier is empty until d2 is scored; the scheduled-but-empty frontier
    # turn falls back to R0 and the flag keeps flipping, so the frontier's
    # first real turn comes one iteration later.
    corpus = corpus_n(10)
    r0 = [ScoredDoc(i, 6.0 - i) for i in range(6)]
    graph = graph_from(10, 4, {2: [6, 7]})
    scorer = CountingScorer(DictScorer({}, default=1.0))
    gar_rerank(QUERY, r0, graph, scorer, GarConfig(budget_c=8, batch_b=2, neighbors_k=4), corpus=corpus)
    assert scorer.batches == [
        ["d0", "d1"],
        ["d2", "d3"],
        ["d4", "d5"],
        ["d6", "d7"],
    ]


def test_stops_when_both_sources_empty():
    corpus = corpus_n(4)
    r0 = [ScoredDoc(0, 2.0), ScoredDoc(1, 1.0)]
    graph = graph_from(4, 2, {0: [2]})
    out = gar_rerank(QUERY, r0, graph, DictScorer({}, default=1.0), GarConfig(budget_c=4, batch_b=4, neighbors_k=2), corpus=corpus)
    # reachable set is {0, 1, 2}: budget 4 cannot be filled
    assert sorted(ids_of(out)) == [0, 1, 2]


def test_frontier_entry_rescored_docs_never_reenter():
    corpus = corpus_n(6)
    r0 = [ScoredDoc(0, 2.0), ScoredDoc(1, 1.0)]
    # 0 and 1 point at each other and at 2: scored docs must not reenter
    graph = graph_from(6, 3, {0: [1, 2], 1: [0, 2]})
    counting = CountingScorer(DictScorer({}, default=1.0))
    gar_rerank(QUERY, r0, graph, counting, GarConfig(budget_c=6, batch_b=2, neighbors_k=3), corpus=corpus)
    assert counting.total == 3  # {0, 1, 2}, nothing twice


def test_budget_is_min_of_c_and_reachable():
    rng = random.Random(20240817)
    for _ in range(120):
        corpus, r0, graph, config = random_instance(rng)
        counting = CountingScorer(HashScorer())
        gar_rerank(QUERY, r0, graph, counting, config, corpus=corpus)
        k_eff = min(config.neighbors_k, graph.kmax)
        closure = reachable_set(ids_of(r0), graph.adjacency, k_eff)
        assert counting.total == min(config.budget_c, len(closure))


def test_output_is_scored_pool_plus_backfilled_r0():
    rng = random.Random(7)
    for _ in range(60):
        corpus, r0, graph, config = random_instance(rng)
        counting = CountingScorer(HashScorer())
        out = gar_rerank(QUERY, r0, graph, counting, config, corpus=corpus)
        out_ids = ids_of(out)
        assert len(out_ids) == len(set(out_ids))
        scored = {corpus.internal_id(e) for e in counting.seen}
        assert set(out_ids) == scored.union(ids_of(r0))
        # scores strictly decreasing over the whole list
        for prev, cur in zip(out, out[1:]):
            assert prev.score > cur.score
        # backfilled tail preserves R0 retrieval order
        tail = [d for d in out_ids if d not in scored]
        r0_order = [d for d in ids_of(r0) if d not in scored]
        assert tail == r0_order
        # and the head is exactly the scored pool, best-first
        assert out_ids[: len(scored)] == sorted(
            scored, key=lambda d: (-dict(zip(ids_of(out), (sd.score for sd in out)))[d], d)
        )


def test_empty_graph_equals_standard_rerank():
    rng = random.Random(99)
    for _ in range(60):
        corpus, r0, _, config = random_instance(rng)
        empty = graph_from(corpus.n_docs, config.neighbors_k, {})
        a = gar_rerank(QUERY, r0, empty, HashScorer(), config, corpus=corpus)
        b = standard_rerank(QUERY, r0, HashScorer(), config, corpus=corpus)
        assert a == b


def test_monotone_transform_preserves_order():
    rng = random.Random(4242)
    for _ in range(60):
        corpus, r0, graph, config = random_instance(rng)
        plain = gar_rerank(QUERY, r0, graph, HashScorer(), config, corpus=corpus)
        scaled = gar_rerank(QUERY, r0, graph, AffineScorer(HashScorer()), config, corpus=corpus)
        assert ids_of(plain) == ids_of(scaled)


def test_tied_scores_break_by_id_and_stay_strict():
    corpus = corpus_n(5)
    r0 = [ScoredDoc(3, 3.0), ScoredDoc(1, 2.0), ScoredDoc(4, 1.0)]
    graph = graph_from(5, 2, {})
    out = gar_rerank(QUERY, r0, graph, DictScorer({}, default=0.5), GarConfig(budget_c=3, batch_b=3, neighbors_k=2), corpus=corpus)
    assert ids_of(out) == [1, 3, 4]
    assert out[0].score == 0.5
    for prev, cur in zip(out, out[1:]):
        assert prev.score > cur.score


def test_neighbors_k_clamped_to_graph_kmax_with_warning():
    corpus = corpus_n(6)
    r0 = [ScoredDoc(0, 1.0)]
    graph = graph_from(6, 2, {0: [3, 4]})
    with pytest.warns(UserWarning, match="kmax"):
        wide = gar_rerank(QUERY, r0, graph, HashScorer(), GarConfig(budget_c=4, batch_b=2, neighbors_k=16), corpus=corpus)
    narrow = gar_rerank(QUERY, r0, graph, HashScorer(), GarConfig(budget_c=4, batch_b=2, neighbors_k=2), corpus=corpus)
    assert wide == narrow


def test_r0_larger_than_budget_rejected():
    corpus = corpus_n(4)
    r0 = [ScoredDoc(i, 4.0 - i) for i in range(4)]
    graph = graph_from(4, 2, {})
    with pytest.raises(InvalidConfigError):
        gar_rerank(QUERY, r0, graph, HashScorer(), GarConfig(budget_c=2, batch_b=2), corpus=corpus)
    with pytest.raises(InvalidConfigError):
        standard_rerank(QUERY, r0, HashScorer(), GarConfig(budget_c=2, batch_b=2), corpus=corpus)


def test_config_validation():
    with pytest.raises(InvalidConfigError):
        GarConfig(budget_c=0)
    with pytest.raises(InvalidConfigError):
        GarConfig(budget_c=4, batch_b=0)
    with pytest.raises(InvalidConfigError):
        GarConfig(budget_c=4, batch_b=8)
    with pytest.raises(InvalidConfigError):
        GarConfig(budget_c=4, neighbors_k=0)
    with pytest.raises(InvalidConfigError):
        GarConfig(budget_c=4, start_source="frontier")
    assert GarConfig(budget_c=50).batch_b == 16
    assert GarConfig(budget_c=50).neighbors_k == 16


def test_standard_rerank_batches_and_sorts():
    corpus = corpus_n(6)
    r0 = [ScoredDoc(i, 6.0 - i) for i in range(6)]
    scorer = CountingScorer(DictScorer({"d2": 5.0, "d5": 4.0}, default=1.0))
    out = standard_rerank(QUERY, r0, scorer, GarConfig(budget_c=6, batch_b=4), corpus=corpus)
    assert [len(b) for b in scorer.batches] == [4, 2]
    assert ids_of(out) == [2, 5, 0, 1, 3, 4]  # graded docs first, then ties by id


def test_standard_rerank_empty_r0():
    corpus = corpus_n(2)
    out = standard_rerank(QUERY, [], HashScorer(), GarConfig(budget_c=4, batch_b=2), corpus=corpus)
    assert out == []
