import warnings

import pytest
from hypothesis import given, settings, strategies as st

from gar.corpus import CorpusHandle, Document
from gar.errors import DocOutOfRangeError, GraphFormatError
from gar.graph import CorpusGraph, build_graph, neighbors, read_graph, write_graph
from gar.index import Bm25Params, build_index

from oracles import ref_bm25, ref_tokenize


def corpus_of(*texts):
    return CorpusHandle([Document(f"d{i}", t) for i, t in enumerate(texts)])


def built(corpus, kmax):
    return build_graph(corpus, build_index(corpus), Bm25Params(), kmax)


def test_two_identical_docs_point_at_each_other():
    graph = built(corpus_of("same words here", "same words here"), 4)
    assert graph.adjacency == [[1], [0]]


def test_single_doc_has_no_neighbors():
    assert built(corpus_of("alone"), 4).adjacency == [[]]


def test_no_overlap_means_no_edges():
    graph = built(corpus_of("a b", "c d", "e f"), 4)
    assert graph.adjacency == [[], [], []]


def test_toy_graph_matches_all_pairs_reference():
    texts = ["a b c", "a b d", "a e f", "g h i", "g h c", "b c d"]
    corpus = corpus_of(*texts)
    doc_tokens = [ref_tokenize(t) for t in texts]
    graph = built(corpus, 2)
    for d in range(len(texts)):
        scored = []
        for other in range(len(texts)):
            if other == d:
                continue
            s = ref_bm25(doc_tokens, doc_tokens[d], other)
            if s > 0.0:
                scored.append((other, s))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        assert graph.adjacency[d] == [i for i, _ in scored[:2]]


def test_adjacency_invariants_on_synthetic_corpus():
    texts = [f"tok{i} tok{i + 1} tok{i + 2} shared" for i in range(12)]
    graph = built(corpus_of(*texts), 5)
    for d, nbrs in enumerate(graph.adjacency):
        assert d not in nbrs
        assert len(nbrs) == len(set(nbrs))
        assert all(0 <= n < graph.n_docs for n in nbrs)
        assert len(nbrs) <= 5


def test_neighbors_prefix_semantics():
    graph = built(corpus_of("a b c", "a b c d", "a b e", "a f g"), 3)
    full = neighbors(graph, 0, 3)
    assert neighbors(graph, 0, 1) == full[:1]
    assert neighbors(graph, 0, 2) == full[:2]


def test_neighbors_k_above_kmax_warns_and_truncates():
    graph = built(corpus_of("a b", "a b", "a b"), 2)
    with pytest.warns(UserWarning, match="kmax"):
        got = neighbors(graph, 0, 5)
    assert got == graph.adjacency[0]


def test_neighbors_k_equal_kmax_no_warning():
    graph = built(corpus_of("a b", "a b", "a b"), 2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert neighbors(graph, 0, 2) == graph.adjacency[0]


def test_neighbors_validates_doc_and_k():
    graph = built(corpus_of("a", "a"), 2)
    with pytest.raises(DocOutOfRangeError):
        neighbors(graph, 5, 1)
    with pytest.raises(ValueError):
        neighbors(graph, 0, 0)


def test_round_trip_toy_graph(tmp_path):
    graph = built(corpus_of("a b c", "a b d", "b c d", "x y z"), 3)
    path = tmp_path / "toy.garg"
    write_graph(graph, path)
    assert read_graph(path) == graph


def test_round_trip_empty_graph(tmp_path):
    graph = built(CorpusHandle([]), 4)
    path = tmp_path / "empty.garg"
    write_graph(graph, path)
    assert path.stat().st_size == 16
    back = read_graph(path)
    assert back.n_docs == 0
    assert back.kmax == 4


adjacency_strategy = st.integers(min_value=0, max_value=12).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.integers(min_value=1, max_value=5).flatmap(
            lambda kmax: st.tuples(
                st.just(kmax),
                st.lists(
                    st.lists(
                        st.integers(min_value=0, max_value=max(n - 1, 0)),
                        max_size=kmax,
                        unique=True,
                    ),
                    min_size=n,
                    max_size=n,
                ),
            )
        ),
    )
)


@settings(max_examples=120, deadline=None)
@given(adjacency_strategy)
def test_round_trip_randomized(tmp_path_factory, packed):
    n, (kmax, adjacency) = packed
    adjacency = [[x for x in row if x != d] for d, row in enumerate(adjacency)]
    graph = CorpusGraph(kmax=kmax, adjacency=adjacency, external_ids=[f"doc-{i}" for i in range(n)])
    path = tmp_path_factory.mktemp("garg") / "g.garg"
    write_graph(graph, path)
    assert read_graph(path) == graph


def test_bad_magic_rejected_at_offset_zero(tmp_path):
    graph = built(corpus_of("a b", "a b"), 2)
    path = tmp_path / "g.garg"
    write_graph(graph, path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(raw)
    with pytest.raises(GraphFormatError) as err:
        read_graph(path)
    assert err.value.offset == 0


def test_bad_version_rejected_at_offset_four(tmp_path):
    graph = built(corpus_of("a b", "a b"), 2)
    path = tmp_path / "g.garg"
    write_graph(graph, path)
    raw = bytearray(path.read_bytes())
    raw[4:8] = (99).to_bytes(4, "little")
    path.write_bytes(raw)
    with pytest.raises(GraphFormatError) as err:
        read_graph(path)
    assert err.value.offset == 4


def test_truncated_file_rejected(tmp_path):
    graph = built(corpus_of("a b", "a b", "a b"), 2)
    path = tmp_path / "g.garg"
    write_graph(graph, path)
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(GraphFormatError):
        read_graph(path)


def test_out_of_range_neighbor_rejected(tmp_path):
    graph = built(corpus_of("a b", "a b"), 1)
    path = tmp_path / "g.garg"
    write_graph(graph, path)
    raw = bytearray(path.read_bytes())
    raw[16:20] = (7).to_bytes(4, "little")  # doc 0's only slot: id 7 of a 2-doc graph
    path.write_bytes(raw)
    with pytest.raises(GraphFormatError) as err:
        read_graph(path)
    assert err.value.offset == 16


def test_id_map_length_mismatch_rejected(tmp_path):
    graph = built(corpus_of("a b", "a b"), 1)
    path = tmp_path / "g.garg"
    write_graph(graph, path)
    path.with_name("g.garg.ids").write_text("d0\n")
    with pytest.raises(GraphFormatError):
        read_graph(path)


def test_build_is_deterministic():
    corpus = corpus_of("a b c", "a b d", "b c d", "c d e")
    assert built(corpus, 3).adjacency == built(corpus, 3).adjacency
