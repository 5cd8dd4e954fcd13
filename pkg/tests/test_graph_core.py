"""Core data types, samplers, and serialization round trips."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mvsbm.graph_core import (
    Graph,
    InvalidParameterError,
    LabelVector,
    MVInstance,
    ParseError,
    RngHandle,
    SignMapping,
    SignVector,
    ViewParams,
    _decode_triangular,
    dumps_graph,
    dumps_instance,
    is_balanced,
    load_instance,
    loads_graph,
    loads_instance,
    resolve_rng,
    sample_label_vector,
    sample_mv_instance,
    sample_sbm2_conditional,
    sample_sbm_k,
    sample_sign_mapping,
    save_instance,
    union_graph,
    union_of_graphs,
)


# -- rng plumbing -------------------------------------------------------------


def test_rng_handle_draws_are_frozen():
    h = RngHandle(12345)
    assert h.generator().integers(0, 2**32) == 1807908127
    # generator() returns a fresh stream each time, so the draw repeats
    assert h.generator().integers(0, 2**32) == 1807908127
    assert h.substream(0).generator().integers(0, 2**32) == 3951408655
    assert h.substream(1).generator().integers(0, 2**32) == 776691764


def test_substreams_do_not_collide():
    h = RngHandle(9)
    draws = {int(h.substream(i).generator().integers(0, 2**63)) for i in range(500)}
    assert len(draws) == 500


def test_nested_substreams_differ_from_flat_ones():
    h = RngHandle(3)
    flat = int(h.substream(2).generator().integers(0, 2**63))
    nested = int(h.substream(1).substream(0).generator().integers(0, 2**63))
    assert flat != nested


def test_resolve_rng_accepts_handle_int_and_generator():
    a = resolve_rng(RngHandle(5)).integers(0, 2**32)
    b = resolve_rng(5).integers(0, 2**32)
    assert a == b
    gen = np.random.Generator(np.random.Philox(5))
    assert resolve_rng(gen) is gen
    with pytest.raises(InvalidParameterError):
        resolve_rng("not an rng")


def test_rng_handle_rejects_bad_fields():
    with pytest.raises(InvalidParameterError):
        RngHandle(2**64)
    with pytest.raises(InvalidParameterError):
        RngHandle(1, stream=-1)


# -- label vectors, signs, parameters -----------------------------------------


def test_label_vector_validates_range():
    LabelVector(np.array([1, 2, 3]), 3)
    with pytest.raises(InvalidParameterError):
        LabelVector(np.array([0, 1]), 2)
    with pytest.raises(InvalidParameterError):
        LabelVector(np.array([1, 4]), 3)


def test_community_sizes_sum_to_n():
    z = LabelVector(np.array([1, 1, 3, 2, 3, 3]), 3)
    sizes = z.community_sizes()
    assert sizes.tolist() == [2, 1, 3]
    assert sizes.sum() == len(z)


def test_sign_mapping_applies_tablewise():
    f = SignMapping(np.array([1, -1, 1], dtype=np.int8))
    z = LabelVector(np.array([1, 2, 3, 2]), 3)
    assert f(z).signs.tolist() == [1, -1, 1, -1]
    with pytest.raises(InvalidParameterError):
        SignMapping(np.array([1, 0], dtype=np.int8))


def test_view_params_domain():
    assert ViewParams(40, 1.0).delta == pytest.approx(9.0)
    assert ViewParams(4, 1.0).delta == pytest.approx(0.0)
    with pytest.raises(InvalidParameterError):
        ViewParams(0, 1.0)
    with pytest.raises(InvalidParameterError):
        ViewParams(10, -0.1)
    with pytest.raises(InvalidParameterError):
        ViewParams(10, 2.1)
    # the acceptance grid goes up to eps = 1.5, so the full [0, 2] is legal
    ViewParams(10, 2.0)


# -- graphs --------------------------------------------------------------------


def test_graph_normalizes_edge_order():
    g = Graph(4, np.array([[2, 1], [0, 3], [0, 1]]))
    assert g.edges.tolist() == [[0, 1], [0, 3], [1, 2]]
    assert g.num_edges == 3
    assert g.degrees.tolist() == [2, 2, 1, 1]
    assert g.neighbors(0).tolist() == [1, 3]
    g.validate()


def test_graph_rejects_bad_edges():
    with pytest.raises(InvalidParameterError):
        Graph(3, np.array([[0, 0]]))  # self loop
    with pytest.raises(InvalidParameterError):
        Graph(3, np.array([[0, 1], [1, 0]]))  # duplicate after normalization
    with pytest.raises(InvalidParameterError):
        Graph(3, np.array([[0, 3]]))  # out of range


def test_induced_subgraph_relabels_by_rank():
    g = Graph(5, np.array([[0, 1], [1, 2], [2, 4], [3, 4]]))
    sub, kept = g.induced_subgraph(np.array([4, 1, 2]))
    assert kept.tolist() == [1, 2, 4]
    # surviving edges: (1,2) -> (0,1), (2,4) -> (1,2)
    assert sub.n == 3
    assert sub.edges.tolist() == [[0, 1], [1, 2]]


@given(st.integers(min_value=0, max_value=48 * 49 // 2 - 1))
def test_triangular_decode_inverts_the_pair_index(idx):
    a, b = _decode_triangular(np.array([idx], dtype=np.int64))
    a, b = int(a[0]), int(b[0])
    assert 0 <= a < b
    assert b * (b - 1) // 2 + a == idx


def test_union_of_graphs_deduplicates():
    g1 = Graph(4, np.array([[0, 1], [1, 2]]))
    g2 = Graph(4, np.array([[1, 2], [2, 3]]))
    u = union_of_graphs([g1, g2])
    assert u.edges.tolist() == [[0, 1], [1, 2], [2, 3]]
    with pytest.raises(InvalidParameterError):
        union_of_graphs([g1, Graph(5, np.empty((0, 2), dtype=np.int64))])


def test_is_balanced_on_exact_and_skewed_splits():
    exact = LabelVector(np.repeat([1, 2], 50), 2)
    assert is_balanced(exact)
    skewed = LabelVector(np.array([1] * 90 + [2] * 10), 2)
    assert not is_balanced(skewed)


# -- samplers -------------------------------------------------------------------


def test_sample_label_vector_is_roughly_uniform():
    z = sample_label_vector(6000, 3, RngHandle(17))
    sizes = z.community_sizes()
    assert sizes.sum() == 6000
    # 4 sigma around n/k for a multinomial cell
    sigma = np.sqrt(6000 * (1 / 3) * (2 / 3))
    assert np.abs(sizes - 2000).max() < 4 * sigma


def test_sample_sign_mapping_covers_both_signs():
    gen = RngHandle(23).generator()
    tables = np.stack([sample_sign_mapping(4, gen).table for _ in range(200)])
    assert set(np.unique(tables)) == {-1, 1}
    # each cell is a fair coin; 200 draws keep the mean well inside 4 sigma
    assert np.abs(tables.mean()) < 4 / np.sqrt(200 * 4)


def test_sbm2_rates_match_the_conditional_law():
    """Same-sign pairs connect at (1 + eps/2) d/n, cross pairs at (1 - eps/2) d/n."""
    params = ViewParams(d=30, eps=0.8)
    n = 500
    gen = RngHandle(2024).generator()
    same_edges = diff_edges = 0
    same_pairs = diff_pairs = 0
    for _ in range(40):
        signs = SignVector(np.where(gen.random(n) < 0.5, 1, -1).astype(np.int8))
        g = sample_sbm2_conditional(signs, params, gen)
        s = signs.signs
        n_plus = int((s == 1).sum())
        n_minus = n - n_plus
        same_pairs += n_plus * (n_plus - 1) // 2 + n_minus * (n_minus - 1) // 2
        diff_pairs += n_plus * n_minus
        same_mask = s[g.edges[:, 0]] == s[g.edges[:, 1]]
        same_edges += int(same_mask.sum())
        diff_edges += g.num_edges - int(same_mask.sum())
    p_same = (1 + params.eps / 2) * params.d / n
    p_diff = (1 - params.eps / 2) * params.d / n
    for observed, pairs, p in (
        (same_edges, same_pairs, p_same),
        (diff_edges, diff_pairs, p_diff),
    ):
        se = np.sqrt(p * (1 - p) / pairs)
        assert abs(observed / pairs - p) < 4 * se


def test_sbm2_rejects_out_of_range_probabilities():
    signs = SignVector(np.ones(10, dtype=np.int8))
    with pytest.raises(InvalidParameterError):
        sample_sbm2_conditional(signs, ViewParams(d=8, eps=2.0), RngHandle(1))


def test_sample_sbm_k_rates():
    n, k, d, eps = 900, 3, 24, 0.9
    gen = RngHandle(77).generator()
    in_edges = out_edges = in_pairs = out_pairs = 0
    for _ in range(25):
        z, g = sample_sbm_k(n, k, d, eps, gen)
        sizes = z.community_sizes()
        in_pairs += int((sizes * (sizes - 1) // 2).sum())
        out_pairs += n * (n - 1) // 2 - int((sizes * (sizes - 1) // 2).sum())
        lab = z.labels
        same = lab[g.edges[:, 0]] == lab[g.edges[:, 1]]
        in_edges += int(same.sum())
        out_edges += g.num_edges - int(same.sum())
    p_in = (1 + (1 - 1 / k) * eps) * d / n
    p_out = (1 - eps / k) * d / n
    assert abs(in_edges / in_pairs - p_in) < 4 * np.sqrt(p_in * (1 - p_in) / in_pairs)
    assert abs(out_edges / out_pairs - p_out) < 4 * np.sqrt(p_out * (1 - p_out) / out_pairs)


def test_sample_mv_instance_structure_and_determinism():
    params = [ViewParams(12, 1.0)] * 3
    a = sample_mv_instance(200, 4, params, RngHandle(5))
    b = sample_mv_instance(200, 4, params, RngHandle(5))
    assert a.n == 200 and a.t == 3 and a.seed == 5
    assert (a.z.labels == b.z.labels).all()
    for va, vb in zip(a.views, b.views):
        assert (va.graph.edges == vb.graph.edges).all()
        assert (va.mapping.table == vb.mapping.table).all()
    # views draw from distinct substreams
    assert not np.array_equal(a.views[0].graph.edges, a.views[1].graph.edges)


def test_sample_mv_instance_requires_a_handle():
    with pytest.raises(InvalidParameterError):
        sample_mv_instance(10, 2, [ViewParams(3, 1.0)], np.random.default_rng(0))


def test_union_graph_covers_all_views():
    inst = sample_mv_instance(150, 2, [ViewParams(10, 1.0)] * 4, RngHandle(8))
    union = union_graph(inst)
    per_view = {tuple(e) for v in inst.views for e in v.graph.edges.tolist()}
    assert {tuple(e) for e in union.edges.tolist()} == per_view


# -- serialization ---------------------------------------------------------------


def test_graph_text_round_trip_and_golden():
    g = Graph(3, np.array([[1, 2], [0, 1]]))
    text = dumps_graph(g)
    assert text == "3 2\n0 1\n1 2\n"
    back = loads_graph(text)
    assert back.n == 3 and (back.edges == g.edges).all()


def test_loads_graph_rejects_garbage():
    with pytest.raises(ParseError):
        loads_graph("not a graph")
    with pytest.raises(ParseError):
        loads_graph("3 1\n0 1\nextra tokens\n")


def test_instance_round_trip_preserves_everything(tmp_path):
    inst = sample_mv_instance(60, 3, [ViewParams(8, 1.2), ViewParams(6, 0.5)], RngHandle(31))
    path = tmp_path / "inst.txt"
    save_instance(inst, path)
    back = load_instance(path)
    assert back.seed == inst.seed
    assert (back.z.labels == inst.z.labels).all() and back.z.k == inst.z.k
    assert back.t == inst.t
    for va, vb in zip(inst.views, back.views):
        assert va.params.d == vb.params.d and va.params.eps == vb.params.eps
        assert (va.graph.edges == vb.graph.edges).all()
        assert (va.mapping.table == vb.mapping.table).all()


def test_instance_text_round_trip_is_exact():
    inst = sample_mv_instance(25, 2, [ViewParams(5, 1.0)] * 2, RngHandle(11))
    assert dumps_instance(loads_instance(dumps_instance(inst))) == dumps_instance(inst)


def test_loads_instance_rejects_trailing_content():
    inst = sample_mv_instance(12, 2, [ViewParams(4, 1.0)], RngHandle(2))
    with pytest.raises(ParseError):
        loads_instance(dumps_instance(inst) + "0 1\n")
