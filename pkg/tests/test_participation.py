# tests/test_participation.py
from math import comb
from pathlib import Path

import numpy as np
import pytest

from src.hols.cache import cache_path, load_combined, save_combined
from src.hols.cliques import brute_force_cliques
from src.hols.errors import ValidationError
from src.hols.graph import Graph
from src.hols.participation import (
    MotifPlan,
    build_operator,
    build_participation,
    combine,
    operator_apply,
    operator_from_adjacency,
    plan_grid,
)


def test_toy_triangle_participation(toy_graph):
    e = build_participation(toy_graph, 3).matrix
    assert e[0, 1] == 2.0  # Alice-B: ABC, ABD
    assert e[1, 2] == 2.0  # B-C: ABC, BCD
    assert e[0, 4] == 0.0  # Alice-P
    assert e.nnz == 12  # K4 の 6 ペア x 2


def test_k2_participation_is_adjacency(er_graph):
    g = er_graph(30, 0.3, 4)
    e = build_participation(g, 2).matrix
    assert np.array_equal(e.toarray(), g.adjacency.toarray())


def test_participation_sum_identity(er_graph):
    # 全要素の和 = 2 * C(k,2) * (k-クリークの重み合計)
    for seed in range(3):
        g = er_graph(25, 0.4, seed)
        for k in (3, 4):
            e = build_participation(g, k).matrix
            total = sum(q.weight for q in brute_force_cliques(g, k))
            assert e.sum() == pytest.approx(2 * comb(k, 2) * total)


def test_participation_symmetric_and_inside_edge_set(er_graph):
    g = er_graph(40, 0.3, 9)
    a = g.adjacency.toarray() > 0
    for k in (3, 4):
        e = build_participation(g, k).matrix.toarray()
        assert np.array_equal(e, e.T)
        assert not np.any((e > 0) & ~a)


def test_parallel_build_is_bitwise_identical(er_graph):
    g = er_graph(700, 0.02, 8)
    seq = build_participation(g, 3, threads=1).matrix
    par = build_participation(g, 3, threads=4).matrix
    assert np.array_equal(seq.indptr, par.indptr)
    assert np.array_equal(seq.indices, par.indices)
    assert np.array_equal(seq.data, par.data)


SPECTRUM_PLANS = [MotifPlan.edges_only(), MotifPlan((2, 3), (0.6, 0.4)), MotifPlan((2, 3, 4), (0.5, 0.3, 0.2))]


def _power_iteration(s, n: int, seed: int, iterations: int = 300) -> float:
    x = np.random.default_rng(seed).standard_normal(n)
    estimate = 0.0
    for _ in range(iterations):
        y = s @ x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            break
        estimate = norm / float(np.linalg.norm(x))
        x = y / norm
    return estimate


@pytest.mark.parametrize("seed", range(50))
def test_operator_spectrum_inside_unit_interval(seed: int, er_graph):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(10, 81))
    g = er_graph(n, float(rng.uniform(0.05, 0.4)), seed)
    op = build_operator(g, SPECTRUM_PLANS[seed % 3])

    s = op.operator
    assert (s != s.T).nnz == 0
    assert _power_iteration(s, n, seed) <= 1.0 + 1e-9


def test_operator_dominant_eigenvalue_is_one_on_connected_graph(er_graph):
    g = er_graph(50, 0.2, 1)
    s = build_operator(g, MotifPlan((2, 3), (0.6, 0.4))).operator.toarray()
    eig = np.linalg.eigvalsh(s)
    assert eig.max() == pytest.approx(1.0, abs=1e-12)
    assert eig.min() >= -1.0 - 1e-12


def test_operator_is_scale_invariant(er_graph):
    g = er_graph(30, 0.3, 2)
    w = build_participation(g, 2).matrix
    plan = MotifPlan.edges_only()
    a = operator_from_adjacency(w, plan).operator.toarray()
    b = operator_from_adjacency(w * 3.0, plan).operator.toarray()
    assert np.allclose(a, b, atol=1e-15)


def test_zero_degree_vertex_has_zero_row():
    g = Graph.from_edges(4, [(0, 1), (1, 2)])  # 3 は孤立
    op = build_operator(g, MotifPlan.edges_only())
    s = op.operator.toarray()
    assert np.all(s[3] == 0) and np.all(s[:, 3] == 0)
    assert op.degrees[3] == 0.0
    assert np.all(op.random_walk().toarray()[3] == 0)


def test_edges_only_operator_matches_dense_normalization(toy_graph):
    op = build_operator(toy_graph, MotifPlan.edges_only())
    w = toy_graph.adjacency.toarray()
    d = w.sum(axis=1)
    expected = w / np.sqrt(np.outer(d, d))
    assert np.allclose(op.operator.toarray(), expected, rtol=0, atol=1e-15)


def test_combine_weights_toy(toy_graph):
    plan = MotifPlan.triangle_weighted(0.5)
    op = build_operator(toy_graph, plan)
    w = op.adjacency
    assert w[0, 1] == pytest.approx(0.5 * 1 + 0.5 * 2)
    assert w[0, 4] == pytest.approx(0.5)
    assert op.degrees[0] == pytest.approx(6.5)


def test_combine_rejects_misaligned_parts(toy_graph):
    parts = [build_participation(toy_graph, 2), build_participation(toy_graph, 3)]
    with pytest.raises(ValidationError, match="plan_misaligned"):
        combine(parts, MotifPlan((2, 4), (0.5, 0.5)))
    other = build_participation(Graph.empty(3), 3)
    with pytest.raises(ValidationError, match="dimension_mismatch"):
        combine([parts[0], other], MotifPlan((2, 3), (0.5, 0.5)))


def test_operator_apply_checks_shape(toy_graph):
    op = build_operator(toy_graph, MotifPlan.edges_only())
    assert operator_apply(op, np.ones((8, 2))).shape == (8, 2)
    with pytest.raises(ValidationError, match="shape_mismatch"):
        operator_apply(op, np.ones((7, 2)))


def test_motif_plan_validation():
    assert MotifPlan.parse("2,3", "0.7,0.3") == MotifPlan((2, 3), (0.7, 0.3))
    assert MotifPlan.triangle_weighted(0.0) == MotifPlan.edges_only()
    assert MotifPlan((2, 3), (0.7, 0.3)).label == "K2:0.7+K3:0.3"
    assert MotifPlan((2, 3), (0.7, 0.3)).weight_of(4) == 0.0

    with pytest.raises(ValidationError, match="sum to 1"):
        MotifPlan((2, 3), (0.5, 0.6))
    with pytest.raises(ValidationError, match="duplicate"):
        MotifPlan((2, 2), (0.5, 0.5))
    with pytest.raises(ValidationError, match=">= 2"):
        MotifPlan((1, 2), (0.5, 0.5))
    with pytest.raises(ValidationError, match=r"\(0, 1\]"):
        MotifPlan((2, 3), (1.0, 0.0))
    with pytest.raises(ValidationError, match="plan_invalid"):
        MotifPlan.parse("2,x", "1.0")


def test_plan_grid():
    assert len(plan_grid(2)) == 1
    assert len(plan_grid(3)) == 10
    assert len(plan_grid(3, include_edges_only=False)) == 9
    assert len(plan_grid(4)) == 55  # a + b <= 9
    assert plan_grid(3)[0] == MotifPlan.edges_only()
    assert all(p.alphas[0] >= 0.1 - 1e-12 for p in plan_grid(5))


def test_cache_round_trip(tmp_path: Path, toy_graph):
    plan = MotifPlan.triangle_weighted(0.8)
    first = build_operator(toy_graph, plan, cache_dir=tmp_path)
    files = list(tmp_path.glob("*.wprime"))
    assert len(files) == 1

    second = build_operator(toy_graph, plan, cache_dir=tmp_path)
    assert np.array_equal(first.adjacency.toarray(), second.adjacency.toarray())
    assert np.array_equal(first.operator.toarray(), second.operator.toarray())


def test_cache_rejects_bad_file(tmp_path: Path, toy_graph):
    path = cache_path(tmp_path, "digest", (2,), (1.0,))
    save_combined(path, toy_graph.adjacency)
    assert np.array_equal(load_combined(path).toarray(), toy_graph.adjacency.toarray())

    path.write_bytes(b"NOTACACHE" + bytes(16))
    with pytest.raises(ValidationError, match="cache_invalid"):
        load_combined(path)


def test_corrupt_cache_is_rebuilt(tmp_path: Path, toy_graph, caplog):
    plan = MotifPlan.triangle_weighted(0.8)
    expected = build_operator(toy_graph, plan, cache_dir=tmp_path)
    path = next(tmp_path.glob("*.wprime"))
    path.write_bytes(b"garbage")

    with caplog.at_level("WARNING", logger="hols"):
        op = build_operator(toy_graph, plan, cache_dir=tmp_path)

    assert np.array_equal(op.operator.toarray(), expected.operator.toarray())
    assert "cache_invalid" in caplog.text
    # 作り直したものが保存されている
    assert np.array_equal(load_combined(path).toarray(), expected.adjacency.toarray())
