# tests/test_solver.py
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from src.hols.errors import NumericError, RefusalError, ValidationError
from src.hols.graph import Graph, LabelAssignment, VertexIdMap
from src.hols.participation import MotifPlan, build_operator
from src.hols.solver import (
    SolverConfig,
    closed_form,
    harden,
    label_propagation,
    prior_matrix,
    spread,
    write_scores_csv,
)

ALICE = 0
TIGHT = SolverConfig(eta=0.5, epsilon=1e-13, max_iters=5000)


def _textbook_label_spreading(w: np.ndarray, y: np.ndarray, eta: float, iterations: int) -> np.ndarray:
    # 密行列で素直に書いた label spreading
    d = w.sum(axis=1)
    inv = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
    s = inv[:, None] * w * inv[None, :]
    f = y.copy()
    for _ in range(iterations):
        f = eta * (s @ f) + (1 - eta) * y
    return f


def test_two_vertex_example():
    g = Graph.from_edges(2, [(0, 1)])
    op = build_operator(g, MotifPlan.edges_only())
    y = prior_matrix(LabelAssignment(2, {0: 0}), 2)

    result = spread(op, y, TIGHT)

    assert result.converged
    assert result.soft[0, 0] == pytest.approx(2 / 3, abs=1e-12)
    assert result.soft[1, 0] == pytest.approx(1 / 3, abs=1e-12)
    assert np.all(result.soft[:, 1] == 0)


def test_empty_graph_returns_immediately():
    op = build_operator(Graph.empty(0), MotifPlan.edges_only())
    result = spread(op, np.zeros((0, 2)))
    assert result.converged
    assert result.iterations == 1
    assert result.soft.shape == (0, 2)
    assert closed_form(op, np.zeros((0, 2)), 0.5).shape == (0, 2)


def test_zero_operator_converges_after_one_step():
    y = prior_matrix(LabelAssignment(2, {0: 0, 2: 1}), 3)
    for g, plan in [
        (Graph.empty(3), MotifPlan.edges_only()),
        (Graph.from_edges(3, [(0, 1), (1, 2)]), MotifPlan((3,), (1.0,))),  # 三角形がない
    ]:
        result = spread(build_operator(g, plan), y, SolverConfig(eta=0.3))

        assert result.converged
        assert result.iterations == 1
        assert np.array_equal(result.soft, 0.7 * y)
        assert result.residuals == [result.final_residual]


def _random_case(seed: int):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 201))
    h = nx.gnp_random_graph(n, float(rng.uniform(0.02, 0.15)), seed=seed)
    g = Graph.from_edges(n, list(h.edges()))
    seeds = rng.choice(n, size=6, replace=False)
    labels = LabelAssignment(3, {int(v): i % 3 for i, v in enumerate(seeds)})
    plan = MotifPlan.edges_only() if seed % 2 == 0 else MotifPlan((2, 3), (0.6, 0.4))
    return build_operator(g, plan), prior_matrix(labels, n)


@pytest.mark.parametrize("seed", range(20))
def test_spread_matches_closed_form_from_any_start(seed: int):
    op, y = _random_case(seed)
    cfg = SolverConfig(eta=0.5, epsilon=1e-10, max_iters=5000)
    exact = closed_form(op, y, 0.5)

    from_prior = spread(op, y, cfg)
    from_zero = spread(op, y, cfg, x0=np.zeros_like(y))

    assert from_prior.converged and from_zero.converged
    assert np.max(np.abs(from_prior.soft - exact)) <= 1e-6
    assert np.max(np.abs(from_zero.soft - exact)) <= 1e-6


def test_edges_only_reduces_to_textbook_label_spreading():
    rng = np.random.default_rng(0)
    for trial in range(20):
        n = int(rng.integers(20, 300))
        h = nx.gnp_random_graph(n, float(rng.uniform(0.01, 0.1)), seed=trial)
        g = Graph.from_edges(n, list(h.edges()))
        seeds = rng.choice(n, size=5, replace=False)
        labels = LabelAssignment(2, {int(v): int(i % 2) for i, v in enumerate(seeds)})
        y = prior_matrix(labels, n)

        result = spread(build_operator(g, MotifPlan.edges_only()), y, SolverConfig())
        expected = _textbook_label_spreading(g.adjacency.toarray(), y, 0.5, result.iterations)

        assert np.allclose(result.soft, expected, rtol=0, atol=1e-12)


def _star(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def _contraction_graphs() -> list[tuple[str, Graph]]:
    graphs = [(f"gnp{seed}", Graph.from_edges(60, list(nx.gnp_random_graph(60, 0.08, seed=seed).edges()))) for seed in range(10)]
    graphs.append(("ba", Graph.from_edges(60, list(nx.barabasi_albert_graph(60, 3, seed=1).edges()))))
    graphs.append(("star", _star(10)))
    return graphs


def _steps(op, y: np.ndarray, count: int) -> list[np.ndarray]:
    # T 回で打ち切った spread の結果が X_T
    xs = [y]
    for t in range(1, count + 1):
        xs.append(spread(op, y, SolverConfig(eta=0.5, epsilon=1e-300, max_iters=t)).soft)
    return xs


@pytest.mark.parametrize("name, g", _contraction_graphs())
@pytest.mark.parametrize("plan", [MotifPlan.edges_only(), MotifPlan.triangle_weighted(0.5)], ids=["edges", "k3"])
def test_residuals_contract_in_frobenius_norm(name: str, g: Graph, plan: MotifPlan):
    op = build_operator(g, plan)
    y = prior_matrix(LabelAssignment(2, {0: 0, 1: 1}), g.num_vertices)

    xs = _steps(op, y, 20)
    diffs = [b - a for a, b in zip(xs, xs[1:])]
    fro = [float(np.linalg.norm(d)) for d in diffs]

    # ||ΔX_{t+1}||_F = η ||S ΔX_t||_F <= η ||ΔX_t||_F （S は対称、固有値は [-1, 1]）
    for before, after in zip(fro, fro[1:]):
        assert after <= 0.5 * before * (1 + 1e-9) + 1e-12

    # 記録される残差は max |ΔX|
    last = spread(op, y, SolverConfig(eta=0.5, epsilon=1e-300, max_iters=20))
    assert last.residuals == pytest.approx([float(np.max(np.abs(d))) for d in diffs], rel=0, abs=1e-15)
    assert last.final_residual == last.residuals[-1]
    assert last.iterations == 20


def test_star_operator_has_row_sum_above_one():
    # ∞ノルムでは縮小しない例: 中心の行和は sqrt(10)
    op = build_operator(_star(10), MotifPlan.edges_only())
    row_sums = np.asarray(abs(op.operator).sum(axis=1)).ravel()
    assert row_sums[0] == pytest.approx(np.sqrt(10))

    # 葉だけに値がある X0: 中心との往復で max|ΔX| は縮まない
    y = np.zeros((11, 1))
    x0 = np.ones((11, 1))
    x0[0] = 0.0
    r = spread(op, y, SolverConfig(eta=0.5, epsilon=1e-300, max_iters=2), x0=x0).residuals
    assert r[0] == pytest.approx(0.5 * np.sqrt(10))
    assert r[1] == pytest.approx(0.5 * np.sqrt(10))
    assert r[1] > 0.5 * r[0] + 1e-12


def test_result_does_not_depend_on_initialization(er_graph):
    g = er_graph(50, 0.15, 2)
    op = build_operator(g, MotifPlan.triangle_weighted(0.4))
    y = prior_matrix(LabelAssignment(2, {0: 0, 1: 1, 2: 0}), 50)
    x0 = np.random.default_rng(1).uniform(-5, 5, size=y.shape)

    a = spread(op, y, TIGHT).soft
    b = spread(op, y, TIGHT, x0=x0).soft

    assert np.allclose(a, b, rtol=0, atol=1e-10)


def test_not_converged_is_reported(er_graph):
    g = er_graph(30, 0.3, 1)
    op = build_operator(g, MotifPlan.edges_only())
    y = prior_matrix(LabelAssignment(2, {0: 0, 1: 1}), 30)

    result = spread(op, y, SolverConfig(eta=0.9, epsilon=1e-12, max_iters=3))

    assert not result.converged
    assert result.iterations == 3
    assert result.to_dict() == {"converged": False, "iterations": 3, "final_residual": result.final_residual}


def test_non_finite_prior_raises():
    g = Graph.from_edges(2, [(0, 1)])
    op = build_operator(g, MotifPlan.edges_only())
    y = np.array([[np.inf, 0.0], [0.0, 0.0]])
    with pytest.raises(NumericError, match="non_finite"):
        spread(op, y)


def test_solver_config_validation():
    with pytest.raises(ValidationError, match="eta_invalid"):
        SolverConfig(eta=1.0)
    with pytest.raises(ValidationError, match="epsilon_invalid"):
        SolverConfig(epsilon=0.0)
    with pytest.raises(ValidationError, match="max_iters_invalid"):
        SolverConfig(max_iters=0)


def test_shape_mismatch_is_rejected(toy_graph):
    op = build_operator(toy_graph, MotifPlan.edges_only())
    with pytest.raises(ValidationError, match="shape_mismatch"):
        spread(op, np.zeros((7, 2)))


def test_closed_form_refuses_large_graph(er_graph):
    op = build_operator(er_graph(30, 0.1, 1), MotifPlan.edges_only())
    with pytest.raises(RefusalError, match="graph_too_large"):
        closed_form(op, np.zeros((30, 2)), 0.5, dense_cap=20)


def test_label_propagation_path_midpoint():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    op = build_operator(g, MotifPlan.edges_only())
    labels = LabelAssignment(2, {0: 0, 2: 1})

    result = label_propagation(op, prior_matrix(labels, 3), labels.vertices(), TIGHT)

    assert result.soft[1] == pytest.approx([0.5, 0.5], abs=1e-12)
    assert list(result.soft[0]) == [1.0, 0.0]
    assert list(result.soft[2]) == [0.0, 1.0]


def test_label_propagation_matches_harmonic_solution():
    h = nx.connected_watts_strogatz_graph(30, 4, 0.3, seed=4)
    g = Graph.from_edges(30, list(h.edges()))
    labels = LabelAssignment(2, {0: 0, 15: 1, 7: 0})
    op = build_operator(g, MotifPlan.edges_only())

    result = label_propagation(op, prior_matrix(labels, 30), labels.vertices(), SolverConfig(epsilon=1e-13, max_iters=20000))

    # L_uu f_u = W_ul f_l
    w = g.adjacency.toarray()
    lap = np.diag(w.sum(axis=1)) - w
    lab = labels.vertices()
    unl = np.setdiff1d(np.arange(30), lab)
    f_l = prior_matrix(labels, 30)[lab]
    f_u = np.linalg.solve(lap[np.ix_(unl, unl)], w[np.ix_(unl, lab)] @ f_l)

    assert result.converged
    assert np.allclose(result.soft[unl], f_u, rtol=0, atol=1e-9)


def test_label_propagation_needs_labels(toy_graph):
    op = build_operator(toy_graph, MotifPlan.edges_only())
    with pytest.raises(ValidationError, match="labeled_empty"):
        label_propagation(op, np.zeros((8, 2)), [])


def test_harden_breaks_ties_to_lowest_class():
    x = np.array([[0.2, 0.7], [0.5, 0.5], [0.0, 0.0], [0.9, 0.1]])
    hard, ties = harden(x)
    assert hard.labels == {0: 1, 1: 0, 2: 0, 3: 0}
    assert list(ties) == [False, True, True, False]

    hard, ties = harden(x, labeled_overrides=LabelAssignment(2, {1: 1}))
    assert hard.labels[1] == 1
    assert not ties[1]


def test_harden_is_row_argmax(er_graph):
    x = np.random.default_rng(3).random((40, 4))
    hard, _ = harden(x)
    assert hard.to_array(40).tolist() == np.argmax(x, axis=1).tolist()


def test_toy_flip_from_pendant_side_to_clique_side(toy_graph, toy_seeds):
    y = prior_matrix(toy_seeds, 8)

    edges_only = spread(build_operator(toy_graph, MotifPlan.triangle_weighted(0.0)), y)
    hols = spread(build_operator(toy_graph, MotifPlan.triangle_weighted(0.8)), y)

    assert harden(edges_only.soft)[0].labels[ALICE] == 1  # ペンダント側
    assert harden(hols.soft)[0].labels[ALICE] == 0  # クリーク側

    # 手計算の値（closed form で確認）
    exact = closed_form(build_operator(toy_graph, MotifPlan.edges_only()), y, 0.5)
    assert exact[ALICE] == pytest.approx([0.305, 0.470], abs=5e-3)


def test_toy_alpha_sweep_has_one_flip_point(toy_graph, toy_seeds):
    y = prior_matrix(toy_seeds, 8)
    sides = []
    for i in range(10):
        op = build_operator(toy_graph, MotifPlan.triangle_weighted(i / 10))
        sides.append(harden(closed_form(op, y, 0.5))[0].labels[ALICE])

    assert sides[0] == 1 and sides[-1] == 0
    assert sum(1 for a, b in zip(sides, sides[1:]) if a != b) == 1


def test_write_scores_csv(tmp_path: Path):
    path = tmp_path / "scores.csv"
    write_scores_csv(path, np.array([[0.25, 0.75]]), VertexIdMap((42,)))
    assert path.read_text(encoding="utf-8").splitlines() == ["vertex,class_0,class_1", "42,0.25,0.75"]
