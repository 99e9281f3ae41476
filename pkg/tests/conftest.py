# tests/conftest.py
from __future__ import annotations

import sys
from pathlib import Path

import networkx as nx
import pytest

ROOT = Path(__file__).resolve().parents[1]  # project root: .../hols
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from src.hols.graph import Graph, LabelAssignment  # noqa: E402

# Alice(0) と 4-クリーク {Alice, B, C, D}、Alice にだけつながる P, Q, R, S
ALICE, B, C, D, P, Q, R, S = range(8)
TOY_EDGES = [(ALICE, B), (ALICE, C), (ALICE, D), (B, C), (B, D), (C, D), (ALICE, P), (ALICE, Q), (ALICE, R), (ALICE, S)]
CLIQUE_SIDE = 0
PENDANT_SIDE = 1


def nx_to_graph(h: nx.Graph) -> Graph:
    return Graph.from_edges(h.number_of_nodes(), list(h.edges()))


@pytest.fixture
def er_graph():
    """G(n, p) を固定 seed で作る"""

    def _make(n: int, p: float, seed: int) -> Graph:
        return nx_to_graph(nx.gnp_random_graph(n, p, seed=seed))

    return _make


@pytest.fixture
def toy_graph() -> Graph:
    return Graph.from_edges(8, TOY_EDGES)


@pytest.fixture
def toy_seeds() -> LabelAssignment:
    # B, C, D はクリーク側、P..S はペンダント側
    return LabelAssignment(2, {B: CLIQUE_SIDE, C: CLIQUE_SIDE, D: CLIQUE_SIDE, P: PENDANT_SIDE, Q: PENDANT_SIDE, R: PENDANT_SIDE, S: PENDANT_SIDE})


@pytest.fixture
def toy_truth(toy_seeds: LabelAssignment) -> LabelAssignment:
    return LabelAssignment(2, dict(toy_seeds.labels) | {ALICE: CLIQUE_SIDE})


@pytest.fixture
def write_dataset(tmp_path: Path):
    """(n, edges, labels) を辺リスト/ラベルファイルに書き、パスを返す"""

    def _write(n: int, edges, labels: dict[int, int] | None, name: str = "data") -> tuple[Path, Path]:
        graph_path = tmp_path / f"{name}.edges"
        labels_path = tmp_path / f"{name}.labels"
        lines = [f"{v} {v}" for v in range(n)]  # 孤立頂点も残す
        lines += [f"{u} {v}" for u, v in edges]
        graph_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        if labels is not None:
            labels_path.write_text("".join(f"{v} {c}\n" for v, c in sorted(labels.items())), encoding="utf-8")
        return graph_path, labels_path

    return _write


@pytest.fixture
def toy_files(write_dataset):
    seeds = {B: CLIQUE_SIDE, C: CLIQUE_SIDE, D: CLIQUE_SIDE, P: PENDANT_SIDE, Q: PENDANT_SIDE, R: PENDANT_SIDE, S: PENDANT_SIDE}
    return write_dataset(8, TOY_EDGES, seeds, name="toy")


@pytest.fixture
def planted_files(write_dataset):
    # 2クラス x 30 頂点、クラス内が密
    h = nx.planted_partition_graph(2, 30, 0.3, 0.02, seed=7)
    labels = {v: v // 30 for v in range(60)}
    return write_dataset(60, list(h.edges()), labels, name="planted")
