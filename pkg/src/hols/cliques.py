# src/hols/cliques.py
from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, TypeVar

import numpy as np

from .errors import RefusalError, ValidationError
from .graph import Graph
from .logging_utils import LOGGER_NAME
from .workers import root_blocks, run_ordered

logger = logging.getLogger(LOGGER_NAME)

# コストは (k_max/2)^(k-2) で増えるので既定の上限を置く
MAX_CLIQUE_SIZE = 8
BRUTE_FORCE_MAX_VERTICES = 64
_BRUTE_FORCE_CHUNK = 100_000


@dataclass(frozen=True, eq=False)
class CoreOrdering:
    order: np.ndarray  # 除去順の頂点列
    position: np.ndarray  # position[v] = order 内での v の位置
    degeneracy: int


@dataclass(frozen=True)
class CliqueOccurrence:
    vertices: tuple[int, ...]  # 昇順
    weight: float


Visitor = Callable[[CliqueOccurrence], None]
S = TypeVar("S", bound=Callable[[CliqueOccurrence], None])


def core_ordering(g: Graph) -> CoreOrdering:
    """次数最小の頂点を繰り返し除去する（同次数なら頂点id最小）"""
    n = g.num_vertices
    indptr, indices = g.adjacency.indptr, g.adjacency.indices
    deg = np.diff(indptr).tolist()
    heap = [(d, v) for v, d in enumerate(deg)]
    heapq.heapify(heap)
    removed = bytearray(n)
    order: list[int] = []
    degeneracy = 0

    while heap:
        d, v = heapq.heappop(heap)
        if removed[v] or d != deg[v]:
            continue  # 古いエントリ
        removed[v] = 1
        order.append(v)
        degeneracy = max(degeneracy, d)
        for u in indices[indptr[v] : indptr[v + 1]].tolist():
            if not removed[u]:
                deg[u] -= 1
                heapq.heappush(heap, (deg[u], u))

    order_arr = np.array(order, dtype=np.int64)
    position = np.empty(n, dtype=np.int64)
    position[order_arr] = np.arange(n, dtype=np.int64)
    return CoreOrdering(order_arr, position, degeneracy)


class _Dag:
    """core ordering で向き付けしたグラフ（位置の小さい頂点 -> 大きい頂点）"""

    def __init__(self, g: Graph, ordering: CoreOrdering) -> None:
        a = g.adjacency
        pos = ordering.position
        self.out_weights: list[dict[int, float]] = []
        self.out_sets: list[frozenset[int]] = []
        for v in range(g.num_vertices):
            nb = a.indices[a.indptr[v] : a.indptr[v + 1]]
            w = a.data[a.indptr[v] : a.indptr[v + 1]]
            later = pos[nb] > pos[v]
            out = dict(zip(nb[later].tolist(), w[later].tolist()))
            self.out_weights.append(out)
            self.out_sets.append(frozenset(out))


def _enumerate_roots(dag: _Dag, roots: range, k: int, visit: Visitor) -> int:
    out_sets, out_weights = dag.out_sets, dag.out_weights
    count = 0

    def extend(clique: list[int], weight: float, cand: frozenset[int], remaining: int) -> None:
        nonlocal count
        for u in sorted(cand):
            wu = weight
            for v in clique:
                wu *= out_weights[v][u]
            if remaining == 1:
                visit(CliqueOccurrence(tuple(sorted(clique + [u])), wu))
                count += 1
                continue
            nxt = cand & out_sets[u]
            if len(nxt) >= remaining - 1:
                extend(clique + [u], wu, nxt, remaining - 1)

    for r in roots:
        cand = out_sets[r]
        if len(cand) >= k - 1:
            extend([r], 1.0, cand, k - 1)
    return count


def check_clique_size(k: int, max_k: int) -> None:
    if k < 2:
        raise ValidationError(f"clique_size_invalid: k={k}, must be >= 2")
    if k > max_k:
        raise ValidationError(f"clique_size_above_cap: k={k} > cap {max_k}")


def enumerate_by_block(
    g: Graph,
    k: int,
    make_sink: Callable[[], S],
    threads: int = 1,
    max_k: int = MAX_CLIQUE_SIZE,
) -> list[tuple[int, S]]:
    """
    ルート頂点のブロックごとに専用の sink で列挙し、ブロック順に (件数, sink) を返す。
    ブロック分割はスレッド数に依存しないので、逐次でも並列でも集計順は同じ。
    """
    check_clique_size(k, max_k)
    dag = _Dag(g, core_ordering(g))

    def work(block: range) -> tuple[int, S]:
        sink = make_sink()
        return _enumerate_roots(dag, block, k, sink), sink

    return run_ordered(work, root_blocks(g.num_vertices), threads)


def enumerate_cliques(
    g: Graph,
    k: int,
    visit: Visitor,
    threads: int = 1,
    max_k: int = MAX_CLIQUE_SIZE,
) -> int:
    """
    k-クリークをちょうど1回ずつ visit に渡し、総数を返す。
    threads > 1 の場合 visit は複数スレッドから呼ばれる（呼び出し側でスレッド安全にすること）。
    """
    results = enumerate_by_block(g, k, lambda: visit, threads=threads, max_k=max_k)
    total = sum(n for n, _ in results)
    logger.info(f"enumerate_cliques: k={k} count={total}")
    return total


def count_cliques(g: Graph, k: int, threads: int = 1, max_k: int = MAX_CLIQUE_SIZE) -> int:
    return enumerate_cliques(g, k, lambda q: None, threads=threads, max_k=max_k)


class _Collector(list):
    def __call__(self, q: CliqueOccurrence) -> None:
        self.append(q.vertices)


def clique_array(g: Graph, k: int, threads: int = 1, max_k: int = MAX_CLIQUE_SIZE) -> np.ndarray:
    """全 k-クリークを (Q, k) の配列で返す（同じ出現集合を何度も使う解析用）"""
    parts = [np.array(sink, dtype=np.int64).reshape(-1, k) for _, sink in enumerate_by_block(g, k, _Collector, threads, max_k)]
    if not parts:
        return np.empty((0, k), dtype=np.int64)
    return np.concatenate(parts)


def brute_force_cliques(g: Graph, k: int) -> list[CliqueOccurrence]:
    """全部分集合を調べるテスト用オラクル（N <= 64）"""
    if k < 2:
        raise ValidationError(f"clique_size_invalid: k={k}, must be >= 2")
    n = g.num_vertices
    if n > BRUTE_FORCE_MAX_VERTICES:
        raise RefusalError(f"graph_too_large: N={n} > {BRUTE_FORCE_MAX_VERTICES} for brute force")
    if k > n:
        return []

    coo = g.adjacency.tocoo()
    present = np.zeros((n, n), dtype=bool)
    present[coo.row, coo.col] = True
    weight = np.zeros((n, n), dtype=np.float64)
    weight[coo.row, coo.col] = coo.data
    pairs = list(itertools.combinations(range(k), 2))

    found: list[CliqueOccurrence] = []
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = np.array(list(itertools.islice(combos, _BRUTE_FORCE_CHUNK)), dtype=np.int64).reshape(-1, k)
        if len(chunk) == 0:
            break
        ok = np.ones(len(chunk), dtype=bool)
        for a, b in pairs:
            ok &= present[chunk[:, a], chunk[:, b]]
        for row in chunk[ok]:
            w = 1.0
            for a, b in pairs:
                w *= weight[row[a], row[b]]
            found.append(CliqueOccurrence(tuple(int(v) for v in row), w))
    return found
