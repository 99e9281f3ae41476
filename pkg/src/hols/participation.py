# src/hols/participation.py
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sparse

from .cache import cache_path, load_combined, save_combined
from .cliques import MAX_CLIQUE_SIZE, CliqueOccurrence, check_clique_size, enumerate_by_block
from .errors import ValidationError
from .graph import Graph, graph_digest
from .logging_utils import LOGGER_NAME
from .workers import run_ordered

logger = logging.getLogger(LOGGER_NAME)


@dataclass(frozen=True)
class MotifPlan:
    """クリークサイズ K とその重み α（合計1）"""

    motifs: tuple[int, ...]
    alphas: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.motifs or len(self.motifs) != len(self.alphas):
            raise ValidationError(f"plan_invalid: {len(self.motifs)} motifs vs {len(self.alphas)} weights")
        if len(set(self.motifs)) != len(self.motifs):
            raise ValidationError(f"plan_invalid: duplicate clique sizes {list(self.motifs)}")
        if any(k < 2 for k in self.motifs):
            raise ValidationError(f"plan_invalid: clique sizes must be >= 2, got {list(self.motifs)}")
        # 単一モチーフなら α=1（合計1の帰結）。それ以外は (0, 1)
        if any(not (0.0 < a <= 1.0) for a in self.alphas):
            raise ValidationError(f"plan_invalid: weights must be in (0, 1], got {list(self.alphas)}")
        if abs(math.fsum(self.alphas) - 1.0) > 1e-12:
            raise ValidationError(f"plan_invalid: weights must sum to 1, got {math.fsum(self.alphas)!r}")

    @classmethod
    def parse(cls, motifs: str, alphas: str) -> MotifPlan:
        try:
            ks = tuple(int(t) for t in motifs.split(",") if t.strip())
            ws = tuple(float(t) for t in alphas.split(",") if t.strip())
        except ValueError as e:
            raise ValidationError(f"plan_invalid: {e}") from None
        return cls(ks, ws)

    @classmethod
    def edges_only(cls) -> MotifPlan:
        return cls((2,), (1.0,))

    @classmethod
    def triangle_weighted(cls, alpha: float) -> MotifPlan:
        """{K2: 1-α, K3: α}。α=0 は辺だけのプラン"""
        if alpha == 0.0:
            return cls.edges_only()
        return cls((2, 3), (1.0 - alpha, alpha))

    @property
    def max_k(self) -> int:
        return max(self.motifs)

    def weight_of(self, k: int) -> float:
        return dict(zip(self.motifs, self.alphas)).get(k, 0.0)

    @property
    def label(self) -> str:
        return "+".join(f"K{k}:{a:g}" for k, a in zip(self.motifs, self.alphas))


def plan_grid(max_k: int, include_edges_only: bool = True) -> list[MotifPlan]:
    """
    α_{K_j} in {0, 0.1, ..., 0.9} (j >= 3), α_{K2} = 1 - Σ >= 0.1。
    重み0のモチーフはプランから外す。
    """
    if max_k < 2:
        raise ValidationError(f"clique_size_invalid: k={max_k}, must be >= 2")
    plans: list[MotifPlan] = []
    for tenths in itertools.product(range(10), repeat=max_k - 2):
        s = sum(tenths)
        if s > 9 or (s == 0 and not include_edges_only):
            continue
        motifs = [2] + [j for j, t in zip(range(3, max_k + 1), tenths) if t > 0]
        alphas = [(10 - s) / 10] + [t / 10 for t in tenths if t > 0]
        plans.append(MotifPlan(tuple(motifs), tuple(alphas)))
    return plans


@dataclass(frozen=True, eq=False)
class ParticipationMatrix:
    k: int
    matrix: sparse.csr_matrix  # e_ij = i と j を共に含む k-クリークの重み合計

    @property
    def num_vertices(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class PropagationOperator:
    plan: MotifPlan
    adjacency: sparse.csr_matrix  # W'
    degrees: np.ndarray  # d'_ii
    operator: sparse.csr_matrix  # S = D'^{-1/2} W' D'^{-1/2}

    @property
    def num_vertices(self) -> int:
        return self.adjacency.shape[0]

    def random_walk(self) -> sparse.csr_matrix:
        """D'^{-1} W'（次数0の行は0）"""
        inv = np.zeros_like(self.degrees)
        nz = self.degrees > 0
        inv[nz] = 1.0 / self.degrees[nz]
        return sparse.csr_matrix(sparse.diags(inv) @ self.adjacency)


class _PairAccumulator(dict):
    def __call__(self, q: CliqueOccurrence) -> None:
        for i, j in itertools.combinations(q.vertices, 2):
            self[(i, j)] = self.get((i, j), 0.0) + q.weight


def build_participation(g: Graph, k: int, threads: int = 1, max_k: int = MAX_CLIQUE_SIZE) -> ParticipationMatrix:
    """出現を1つずつ流し、含まれる頂点ペアに重みを足していく"""
    n = g.num_vertices
    if k == 2:
        check_clique_size(k, max_k)
        return ParticipationMatrix(2, g.adjacency.copy())

    blocks = enumerate_by_block(g, k, _PairAccumulator, threads=threads, max_k=max_k)

    # ブロック順にマージ（逐次・並列で同じ加算順）
    total: dict[tuple[int, int], float] = {}
    for _, acc in blocks:
        for key, w in acc.items():
            total[key] = total.get(key, 0.0) + w

    if total:
        ij = np.array(list(total.keys()), dtype=np.int64)
        w = np.fromiter(total.values(), dtype=np.float64, count=len(total))
    else:
        ij = np.empty((0, 2), dtype=np.int64)
        w = np.empty(0, dtype=np.float64)
    rows = np.concatenate([ij[:, 0], ij[:, 1]])
    cols = np.concatenate([ij[:, 1], ij[:, 0]])
    data = np.concatenate([w, w])
    matrix = sparse.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=np.float64)
    matrix.sort_indices()
    logger.info(f"build_participation: k={k} occurrences={sum(c for c, _ in blocks)} pairs={len(total)}")
    return ParticipationMatrix(k, matrix)


def operator_from_adjacency(w_prime: sparse.csr_matrix, plan: MotifPlan) -> PropagationOperator:
    w_prime = sparse.csr_matrix(w_prime, dtype=np.float64)
    w_prime.sort_indices()
    d = np.asarray(w_prime.sum(axis=1)).ravel()

    # 次数0の頂点は S の行・列を0にする
    inv_sqrt = np.zeros_like(d)
    nz = d > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(d[nz])

    rows = np.repeat(np.arange(w_prime.shape[0]), np.diff(w_prime.indptr))
    s = w_prime.copy()
    s.data = w_prime.data * (inv_sqrt[rows] * inv_sqrt[w_prime.indices])
    return PropagationOperator(plan, w_prime, d, s)


def combine(parts: Sequence[ParticipationMatrix], plan: MotifPlan) -> PropagationOperator:
    if [p.k for p in parts] != list(plan.motifs):
        raise ValidationError(f"plan_misaligned: matrices for {[p.k for p in parts]} vs plan {list(plan.motifs)}")
    shapes = {p.matrix.shape for p in parts}
    if len(shapes) != 1:
        raise ValidationError(f"dimension_mismatch: {sorted(shapes)}")

    w_prime = None
    for p, a in zip(parts, plan.alphas):
        term = p.matrix * a
        w_prime = term if w_prime is None else w_prime + term
    return operator_from_adjacency(w_prime, plan)


def operator_apply(op: PropagationOperator, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != op.num_vertices:
        raise ValidationError(f"shape_mismatch: X has shape {x.shape}, operator has N={op.num_vertices}")
    return np.asarray(op.operator @ x)


def build_parts(g: Graph, plan: MotifPlan, threads: int = 1, max_k: int = MAX_CLIQUE_SIZE) -> list[ParticipationMatrix]:
    # モチーフごとに独立なので並列に組める（各ビルド内は逐次）
    return run_ordered(lambda k: build_participation(g, k, max_k=max_k), list(plan.motifs), threads)


def build_operator(
    g: Graph,
    plan: MotifPlan,
    threads: int = 1,
    cache_dir: Path | None = None,
    max_k: int = MAX_CLIQUE_SIZE,
) -> PropagationOperator:
    if cache_dir is None:
        return combine(build_parts(g, plan, threads, max_k), plan)

    path = cache_path(cache_dir, graph_digest(g), plan.motifs, plan.alphas)
    if path.exists():
        try:
            w_prime = load_combined(path)
        except ValidationError as e:
            # 壊れたキャッシュは作り直す
            logger.warning(f"build_operator: {e.reason}, rebuilding")
            w_prime = None
        if w_prime is not None and w_prime.shape[0] == g.num_vertices:
            logger.info(f"build_operator: cache hit {path}")
            return operator_from_adjacency(w_prime, plan)
        if w_prime is not None:
            logger.warning(f"build_operator: cache size mismatch, rebuilding {path}")

    op = combine(build_parts(g, plan, threads, max_k), plan)
    save_combined(path, op.adjacency)
    logger.info(f"build_operator: cache stored {path}")
    return op
