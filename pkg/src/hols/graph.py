# src/hols/graph.py
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sparse

from .errors import ParseError, ValidationError
from .logging_utils import LOGGER_NAME

logger = logging.getLogger(LOGGER_NAME)


@dataclass(frozen=True, eq=False)
class Graph:
    """無向・重み付きグラフ。隣接行列は対称CSR（自己ループなし、列番号ソート済み）"""

    adjacency: sparse.csr_matrix

    @classmethod
    def from_edges(
        cls,
        num_vertices: int,
        edges: Iterable[tuple[int, int]],
        weights: Iterable[float] | None = None,
    ) -> Graph:
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if weights is None:
            w = np.ones(len(pairs), dtype=np.float64)
        else:
            w = np.asarray(list(weights), dtype=np.float64)
            if len(w) != len(pairs):
                raise ValidationError(f"weights_length_mismatch: {len(w)} weights for {len(pairs)} edges")

        if len(pairs) and (pairs.min() < 0 or pairs.max() >= num_vertices):
            raise ValidationError(f"vertex_out_of_range: ids must be in 0..{num_vertices - 1}")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weight_invalid: weights must be finite")
        if np.any(w < 0):
            raise ValidationError("weight_negative: weights must be >= 0")

        # 自己ループを落とし、(小, 大) に正規化
        keep = pairs[:, 0] != pairs[:, 1]
        pairs, w = pairs[keep], w[keep]
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])

        # 重複（逆向き含む）は max の重みを残す
        if len(lo):
            order = np.lexsort((hi, lo))
            lo, hi, w = lo[order], hi[order], w[order]
            starts = np.flatnonzero(np.r_[True, (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])])
            w = np.maximum.reduceat(w, starts)
            lo, hi = lo[starts], hi[starts]

        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        data = np.concatenate([w, w])
        adj = sparse.csr_matrix((data, (rows, cols)), shape=(num_vertices, num_vertices), dtype=np.float64)
        adj.sort_indices()
        return cls(adj)

    @classmethod
    def empty(cls, num_vertices: int = 0) -> Graph:
        return cls.from_edges(num_vertices, [])

    @property
    def num_vertices(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    def neighbors(self, v: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[v] : a.indptr[v + 1]]

    def neighbor_weights(self, v: int) -> np.ndarray:
        a = self.adjacency
        return a.data[a.indptr[v] : a.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def edges(self) -> Iterable[tuple[int, int, float]]:
        """各無向辺を (i, j, w), i < j で一度ずつ返す"""
        upper = sparse.triu(self.adjacency, k=1, format="csr")
        upper.sort_indices()
        for i in range(self.num_vertices):
            for j, w in zip(upper.indices[upper.indptr[i] : upper.indptr[i + 1]], upper.data[upper.indptr[i] : upper.indptr[i + 1]]):
                yield i, int(j), float(w)

    def is_unit_weight(self) -> bool:
        return bool(np.all(self.adjacency.data == 1.0))


@dataclass(frozen=True, eq=False)
class VertexIdMap:
    external: tuple[int, ...]  # 内部id -> 外部id
    _index: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        index = {ext: i for i, ext in enumerate(self.external)}
        if len(index) != len(self.external):
            raise ValidationError("idmap_not_bijective: duplicate external ids")
        object.__setattr__(self, "_index", index)

    @classmethod
    def identity(cls, n: int) -> VertexIdMap:
        return cls(tuple(range(n)))

    def __len__(self) -> int:
        return len(self.external)

    def __contains__(self, ext: int) -> bool:
        return ext in self._index

    def to_internal(self, ext: int) -> int:
        try:
            return self._index[ext]
        except KeyError:
            raise ValidationError(f"vertex_unknown: {ext}") from None

    def to_external(self, v: int) -> int:
        return self.external[v]


@dataclass(frozen=True, eq=False)
class LabelAssignment:
    num_classes: int
    labels: Mapping[int, int]  # 内部頂点id -> クラスid（部分的でもよい）

    def __post_init__(self) -> None:
        for v, c in self.labels.items():
            if not (0 <= c < self.num_classes):
                raise ValidationError(f"class_out_of_range: vertex {v} has class {c}, C={self.num_classes}")

    def __len__(self) -> int:
        return len(self.labels)

    @classmethod
    def from_array(cls, classes: Sequence[int] | np.ndarray, num_classes: int | None = None) -> LabelAssignment:
        """-1 は未ラベル"""
        arr = np.asarray(classes, dtype=np.int64)
        labels = {int(v): int(c) for v, c in enumerate(arr) if c >= 0}
        if num_classes is None:
            num_classes = (max(labels.values()) + 1) if labels else 0
        return cls(num_classes, labels)

    def to_array(self, n: int) -> np.ndarray:
        out = np.full(n, -1, dtype=np.int64)
        for v, c in self.labels.items():
            out[v] = c
        return out

    def vertices(self) -> np.ndarray:
        return np.array(sorted(self.labels), dtype=np.int64)

    def first_unlabeled(self, n: int) -> int | None:
        for v in range(n):
            if v not in self.labels:
                return v
        return None

    def is_total(self, n: int) -> bool:
        return self.first_unlabeled(n) is None

    def class_sizes(self) -> np.ndarray:
        return np.bincount(np.fromiter(self.labels.values(), dtype=np.int64, count=len(self.labels)), minlength=self.num_classes)

    def restrict(self, vertices: Iterable[int]) -> LabelAssignment:
        return LabelAssignment(self.num_classes, {int(v): self.labels[int(v)] for v in vertices})

    def require_each_class(self) -> None:
        missing = [c for c, size in enumerate(self.class_sizes()) if size == 0]
        if missing:
            raise ValidationError(f"class_unlabeled: no labeled vertex for classes {missing}")


def _decode(line_number: int, raw: bytes | str) -> str:
    if isinstance(raw, str):
        return raw
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(line_number, f"encoding_invalid: {e}") from None


def _parse_id(line_number: int, token: str, what: str) -> int:
    if not token.isdigit():
        raise ParseError(line_number, f"{what}_invalid: expected non-negative integer, got {token!r}")
    return int(token)


def parse_edge_line(line_number: int, raw: bytes | str) -> tuple[int, int, float] | None:
    """
    辺リストの1行をパース

    Returns:
        (u, v, w): 外部id と重み（重みなし行は 1.0）
        None: 空行またはコメント行
    """
    text = _decode(line_number, raw).strip()
    if not text or text.startswith("#"):
        return None
    tokens = text.split()
    if len(tokens) not in (2, 3):
        raise ParseError(line_number, f"token_count_invalid: expected 'u v' or 'u v w', got {len(tokens)} tokens")
    u = _parse_id(line_number, tokens[0], "vertex_id")
    v = _parse_id(line_number, tokens[1], "vertex_id")
    if len(tokens) == 2:
        return u, v, 1.0
    try:
        w = float(tokens[2])
    except ValueError:
        raise ParseError(line_number, f"weight_invalid: not a number: {tokens[2]!r}") from None
    if not math.isfinite(w):
        raise ParseError(line_number, f"weight_invalid: not finite: {tokens[2]!r}")
    if w < 0:
        raise ValidationError(f"weight_negative: {tokens[2]}", line_number)
    return u, v, w


def parse_label_line(line_number: int, raw: bytes | str, one_based: bool = False) -> tuple[int, int] | None:
    text = _decode(line_number, raw).strip()
    if not text or text.startswith("#"):
        return None
    tokens = text.split()
    if len(tokens) != 2:
        raise ParseError(line_number, f"token_count_invalid: expected 'vertex_id class_id', got {len(tokens)} tokens")
    v = _parse_id(line_number, tokens[0], "vertex_id")
    c = _parse_id(line_number, tokens[1], "class_id")
    if one_based:
        if c == 0:
            raise ParseError(line_number, "class_id_invalid: 0 in a 1-based label file")
        c -= 1
    return v, c


def load_edge_list(source: IO[bytes], weighted: bool = False) -> tuple[Graph, VertexIdMap]:
    """
    辺リストを読み込んで Graph と VertexIdMap を作る

    - 自己ループは捨てる（ただし頂点としては残す）
    - 重複・逆向きの辺はまとめる（重みは max）
    - weighted=False の場合、3列目は検証だけして重み 1.0 とする
    """
    us: list[int] = []
    vs: list[int] = []
    ws: list[float] = []
    for line_number, raw in enumerate(source, start=1):
        parsed = parse_edge_line(line_number, raw)
        if parsed is None:
            continue
        u, v, w = parsed
        us.append(u)
        vs.append(v)
        ws.append(w if weighted else 1.0)

    idmap = VertexIdMap(tuple(sorted(set(us) | set(vs))))
    index = idmap._index
    edges = [(index[u], index[v]) for u, v in zip(us, vs)]
    graph = Graph.from_edges(len(idmap), edges, ws)
    logger.info(f"load_edge_list: lines={len(us)} vertices={graph.num_vertices} edges={graph.num_edges} weighted={weighted}")
    return graph, idmap


def load_labels(
    source: IO[bytes],
    idmap: VertexIdMap,
    num_classes: int | None = None,
    one_based: bool = False,
) -> LabelAssignment:
    labels: dict[int, int] = {}
    for line_number, raw in enumerate(source, start=1):
        parsed = parse_label_line(line_number, raw, one_based=one_based)
        if parsed is None:
            continue
        ext, c = parsed
        if ext not in idmap:
            raise ValidationError(f"vertex_unknown: {ext}", line_number)
        v = idmap.to_internal(ext)
        if v in labels and labels[v] != c:
            raise ValidationError(f"class_collision: vertex {ext} labeled {labels[v]} and {c}", line_number)
        labels[v] = c

    inferred = (max(labels.values()) + 1) if labels else 0
    if num_classes is None:
        num_classes = inferred
    elif inferred > num_classes:
        raise ValidationError(f"class_out_of_range: class id {inferred - 1} with declared C={num_classes}")
    assignment = LabelAssignment(num_classes, labels)
    logger.info(f"load_labels: labeled={len(assignment)} classes={num_classes}")
    return assignment


def write_edge_list(graph: Graph, idmap: VertexIdMap, sink: IO[bytes], weighted: bool = False) -> None:
    # 孤立頂点は自己ループ行として書く（読み込み時に頂点だけ残る）
    degree_count = np.diff(graph.adjacency.indptr)
    for v in np.flatnonzero(degree_count == 0):
        ext = idmap.to_external(int(v))
        sink.write(f"{ext} {ext}\n".encode("utf-8"))
    for i, j, w in graph.edges():
        line = f"{idmap.to_external(i)} {idmap.to_external(j)}"
        if weighted:
            line += f" {w!r}"
        sink.write((line + "\n").encode("utf-8"))


def write_labels(assignment: LabelAssignment, idmap: VertexIdMap, sink: IO[bytes], one_based: bool = False) -> None:
    offset = 1 if one_based else 0
    for v in sorted(assignment.labels):
        sink.write(f"{idmap.to_external(v)} {assignment.labels[v] + offset}\n".encode("utf-8"))


def degree(g: Graph, v: int) -> float:
    if not (0 <= v < g.num_vertices):
        raise ValidationError(f"vertex_out_of_range: {v} not in 0..{g.num_vertices - 1}")
    return float(g.neighbor_weights(v).sum())


def graph_digest(g: Graph) -> str:
    a = g.adjacency
    h = hashlib.sha256()
    h.update(np.int64(a.shape[0]).tobytes())
    h.update(a.indptr.astype("<i8").tobytes())
    h.update(a.indices.astype("<i8").tobytes())
    h.update(a.data.astype("<f8").tobytes())
    return h.hexdigest()
