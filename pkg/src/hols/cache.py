# src/hols/cache.py
from __future__ import annotations

import hashlib
import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sparse

from .errors import ValidationError
from .logging_utils import LOGGER_NAME

logger = logging.getLogger(LOGGER_NAME)

# ファイル形式: MAGIC(8) + N(u64) + 件数(u64) + (i, j, w') の三つ組を (i, j) 昇順、すべてリトルエンディアン
MAGIC = b"HOLSWP01"
_TRIPLE = np.dtype([("i", "<i8"), ("j", "<i8"), ("w", "<f8")])


def cache_path(cache_dir: Path, digest: str, motifs: Sequence[int], alphas: Sequence[float]) -> Path:
    key = digest + "|" + ",".join(f"{k}:{a!r}" for k, a in zip(motifs, alphas))
    return cache_dir / f"{hashlib.sha256(key.encode('utf-8')).hexdigest()[:32]}.wprime"


def save_combined(path: Path, w_prime: sparse.csr_matrix) -> None:
    m = sparse.csr_matrix(w_prime)
    m.sort_indices()
    n = m.shape[0]
    triples = np.empty(m.nnz, dtype=_TRIPLE)
    triples["i"] = np.repeat(np.arange(n), np.diff(m.indptr))
    triples["j"] = m.indices
    triples["w"] = m.data

    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as f:
        f.write(MAGIC)
        f.write(np.array([n, m.nnz], dtype="<u8").tobytes())
        f.write(triples.tobytes())
    tmp.replace(path)


def load_combined(path: Path) -> sparse.csr_matrix:
    blob = path.read_bytes()
    header = len(MAGIC) + 16
    if len(blob) < header or blob[: len(MAGIC)] != MAGIC:
        raise ValidationError(f"cache_invalid: bad header in {path}")
    n, count = (int(x) for x in np.frombuffer(blob, dtype="<u8", count=2, offset=len(MAGIC)))
    if len(blob) != header + count * _TRIPLE.itemsize:
        raise ValidationError(f"cache_invalid: expected {count} entries in {path}")
    triples = np.frombuffer(blob, dtype=_TRIPLE, count=count, offset=header)
    m = sparse.csr_matrix((triples["w"].astype(np.float64), (triples["i"], triples["j"])), shape=(n, n))
    m.sort_indices()
    return m
