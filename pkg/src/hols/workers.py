# src/hols/workers.py
from __future__ import annotations

import os
from typing import Callable, Sequence, TypeVar

from joblib import Parallel, delayed

from .errors import ValidationError

T = TypeVar("T")
R = TypeVar("R")

# ルート頂点の分割単位。スレッド数に依存させない（並列/逐次で集計順を同じにするため）
ROOT_BLOCK_SIZE = 256


def resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ValidationError(f"threads_invalid: {threads} (0 = auto)")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


def run_ordered(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> list[R]:
    """items の順に結果を返す。threads > 1 なら joblib のスレッドで並列実行"""
    n_jobs = resolve_threads(threads)
    if n_jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(fn)(x) for x in items)


def root_blocks(n: int, block_size: int = ROOT_BLOCK_SIZE) -> list[range]:
    return [range(s, min(s + block_size, n)) for s in range(0, n, block_size)]
