# src/hols/homogeneity.py
from __future__ import annotations

import csv
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cliques import MAX_CLIQUE_SIZE, clique_array
from .errors import ValidationError
from .graph import Graph, LabelAssignment
from .logging_utils import LOGGER_NAME
from .workers import run_ordered

logger = logging.getLogger(LOGGER_NAME)

DEFAULT_REPS = 20
DEFAULT_SEED = 0

# 最も均質な構成 "k" の観測/ランダム比について、実データで報告されている範囲
REFERENCE_BANDS: dict[int, tuple[float, float]] = {
    2: (1.8, 5.9),
    3: (3.7, 60.0),
    4: (7.5, 464.0),
    5: (15.0, 3416.0),
}


@dataclass(frozen=True, order=True)
class LabelConfiguration:
    parts: tuple[int, ...]  # クラスごとの重複数（降順）

    def __post_init__(self) -> None:
        if not self.parts or any(p < 1 for p in self.parts) or list(self.parts) != sorted(self.parts, reverse=True):
            raise ValidationError(f"configuration_invalid: {self.parts}")

    @property
    def k(self) -> int:
        return sum(self.parts)

    def __str__(self) -> str:
        return "-".join(str(p) for p in self.parts)

    @classmethod
    def parse(cls, text: str) -> LabelConfiguration:
        return cls(tuple(int(t) for t in text.split("-")))


@dataclass
class ConfigDistribution:
    k: int
    counts: dict[LabelConfiguration, int]
    total: int

    def probability(self, config: LabelConfiguration) -> float:
        return self.counts.get(config, 0) / self.total if self.total else 0.0

    def probabilities(self) -> dict[LabelConfiguration, float]:
        return {c: self.probability(c) for c in self.counts}


@dataclass
class ConfigRow:
    configuration: LabelConfiguration
    observed_count: int
    observed_prob: float
    null_prob: float
    ratio: float | None  # 観測0なら None（"absent"）、null が0なら inf

    @property
    def ratio_text(self) -> str:
        if self.ratio is None:
            return "absent"
        return "inf" if math.isinf(self.ratio) else repr(self.ratio)


def configuration_of(classes: Sequence[int]) -> LabelConfiguration:
    if len(classes) == 0:
        raise ValidationError("configuration_invalid: empty clique")
    return LabelConfiguration(tuple(sorted(Counter(classes).values(), reverse=True)))


def possible_configurations(k: int, num_classes: int) -> list[LabelConfiguration]:
    """k の整数分割のうち部分数 <= C のもの（均質なものから順）"""

    def partitions(rest: int, largest: int) -> list[tuple[int, ...]]:
        if rest == 0:
            return [()]
        out = []
        for p in range(min(rest, largest), 0, -1):
            out.extend((p,) + tail for tail in partitions(rest - p, p))
        return out

    return [LabelConfiguration(p) for p in partitions(k, k) if len(p) <= num_classes]


def _tally(classes: np.ndarray) -> Counter:
    """(Q, k) のクラス行列を構成ごとに数える"""
    counts: Counter = Counter()
    if len(classes) == 0:
        return counts
    ordered = np.sort(classes, axis=1)
    same = ordered[:, 1:] == ordered[:, :-1]
    masks, freq = np.unique(same, axis=0, return_counts=True)
    for mask, f in zip(masks, freq):
        runs = [1]
        for joined in mask:
            if joined:
                runs[-1] += 1
            else:
                runs.append(1)
        counts[LabelConfiguration(tuple(sorted(runs, reverse=True)))] += int(f)
    return counts


def _label_vector(g: Graph, labels: LabelAssignment) -> np.ndarray:
    missing = labels.first_unlabeled(g.num_vertices)
    if missing is not None:
        raise ValidationError(f"labels_partial: vertex {missing} is unlabeled; configuration analysis needs every vertex labeled")
    return labels.to_array(g.num_vertices)


def observed_distribution(
    g: Graph,
    labels: LabelAssignment,
    k: int,
    threads: int = 1,
    max_k: int = MAX_CLIQUE_SIZE,
    cliques: np.ndarray | None = None,
) -> ConfigDistribution:
    vec = _label_vector(g, labels)
    if cliques is None:
        cliques = clique_array(g, k, threads=threads, max_k=max_k)
    counts = _tally(vec[cliques])
    logger.info(f"observed_distribution: k={k} cliques={len(cliques)} configurations={len(counts)}")
    return ConfigDistribution(k, dict(counts), len(cliques))


def shuffled_distribution(
    g: Graph,
    labels: LabelAssignment,
    k: int,
    reps: int = DEFAULT_REPS,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    max_k: int = MAX_CLIQUE_SIZE,
    cliques: np.ndarray | None = None,
) -> ConfigDistribution:
    """グラフ構造を固定し、ラベル列全体をランダムに並べ替えたときの分布（reps 回の合計）"""
    if reps < 1:
        raise ValidationError(f"reps_invalid: {reps} must be >= 1")
    vec = _label_vector(g, labels)
    if cliques is None:
        cliques = clique_array(g, k, threads=threads, max_k=max_k)

    def one_rep(rep: int) -> Counter:
        # 乱数列は (seed, rep) から作るので実行順に依存しない
        rng = np.random.default_rng([seed, rep])
        return _tally(rng.permutation(vec)[cliques])

    counts: Counter = Counter()
    for c in run_ordered(one_rep, list(range(reps)), threads):
        counts.update(c)
    logger.info(f"shuffled_distribution: k={k} reps={reps} seed={seed}")
    return ConfigDistribution(k, dict(counts), reps * len(cliques))


def homogeneity_report(
    obs: ConfigDistribution,
    null: ConfigDistribution,
    num_classes: int | None = None,
) -> list[ConfigRow]:
    if obs.k != null.k:
        raise ValidationError(f"k_mismatch: observed k={obs.k}, null k={null.k}")

    configs = set(obs.counts) | set(null.counts)
    if num_classes is not None:
        configs |= set(possible_configurations(obs.k, num_classes))

    rows: list[ConfigRow] = []
    for c in sorted(configs, reverse=True):
        p_obs = obs.probability(c)
        p_null = null.probability(c)
        if obs.counts.get(c, 0) == 0:
            ratio = None
        elif p_null == 0.0:
            ratio = math.inf
        else:
            ratio = p_obs / p_null
        rows.append(ConfigRow(c, obs.counts.get(c, 0), p_obs, p_null, ratio))
    return rows


def check_reference_band(k: int, rows: Sequence[ConfigRow]) -> bool | None:
    """最も均質な構成の比が既知の範囲に入るか（範囲がない k は None）。判定はログのみ"""
    band = REFERENCE_BANDS.get(k)
    top = next((r for r in rows if r.configuration.parts == (k,)), None)
    if band is None or top is None or top.ratio is None:
        return None
    inside = band[0] <= top.ratio <= band[1]
    logger.info(f"homogeneity: k={k} ratio[{k}]={top.ratio_text} band={band[0]:g}-{band[1]:g} inside={inside}")
    return inside


def write_report_csv(path: Path, rows: Sequence[ConfigRow]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["configuration", "observed_count", "observed_prob", "null_prob", "ratio"])
        for r in rows:
            w.writerow([str(r.configuration), r.observed_count, repr(r.observed_prob), repr(r.null_prob), r.ratio_text])


def write_report_json(path: Path, rows: Sequence[ConfigRow], metadata: dict) -> None:
    payload = {
        "metadata": metadata,
        "rows": [
            {
                "configuration": str(r.configuration),
                "observed_count": r.observed_count,
                "observed_prob": r.observed_prob,
                "null_prob": r.null_prob,
                "ratio": r.ratio_text,
            }
            for r in rows
        ],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
