# tests/test_datasets.py
# 実データでの確認。HOLS_DATA_DIR に <name>.edges / <name>.labels を置いたときだけ実行する
import os
from functools import cache
from pathlib import Path

import pytest

from src.hols.cliques import count_cliques
from src.hols.experiment import BUILTIN_METHODS, SWEEP_ALPHAS, Dataset, ExperimentConfig, load_dataset, run_experiment, sweep_alpha
from src.hols.homogeneity import (
    check_reference_band,
    homogeneity_report,
    observed_distribution,
    possible_configurations,
    shuffled_distribution,
)

DATA_DIR = os.environ.get("HOLS_DATA_DIR")

pytestmark = pytest.mark.skipif(not DATA_DIR, reason="HOLS_DATA_DIR is not set")

LS_VS_HOLS = (BUILTIN_METHODS["ls"], BUILTIN_METHODS["hols"])


def _config(name: str, **kw) -> ExperimentConfig:
    base = Path(DATA_DIR or ".")
    if not (base / f"{name}.edges").exists():
        pytest.skip(f"{name} not found in {base}")
    return ExperimentConfig(graph_path=base / f"{name}.edges", labels_path=base / f"{name}.labels", **kw)


@cache
def _dataset(name: str) -> Dataset:
    return load_dataset(_config(name))


@pytest.mark.parametrize("name", ["polblogs", "cora"])
@pytest.mark.parametrize("k", [2, 3, 4])
def test_clique_labels_are_more_homogeneous_than_shuffled(name: str, k: int):
    data = _dataset(name)
    c = data.truth.num_classes
    obs = observed_distribution(data.graph, data.truth, k)
    null = shuffled_distribution(data.graph, data.truth, k, reps=20, seed=0, threads=0)

    rows = {str(r.configuration): r for r in homogeneity_report(obs, null, num_classes=c)}

    # 全員同じクラスの構成は偶然より多い
    assert rows[str(k)].ratio > 1.0
    if k == 3:
        check_reference_band(3, list(rows.values()))
    # 最もばらけた構成は偶然より少ない（観測0も含む）
    if k in (2, 3):
        least = rows[str(possible_configurations(k, c)[-1])]
        assert least.observed_prob < least.null_prob


def test_cora_enumeration_is_repeatable():
    data = _dataset("cora")
    assert count_cliques(data.graph, 3) == count_cliques(data.graph, 3, threads=0)


def test_polblogs_ls_vs_hols():
    cfg = _config("polblogs", num_seeds=20, runs=5, methods=LS_VS_HOLS)
    data = _dataset("polblogs")

    report = run_experiment(cfg, data)

    ls, hols = report.methods
    assert report.failed_runs == 0
    assert ls.mean_accuracy == pytest.approx(0.9361, abs=0.02)
    assert hols.mean_accuracy >= ls.mean_accuracy - 0.005

    # α_{K3} > 0 の中で最良のものは辺だけより悪くない
    rows = sweep_alpha(cfg, [a for a in SWEEP_ALPHAS if a > 0], data=data)
    assert max(r.gain for r in rows) >= 0.0


def test_cora_ls_vs_hols():
    cfg = _config("cora", num_seeds=100, runs=5, methods=LS_VS_HOLS)

    report = run_experiment(cfg, _dataset("cora"))

    ls, hols = report.methods
    assert report.failed_runs == 0
    assert ls.mean_accuracy == pytest.approx(0.4921, abs=0.03)
    assert hols.mean_accuracy >= ls.mean_accuracy
