# src/hols/bench.py
from __future__ import annotations

import csv
import json
import logging
import math
from pathlib import Path
from typing import Sequence

from .experiment import (
    SWEEP_ALPHAS,
    CaseRecord,
    ExperimentConfig,
    Report,
    SweepRow,
    run_experiment,
    sweep_alpha,
    sweep_max_clique,
)
from .logging_utils import LOGGER_NAME

logger = logging.getLogger(LOGGER_NAME)


def _fmt(x: float | None) -> str:
    return "-" if x is None else f"{x:.4f}"


def _fmt_gain(x: float | None) -> str:
    if x is None:
        return "-"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:+.4f}"


def format_table(report: Report, with_timing: bool = False) -> str:
    """手法ごとに run 別の正解率と平均を並べた表"""
    n_runs = len(report.runs)
    header = ["method", "plan"] + [f"run{i + 1}" for i in range(n_runs)] + ["mean"]
    if with_timing:
        header += ["enum_s", "build_s", "solve_s"]

    rows: list[list[str]] = []
    for m in report.methods:
        row = [m.name, m.plan] + [_fmt(a) for a in m.accuracies] + [_fmt(m.mean_accuracy)]
        if with_timing:
            t = report.timing.get(m.name, {})
            row += [f"{t.get('enumeration', 0.0):.3f}", f"{t.get('operator', 0.0):.3f}", f"{t.get('solve_mean', 0.0):.3f}"]
        rows.append(row)

    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in [header] + rows]

    for key, s in report.significance.items():
        mark = "significant" if s["significant"] else "not significant"
        lines.append(f"{key}: p<{report.metadata['significance']:g} in {s['runs_significant']}/{s['runs_ok']} runs ({mark})")
    for r in report.runs:
        if r.status != "ok":
            lines.append(f"run{r.index + 1}: FAILED {r.error}")
    return "\n".join(lines) + "\n"


def _export_cases(path: Path, cases: Sequence[CaseRecord]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["run", "reference", "method", "vertex", "truth", "reference_pred", "method_pred"])
        for c in cases:
            w.writerow([c.run, c.reference, c.method, c.vertex, c.truth, c.reference_pred, c.method_pred])


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_report(report: Report, out_dir: Path) -> None:
    # report.json / report.txt は seed が同じならバイト一致。時間は timing.json のみ
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "report.json", report.to_dict())
    (out_dir / "report.txt").write_text(format_table(report), encoding="utf-8")
    _write_json(out_dir / "timing.json", report.timing)
    _export_cases(out_dir / "cases.csv", report.cases)


def write_sweep_csv(path: Path, rows: Sequence[SweepRow], key_name: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    runs = max((len(r.accuracies) for r in rows), default=0)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow([key_name, "plan"] + [f"run{i + 1}" for i in range(runs)] + ["mean_accuracy", "gain_vs_ls", "relative_gain"])
        for r in rows:
            w.writerow(
                [r.key, r.plan]
                + ["" if a is None else repr(a) for a in r.accuracies]
                + ["" if r.mean_accuracy is None else repr(r.mean_accuracy)]
                + ["" if r.gain is None else repr(r.gain), "" if r.relative_gain is None else repr(r.relative_gain)]
            )


def run_bench(cfg: ExperimentConfig, out_dir: Path) -> int:
    logger.info(f"bench: start graph={cfg.graph_path} labels={cfg.labels_path} out_dir={out_dir}")
    report = run_experiment(cfg)
    write_report(report, out_dir)
    print(format_table(report, with_timing=True), end="")

    logger.info(f"bench: finished failed_runs={report.failed_runs} outputs={out_dir}")
    if report.failed_runs:
        print(f"BENCH DONE (with failures): failed_runs={report.failed_runs} -> {out_dir / 'report.json'}")
        return 1
    print(f"BENCH DONE: reports written to {out_dir}")
    return 0


def _print_sweep(rows: Sequence[SweepRow], key_name: str) -> None:
    print(f"{key_name:<6}  {'plan':<24}  {'mean':<6}  gain")
    for r in rows:
        key = f"{r.key:g}" if isinstance(r.key, float) else str(r.key)
        print(f"{key:<6}  {r.plan:<24}  {_fmt(r.mean_accuracy):<6}  {_fmt_gain(r.gain)}")


def _sweep_failed(rows: Sequence[SweepRow]) -> bool:
    return any(a is None for r in rows for a in r.accuracies)


def run_sweep_alpha(cfg: ExperimentConfig, out_csv: Path, alphas: Sequence[float] = SWEEP_ALPHAS) -> int:
    logger.info(f"sweep_alpha: start graph={cfg.graph_path} alphas={list(alphas)}")
    rows = sweep_alpha(cfg, alphas)
    write_sweep_csv(out_csv, rows, "alpha_k3")
    _print_sweep(rows, "alpha")
    logger.info(f"sweep_alpha: finished output={out_csv}")
    return 1 if _sweep_failed(rows) else 0


def run_sweep_k(cfg: ExperimentConfig, out_csv: Path, k_values: Sequence[int]) -> int:
    logger.info(f"sweep_max_clique: start graph={cfg.graph_path} k_values={list(k_values)}")
    rows = sweep_max_clique(cfg, k_values)
    write_sweep_csv(out_csv, rows, "max_k")
    _print_sweep(rows, "k")
    logger.info(f"sweep_max_clique: finished output={out_csv}")
    return 1 if _sweep_failed(rows) else 0
