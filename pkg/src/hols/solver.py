# src/hols/solver.py
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.linalg

from .errors import NumericError, RefusalError, ValidationError
from .graph import LabelAssignment, VertexIdMap
from .logging_utils import LOGGER_NAME
from .participation import PropagationOperator, operator_apply

logger = logging.getLogger(LOGGER_NAME)

DENSE_CAP = 2000

# N x C のスコア行列（X: 推定, Y: 事前）
SoftLabels = np.ndarray


@dataclass(frozen=True)
class SolverConfig:
    eta: float = 0.5
    epsilon: float = 1e-6
    max_iters: int = 500

    def __post_init__(self) -> None:
        if not (0.0 < self.eta < 1.0):
            raise ValidationError(f"eta_invalid: {self.eta} not in (0, 1)")
        if not (self.epsilon > 0.0):
            raise ValidationError(f"epsilon_invalid: {self.epsilon} must be > 0")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters_invalid: {self.max_iters} must be >= 1")


@dataclass
class SpreadResult:
    soft: SoftLabels
    iterations: int
    final_residual: float
    converged: bool
    residuals: list[float] = field(default_factory=list)

    def to_dict(self, include_scores: bool = False) -> dict:
        out = {
            "converged": self.converged,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
        }
        if include_scores:
            out["scores"] = self.soft.tolist()
        return out


def prior_matrix(labels: LabelAssignment, n: int) -> SoftLabels:
    y = np.zeros((n, labels.num_classes), dtype=np.float64)
    for v, c in labels.labels.items():
        y[v, c] = 1.0
    return y


def _check_prior(op: PropagationOperator, y: SoftLabels) -> SoftLabels:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[0] != op.num_vertices:
        raise ValidationError(f"shape_mismatch: Y has shape {y.shape}, operator has N={op.num_vertices}")
    return y


def _residual(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.max(np.abs(new - old))) if new.size else 0.0


def _iterate(step, x: np.ndarray, cfg: SolverConfig, name: str) -> SpreadResult:
    residuals: list[float] = []
    residual = float("inf")
    for t in range(1, cfg.max_iters + 1):
        x_new = step(x)
        if not np.all(np.isfinite(x_new)):
            raise NumericError(f"non_finite: {name} produced NaN/Inf at iteration {t}")
        residual = _residual(x_new, x)
        residuals.append(residual)
        x = x_new
        if residual < cfg.epsilon:
            logger.info(f"{name}: converged iterations={t} residual={residual:.3e}")
            return SpreadResult(x, t, residual, True, residuals)

    logger.warning(f"{name}: not converged iterations={cfg.max_iters} residual={residual:.3e} epsilon={cfg.epsilon:g}")
    return SpreadResult(x, cfg.max_iters, residual, False, residuals)


def spread(
    op: PropagationOperator,
    y: SoftLabels,
    cfg: SolverConfig = SolverConfig(),
    x0: SoftLabels | None = None,
) -> SpreadResult:
    """X <- η S X + (1-η) Y を収束まで繰り返す（行の正規化はしない）"""
    y = _check_prior(op, y)
    x = y.copy() if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != y.shape:
        raise ValidationError(f"shape_mismatch: X0 has shape {x.shape}, Y has {y.shape}")

    eta = cfg.eta
    base = (1.0 - eta) * y
    if op.operator.count_nonzero() == 0:
        # S = 0 なら1回の更新で不動点 (1-η) Y
        residual = _residual(base, x)
        logger.info(f"spread: converged iterations=1 residual={residual:.3e} (zero operator)")
        return SpreadResult(base, 1, residual, True, [residual])
    return _iterate(lambda x: eta * operator_apply(op, x) + base, x, cfg, "spread")


def closed_form(op: PropagationOperator, y: SoftLabels, eta: float, dense_cap: int = DENSE_CAP) -> SoftLabels:
    """(I - ηS) X = (1-η) Y を密行列で解く（小規模の検証用）"""
    y = _check_prior(op, y)
    n = op.num_vertices
    if n > dense_cap:
        raise RefusalError(f"graph_too_large: N={n} > dense cap {dense_cap}")
    if not (0.0 < eta < 1.0):
        raise ValidationError(f"eta_invalid: {eta} not in (0, 1)")
    if n == 0:
        return np.zeros_like(y)

    a = np.eye(n) - eta * op.operator.toarray()
    lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    if np.any(np.diag(lu) == 0.0):
        raise NumericError("singular_system: I - ηS is singular")
    x = scipy.linalg.lu_solve((lu, piv), (1.0 - eta) * y)
    if not np.all(np.isfinite(x)):
        raise NumericError("non_finite: closed-form solution contains NaN/Inf")
    return x


def label_propagation(
    op: PropagationOperator,
    y: SoftLabels,
    labeled: Iterable[int],
    cfg: SolverConfig = SolverConfig(),
) -> SpreadResult:
    """X <- D'^{-1} W' X の後、ラベル付き行を Y に戻す（調和関数ベースライン）"""
    y = _check_prior(op, y)
    idx = np.array(sorted(set(int(v) for v in labeled)), dtype=np.int64)
    if len(idx) == 0:
        raise ValidationError("labeled_empty: label propagation needs at least one labeled vertex")
    if idx[0] < 0 or idx[-1] >= op.num_vertices:
        raise ValidationError(f"vertex_out_of_range: labeled ids must be in 0..{op.num_vertices - 1}")

    p = op.random_walk()
    clamp = y[idx]

    def step(x: np.ndarray) -> np.ndarray:
        x_new = np.asarray(p @ x)
        x_new[idx] = clamp
        return x_new

    return _iterate(step, y.copy(), cfg, "label_propagation")


def harden(x: SoftLabels, labeled_overrides: LabelAssignment | None = None) -> tuple[LabelAssignment, np.ndarray]:
    """
    行ごとの argmax でラベルを確定する

    Returns:
        (LabelAssignment, ties): ties[i] は最大値が複数ある（全0を含む）行。
        その場合は最小のクラス番号を採る。
    """
    x = np.asarray(x, dtype=np.float64)
    n, c = x.shape
    if c == 0:
        return LabelAssignment(0, {}), np.ones(n, dtype=bool)
    best = np.argmax(x, axis=1)
    ties = np.sum(x == x.max(axis=1, keepdims=True), axis=1) > 1

    labels = {v: int(best[v]) for v in range(n)}
    if labeled_overrides is not None:
        for v, cls in labeled_overrides.labels.items():
            labels[v] = cls
            ties[v] = False
    if ties.any():
        logger.info(f"harden: ties={int(ties.sum())} resolved to lowest class")
    return LabelAssignment(c, labels), ties


def write_scores_csv(path: Path, x: SoftLabels, idmap: VertexIdMap) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["vertex"] + [f"class_{c}" for c in range(x.shape[1])])
        for v in range(x.shape[0]):
            w.writerow([idmap.to_external(v)] + [repr(float(s)) for s in x[v]])
