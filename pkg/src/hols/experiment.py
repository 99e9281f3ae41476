# src/hols/experiment.py
from __future__ import annotations

import configparser
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import binom

from .cliques import MAX_CLIQUE_SIZE, core_ordering, count_cliques
from .errors import ConfigError, ValidationError
from .graph import Graph, LabelAssignment, VertexIdMap, graph_digest, load_edge_list, load_labels
from .logging_utils import LOGGER_NAME
from .participation import MotifPlan, ParticipationMatrix, PropagationOperator, build_participation, combine, plan_grid
from .solver import SolverConfig, harden, label_propagation, prior_matrix, spread

logger = logging.getLogger(LOGGER_NAME)

DEFAULT_RUNS = 5
DEFAULT_SIGNIFICANCE = 0.05
SWEEP_ALPHAS = tuple(i / 10 for i in range(10))
METHOD_KINDS = ("spread", "lp")


@dataclass(frozen=True)
class MethodSpec:
    name: str
    kind: str  # spread | lp
    plan: MotifPlan | None  # None なら tune_max_k までのグリッドで α を選ぶ
    tune_max_k: int = 3

    def __post_init__(self) -> None:
        if self.kind not in METHOD_KINDS:
            raise ConfigError(f"method_kind_invalid: {self.kind!r} for method {self.name!r} (expected spread|lp)")

    def candidate_plans(self) -> list[MotifPlan]:
        if self.plan is not None:
            return [self.plan]
        return plan_grid(self.tune_max_k, include_edges_only=False)


BUILTIN_METHODS: dict[str, MethodSpec] = {
    "ls": MethodSpec("ls", "spread", MotifPlan.edges_only()),
    "lp": MethodSpec("lp", "lp", MotifPlan.edges_only()),
    "hols": MethodSpec("hols", "spread", None, tune_max_k=3),
}


@dataclass(frozen=True)
class ExperimentConfig:
    graph_path: Path
    labels_path: Path
    num_seeds: int = 20
    runs: int = DEFAULT_RUNS
    seed: int = 0
    solver: SolverConfig = SolverConfig()
    methods: tuple[MethodSpec, ...] = (BUILTIN_METHODS["ls"], BUILTIN_METHODS["hols"])
    weighted: bool = False
    one_based: bool = False
    num_classes: int | None = None
    significance: float = DEFAULT_SIGNIFICANCE
    labeled: tuple[int, ...] | None = None  # 外部id。指定時は毎回この集合を使う
    threads: int = 1
    max_k: int = MAX_CLIQUE_SIZE

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ConfigError(f"runs_invalid: {self.runs} must be >= 1")
        if self.num_seeds < 1:
            raise ConfigError(f"num_seeds_invalid: {self.num_seeds} must be >= 1")
        if not self.methods:
            raise ConfigError("methods_empty: at least one method is required")
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ConfigError(f"methods_duplicate: {names}")
        if not (0.0 < self.significance < 1.0):
            raise ConfigError(f"significance_invalid: {self.significance}")


@dataclass(frozen=True, eq=False)
class Dataset:
    graph: Graph
    idmap: VertexIdMap
    truth: LabelAssignment


_EXPERIMENT_KEYS = {
    "graph", "labels", "num_seeds", "runs", "seed", "eta", "epsilon", "max_iters", "methods",
    "weighted", "one_based", "num_classes", "significance", "labeled", "threads", "max_k",
}
_METHOD_KEYS = {"kind", "motifs", "alpha"}


def _parse_method(name: str, section: configparser.SectionProxy) -> MethodSpec:
    unknown = set(section) - _METHOD_KEYS
    if unknown:
        raise ConfigError(f"key_unknown: {sorted(unknown)} in [method {name}]")
    base = BUILTIN_METHODS.get(name)
    kind = section.get("kind", base.kind if base else "spread")
    motifs = section.get("motifs", ",".join(map(str, base.plan.motifs)) if base and base.plan else "2,3")
    alpha = section.get("alpha", ",".join(map(repr, base.plan.alphas)) if base and base.plan else "tune")
    try:
        ks = [int(t) for t in motifs.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"motifs_invalid: {motifs!r} in [method {name}]") from None
    if alpha.strip() == "tune":
        if ks != list(range(2, max(ks) + 1)) or len(ks) < 2:
            raise ConfigError(f"tune_invalid: alpha=tune needs motifs 2..k, got {ks} in [method {name}]")
        return MethodSpec(name, kind, None, tune_max_k=max(ks))
    try:
        return MethodSpec(name, kind, MotifPlan.parse(motifs, alpha))
    except ValidationError as e:
        raise ConfigError(f"{e.reason} in [method {name}]") from None


def load_experiment_config(path: Path) -> ExperimentConfig:
    """INI 形式の実験設定を読む。相対パスは設定ファイルの場所から解決する"""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with path.open("r", encoding="utf-8") as f:
            parser.read_file(f)
    except configparser.Error as e:
        raise ConfigError(f"config_invalid: {e}") from None
    if not parser.has_section("experiment"):
        raise ConfigError("config_invalid: missing [experiment] section")

    exp = parser["experiment"]
    unknown = set(exp) - _EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"key_unknown: {sorted(unknown)} in [experiment]")
    for key in ("graph", "labels"):
        if key not in exp:
            raise ConfigError(f"key_missing: {key} in [experiment]")

    sections = {s.split(None, 1)[1].strip(): parser[s] for s in parser.sections() if s.startswith("method ")}
    stray = [s for s in parser.sections() if s != "experiment" and not s.startswith("method ")]
    if stray:
        raise ConfigError(f"section_unknown: {stray}")

    base = path.parent
    try:
        names = [t.strip() for t in exp.get("methods", "ls, hols").split(",") if t.strip()]
        methods = []
        for name in names:
            if name in sections:
                methods.append(_parse_method(name, sections[name]))
            elif name in BUILTIN_METHODS:
                methods.append(BUILTIN_METHODS[name])
            else:
                raise ConfigError(f"method_unknown: {name!r} (no [method {name}] section)")

        labeled = exp.get("labeled")
        solver = SolverConfig(
            eta=exp.getfloat("eta", 0.5),
            epsilon=exp.getfloat("epsilon", 1e-6),
            max_iters=exp.getint("max_iters", 500),
        )
        num_classes = exp.get("num_classes")
        return ExperimentConfig(
            graph_path=base / exp["graph"],
            labels_path=base / exp["labels"],
            num_seeds=exp.getint("num_seeds", 20),
            runs=exp.getint("runs", DEFAULT_RUNS),
            seed=exp.getint("seed", 0),
            solver=solver,
            methods=tuple(methods),
            weighted=exp.getboolean("weighted", False),
            one_based=exp.getboolean("one_based", False),
            num_classes=int(num_classes) if num_classes else None,
            significance=exp.getfloat("significance", DEFAULT_SIGNIFICANCE),
            labeled=tuple(int(t) for t in labeled.split()) if labeled else None,
            threads=exp.getint("threads", 1),
            max_k=exp.getint("max_k", MAX_CLIQUE_SIZE),
        )
    except ValidationError as e:
        raise ConfigError(f"config_invalid: {e}") from None
    except ValueError as e:
        raise ConfigError(f"config_invalid: {e}") from None


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    with cfg.graph_path.open("rb") as f:
        graph, idmap = load_edge_list(f, weighted=cfg.weighted)
    with cfg.labels_path.open("rb") as f:
        truth = load_labels(f, idmap, num_classes=cfg.num_classes, one_based=cfg.one_based)
    missing = truth.first_unlabeled(graph.num_vertices)
    if missing is not None:
        raise ValidationError(f"labels_partial: vertex {idmap.to_external(missing)} has no ground-truth label")
    return Dataset(graph, idmap, truth)


def _allocate_quotas(sizes: np.ndarray, n: int) -> np.ndarray:
    """最大剰余法で割り当て、各クラス最低1、クラスの人数を上限とする"""
    c = len(sizes)
    exact = n * sizes / sizes.sum()
    quotas = np.floor(exact).astype(np.int64)
    remainder = exact - quotas
    for k in sorted(range(c), key=lambda k: (-remainder[k], k))[: n - int(quotas.sum())]:
        quotas[k] += 1

    for k in range(c):
        if quotas[k] == 0:
            donor = min((j for j in range(c) if quotas[j] > 1), key=lambda j: (-quotas[j], j))
            quotas[donor] -= 1
            quotas[k] = 1

    # 人数を超えた分は余裕のあるクラスへ回す
    excess = int(np.maximum(quotas - sizes, 0).sum())
    quotas = np.minimum(quotas, sizes)
    for _ in range(excess):
        spare = [j for j in range(c) if quotas[j] < sizes[j]]
        j = min(spare, key=lambda j: (-(exact[j] - quotas[j]), j))
        quotas[j] += 1
    return quotas


def stratified_sample(labels: LabelAssignment, n: int, seed: int | Sequence[int]) -> np.ndarray:
    """クラスごとの割当て数で非復元抽出したラベル付き頂点（昇順）"""
    sizes = labels.class_sizes()
    c = labels.num_classes
    empty = [k for k in range(c) if sizes[k] == 0]
    if empty:
        raise ValidationError(f"class_empty: classes {empty} have no members")
    if n < c:
        raise ValidationError(f"budget_too_small: {n} labels for {c} classes")
    if n > int(sizes.sum()):
        raise ValidationError(f"budget_infeasible: {n} labels for {int(sizes.sum())} vertices")

    quotas = _allocate_quotas(sizes, n)
    rng = np.random.default_rng(seed)
    members: dict[int, list[int]] = {k: [] for k in range(c)}
    for v in sorted(labels.labels):
        members[labels.labels[v]].append(v)
    chosen = [rng.choice(np.array(members[k], dtype=np.int64), size=int(quotas[k]), replace=False) for k in range(c)]
    return np.sort(np.concatenate(chosen))


def _evaluation_vertices(truth: LabelAssignment, exclude: Sequence[int] | np.ndarray) -> np.ndarray:
    excluded = set(int(v) for v in exclude)
    return np.array([v for v in sorted(truth.labels) if v not in excluded], dtype=np.int64)


def correct_flags(pred: LabelAssignment, truth: LabelAssignment, vertices: np.ndarray) -> np.ndarray:
    try:
        return np.array([pred.labels[int(v)] == truth.labels[int(v)] for v in vertices], dtype=bool)
    except KeyError as e:
        raise ValidationError(f"prediction_missing: vertex {e.args[0]}") from None


def accuracy(pred: LabelAssignment, truth: LabelAssignment, exclude: Sequence[int] | np.ndarray) -> float:
    """ラベル付き頂点を除いた正解率"""
    vertices = _evaluation_vertices(truth, exclude)
    if len(vertices) == 0:
        raise ValidationError("evaluation_empty: every vertex is excluded")
    return float(correct_flags(pred, truth, vertices).mean())


def micro_sign_test(correct_a: Sequence[bool] | np.ndarray, correct_b: Sequence[bool] | np.ndarray) -> float:
    """両側 micro sign test。片方だけ正解の頂点数 n、A だけ正解の数 s"""
    a = np.asarray(correct_a, dtype=bool)
    b = np.asarray(correct_b, dtype=bool)
    if a.shape != b.shape:
        raise ValidationError(f"length_mismatch: {a.shape} vs {b.shape}")
    n = int(np.sum(a != b))
    if n == 0:
        return 1.0
    s = int(np.sum(a & ~b))
    m = max(s, n - s)
    return min(1.0, float(2.0 * binom.sf(m - 1, n, 0.5)))


class _Workbench:
    """参加行列・作用素をキャッシュし、フェーズごとの時間を記録する（I/O は含めない）"""

    def __init__(self, graph: Graph, solver: SolverConfig, threads: int, max_k: int) -> None:
        self.graph = graph
        self.solver = solver
        self.threads = threads
        self.max_k = max_k
        self._parts: dict[int, ParticipationMatrix] = {}
        self._ops: dict[MotifPlan, PropagationOperator] = {}
        self.enumeration_seconds: dict[int, float] = {}
        self.operator_seconds: dict[MotifPlan, float] = {}

    def part(self, k: int) -> ParticipationMatrix:
        if k not in self._parts:
            t0 = time.perf_counter()
            self._parts[k] = build_participation(self.graph, k, threads=self.threads, max_k=self.max_k)
            self.enumeration_seconds[k] = time.perf_counter() - t0
        return self._parts[k]

    def operator(self, plan: MotifPlan) -> PropagationOperator:
        if plan not in self._ops:
            parts = [self.part(k) for k in plan.motifs]
            t0 = time.perf_counter()
            self._ops[plan] = combine(parts, plan)
            self.operator_seconds[plan] = time.perf_counter() - t0
        return self._ops[plan]

    def predict(self, kind: str, plan: MotifPlan, prior: np.ndarray, labeled: np.ndarray) -> tuple[np.ndarray, float, bool]:
        op = self.operator(plan)
        t0 = time.perf_counter()
        if kind == "lp":
            result = label_propagation(op, prior, labeled, self.solver)
        else:
            result = spread(op, prior, self.solver)
        elapsed = time.perf_counter() - t0
        hard, _ = harden(result.soft)
        return hard.to_array(self.graph.num_vertices), elapsed, result.converged


@dataclass
class _RunState:
    index: int
    labeled: np.ndarray | None = None
    vertices: np.ndarray | None = None  # 評価対象（ラベルなし頂点）
    preds: dict[tuple[str, MotifPlan], np.ndarray] = field(default_factory=dict)
    flags: dict[tuple[str, MotifPlan], np.ndarray] = field(default_factory=dict)
    converged: dict[tuple[str, MotifPlan], bool] = field(default_factory=dict)
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def _labeled_for_run(cfg: ExperimentConfig, data: Dataset, run: int) -> np.ndarray:
    if cfg.labeled is not None:
        return np.array(sorted(data.idmap.to_internal(v) for v in cfg.labeled), dtype=np.int64)
    return stratified_sample(data.truth, cfg.num_seeds, [cfg.seed, run])


def _run_grid(
    cfg: ExperimentConfig,
    data: Dataset,
    bench: _Workbench,
    entries: Sequence[tuple[str, str, MotifPlan]],
) -> tuple[list[_RunState], dict[tuple[str, MotifPlan], list[float]]]:
    """各 run で同じラベル集合を使い、すべての (手法, プラン) を解く"""
    n = data.graph.num_vertices
    truth_arr = data.truth.to_array(n)
    solve_seconds: dict[tuple[str, MotifPlan], list[float]] = {(name, plan): [] for name, _, plan in entries}
    states: list[_RunState] = []

    for r in range(cfg.runs):
        state = _RunState(r)
        try:
            labeled = _labeled_for_run(cfg, data, r)
            state.labeled = labeled
            state.vertices = _evaluation_vertices(data.truth, labeled)
            if len(state.vertices) == 0:
                raise ValidationError("evaluation_empty: every vertex is labeled")
            prior = prior_matrix(data.truth.restrict(labeled), n)
            for name, kind, plan in entries:
                pred, secs, converged = bench.predict(kind, plan, prior, labeled)
                state.preds[(name, plan)] = pred
                state.flags[(name, plan)] = pred[state.vertices] == truth_arr[state.vertices]
                state.converged[(name, plan)] = converged
                solve_seconds[(name, plan)].append(secs)
            logger.info(f"experiment: run={r} labeled={len(labeled)} status=ok")
        except Exception as e:
            state.error = f"{type(e).__name__}: {e}"
            logger.exception(f"experiment: run={r} status=failed")
        states.append(state)
    return states, solve_seconds


def _mean_accuracy(states: Sequence[_RunState], key: tuple[str, MotifPlan]) -> float | None:
    accs = [float(s.flags[key].mean()) for s in states if s.ok]
    return float(np.mean(accs)) if accs else None


@dataclass
class MethodSummary:
    name: str
    kind: str
    plan: str
    accuracies: list[float | None]
    mean_accuracy: float | None
    grid: list[dict] = field(default_factory=list)


@dataclass
class RunRecord:
    index: int
    status: str
    error: str
    labeled_count: int
    accuracies: dict[str, float]
    converged: dict[str, bool]
    p_values: dict[str, float]


@dataclass
class CaseRecord:
    run: int
    reference: str
    method: str
    vertex: int  # 外部id
    truth: int
    reference_pred: int
    method_pred: int


@dataclass
class Report:
    metadata: dict
    methods: list[MethodSummary]
    runs: list[RunRecord]
    significance: dict[str, dict]
    cases: list[CaseRecord]
    timing: dict[str, dict[str, float]]

    @property
    def failed_runs(self) -> int:
        return sum(1 for r in self.runs if r.status != "ok")

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "metadata": self.metadata,
            "methods": [vars(m) for m in self.methods],
            "runs": [vars(r) for r in self.runs],
            "significance": self.significance,
            "cases": len(self.cases),
        }
        if include_timing:
            out["timing"] = self.timing
        return out


def _pair_key(a: str, b: str) -> str:
    return f"{a} vs {b}"


def _metadata(cfg: ExperimentConfig, data: Dataset) -> dict:
    return {
        "graph_digest": graph_digest(data.graph),
        "num_vertices": data.graph.num_vertices,
        "num_edges": data.graph.num_edges,
        "num_classes": data.truth.num_classes,
        "num_seeds": cfg.num_seeds if cfg.labeled is None else len(cfg.labeled),
        "runs": cfg.runs,
        "seed": cfg.seed,
        "eta": cfg.solver.eta,
        "epsilon": cfg.solver.epsilon,
        "max_iters": cfg.solver.max_iters,
        "significance": cfg.significance,
    }


def run_experiment(cfg: ExperimentConfig, data: Dataset | None = None) -> Report:
    if data is None:
        data = load_dataset(cfg)
    if cfg.labeled is None and cfg.num_seeds < data.truth.num_classes:
        raise ConfigError(f"num_seeds_invalid: {cfg.num_seeds} < C={data.truth.num_classes}")
    logger.info(f"experiment: start N={data.graph.num_vertices} M={data.graph.num_edges} runs={cfg.runs} methods={[m.name for m in cfg.methods]}")

    bench = _Workbench(data.graph, cfg.solver, cfg.threads, cfg.max_k)
    entries = [(m.name, m.kind, plan) for m in cfg.methods for plan in m.candidate_plans()]
    states, solve_seconds = _run_grid(cfg, data, bench, entries)

    # グリッド全体を残し、平均正解率が最大のプランを採用（同率ならグリッド順で先）
    chosen: dict[str, MotifPlan] = {}
    summaries: list[MethodSummary] = []
    for m in cfg.methods:
        plans = m.candidate_plans()
        means = [_mean_accuracy(states, (m.name, p)) for p in plans]
        best = max(range(len(plans)), key=lambda i: (means[i] if means[i] is not None else -1.0, -i))
        plan = plans[best]
        chosen[m.name] = plan
        grid = [{"plan": p.label, "mean_accuracy": a} for p, a in zip(plans, means)] if len(plans) > 1 else []
        accs = [float(s.flags[(m.name, plan)].mean()) if s.ok else None for s in states]
        summaries.append(MethodSummary(m.name, m.kind, plan.label, accs, means[best], grid))

    names = [m.name for m in cfg.methods]
    pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
    runs: list[RunRecord] = []
    for s in states:
        if not s.ok:
            runs.append(RunRecord(s.index, "failed", s.error, 0 if s.labeled is None else len(s.labeled), {}, {}, {}))
            continue
        accs = {name: float(s.flags[(name, chosen[name])].mean()) for name in names}
        conv = {name: s.converged[(name, chosen[name])] for name in names}
        pvals = {_pair_key(a, b): micro_sign_test(s.flags[(a, chosen[a])], s.flags[(b, chosen[b])]) for a, b in pairs}
        runs.append(RunRecord(s.index, "ok", "", len(s.labeled), accs, conv, pvals))

    ok_runs = [r for r in runs if r.status == "ok"]
    significance: dict[str, dict] = {}
    for a, b in pairs:
        key = _pair_key(a, b)
        hits = sum(1 for r in ok_runs if r.p_values[key] < cfg.significance)
        significance[key] = {"runs_significant": hits, "runs_ok": len(ok_runs), "significant": hits * 2 > len(ok_runs)}

    cases: list[CaseRecord] = []
    ref = names[0]
    for s in states:
        if not s.ok:
            continue
        ref_flags = s.flags[(ref, chosen[ref])]
        ref_pred = s.preds[(ref, chosen[ref])]
        for other in names[1:]:
            better = ~ref_flags & s.flags[(other, chosen[other])]
            other_pred = s.preds[(other, chosen[other])]
            for v in s.vertices[better]:
                cases.append(CaseRecord(s.index, ref, other, data.idmap.to_external(int(v)), data.truth.labels[int(v)], int(ref_pred[v]), int(other_pred[v])))

    timing: dict[str, dict[str, float]] = {}
    for m in cfg.methods:
        plan = chosen[m.name]
        secs = solve_seconds[(m.name, plan)]
        timing[m.name] = {
            "enumeration": sum(bench.enumeration_seconds.get(k, 0.0) for k in plan.motifs if k > 2),
            "operator": bench.operator_seconds.get(plan, 0.0),
            "solve_mean": float(np.mean(secs)) if secs else 0.0,
        }

    report = Report(_metadata(cfg, data), summaries, runs, significance, cases, timing)
    logger.info(f"experiment: finished failed_runs={report.failed_runs}")
    return report


@dataclass
class SweepRow:
    key: float | int  # α_{K3} または最大クリークサイズ k
    plan: str
    accuracies: list[float | None]
    mean_accuracy: float | None
    gain: float | None  # 基準（辺のみ）との差
    relative_gain: float | None


def _gain(acc: float | None, base: float | None) -> tuple[float | None, float | None]:
    if acc is None or base is None:
        return None, None
    diff = acc - base
    if base == 0.0:
        return diff, (0.0 if diff == 0.0 else math.copysign(math.inf, diff))
    return diff, diff / base


def _sweep_entries(plans: Sequence[MotifPlan]) -> list[tuple[str, str, MotifPlan]]:
    unique = list(dict.fromkeys(plans))
    return [(plan.label, "spread", plan) for plan in unique]


def sweep_alpha(cfg: ExperimentConfig, alphas: Sequence[float] = SWEEP_ALPHAS, data: Dataset | None = None) -> list[SweepRow]:
    """{K2: 1-α, K3: α} で α を動かし、辺のみ（LS）との差を出す"""
    for a in alphas:
        if not (0.0 <= a < 1.0):
            raise ValidationError(f"alpha_invalid: {a} not in [0, 1)")
    if data is None:
        data = load_dataset(cfg)
    baseline = MotifPlan.edges_only()
    plans = [MotifPlan.triangle_weighted(a) for a in alphas]
    bench = _Workbench(data.graph, cfg.solver, cfg.threads, cfg.max_k)
    states, _ = _run_grid(cfg, data, bench, _sweep_entries([baseline] + plans))

    base_acc = _mean_accuracy(states, (baseline.label, baseline))
    rows = []
    for a, plan in zip(alphas, plans):
        key = (plan.label, plan)
        mean = _mean_accuracy(states, key)
        gain, rel = _gain(mean, base_acc)
        accs = [float(s.flags[key].mean()) if s.ok else None for s in states]
        rows.append(SweepRow(a, plan.label, accs, mean, gain, rel))
        logger.info(f"sweep_alpha: alpha={a:g} accuracy={mean} gain={gain}")
    return rows


def sweep_max_clique(cfg: ExperimentConfig, k_values: Sequence[int], data: Dataset | None = None) -> list[SweepRow]:
    """K = {K2..Kk} ごとにグリッド上の最良 α の正解率を出し、k=2 との差を出す"""
    for k in k_values:
        if not (2 <= k <= cfg.max_k):
            raise ValidationError(f"clique_size_invalid: k={k} not in 2..{cfg.max_k}")
    if data is None:
        data = load_dataset(cfg)
    grids = {k: plan_grid(k, include_edges_only=True) for k in k_values}
    baseline = MotifPlan.edges_only()
    bench = _Workbench(data.graph, cfg.solver, cfg.threads, cfg.max_k)
    states, _ = _run_grid(cfg, data, bench, _sweep_entries([baseline] + [p for k in k_values for p in grids[k]]))

    base_acc = _mean_accuracy(states, (baseline.label, baseline))
    rows = []
    for k in k_values:
        means = [_mean_accuracy(states, (p.label, p)) for p in grids[k]]
        best = max(range(len(means)), key=lambda i: (means[i] if means[i] is not None else -1.0, -i))
        plan = grids[k][best]
        gain, rel = _gain(means[best], base_acc)
        accs = [float(s.flags[(plan.label, plan)].mean()) if s.ok else None for s in states]
        rows.append(SweepRow(k, plan.label, accs, means[best], gain, rel))
        logger.info(f"sweep_max_clique: k={k} best={plan.label} accuracy={means[best]} gain={gain}")
    return rows


def graph_stats(g: Graph, labels: LabelAssignment | None, k_values: Sequence[int], threads: int = 1, max_k: int = MAX_CLIQUE_SIZE) -> dict:
    """データセット表の形（N, M, C）に縮退度と k-クリーク数を加えたもの"""
    stats = {
        "num_vertices": g.num_vertices,
        "num_edges": g.num_edges,
        "num_classes": labels.num_classes if labels is not None else None,
        "labeled": len(labels) if labels is not None else None,
        "degeneracy": core_ordering(g).degeneracy,
    }
    for k in k_values:
        stats[f"cliques_k{k}"] = count_cliques(g, k, threads=threads, max_k=max_k)
    return stats


def with_overrides(cfg: ExperimentConfig, seed: int | None = None, threads: int | None = None) -> ExperimentConfig:
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if threads is not None:
        changes["threads"] = threads
    return replace(cfg, **changes) if changes else cfg
