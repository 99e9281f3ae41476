# src/hols/cli.py
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import TextIO

from .bench import run_bench, run_sweep_alpha, run_sweep_k
from .cliques import MAX_CLIQUE_SIZE, CliqueOccurrence, check_clique_size, clique_array, count_cliques, enumerate_cliques
from .errors import HolsError, NumericError
from .experiment import SWEEP_ALPHAS, graph_stats, load_experiment_config, with_overrides
from .graph import VertexIdMap, graph_digest, load_edge_list, load_labels, write_labels
from .homogeneity import (
    DEFAULT_REPS,
    DEFAULT_SEED,
    check_reference_band,
    homogeneity_report,
    observed_distribution,
    shuffled_distribution,
    write_report_csv,
    write_report_json,
)
from .logging_utils import LOGGER_NAME, setup_logging
from .participation import MotifPlan, build_operator
from .solver import SolverConfig, harden, label_propagation, prior_matrix, spread, write_scores_csv
from .validate import run_validate

logger = logging.getLogger(LOGGER_NAME)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_graph_args(p: argparse.ArgumentParser, labels: bool = True, labels_required: bool = True) -> None:
    p.add_argument("--graph", required=True, help="edge list: 'u v' or 'u v w' per line, '#' comments")
    if labels:
        p.add_argument("--labels", required=labels_required, help="label file: 'vertex class' per line")
        p.add_argument("--one-based", action="store_true", help="class ids in the label file start at 1")
        p.add_argument("--num-classes", type=int, default=None, help="number of classes C (default: max class id + 1)")
    p.add_argument("--weighted", action="store_true", help="use the third column as edge weight")
    p.add_argument("--max-k", type=int, default=MAX_CLIQUE_SIZE, help=f"clique size cap (default {MAX_CLIQUE_SIZE})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hols", description="higher-order label spreading toolkit")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (0 = all cores)")
    parser.add_argument("--log-file", default="logs/run.log", help="log file path (default logs/run.log)")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("spread", help="spread seed labels and write one 'vertex class' line per vertex")
    _add_graph_args(p)
    p.add_argument("--out", required=True, help="output label file")
    p.add_argument("--motifs", default="2", help="clique sizes, e.g. 2,3 (default 2)")
    p.add_argument("--alpha", default="1.0", help="motif weights aligned with --motifs, sum 1 (default 1.0)")
    p.add_argument("--eta", type=float, default=0.5, help="spreading weight η in (0, 1) (default 0.5)")
    p.add_argument("--epsilon", type=float, default=1e-6, help="convergence threshold on max |ΔX| (default 1e-6)")
    p.add_argument("--max-iters", type=int, default=500, help="iteration cap T (default 500)")
    p.add_argument("--method", choices=["spread", "lp"], default="spread", help="spread (default) or label propagation")
    p.add_argument("--scores", default=None, help="also write soft scores as CSV")
    p.add_argument("--result-json", default=None, help="also write convergence info as JSON")
    p.add_argument("--cache-dir", default=None, help="directory for the combined W' cache")

    p = sub.add_parser("analyze", help="k-clique label configurations vs label-shuffle null model")
    _add_graph_args(p)
    p.add_argument("--k", type=int, required=True, help="clique size")
    p.add_argument("--reps", type=int, default=DEFAULT_REPS, help=f"shuffle repetitions (default {DEFAULT_REPS})")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"shuffle RNG seed (default {DEFAULT_SEED})")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--json", default=None, help="also write the report as JSON")

    p = sub.add_parser("enumerate", help="count k-cliques (optionally dump them)")
    _add_graph_args(p, labels=False)
    p.add_argument("--k", type=int, required=True, help="clique size")
    p.add_argument("--dump", default=None, help="stream one clique per line: sorted external ids, then weight (single thread)")

    p = sub.add_parser("bench", help="run an experiment config and write report.json/report.txt/timing.json/cases.csv")
    p.add_argument("--config", required=True, help="experiment INI file")
    p.add_argument("--out", default="reports", help="output directory (default reports)")
    p.add_argument("--seed", type=int, default=None, help="override the config RNG seed")

    p = sub.add_parser("sweep-alpha", help="accuracy vs triangle weight α with gain over edges only")
    p.add_argument("--config", required=True, help="experiment INI file")
    p.add_argument("--out", default="reports/sweep_alpha.csv", help="output CSV (default reports/sweep_alpha.csv)")
    p.add_argument("--alphas", type=_float_list, default=list(SWEEP_ALPHAS), help="comma-separated α values in [0, 1)")
    p.add_argument("--seed", type=int, default=None, help="override the config RNG seed")

    p = sub.add_parser("sweep-k", help="best-weight accuracy vs maximum clique size")
    p.add_argument("--config", required=True, help="experiment INI file")
    p.add_argument("--out", default="reports/sweep_k.csv", help="output CSV (default reports/sweep_k.csv)")
    p.add_argument("--k-values", type=_int_list, default=[2, 3, 4, 5], help="comma-separated sizes (default 2,3,4,5)")
    p.add_argument("--seed", type=int, default=None, help="override the config RNG seed")

    p = sub.add_parser("validate", help="check graph/label files and write errors.csv")
    p.add_argument("--graph", required=True, help="edge list file")
    p.add_argument("--labels", default=None, help="label file")
    p.add_argument("--one-based", action="store_true", help="class ids in the label file start at 1")
    p.add_argument("--errors", default="reports/errors.csv", help="output CSV (default reports/errors.csv)")

    p = sub.add_parser("stats", help="print N, M, C, degeneracy and clique counts")
    _add_graph_args(p, labels_required=False)
    p.add_argument("--k-values", type=_int_list, default=[3, 4, 5], help="clique sizes to count (default 3,4,5)")

    return parser


def _load(args: argparse.Namespace, need_labels: bool = True):
    with Path(args.graph).open("rb") as f:
        g, idmap = load_edge_list(f, weighted=args.weighted)
    labels = None
    if need_labels and args.labels is not None:
        with Path(args.labels).open("rb") as f:
            labels = load_labels(f, idmap, num_classes=args.num_classes, one_based=args.one_based)
    return g, idmap, labels


def cmd_spread(args: argparse.Namespace) -> int:
    logger.info(f"spread: start graph={args.graph} labels={args.labels} motifs={args.motifs} alpha={args.alpha} method={args.method}")
    g, idmap, labels = _load(args)
    labels.require_each_class()
    plan = MotifPlan.parse(args.motifs, args.alpha)
    cfg = SolverConfig(eta=args.eta, epsilon=args.epsilon, max_iters=args.max_iters)

    cache_dir = Path(args.cache_dir) if args.cache_dir else None
    op = build_operator(g, plan, threads=args.threads, cache_dir=cache_dir, max_k=args.max_k)
    y = prior_matrix(labels, g.num_vertices)
    if args.method == "lp":
        result = label_propagation(op, y, labels.vertices(), cfg)
    else:
        result = spread(op, y, cfg)
    hard, ties = harden(result.soft)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("wb") as f:
        write_labels(hard, idmap, f, one_based=args.one_based)
    if args.scores:
        write_scores_csv(Path(args.scores), result.soft, idmap)
    if args.result_json:
        payload = result.to_dict() | {"plan": plan.label, "method": args.method, "ties": int(ties.sum())}
        path = Path(args.result_json)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    status = "converged" if result.converged else "not_converged"
    if not result.converged:
        logger.warning(f"spread: not converged after {result.iterations} iterations residual={result.final_residual:.3e}")
    logger.info(f"spread: finished status={status} iterations={result.iterations} out={out}")
    print(f"SPREAD DONE: {status} iterations={result.iterations} -> {out}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    logger.info(f"analyze: start graph={args.graph} labels={args.labels} k={args.k} reps={args.reps} seed={args.seed}")
    g, _, labels = _load(args)
    cliques = clique_array(g, args.k, threads=args.threads, max_k=args.max_k)
    obs = observed_distribution(g, labels, args.k, cliques=cliques)
    null = shuffled_distribution(g, labels, args.k, reps=args.reps, seed=args.seed, threads=args.threads, cliques=cliques)
    rows = homogeneity_report(obs, null, num_classes=labels.num_classes)
    check_reference_band(args.k, rows)

    write_report_csv(Path(args.out), rows)
    if args.json:
        meta = {"graph_digest": graph_digest(g), "k": args.k, "reps": args.reps, "seed": args.seed, "cliques": obs.total}
        write_report_json(Path(args.json), rows, meta)

    print(f"{'config':<12}  {'observed':<10}  ratio")
    for r in rows:
        print(f"{str(r.configuration):<12}  {r.observed_count:<10}  {r.ratio_text}")
    logger.info(f"analyze: finished rows={len(rows)} out={args.out}")
    return 0


class _DumpWriter:
    """クリークを見つけた順に1行ずつ書く"""

    def __init__(self, f: TextIO, idmap: VertexIdMap) -> None:
        self.f = f
        self.idmap = idmap

    def __call__(self, q: CliqueOccurrence) -> None:
        self.f.write(" ".join(str(self.idmap.to_external(v)) for v in q.vertices) + f" {q.weight!r}\n")


def cmd_enumerate(args: argparse.Namespace) -> int:
    logger.info(f"enumerate: start graph={args.graph} k={args.k}")
    g, idmap, _ = _load(args, need_labels=False)
    if args.dump is None:
        total = count_cliques(g, args.k, threads=args.threads, max_k=args.max_k)
    else:
        check_clique_size(args.k, args.max_k)
        # 出力順を固定するため書き出しは1スレッド
        if args.threads != 1:
            logger.info(f"enumerate: --dump ignores --threads={args.threads}")
        out = Path(args.dump)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8") as f:
            total = enumerate_cliques(g, args.k, _DumpWriter(f, idmap), threads=1, max_k=args.max_k)
    print(total)
    logger.info(f"enumerate: finished k={args.k} count={total}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    g, _, labels = _load(args)
    stats = graph_stats(g, labels, args.k_values, threads=args.threads, max_k=args.max_k)
    for key, value in stats.items():
        print(f"{key}={'-' if value is None else value}")
    return 0


def _experiment(args: argparse.Namespace):
    cfg = load_experiment_config(Path(args.config))
    return with_overrides(cfg, seed=args.seed, threads=args.threads if args.threads != 1 else None)


def cmd_bench(args: argparse.Namespace) -> int:
    logger.info(f"bench: start config={args.config} out={args.out}")
    return run_bench(_experiment(args), Path(args.out))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(Path(args.log_file))

    try:
        if args.cmd == "spread":
            return cmd_spread(args)
        if args.cmd == "analyze":
            return cmd_analyze(args)
        if args.cmd == "enumerate":
            return cmd_enumerate(args)
        if args.cmd == "stats":
            return cmd_stats(args)
        if args.cmd == "validate":
            labels = Path(args.labels) if args.labels else None
            return run_validate(Path(args.graph), labels, Path(args.errors), one_based=args.one_based)
        if args.cmd == "bench":
            return cmd_bench(args)
        if args.cmd == "sweep-alpha":
            return run_sweep_alpha(_experiment(args), Path(args.out), args.alphas)
        if args.cmd == "sweep-k":
            return run_sweep_k(_experiment(args), Path(args.out), args.k_values)
    except NumericError as e:
        logger.error(f"{args.cmd}: failed {e}")
        print(f"ERROR: {e}", file=sys.stderr)
        return 1
    except (HolsError, OSError) as e:
        logger.error(f"{args.cmd}: input_error {type(e).__name__}: {e}")
        print(f"ERROR: {e}", file=sys.stderr)
        return 2

    return 1


if __name__ == "__main__":
    raise SystemExit(main())
