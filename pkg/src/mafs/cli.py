"""Command-line front end.

Exit codes: 0 success, 2 usage error, 1 runtime error. BLAS pools are
pinned to one thread before numpy loads so ranking files are byte-stable
regardless of machine parallelism; worker concurrency is governed by
MAFS_THREADS instead.
"""

from __future__ import annotations

import os

for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse
import json
import math
import sys

import numpy as np

from . import io as fio
from .attention import MAFSConfig, model_to_dict
from .baselines import BaselineConfig
from .data import as_target
from .errors import MafsError
from .filters import DEFAULT_FILTERS, compute_priors
from .metrics import knn_evaluate, mlp_evaluate
from .pipeline import (
    METHOD_CHOICES,
    run_baseline,
    run_bench,
    score_coverage,
    select_features,
)
from .rng import derive_rng
from .search import random_search, simulation_search_space
from .simulate import FORMS, make_simulation_spec, simulate_dataset


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mafs",
        description=(
            "Filter-guided multi-head attention feature selection with "
            "tree-ensemble re-ranking, plus benchmark generation and scoring. "
            "Downstream evaluators: KNN and a small MLP (no SVM)."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate benchmark data and ground truth")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--d", type=_positive_int, required=True)
    p.add_argument("--feature-type", default="continuous",
                   choices=("continuous", "categorical", "combined"))
    p.add_argument("--outcome-type", default="continuous", choices=("continuous", "binary"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument(
        "--beta",
        help=(
            "7 comma-separated effect sizes "
            "(linear,cosine,log,cubic,exp,combined,interaction); defaults to "
            "the built-in table for n in {500, 2000}"
        ),
    )
    p.add_argument(
        "--beta-categorical",
        help="effect sizes for the categorical component of combined features",
    )

    p = sub.add_parser("filter", help="emit normalized filter priors")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--task", default="auto")
    p.add_argument("--methods", default=",".join(DEFAULT_FILTERS))
    p.add_argument("--out", required=True)

    p = sub.add_parser("select", help="full selection pipeline -> ranking file")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--task", default="auto")
    p.add_argument("--config", help="MAFS config JSON")
    p.add_argument("--ell", type=_positive_int)
    p.add_argument("--ratio", type=float, help="selection ratio in percent")
    p.add_argument("--k", type=_positive_int, help="per-head top-K")
    p.add_argument("--model-out", help="write the trained model audit JSON here")

    p = sub.add_parser("baseline", help="train a baseline -> ranking file")
    p.add_argument("--method", required=True,
                   choices=("cancelout", "earfs", "earfs_filter_init"))
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--task", default="auto")
    p.add_argument("--config", help="baseline config JSON")
    p.add_argument("--ell", type=_positive_int)
    p.add_argument("--ratio", type=float)

    p = sub.add_parser("score", help="coverage of a ranking against ground truth")
    p.add_argument("--ranking", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--top", type=_positive_int, help="score only the first N rows")
    p.add_argument("--ratio", type=float, help="selection ratio in percent (needs --d)")
    p.add_argument("--d", type=_positive_int, help="feature count for --ratio")
    p.add_argument("--out", help="also write the report JSON here")

    p = sub.add_parser("evaluate", help="downstream AUROC / Pearson r of selected features")
    p.add_argument("--ranking", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--top", type=_positive_int, required=True)
    p.add_argument("--evaluator", default="knn", choices=("knn", "mlp"))
    p.add_argument("--k", type=_positive_int, default=5, help="KNN neighbor count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--task", default="auto")
    p.add_argument("--out", help="also write the metric JSON here")

    p = sub.add_parser("tune", help="seeded random hyperparameter search")
    p.add_argument("--method", required=True, choices=METHOD_CHOICES)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--budget", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--task", default="auto")
    p.add_argument("--max-epochs", type=_positive_int, default=100)
    p.add_argument("--out", help="write best config + trial log JSON here")

    p = sub.add_parser("bench", help="replicated simulate/select/score study")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--d", type=_positive_int, required=True)
    p.add_argument("--feature-type", default="continuous",
                   choices=("continuous", "categorical", "combined"))
    p.add_argument("--outcome-type", default="continuous", choices=("continuous", "binary"))
    p.add_argument("--methods", default="mafs,cancelout,earfs,earfs_filter_init")
    p.add_argument("--replications", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--ratios", default="0.5,1,1.5,2")
    p.add_argument("--mafs-config", help="MAFS config JSON")
    p.add_argument("--baseline-config", help="baseline config JSON")
    p.add_argument("--beta", help="override effect sizes (7 comma-separated values)")
    p.add_argument("--beta-categorical",
                   help="categorical-component effect sizes for combined features")
    p.add_argument("--out-dir", required=True)
    return parser


def _load_xy(args):
    X = fio.read_matrix_csv(args.x)
    y_values = fio.read_target_csv(args.y)
    target = as_target(y_values, getattr(args, "task", "auto"))
    return X, target


def _resolve_ell(args, d: int, default: int | None = None) -> int:
    if args.ell is not None and args.ratio is not None:
        raise MafsError("give either --ell or --ratio, not both")
    if args.ell is not None:
        return min(args.ell, d)
    if args.ratio is not None:
        ell = int(math.floor(args.ratio / 100.0 * d))
        if ell < 1:
            raise MafsError(f"--ratio {args.ratio}% selects no features at d={d}")
        return ell
    return default if default is not None else min(40, d)


def _parse_beta(text: str):
    from .simulate import EffectSizes

    parts = [float(v) for v in text.split(",")]
    if len(parts) != 7:
        raise MafsError("--beta needs exactly 7 comma-separated values")
    return EffectSizes(*parts)


def cmd_simulate(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    beta = None
    if args.beta:
        beta = _parse_beta(args.beta)
        if args.feature_type == "combined":
            if not args.beta_categorical:
                raise MafsError("combined features need --beta-categorical as well")
            beta = {
                "continuous": beta,
                "categorical": _parse_beta(args.beta_categorical),
            }
    spec = make_simulation_spec(
        args.n, args.d, args.feature_type, args.outcome_type, seed=args.seed, beta=beta
    )
    X, y = simulate_dataset(spec)
    task = "classification" if args.outcome_type == "binary" else "regression"
    fio.write_matrix_csv(os.path.join(args.out_dir, "X.csv"), X)
    fio.write_target_csv(os.path.join(args.out_dir, "y.csv"), y, task=task)
    fio.write_truth_json(os.path.join(args.out_dir, "truth.json"), spec.assignment)
    print(f"wrote X.csv, y.csv, truth.json to {args.out_dir}")
    return 0


def cmd_filter(args) -> int:
    X, target = _load_xy(args)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    priors = compute_priors(X, target, methods=methods)
    payload = {
        "schema": "mafs-priors/1",
        "d": X.shape[1],
        "methods": {
            p.method: {
                "raw": [float(v).hex() for v in p.raw],
                "normalized": [float(v).hex() for v in p.normalized],
                "mean": float(p.raw_mean).hex(),
                "sd": float(p.raw_sd).hex(),
                "flagged": list(p.flagged),
            }
            for p in priors
        },
    }
    fio.write_json(args.out, payload)
    print(f"wrote {len(priors)} priors to {args.out}")
    return 0


def cmd_select(args) -> int:
    X, target = _load_xy(args)
    if args.config:
        config = MAFSConfig.from_dict(fio.read_json(args.config))
    else:
        config = MAFSConfig()
    overrides = {"seed": args.seed, "ell": _resolve_ell(args, X.shape[1], config.ell)}
    if args.k is not None:
        overrides["k"] = args.k
    from dataclasses import replace

    config = replace(config, **overrides)
    if args.model_out:
        from .attention import train_mafs
        from .rerank import build_candidate_set, rerank_candidates
        from .pipeline import RankingRecord, config_digest

        priors = compute_priors(X, target, methods=config.filters)
        model = train_mafs(X, target, priors, config)
        fio.write_json(args.model_out, model_to_dict(model))
        candidates = build_candidate_set(model, min(config.top_k, model.d))
        ranked, _ = rerank_candidates(
            X, target, candidates, model.task,
            n_trees=config.n_trees, seed=config.seed, ell=config.ell,
        )
        digest = config_digest(config.to_dict())
        records = [
            RankingRecord(rank=i + 1, feature=e.feature, score=e.score,
                          method="mafs", heads=e.heads, seed=config.seed,
                          config_digest=digest)
            for i, e in enumerate(ranked.entries)
        ]
    else:
        records = select_features(X, target, config)
    fio.write_ranking_tsv(args.out, records)
    print(f"wrote {len(records)} ranking rows to {args.out}")
    return 0


def cmd_baseline(args) -> int:
    X, target = _load_xy(args)
    if args.config:
        config = BaselineConfig.from_dict(fio.read_json(args.config))
    else:
        config = BaselineConfig()
    from dataclasses import replace

    config = replace(config, seed=args.seed)
    ell = _resolve_ell(args, X.shape[1], min(40, X.shape[1]))
    records = run_baseline(X, target, args.method, config, ell=ell)
    fio.write_ranking_tsv(args.out, records)
    print(f"wrote {len(records)} ranking rows to {args.out}")
    return 0


def cmd_score(args) -> int:
    records = fio.read_ranking_tsv(args.ranking)
    assignment = fio.read_truth_json(args.truth)
    if args.top is not None and args.ratio is not None:
        raise MafsError("give either --top or --ratio, not both")
    if args.ratio is not None:
        if args.d is None:
            raise MafsError("--ratio needs --d to resolve the feature count")
        top = int(math.floor(args.ratio / 100.0 * args.d))
    else:
        top = args.top if args.top is not None else len(records)
    selected = [r.feature for r in records[:top]]
    report = score_coverage(selected, assignment)
    payload = report.to_dict()
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out:
        fio.write_json(args.out, payload)
    return 0


def cmd_evaluate(args) -> int:
    X, target = _load_xy(args)
    records = fio.read_ranking_tsv(args.ranking)
    features = [r.feature for r in records[: args.top]]
    if not features:
        raise MafsError("ranking file has no rows to evaluate")
    Xs = X[:, features]
    n = Xs.shape[0]
    rng = derive_rng(args.seed, "evaluate_split")
    order = rng.permutation(n)
    n_test = max(1, int(round(args.test_fraction * n)))
    test_idx = np.sort(order[:n_test])
    train_idx = np.sort(order[n_test:])
    task = target.task
    yv = target.values
    if args.evaluator == "knn":
        value = knn_evaluate(
            Xs[train_idx], yv[train_idx], Xs[test_idx], yv[test_idx],
            k=min(args.k, len(train_idx)), task=task,
        )
    else:
        value = mlp_evaluate(
            Xs[train_idx], yv[train_idx], Xs[test_idx], yv[test_idx],
            task=task, seed=args.seed,
        )
    metric = "auroc" if task == "classification" else "pearson_r"
    payload = {"metric": metric, "value": value, "evaluator": args.evaluator,
               "n_features": len(features), "n_test": int(n_test)}
    print(json.dumps(payload, indent=2, sort_keys=True))
    if args.out:
        fio.write_json(args.out, payload)
    return 0


def cmd_tune(args) -> int:
    X, target = _load_xy(args)
    space = simulation_search_space(args.method, budget=args.budget, seed=args.seed)
    from .pipeline import tune_objective

    objective = tune_objective(X, target, args.method, args.seed, args.max_epochs)
    best, trials = random_search(space, objective)
    payload = {
        "schema": "mafs-tune/1",
        "method": args.method,
        "best": best,
        "trials": [
            {"index": t.index, "config": t.config, "score": t.score, "error": t.error}
            for t in trials
        ],
    }
    print(json.dumps({"best": best}, indent=2, sort_keys=True))
    if args.out:
        fio.write_json(args.out, payload)
    return 0


def cmd_bench(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    ratios = tuple(float(r) for r in args.ratios.split(",") if r.strip())
    mafs_config = (
        MAFSConfig.from_dict(fio.read_json(args.mafs_config)) if args.mafs_config else None
    )
    baseline_config = (
        BaselineConfig.from_dict(fio.read_json(args.baseline_config))
        if args.baseline_config
        else None
    )
    beta = None
    if args.beta:
        beta = _parse_beta(args.beta)
        if args.feature_type == "combined":
            if not args.beta_categorical:
                raise MafsError("combined features need --beta-categorical as well")
            beta = {"continuous": beta, "categorical": _parse_beta(args.beta_categorical)}
    rows, summary = run_bench(
        n=args.n,
        d=args.d,
        feature_type=args.feature_type,
        outcome_type=args.outcome_type,
        methods=methods,
        replications=args.replications,
        seed=args.seed,
        ratios_pct=ratios,
        mafs_config=mafs_config,
        baseline_config=baseline_config,
        beta=beta,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    records_path = os.path.join(args.out_dir, "records.tsv")
    summary_path = os.path.join(args.out_dir, "summary.tsv")
    form_cols = "\t".join(FORMS)
    lines = [
        "replication\tseed\tmethod\tratio_pct\tn_selected\toverall\t"
        + form_cols
        + "\tselect_seconds"
    ]
    for r in rows:
        lines.append(
            f"{r.replication}\t{r.seed}\t{r.method}\t{fio.fmt(r.ratio_pct)}\t{r.n_selected}\t"
            + fio.fmt(r.overall)
            + "\t"
            + "\t".join(fio.fmt(r.per_form[f]) for f in FORMS)
            + "\t"
            + fio.fmt(r.select_seconds)
        )
    fio.atomic_write_text(records_path, "\n".join(lines) + "\n")
    lines = [
        "method\tratio_pct\treplications\tmean_overall\tci95\t" + form_cols
    ]
    for s in summary:
        lines.append(
            f"{s.method}\t{fio.fmt(s.ratio_pct)}\t{s.replications}\t"
            + fio.fmt(s.mean_overall)
            + "\t"
            + fio.fmt(s.ci95)
            + "\t"
            + "\t".join(fio.fmt(s.mean_per_form[f]) for f in FORMS)
        )
    fio.atomic_write_text(summary_path, "\n".join(lines) + "\n")
    print(f"wrote {records_path} and {summary_path}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "filter": cmd_filter,
    "select": cmd_select,
    "baseline": cmd_baseline,
    "score": cmd_score,
    "evaluate": cmd_evaluate,
    "tune": cmd_tune,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        return COMMANDS[args.command](args)
    except MafsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
