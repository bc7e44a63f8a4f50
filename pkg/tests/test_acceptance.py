"""Acceptance suite: one test and one printed pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s``. The desk-scale benchmark
behind criteria 4-6 trains every method on five replications and takes
roughly twenty minutes; everything else finishes in a few minutes.
"""

import json
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from mafs import nnet
from mafs.attention import MAFSConfig, adaptive_penalty, penalty_term
from mafs.baselines import cancelout_regularizer, earfs_regularizer
from mafs.filters import kendall_tau, kendall_tau_pairs, normalize_prior
from mafs.metrics import auroc
from mafs.pipeline import run_bench
from mafs.rerank import (
    CandidateSet,
    build_candidate_set,
    fit_tree_ensemble,
    tree_decrease_total,
    tree_leaf_impurity,
)
from mafs.rng import derive_rng
from mafs.simulate import coverage, make_assignment

from fdcheck import finite_difference, max_rel_error
from test_rerank import fake_model, oracle_tree, structure_of


def report(number, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {number} [{status}] {name}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    assert ok, line


# ---------------------------------------------------------------------------
# Criterion 1: gradient oracle for the penalized head loss and both baselines


def _mafs_instance_grads(rng, task):
    """Analytic grads of the penalized loss plus an FD-checkable closure."""
    while True:
        d = int(rng.integers(4, 21))
        n = int(rng.integers(4, 17))
        hidden = int(rng.integers(2, 8))
        X = rng.standard_normal((n, d))
        y = rng.standard_normal(n) if task == "regression" else rng.integers(0, 2, n)
        w_norm = rng.standard_normal(d)
        tau = adaptive_penalty(w_norm, 0.4, 1e-6, 100.0)
        lam = 10 ** rng.uniform(-3, -1)
        attn_spec = nnet.NetworkSpec(d, (hidden,), d)
        pred_spec = nnet.NetworkSpec(
            d, (hidden,), 1 if task == "regression" else 2, use_batchnorm=True
        )
        attn_params = nnet.init_params(attn_spec, rng)
        pred_params = nnet.init_params(pred_spec, rng)
        a, attn_cache = nnet.forward(attn_spec, attn_params, w_norm[None, :], mode="train")
        alpha = a[0]
        pred, pred_cache = nnet.forward(pred_spec, pred_params, X * alpha, mode="train")
        margins = [
            np.min(np.abs(attn_cache["layers"][0]["h"])),
            np.min(np.abs(pred_cache["layers"][0]["h"])),
            np.min(np.abs(alpha)),
        ]
        if min(margins) > 1e-3:
            break

    def loss():
        a, _ = nnet.forward(attn_spec, attn_params, w_norm[None, :], mode="train")
        al = a[0]
        p, _ = nnet.forward(pred_spec, pred_params, X * al, mode="train")
        value, _ = nnet.prediction_loss_and_grad(p, y, task)
        return value + penalty_term(al, tau, lam)

    _, dpred = nnet.prediction_loss_and_grad(pred, y, task)
    pred_grads, dweighted = nnet.backward(pred_spec, pred_params, pred_cache, dpred)
    dalpha = np.sum(dweighted * X, axis=0) + lam * tau * np.sign(alpha)
    attn_grads, _ = nnet.backward(attn_spec, attn_params, attn_cache, dalpha[None, :])
    pairs = list(zip(attn_params, attn_grads)) + list(zip(pred_params, pred_grads))
    return loss, pairs


def _baseline_instance_grads(rng, method):
    while True:
        d = int(rng.integers(4, 21))
        n = int(rng.integers(4, 17))
        hidden = int(rng.integers(2, 8))
        X = rng.standard_normal((n, d))
        y = rng.standard_normal(n)
        gate = rng.standard_normal(d)
        spec = nnet.NetworkSpec(d, (hidden,), 1, use_batchnorm=True)
        params = nnet.init_params(spec, rng)
        g = 1.0 / (1.0 + np.exp(-gate))
        pred, cache = nnet.forward(spec, params, X * g, mode="train")
        if np.min(np.abs(cache["layers"][0]["h"])) > 1e-3:
            break
    if method == "cancelout":
        l1, l2 = 10 ** rng.uniform(-4, -1), 10 ** rng.uniform(-4, -1)

        def reg(vec):
            return cancelout_regularizer(vec, l1, l2, d)

    else:
        lam = 10 ** rng.uniform(-4, -2)

        def reg(vec):
            return earfs_regularizer(vec, lam)

    def loss():
        gv = 1.0 / (1.0 + np.exp(-gate))
        p, _ = nnet.forward(spec, params, X * gv, mode="train")
        value, _ = nnet.prediction_loss_and_grad(p, y, "regression")
        return value + reg(gate)[0]

    _, dpred = nnet.prediction_loss_and_grad(pred, y, "regression")
    grads, dweighted = nnet.backward(spec, params, cache, dpred)
    dgate = np.sum(dweighted * X, axis=0) * g * (1.0 - g) + reg(gate)[1]
    return loss, list(zip(params, grads)), gate, dgate


class TestCriterion1:
    def test_gradient_oracle(self):
        start = time.time()
        worst = 0.0
        rng = derive_rng(1001)
        for i in range(30):
            task = "regression" if i % 2 == 0 else "classification"
            loss, pairs = _mafs_instance_grads(rng, task)
            for p, grad in pairs:
                for name, tensor in p.trainable().items():
                    numeric = finite_difference(loss, tensor, h=1e-6)
                    worst = max(worst, max_rel_error(grad.tensors()[name], numeric))
        for i in range(20):
            method = "cancelout" if i % 2 == 0 else "earfs"
            loss, pairs, gate, dgate = _baseline_instance_grads(rng, method)
            numeric = finite_difference(loss, gate, h=1e-6)
            worst = max(worst, max_rel_error(dgate, numeric))
            for p, grad in pairs:
                for name, tensor in p.trainable().items():
                    numeric = finite_difference(loss, tensor, h=1e-6)
                    worst = max(worst, max_rel_error(grad.tensors()[name], numeric))
        elapsed = time.time() - start
        report(
            1,
            "gradient oracle (50 instances, both losses)",
            worst < 1e-4 and elapsed < 60,
            f"max rel err {worst:.2e}, {elapsed:.0f}s",
        )


# ---------------------------------------------------------------------------
# Criterion 2: statistic oracles


def _auroc_pairs_vec(scores, labels):
    pos = scores[labels == 1][:, None]
    neg = scores[labels == 0][None, :]
    wins = float(np.sum(pos > neg))
    ties = float(np.sum(pos == neg))
    return (wins + 0.5 * ties) / (pos.shape[0] * neg.shape[1])


def _dcor_definition(x, y):
    a = np.abs(np.subtract.outer(x, x))
    b = np.abs(np.subtract.outer(y, y))
    A = a - a.mean(axis=1, keepdims=True) - a.mean(axis=0, keepdims=True) + a.mean()
    B = b - b.mean(axis=1, keepdims=True) - b.mean(axis=0, keepdims=True) + b.mean()
    dcov2 = (A * B).mean()
    dvx, dvy = (A * A).mean(), (B * B).mean()
    if dvx <= 0 or dvy <= 0:
        return 0.0
    return math.sqrt(max(dcov2 / math.sqrt(dvx * dvy), 0.0))


class TestCriterion2:
    def test_statistic_oracles(self):
        start = time.time()
        rng = derive_rng(1002)
        kendall_exact = True
        for _ in range(1000):
            n = int(rng.integers(2, 301))
            support = int(rng.integers(1, 12))
            x = rng.integers(0, support, size=n).astype(float)
            y = rng.integers(0, support, size=n).astype(float)
            fast = kendall_tau(x.reshape(-1, 1), y).values[0]
            oracle = kendall_tau_pairs(x.reshape(-1, 1), y).values[0]
            if fast != oracle:
                kendall_exact = False
                break

        from mafs.filters import distance_corr

        dcor_worst = 0.0
        for _ in range(200):
            n = int(rng.integers(4, 121))
            x = rng.standard_normal(n)
            y = rng.standard_normal(n) if rng.random() < 0.5 else x**2 + 0.1 * rng.standard_normal(n)
            got = distance_corr(x.reshape(-1, 1), y).values[0]
            dcor_worst = max(dcor_worst, abs(got - _dcor_definition(x, y)))

        auroc_exact = True
        for _ in range(1000):
            n = int(rng.integers(2, 201))
            scores = np.round(rng.random(n), 2)
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                continue
            if auroc(scores, labels) != _auroc_pairs_vec(scores, labels):
                auroc_exact = False
                break
        elapsed = time.time() - start
        report(
            2,
            "statistic oracles (kendall exact, dcor 1e-12, auroc exact)",
            kendall_exact and dcor_worst < 1e-12 and auroc_exact and elapsed < 120,
            f"dcor max err {dcor_worst:.1e}, {elapsed:.0f}s",
        )


# ---------------------------------------------------------------------------
# Criterion 3: structural invariants


class TestCriterion3:
    def test_structural_invariants(self):
        start = time.time()
        rng = derive_rng(1003)

        bounds_ok = True
        for _ in range(1000):
            m = int(rng.integers(1, 6))
            d = int(rng.integers(3, 40))
            k = int(rng.integers(1, d + 1))
            model = fake_model([rng.standard_normal(d) for _ in range(m)])
            cs = build_candidate_set(model, k)
            if not (k <= cs.size <= m * k):
                bounds_ok = False
                break

        tau_ok = True
        for _ in range(200):
            gamma = float(rng.uniform(0.05, 2.0))
            eps = 10 ** float(rng.uniform(-8, -4))
            tau_max = float(rng.uniform(1.0, 200.0))
            w = np.sort(np.abs(rng.standard_normal(50)))
            tau = adaptive_penalty(w, gamma, eps, tau_max)
            if not (np.all(np.diff(tau) <= 0) and np.all(tau > 0) and np.all(tau <= tau_max)):
                tau_ok = False
                break

        argsort_ok = True
        for _ in range(300):
            raw = np.round(rng.random(int(rng.integers(2, 60))), 3)
            if raw.std() < 1e-9:
                continue
            prior = normalize_prior(raw)
            if not np.array_equal(
                np.argsort(raw, kind="stable"), np.argsort(prior.normalized, kind="stable")
            ):
                argsort_ok = False
                break

        coverage_ok = True
        assignment = make_assignment(400, "continuous", derive_rng(1004, "a"))
        for _ in range(200):
            ranking = rng.permutation(400)
            prev = None
            for size in (5, 20, 40, 80, 200):
                rep = coverage(ranking[:size], assignment)
                if prev is not None:
                    if rep.overall < prev.overall - 1e-15 or any(
                        rep.per_form[f] < prev.per_form[f] - 1e-15 for f in rep.per_form
                    ):
                        coverage_ok = False
                prev = rep
        elapsed = time.time() - start
        report(
            3,
            "structural invariants (bounds, tau, argsort, coverage)",
            bounds_ok and tau_ok and argsort_ok and coverage_ok and elapsed < 60,
            f"{elapsed:.0f}s",
        )


# ---------------------------------------------------------------------------
# Criteria 4-6: desk-scale benchmark (one shared run)


BENCH_SEED = 20250810


@pytest.fixture(scope="module")
def bench_rows():
    start = time.time()
    rows, _ = run_bench(
        n=500,
        d=2000,
        feature_type="continuous",
        outcome_type="continuous",
        methods=("mafs", "cancelout", "earfs", "earfs_filter_init"),
        replications=5,
        seed=BENCH_SEED,
    )
    return rows, time.time() - start


def _mean_overall(rows, method, ratio):
    values = [r.overall for r in rows if r.method == method and r.ratio_pct == ratio]
    return float(np.mean(values))


def _mean_form(rows, method, ratio, form):
    values = [r.per_form[form] for r in rows if r.method == method and r.ratio_pct == ratio]
    return float(np.mean(values))


class TestCriterion4:
    def test_desk_scale_trend(self, bench_rows):
        rows, elapsed = bench_rows
        mafs = _mean_overall(rows, "mafs", 2.0)
        cancelout = _mean_overall(rows, "cancelout", 2.0)
        linear = _mean_form(rows, "mafs", 2.0, "linear")
        log = _mean_form(rows, "mafs", 2.0, "log")
        ok_a = mafs >= 0.50
        ok_b = linear >= 0.80 and log >= 0.80
        ok_c = mafs - cancelout >= 0.10
        ok_time = elapsed < 1800
        report(
            "4a",
            "desk-scale MAFS overall coverage >= 0.50",
            ok_a,
            f"mafs={mafs:.3f}",
        )
        report(
            "4b",
            "desk-scale MAFS linear and log coverage >= 0.80",
            ok_b,
            f"linear={linear:.2f}, log={log:.2f}",
        )
        report(
            "4c",
            "MAFS exceeds CancelOut by >= 0.10",
            ok_c,
            f"margin={mafs - cancelout:.3f}",
        )
        report(
            "4t",
            "benchmark within the 30 minute budget",
            ok_time,
            f"{elapsed:.0f}s",
        )


class TestCriterion5:
    def test_filter_init_ablation(self, bench_rows):
        rows, _ = bench_rows
        init = _mean_overall(rows, "earfs_filter_init", 2.0)
        plain = _mean_overall(rows, "earfs", 2.0)
        report(
            5,
            "filter-initialized EAR-FS >= uniform EAR-FS (paired seeds)",
            init >= plain,
            f"filter_init={init:.3f}, uniform={plain:.3f}",
        )


class TestCriterion6:
    def test_selection_ratio_monotonicity(self, bench_rows):
        rows, _ = bench_rows
        ok = True
        by_key = {}
        for r in rows:
            by_key.setdefault((r.method, r.seed), []).append(r)
        for members in by_key.values():
            members.sort(key=lambda r: r.ratio_pct)
            overall = [m.overall for m in members]
            if overall != sorted(overall):
                ok = False
            for form in members[0].per_form:
                values = [m.per_form[form] for m in members]
                if values != sorted(values):
                    ok = False
        report(6, "coverage non-decreasing in selection ratio (exact)", ok)


# ---------------------------------------------------------------------------
# Criterion 7: byte-identical pipeline, independent of MAFS_THREADS


class TestCriterion7:
    def test_pipeline_determinism(self, tmp_path):
        config = {
            "schema": "mafs-config/1",
            "hidden_dim": 32,
            "max_epochs": 12,
            "n_trees": 120,
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config))
        env_base = dict(os.environ)

        def run(args, threads):
            env = dict(env_base)
            env["MAFS_THREADS"] = threads
            proc = subprocess.run(
                [sys.executable, "-m", "mafs", *args],
                capture_output=True,
                text=True,
                env=env,
            )
            assert proc.returncode == 0, proc.stderr
            return proc

        sim = tmp_path / "sim"
        run(
            ["simulate", "--n", "200", "--d", "600", "--seed", "77",
             "--out-dir", str(sim), "--beta", "1.5,4,3,0.7,1.2,0.4,1.2"],
            "1",
        )
        outputs = {}
        reports = {}
        for threads in ("1", "3"):
            for attempt in ("a", "b"):
                rank = tmp_path / f"rank-{threads}{attempt}.tsv"
                run(
                    ["select", "--x", str(sim / "X.csv"), "--y", str(sim / "y.csv"),
                     "--seed", "78", "--ratio", "2", "--out", str(rank),
                     "--config", str(config_path)],
                    threads,
                )
                outputs[(threads, attempt)] = rank.read_bytes()
                proc = run(
                    ["score", "--ranking", str(rank), "--truth", str(sim / "truth.json")],
                    threads,
                )
                reports[(threads, attempt)] = proc.stdout
        values = list(outputs.values())
        ok = all(v == values[0] for v in values) and len(set(reports.values())) == 1
        report(7, "simulate->select->score byte-identical across MAFS_THREADS", ok)


# ---------------------------------------------------------------------------
# Criterion 8: CART oracle and conservation


class TestCriterion8:
    def test_cart_oracle_and_conservation(self):
        start = time.time()
        rng = derive_rng(1008)
        structure_ok = True
        for trial in range(150):
            task = "classification" if trial % 2 == 0 else "regression"
            n = int(rng.integers(4, 9))
            m = int(rng.integers(1, 4))
            X = np.round(rng.standard_normal((n, m)) * 4) / 2
            if task == "classification":
                y = rng.integers(0, 2, size=n)
                if np.unique(y).size < 2:
                    continue
                n_classes = 2
            else:
                y = np.round(rng.standard_normal(n) * 4) / 2
                n_classes = 0
            ens = fit_tree_ensemble(
                X, y, 1, task, seed=trial, bootstrap=False, max_features=None
            )
            got = structure_of(ens.trees[0].root)
            want = oracle_tree(
                X, y.astype(float) if task == "regression" else y, task, n_classes
            )
            if got != want:
                structure_ok = False
                break

        conservation_worst = 0.0
        for trial in range(10):
            X = rng.standard_normal((60, 6))
            if trial % 2 == 0:
                y = (X[:, 0] + 0.5 * rng.standard_normal(60) > 0).astype(int)
                task = "classification"
            else:
                y = np.sin(X[:, 1]) + 0.2 * rng.standard_normal(60)
                task = "regression"
            ens = fit_tree_ensemble(X, y, 20, task, seed=trial)
            for tree in ens.trees:
                gap = abs(tree_decrease_total(tree) - tree_leaf_impurity(tree))
                conservation_worst = max(conservation_worst, gap)
        elapsed = time.time() - start
        report(
            8,
            "CART greedy-split oracle and conservation to 1e-10",
            structure_ok and conservation_worst < 1e-10,
            f"conservation gap {conservation_worst:.1e}, {elapsed:.0f}s",
        )
