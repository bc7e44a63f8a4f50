"""Evaluation metrics and downstream evaluators (KNN, small MLP)."""

from __future__ import annotations

import numpy as np

from . import nnet
from .attention import train_val_split
from .data import as_matrix, as_target
from .errors import MetricError
from .rng import derive_rng


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    n = values.shape[0]
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auroc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUROC with midrank tie handling."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    if scores.shape != labels.shape:
        raise MetricError("scores and labels must have matching length")
    n1 = int(np.sum(labels == 1))
    n0 = int(np.sum(labels == 0))
    if n1 == 0 or n0 == 0:
        raise MetricError("AUROC needs both classes present")
    ranks = _midranks(scores)
    u = float(np.sum(ranks[labels == 1])) - n1 * (n1 + 1) / 2.0
    return u / (n1 * n0)


def pearson_r(pred, y) -> float:
    """Sample Pearson correlation; constant inputs are an error."""
    pred = np.asarray(pred, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if pred.shape != y.shape:
        raise MetricError("vectors must have matching length")
    pc = pred - pred.mean()
    yc = y - y.mean()
    sp = float(np.sqrt(np.dot(pc, pc)))
    sy = float(np.sqrt(np.dot(yc, yc)))
    if sp < 1e-12 or sy < 1e-12:
        raise MetricError("Pearson correlation undefined for constant input")
    return float(np.dot(pc, yc) / (sp * sy))


def knn_predict(X_train, y_train, X_test, k: int, task: str) -> np.ndarray:
    """Euclidean KNN scores: positive-class vote fraction or neighbor mean.

    Neighbor ties at equal distance resolve by ascending train index.
    """
    X_train = as_matrix(X_train)
    X_test = as_matrix(X_test)
    y_train = np.asarray(y_train)
    n = X_train.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    out = np.empty(X_test.shape[0])
    train_sq = np.sum(X_train * X_train, axis=1)
    for i in range(X_test.shape[0]):
        diff = train_sq - 2.0 * X_train @ X_test[i] + float(np.dot(X_test[i], X_test[i]))
        order = np.lexsort((np.arange(n), diff))[:k]
        neighbors = y_train[order]
        if task == "classification":
            out[i] = float(np.mean(neighbors == 1))
        else:
            out[i] = float(np.mean(neighbors.astype(float)))
    return out


def knn_evaluate(X_train, y_train, X_test, y_test, k: int, task: str) -> float:
    """AUROC (classification) or Pearson r (regression) of KNN predictions."""
    scores = knn_predict(X_train, y_train, X_test, k, task)
    if task == "classification":
        return auroc(scores, y_test)
    return pearson_r(scores, np.asarray(y_test, dtype=float))


def mlp_evaluate(
    X_train,
    y_train,
    X_test,
    y_test,
    task: str,
    seed: int = 0,
    hidden_dims: tuple[int, ...] = (64, 32),
    dropout_rate: float = 0.1,
    learning_rate: float = 1e-3,
    weight_decay: float = 1e-4,
    max_epochs: int = 100,
    patience: int = 10,
    batch_size: int = 32,
) -> float:
    """Train a small two-hidden-layer MLP and score it on the test split."""
    X_train = as_matrix(X_train)
    X_test = as_matrix(X_test)
    target = as_target(y_train, task)
    yv = target.values
    out_dim = 1 if task == "regression" else max(int(np.max(yv)) + 1, 2)
    spec = nnet.NetworkSpec(
        X_train.shape[1], hidden_dims, out_dim, dropout_rate=dropout_rate, use_batchnorm=False
    )
    rng_init = derive_rng(seed, "mlp_eval", "init")
    rng_order = derive_rng(seed, "mlp_eval", "batch_order")
    rng_drop = derive_rng(seed, "mlp_eval", "dropout")
    rng_split = derive_rng(seed, "mlp_eval", "split")
    params = nnet.init_params(spec, rng_init)
    opt = nnet.init_adam(params, weight_decay)
    tr, va = train_val_split(X_train.shape[0], task, yv, 0.2, rng_split)
    control = nnet.TrainControl(max_epochs=max_epochs, patience=patience, batch_size=batch_size)
    best = None
    for epoch in range(max_epochs):
        for batch in nnet.iter_minibatches(tr.shape[0], batch_size, rng_order):
            rows = tr[batch]
            pred, cache = nnet.forward(spec, params, X_train[rows], mode="train", rng=rng_drop)
            _, dpred = nnet.prediction_loss_and_grad(pred, yv[rows], task)
            grads, _ = nnet.backward(spec, params, cache, dpred)
            nnet.adam_step(params, grads, opt, learning_rate)
            nnet.commit_batchnorm(params, cache)
        val_pred, _ = nnet.forward(spec, params, X_train[va], mode="eval")
        val_loss = nnet.prediction_loss(val_pred, yv[va], task)
        improved = val_loss < control.best_val_loss
        stop = nnet.early_stop(control, val_loss)
        if improved:
            best = nnet.clone_params(params)
        if stop:
            break
    if best is not None:
        params = best
    test_pred, _ = nnet.forward(spec, params, X_test, mode="eval")
    if task == "classification":
        z = test_pred - test_pred.max(axis=1, keepdims=True)
        probs = np.exp(z)
        probs /= probs.sum(axis=1, keepdims=True)
        return auroc(probs[:, 1], y_test)
    return pearson_r(test_pred[:, 0], np.asarray(y_test, dtype=float))
