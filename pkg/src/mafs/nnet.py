"""Feedforward neural substrate with hand-derived backpropagation.

Fixed-topology multilayer perceptrons in double precision: every hidden
layer is an affine map, optionally followed by batch normalization, then
ReLU and inverted dropout; the output layer is plain affine. Training
support consists of Adam with decoupled weight decay and patience-based
early stopping. All randomness flows through explicit generators, so a
network instance trains deterministically for a fixed seed.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DimensionError, NumericError

BN_EPS = 1e-12
BN_MOMENTUM = 0.9


@dataclass(frozen=True)
class NetworkSpec:
    """Shape and layer options of one feedforward network."""

    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    dropout_rate: float = 0.0
    use_batchnorm: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        dims = (self.input_dim, *self.hidden_dims, self.output_dim)
        if any(d < 1 for d in dims):
            raise DimensionError(f"all layer dims must be >= 1, got {dims}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.output_dim)

    @property
    def n_layers(self) -> int:
        return len(self.hidden_dims) + 1


@dataclass
class LayerParams:
    """Parameters of one layer; batchnorm tensors are None when disabled."""

    weight: np.ndarray
    bias: np.ndarray
    gamma: np.ndarray | None = None
    beta: np.ndarray | None = None
    running_mean: np.ndarray | None = None
    running_var: np.ndarray | None = None
    version: int = 0

    def trainable(self) -> dict[str, np.ndarray]:
        out = {"weight": self.weight, "bias": self.bias}
        if self.gamma is not None:
            out["gamma"] = self.gamma
            out["beta"] = self.beta
        return out


@dataclass
class LayerGrads:
    weight: np.ndarray
    bias: np.ndarray
    gamma: np.ndarray | None = None
    beta: np.ndarray | None = None

    def tensors(self) -> dict[str, np.ndarray]:
        out = {"weight": self.weight, "bias": self.bias}
        if self.gamma is not None:
            out["gamma"] = self.gamma
            out["beta"] = self.beta
        return out


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> list[LayerParams]:
    """Fan-scaled uniform weight init (+-sqrt(6/(fan_in+fan_out))), zero bias."""
    params = []
    dims = spec.dims
    for i in range(spec.n_layers):
        fan_in, fan_out = dims[i], dims[i + 1]
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        bias = np.zeros(fan_out)
        layer = LayerParams(weight=weight, bias=bias)
        is_hidden = i < len(spec.hidden_dims)
        if is_hidden and spec.use_batchnorm:
            layer.gamma = np.ones(fan_out)
            layer.beta = np.zeros(fan_out)
            layer.running_mean = np.zeros(fan_out)
            layer.running_var = np.ones(fan_out)
        params.append(layer)
    return params


def clone_params(params: list[LayerParams]) -> list[LayerParams]:
    return copy.deepcopy(params)


def _check_input(spec: NetworkSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise DimensionError(
            f"input must be (n, {spec.input_dim}), got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite entries in network input")
    return x


def forward(
    spec: NetworkSpec,
    params: list[LayerParams],
    x: np.ndarray,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
):
    """Run the network; returns (output, cache).

    Train mode uses batch statistics for batchnorm and samples dropout
    masks from ``rng``; eval mode uses running statistics, applies no
    dropout, and consumes no randomness. The cache records every
    intermediate needed for an exact backward pass; running-statistic
    updates are staged in the cache and only applied by
    :func:`commit_batchnorm`, so forward itself never mutates ``params``.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = _check_input(spec, x)
    train = mode == "train"
    cache = {
        "mode": mode,
        "versions": tuple(p.version for p in params),
        "layers": [],
        "bn_updates": [],
    }
    a = x
    for i in range(spec.n_layers):
        layer = params[i]
        rec = {"x": a}
        z = a @ layer.weight + layer.bias
        is_hidden = i < len(spec.hidden_dims)
        if not is_hidden:
            rec["z"] = z
            cache["layers"].append(rec)
            a = z
            break
        if spec.use_batchnorm:
            if train:
                mean = z.mean(axis=0)
                var = z.var(axis=0)
                cache["bn_updates"].append((i, mean, var))
            else:
                mean = layer.running_mean
                var = layer.running_var
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (z - mean) * inv_std
            h = layer.gamma * xhat + layer.beta
            rec.update(z=z, xhat=xhat, inv_std=inv_std)
        else:
            h = z
        rec["h"] = h
        a = np.maximum(h, 0.0)
        if spec.dropout_rate > 0.0 and train:
            if rng is None:
                raise ContractError("train-mode forward with dropout needs an rng")
            keep = 1.0 - spec.dropout_rate
            mask = rng.random(a.shape) < keep
            a = a * mask / keep
            rec["dropout_mask"] = mask
        cache["layers"].append(rec)
    if not np.all(np.isfinite(a)):
        raise NumericError("non-finite entries in network output")
    return a, cache


def commit_batchnorm(params: list[LayerParams], cache) -> None:
    """Fold the cached batch statistics into the running estimates."""
    for i, mean, var in cache["bn_updates"]:
        layer = params[i]
        layer.running_mean = BN_MOMENTUM * layer.running_mean + (1 - BN_MOMENTUM) * mean
        layer.running_var = BN_MOMENTUM * layer.running_var + (1 - BN_MOMENTUM) * var


def backward(
    spec: NetworkSpec,
    params: list[LayerParams],
    cache,
    output_grad: np.ndarray,
):
    """Backpropagate ``output_grad`` through a train-mode forward cache.

    Returns (grads, input_grad) where grads mirrors the parameter shapes.
    ReLU uses subgradient 0 at exactly 0.
    """
    if cache["mode"] != "train":
        raise ContractError("backward requires a train-mode cache")
    if cache["versions"] != tuple(p.version for p in params):
        raise ContractError("stale cache: parameters changed since forward")
    output_grad = np.asarray(output_grad, dtype=float)
    grads: list[LayerGrads | None] = [None] * spec.n_layers

    rec = cache["layers"][-1]
    d = output_grad
    grads[-1] = LayerGrads(weight=rec["x"].T @ d, bias=d.sum(axis=0))
    d = d @ params[-1].weight.T

    for i in range(len(spec.hidden_dims) - 1, -1, -1):
        rec = cache["layers"][i]
        layer = params[i]
        if "dropout_mask" in rec:
            keep = 1.0 - spec.dropout_rate
            d = d * rec["dropout_mask"] / keep
        d = d * (rec["h"] > 0.0)
        if spec.use_batchnorm:
            xhat, inv_std = rec["xhat"], rec["inv_std"]
            dgamma = (d * xhat).sum(axis=0)
            dbeta = d.sum(axis=0)
            dxhat = d * layer.gamma
            n = xhat.shape[0]
            d = (inv_std / n) * (
                n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
            )
            g = LayerGrads(
                weight=rec["x"].T @ d, bias=d.sum(axis=0), gamma=dgamma, beta=dbeta
            )
        else:
            g = LayerGrads(weight=rec["x"].T @ d, bias=d.sum(axis=0))
        grads[i] = g
        d = d @ layer.weight.T
    return grads, d


# ---------------------------------------------------------------------------
# Optimizer


@dataclass
class AdamState:
    """Per-tensor first/second moment accumulators plus step counter."""

    m: list[dict[str, np.ndarray]]
    v: list[dict[str, np.ndarray]]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0


def init_adam(params: list[LayerParams], weight_decay: float = 0.0) -> AdamState:
    if weight_decay < 0:
        raise ValueError("weight_decay must be >= 0")
    m = [{k: np.zeros_like(t) for k, t in p.trainable().items()} for p in params]
    v = [{k: np.zeros_like(t) for k, t in p.trainable().items()} for p in params]
    return AdamState(m=m, v=v, weight_decay=weight_decay)


def adam_step(
    params: list[LayerParams],
    grads: list[LayerGrads],
    state: AdamState,
    lr: float,
) -> None:
    """One in-place Adam update with decoupled weight decay.

    Decay is applied as ``p <- p - lr*wd*p`` before the moment update; the
    moment update uses standard bias correction.
    """
    if lr <= 0:
        raise ValueError(f"lr must be > 0, got {lr}")
    for i, g in enumerate(grads):
        for name, tensor in g.tensors().items():
            if not np.all(np.isfinite(tensor)):
                raise NumericError(f"non-finite gradient for layer{i}.{name}")
    if state.weight_decay > 0.0:
        for p in params:
            for tensor in p.trainable().values():
                tensor -= lr * state.weight_decay * tensor
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        tensors = p.trainable()
        for name, grad in g.tensors().items():
            m[name] *= b1
            m[name] += (1 - b1) * grad
            v[name] *= b2
            v[name] += (1 - b2) * grad * grad
            mhat = m[name] / c1
            vhat = v[name] / c2
            tensors[name] -= lr * mhat / (np.sqrt(vhat) + state.eps)
        p.version += 1


# ---------------------------------------------------------------------------
# Early stopping


@dataclass
class TrainControl:
    """Epoch budget and patience counter for early stopping."""

    max_epochs: int
    patience: int
    batch_size: int
    best_val_loss: float = math.inf
    epochs_since_improve: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def early_stop(control: TrainControl, val_loss: float) -> bool:
    """Record one validation loss; True means stop now.

    Improvement is a strictly lower loss; stop fires exactly when the
    non-improvement counter reaches the patience.
    """
    if not math.isfinite(val_loss):
        raise NumericError("validation loss is not finite")
    if val_loss < control.best_val_loss:
        control.best_val_loss = val_loss
        control.epochs_since_improve = 0
        return False
    control.epochs_since_improve += 1
    return control.epochs_since_improve >= control.patience


def iter_minibatches(n: int, batch_size: int, rng: np.random.Generator):
    """Yield shuffled index batches covering [0, n); last partial batch kept."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


# ---------------------------------------------------------------------------
# Prediction losses


def prediction_loss(pred: np.ndarray, y: np.ndarray, task: str) -> float:
    """Batch-mean prediction loss: MSE (regression) or cross-entropy."""
    loss, _ = prediction_loss_and_grad(pred, y, task)
    return loss


def prediction_loss_and_grad(pred: np.ndarray, y: np.ndarray, task: str):
    """Loss plus gradient w.r.t. the network output (logits for classes)."""
    pred = np.asarray(pred, dtype=float)
    n = pred.shape[0]
    if task == "regression":
        y = np.asarray(y, dtype=float).reshape(n)
        r = pred[:, 0] - y
        loss = float(np.mean(r * r))
        grad = np.zeros_like(pred)
        grad[:, 0] = 2.0 * r / n
        return loss, grad
    if task == "classification":
        labels = np.asarray(y)
        if labels.ndim != 1 or labels.shape[0] != n:
            raise DimensionError("labels must be a vector matching the batch")
        z = pred - pred.max(axis=1, keepdims=True)
        lse = np.log(np.exp(z).sum(axis=1))
        loss = float(np.mean(lse - z[np.arange(n), labels]))
        probs = np.exp(z - lse[:, None])
        grad = probs
        grad[np.arange(n), labels] -= 1.0
        grad /= n
        return loss, grad
    raise ValueError(f"unknown task {task!r}")
