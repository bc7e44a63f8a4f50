"""Embedded gate baselines: CancelOut and EAR-FS (external attention).

Both learn a length-d gate vector jointly with a predictor network on the
sigmoid-gated features. CancelOut regularizes the raw gate with a negative
variance term plus an L1 term; EAR-FS penalizes attention values near 0.5
through a reciprocal term. The EAR-FS gate can be initialized from a
normalized filter prior instead of uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import nnet
from .attention import TrainHistory, train_val_split
from .data import as_matrix, as_target
from .errors import TrainingError
from .filters import FilterPrior
from .rng import derive_rng

EARFS_FLOOR = 1e-8

METHODS = ("cancelout", "earfs")

BASELINE_CONFIG_SCHEMA = "mafs-baseline-config/1"


@dataclass(frozen=True)
class BaselineConfig:
    """Training knobs shared by both baselines plus their regularizer weights."""

    lambda1: float = 1e-2
    lambda2: float = 1e-2
    lambda_: float = 1e-4
    hidden_dim: int = 200
    width_scale: float | None = None
    predictor_hidden_dims: tuple[int, ...] | None = None
    dropout_rate: float = 0.4
    learning_rate: float = 1e-3
    weight_decay: float = 1e-5
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    val_fraction: float = 0.2
    use_batchnorm: bool = True
    monitor: str = "total"

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0 or self.lambda_ < 0:
            raise ValueError("regularizer weights must be >= 0")
        if self.monitor not in ("total", "pred"):
            raise ValueError("monitor must be 'total' or 'pred'")
        if self.predictor_hidden_dims is not None:
            object.__setattr__(
                self, "predictor_hidden_dims", tuple(self.predictor_hidden_dims)
            )

    def hidden_dims_for(self, d: int) -> tuple[int, ...]:
        if self.predictor_hidden_dims is not None:
            return self.predictor_hidden_dims
        if self.width_scale is not None:
            width = max(1, round(d / self.width_scale))
        else:
            width = self.hidden_dim
        return (width, width)

    def to_dict(self) -> dict:
        from dataclasses import fields

        out = {"schema": BASELINE_CONFIG_SCHEMA}
        for f in fields(self):
            value = getattr(self, f.name)
            key = "lambda" if f.name == "lambda_" else f.name
            if isinstance(value, tuple):
                value = list(value)
            out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BaselineConfig":
        from dataclasses import fields

        data = dict(data)
        schema = data.pop("schema", BASELINE_CONFIG_SCHEMA)
        if schema != BASELINE_CONFIG_SCHEMA:
            raise ValueError(f"unsupported baseline config schema {schema!r}")
        if "lambda" in data:
            data["lambda_"] = data.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown baseline config keys: {sorted(unknown)}")
        if data.get("predictor_hidden_dims") is not None:
            data["predictor_hidden_dims"] = tuple(data["predictor_hidden_dims"])
        return cls(**data)


@dataclass
class GateState:
    method: str
    gate: np.ndarray
    predictor_spec: nnet.NetworkSpec | None = None
    predictor_params: list | None = None
    history: TrainHistory = field(default_factory=TrainHistory)

    @property
    def importance(self) -> np.ndarray:
        return _sigmoid(self.gate)

    @property
    def d(self) -> int:
        return self.gate.shape[0]


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# ---------------------------------------------------------------------------
# Losses and regularizer gradients


def cancelout_regularizer(gate: np.ndarray, lambda1: float, lambda2: float, d: int):
    """Value and gate-gradient of -l1*var(W/d) + l2*||W/d||_1."""
    v = gate / d
    vbar = v.mean()
    value = -lambda1 * float(np.mean((v - vbar) ** 2)) + lambda2 * float(
        np.sum(np.abs(v))
    )
    grad = -lambda1 * (2.0 / d) * (v - vbar) / d + lambda2 * np.sign(gate) / d
    return value, grad


def cancelout_loss(pred, y, gate, lambda1: float, lambda2: float, d: int, task: str) -> float:
    """Prediction loss minus weighted gate variance plus weighted gate L1.

    The variance term is negative-signed: spreading the raw weights apart
    is rewarded while the L1 term pushes them small.
    """
    value, _ = cancelout_regularizer(np.asarray(gate, float), lambda1, lambda2, d)
    return nnet.prediction_loss(np.asarray(pred, float), y, task) + value


def earfs_regularizer(gate: np.ndarray, lambda_: float):
    """Value and gate-gradient of lambda / sum((sigmoid(a) - 0.5)^2).

    The denominator is floored at 1e-8; on the floor the term is constant,
    so its gradient there is zero.
    """
    a_star = _sigmoid(gate)
    denom = float(np.sum((a_star - 0.5) ** 2))
    if denom < EARFS_FLOOR:
        return lambda_ / EARFS_FLOOR, np.zeros_like(gate)
    value = lambda_ / denom
    ddenom = 2.0 * (a_star - 0.5) * a_star * (1.0 - a_star)
    return value, -lambda_ / denom**2 * ddenom


def earfs_loss(pred, y, a_star, lambda_: float, task: str) -> float:
    """Prediction loss plus the near-0.5 attention penalty on a*."""
    a_star = np.asarray(a_star, dtype=float)
    denom = max(float(np.sum((a_star - 0.5) ** 2)), EARFS_FLOOR)
    return nnet.prediction_loss(np.asarray(pred, float), y, task) + lambda_ / denom


# ---------------------------------------------------------------------------
# Training


@dataclass
class _VectorAdam:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def _vector_adam_step(x: np.ndarray, grad: np.ndarray, state: _VectorAdam, lr: float):
    state.step += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    mhat = state.m / (1 - state.beta1**state.step)
    vhat = state.v / (1 - state.beta2**state.step)
    x -= lr * mhat / (np.sqrt(vhat) + state.eps)


def baseline_ranking(state: GateState) -> list[int]:
    """All features by descending sigmoid(gate), ties by ascending index."""
    imp = state.importance
    order = np.lexsort((np.arange(state.d), -imp))
    return [int(i) for i in order]


def _regularizer(method: str, gate: np.ndarray, config: BaselineConfig, d: int):
    if method == "cancelout":
        return cancelout_regularizer(gate, config.lambda1, config.lambda2, d)
    return earfs_regularizer(gate, config.lambda_)


def train_baseline(
    X,
    y,
    method: str,
    config: BaselineConfig,
    init: str = "uniform",
    prior: FilterPrior | None = None,
):
    """Jointly train gate and predictor with Adam and early stopping.

    ``init='uniform'`` starts the gate at zero (importance 0.5
    everywhere); ``init='filter_prior'`` sets the gate pre-activation to
    the normalized prior, so the initial importance ordering equals the
    prior's. Returns (GateState, full ranking).
    """
    if method not in METHODS:
        raise ValueError(f"unknown baseline {method!r}; expected one of {METHODS}")
    if init not in ("uniform", "filter_prior"):
        raise ValueError(f"unknown init {init!r}")
    X = as_matrix(X)
    target = as_target(y)
    task, yv = target.task, target.values
    n, d = X.shape

    if init == "filter_prior":
        if prior is None:
            raise ValueError("filter_prior init requires a FilterPrior")
        gate = prior.normalized.astype(float).copy()
    else:
        gate = np.zeros(d)

    seed = config.seed
    rng_pred = derive_rng(seed, "baseline", method, "pred_init")
    rng_order = derive_rng(seed, "baseline", method, "batch_order")
    rng_drop = derive_rng(seed, "baseline", method, "dropout")
    rng_split = derive_rng(seed, "split")
    train_idx, val_idx = train_val_split(n, task, yv, config.val_fraction, rng_split)

    out_dim = 1 if task == "regression" else int(np.max(yv)) + 1
    spec = nnet.NetworkSpec(
        d,
        config.hidden_dims_for(d),
        out_dim,
        dropout_rate=config.dropout_rate,
        use_batchnorm=config.use_batchnorm,
    )
    params = nnet.init_params(spec, rng_pred)
    opt = nnet.init_adam(params, config.weight_decay)
    gate_opt = _VectorAdam(m=np.zeros(d), v=np.zeros(d))

    state = GateState(method=method, gate=gate, predictor_spec=spec, predictor_params=params)
    control = nnet.TrainControl(
        max_epochs=config.max_epochs, patience=config.patience, batch_size=config.batch_size
    )
    X_train, y_train = X[train_idx], yv[train_idx]
    X_val, y_val = X[val_idx], yv[val_idx]
    best = None

    for epoch in range(config.max_epochs):
        epoch_losses = []
        for batch in nnet.iter_minibatches(X_train.shape[0], config.batch_size, rng_order):
            Xb, yb = X_train[batch], y_train[batch]
            g = _sigmoid(gate)
            weighted = Xb * g
            pred, cache = nnet.forward(spec, params, weighted, mode="train", rng=rng_drop)
            pred_loss, dpred = nnet.prediction_loss_and_grad(pred, yb, task)
            reg_value, reg_grad = _regularizer(method, gate, config, d)
            total = pred_loss + reg_value
            if not math.isfinite(total):
                raise TrainingError(f"{method} diverged at epoch {epoch}")
            epoch_losses.append(total)
            grads, dweighted = nnet.backward(spec, params, cache, dpred)
            dgate = np.sum(dweighted * Xb, axis=0) * g * (1.0 - g) + reg_grad
            nnet.adam_step(params, grads, opt, config.learning_rate)
            _vector_adam_step(gate, dgate, gate_opt, config.learning_rate)
            nnet.commit_batchnorm(params, cache)

        g = _sigmoid(gate)
        val_pred, _ = nnet.forward(spec, params, X_val * g, mode="eval")
        val_pred_loss = nnet.prediction_loss(val_pred, y_val, task)
        reg_value, _ = _regularizer(method, gate, config, d)
        monitored = val_pred_loss + reg_value if config.monitor == "total" else val_pred_loss
        state.history.train_loss.append(float(np.mean(epoch_losses)))
        state.history.val_loss.append(monitored)
        state.history.epochs_trained = epoch + 1
        improved = monitored < control.best_val_loss
        stop = nnet.early_stop(control, monitored)
        if improved:
            state.history.best_val_loss = monitored
            state.history.best_epoch = epoch
            best = (gate.copy(), nnet.clone_params(params))
        if stop:
            break

    if best is not None:
        state.gate, state.predictor_params = best
    return state, baseline_ranking(state)
