"""Per-head attention networks over filter priors and their training loop.

Each filter prior seeds one head. A head maps its normalized prior through
an MLP to a per-feature attention vector, weights the feature matrix
elementwise with it, pushes the weighted matrix through a predictor
network, and minimizes the prediction loss plus an adaptively weighted L1
penalty on the attention vector. Heads share nothing and train
independently; per-head random streams make results identical whether
heads run sequentially or concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import nnet
from .data import as_matrix, as_target
from .errors import DimensionError, NumericError, TrainingError
from .filters import FilterPrior
from .parallel import map_indexed
from .rng import derive_rng

CONFIG_SCHEMA = "mafs-config/1"
MODEL_SCHEMA = "mafs-model/1"


@dataclass(frozen=True)
class MAFSConfig:
    """Hyperparameters for the full pipeline.

    ``lambda_`` is the sparsity strength multiplying the adaptive L1
    penalty; ``tau_max`` caps the per-feature penalty weights derived from
    the priors. ``k`` defaults to ``ell`` when unset. When
    ``width_scale`` is set, hidden widths are input_dim / width_scale
    instead of ``hidden_dim``.
    """

    lambda_: float = 1e-4
    gamma: float = 0.3
    epsilon: float = 1e-6
    tau_max: float = 100.0
    hidden_dim: int = 200
    width_scale: float | None = None
    attention_hidden_dims: tuple[int, ...] | None = None
    predictor_hidden_dims: tuple[int, ...] | None = None
    dropout_rate: float = 0.4
    learning_rate: float = 1e-3
    weight_decay: float = 1e-5
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    k: int | None = None
    ell: int = 40
    seed: int = 0
    filters: tuple[str, ...] = ("sis", "kendall", "dcor")
    bounded_alpha: bool = False
    monitor: str = "total"
    val_fraction: float = 0.2
    use_batchnorm: bool = True
    n_trees: int = 500
    attention_init: str = "prior"
    attention_lr_scale: float = 1.0

    def __post_init__(self):
        if self.lambda_ < 0:
            raise ValueError("lambda_ must be >= 0")
        if self.gamma <= 0:
            raise ValueError("gamma must be > 0")
        if not 0 < self.epsilon <= 1e-3:
            raise ValueError("epsilon must be in (0, 1e-3]")
        if self.tau_max <= 0:
            raise ValueError("tau_max must be > 0")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.monitor not in ("total", "pred"):
            raise ValueError("monitor must be 'total' or 'pred'")
        if self.attention_init not in ("prior", "random"):
            raise ValueError("attention_init must be 'prior' or 'random'")
        if self.attention_lr_scale <= 0:
            raise ValueError("attention_lr_scale must be > 0")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must be in (0, 1)")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        object.__setattr__(self, "filters", tuple(self.filters))
        if self.attention_hidden_dims is not None:
            object.__setattr__(
                self, "attention_hidden_dims", tuple(self.attention_hidden_dims)
            )
        if self.predictor_hidden_dims is not None:
            object.__setattr__(
                self, "predictor_hidden_dims", tuple(self.predictor_hidden_dims)
            )

    @property
    def top_k(self) -> int:
        return self.ell if self.k is None else self.k

    def hidden_dims_for(self, d: int, which: str) -> tuple[int, ...]:
        explicit = (
            self.attention_hidden_dims if which == "attention" else self.predictor_hidden_dims
        )
        if explicit is not None:
            return explicit
        if self.width_scale is not None:
            width = max(1, round(d / self.width_scale))
        else:
            width = self.hidden_dim
        return (width, width)

    def to_dict(self) -> dict:
        out = {"schema": CONFIG_SCHEMA}
        for f in fields(self):
            value = getattr(self, f.name)
            key = "lambda" if f.name == "lambda_" else f.name
            if isinstance(value, tuple):
                value = list(value)
            out[key] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MAFSConfig":
        data = dict(data)
        schema = data.pop("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ValueError(f"unsupported config schema {schema!r}")
        if "lambda" in data:
            data["lambda_"] = data.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("attention_hidden_dims", "predictor_hidden_dims", "filters"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_val_loss: float = math.inf
    best_epoch: int = -1
    epochs_trained: int = 0


@dataclass
class HeadState:
    """Everything one attention head owns."""

    index: int
    prior: FilterPrior
    attention_spec: nnet.NetworkSpec | None = None
    attention_params: list | None = None
    predictor_spec: nnet.NetworkSpec | None = None
    predictor_params: list | None = None
    alpha: np.ndarray | None = None
    tau: np.ndarray | None = None
    attention_opt: nnet.AdamState | None = None
    predictor_opt: nnet.AdamState | None = None
    history: TrainHistory = field(default_factory=TrainHistory)
    bounded_alpha: bool = False

    @property
    def d(self) -> int:
        return self.prior.d


@dataclass
class MAFSModel:
    heads: list[HeadState]
    task: str
    d: int
    config: MAFSConfig

    @property
    def n_heads(self) -> int:
        return len(self.heads)


# ---------------------------------------------------------------------------
# Core operations


def adaptive_penalty(prior, gamma: float, epsilon: float, tau_max: float) -> np.ndarray:
    """Per-feature L1 weights: min((|w_norm| + eps)^(-gamma), tau_max).

    Strong priors (large |w_norm|) receive small penalties, adaptive-lasso
    style; the cap bounds the penalty on features with near-zero prior.
    """
    if gamma <= 0 or epsilon <= 0 or tau_max <= 0:
        raise ValueError("gamma, epsilon and tau_max must all be > 0")
    w = prior.normalized if isinstance(prior, FilterPrior) else np.asarray(prior, float)
    return np.minimum((np.abs(w) + epsilon) ** (-gamma), tau_max)


def compute_attention(head: HeadState, mode: str = "eval") -> np.ndarray:
    """Run the head's attention MLP on its normalized prior; stores alpha."""
    out, _ = nnet.forward(
        head.attention_spec,
        head.attention_params,
        head.prior.normalized[None, :],
        mode=mode,
    )
    alpha = out[0]
    if head.bounded_alpha:
        alpha = 1.0 / (1.0 + np.exp(-alpha))
    if not np.all(np.isfinite(alpha)):
        raise NumericError(f"non-finite attention weights in head {head.index}")
    head.alpha = alpha
    return alpha


def soft_select(X, alpha: np.ndarray) -> np.ndarray:
    """Elementwise feature weighting: output[i, k] = X[i, k] * alpha[k]."""
    X = as_matrix(X)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.shape[0] != X.shape[1]:
        raise DimensionError(
            f"alpha length {alpha.shape} does not match {X.shape[1]} columns"
        )
    return X * alpha


def penalty_term(alpha: np.ndarray, tau: np.ndarray, lambda_: float) -> float:
    return float(lambda_ * np.sum(tau * np.abs(alpha)))


def head_loss(pred, y, alpha, tau, lambda_: float, task: str) -> float:
    """Total head loss: batch-mean prediction loss + lambda * sum(tau_k |alpha_k|)."""
    if lambda_ < 0:
        raise ValueError("lambda_ must be >= 0")
    pred_loss = nnet.prediction_loss(np.asarray(pred, float), y, task)
    return pred_loss + penalty_term(np.asarray(alpha, float), np.asarray(tau, float), lambda_)


def head_ranking(head: HeadState, k: int) -> list[int]:
    """Indices of the k largest |alpha|, descending, ties by ascending index."""
    alpha = head.alpha
    if alpha is None:
        raise ValueError("head has no attention vector; train or compute it first")
    d = alpha.shape[0]
    if k > d:
        raise ValueError(f"k={k} exceeds feature count {d}")
    order = np.lexsort((np.arange(d), -np.abs(alpha)))
    return [int(i) for i in order[:k]]


# ---------------------------------------------------------------------------
# Training


def train_val_split(n: int, task: str, y, val_fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Seeded 80/20-style split; stratified by class for classification."""
    if task == "classification":
        labels = np.asarray(y)
        train_idx, val_idx = [], []
        for cls in np.unique(labels):
            members = np.nonzero(labels == cls)[0]
            members = members[rng.permutation(members.shape[0])]
            n_val = int(round(val_fraction * members.shape[0]))
            if members.shape[0] > 1:
                n_val = min(max(n_val, 1), members.shape[0] - 1)
            else:
                n_val = 0
            val_idx.append(members[:n_val])
            train_idx.append(members[n_val:])
        return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))
    order = rng.permutation(n)
    n_val = min(max(int(round(val_fraction * n)), 1), n - 1)
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def _output_dim(task: str, y) -> int:
    if task == "regression":
        return 1
    return int(np.max(y)) + 1 if np.asarray(y).size else 2


def _attention_with_cache(head: HeadState):
    out, cache = nnet.forward(
        head.attention_spec, head.attention_params, head.prior.normalized[None, :], mode="train"
    )
    raw = out[0]
    if head.bounded_alpha:
        alpha = 1.0 / (1.0 + np.exp(-raw))
    else:
        alpha = raw
    return alpha, raw, cache


def _train_head(
    head: HeadState,
    X: np.ndarray,
    y: np.ndarray,
    task: str,
    config: MAFSConfig,
    train_idx: np.ndarray,
    val_idx: np.ndarray,
) -> HeadState:
    d = X.shape[1]
    seed, h = config.seed, head.index
    rng_attn = derive_rng(seed, "head", h, "attn_init")
    rng_pred = derive_rng(seed, "head", h, "pred_init")
    rng_order = derive_rng(seed, "head", h, "batch_order")
    rng_drop = derive_rng(seed, "head", h, "dropout")

    attn_dims = config.hidden_dims_for(d, "attention")
    pred_dims = config.hidden_dims_for(d, "predictor")
    head.attention_spec = nnet.NetworkSpec(d, attn_dims, d)
    head.predictor_spec = nnet.NetworkSpec(
        d,
        pred_dims,
        _output_dim(task, y),
        dropout_rate=config.dropout_rate,
        use_batchnorm=config.use_batchnorm,
    )
    head.attention_params = nnet.init_params(head.attention_spec, rng_attn)
    if config.attention_init == "prior":
        # start at the identity on the prior: zero last-layer weight and
        # bias equal to w_norm make alpha(0) the normalized filter scores
        last = head.attention_params[-1]
        last.weight[:] = 0.0
        last.bias[:] = head.prior.normalized
    head.predictor_params = nnet.init_params(head.predictor_spec, rng_pred)
    head.attention_opt = nnet.init_adam(head.attention_params, config.weight_decay)
    head.predictor_opt = nnet.init_adam(head.predictor_params, config.weight_decay)
    head.bounded_alpha = config.bounded_alpha
    head.tau = adaptive_penalty(head.prior, config.gamma, config.epsilon, config.tau_max)

    X_train, y_train = X[train_idx], y[train_idx]
    X_val, y_val = X[val_idx], y[val_idx]
    control = nnet.TrainControl(
        max_epochs=config.max_epochs, patience=config.patience, batch_size=config.batch_size
    )
    best_snapshot = None
    lam, tau = config.lambda_, head.tau

    for epoch in range(config.max_epochs):
        epoch_losses = []
        for batch in nnet.iter_minibatches(X_train.shape[0], config.batch_size, rng_order):
            Xb, yb = X_train[batch], y_train[batch]
            alpha, raw, attn_cache = _attention_with_cache(head)
            weighted = Xb * alpha
            pred, pred_cache = nnet.forward(
                head.predictor_spec, head.predictor_params, weighted, mode="train", rng=rng_drop
            )
            pred_loss, dpred = nnet.prediction_loss_and_grad(pred, yb, task)
            total = pred_loss + penalty_term(alpha, tau, lam)
            if not math.isfinite(total):
                raise TrainingError(f"head {h} diverged at epoch {epoch}")
            epoch_losses.append(total)

            pred_grads, dweighted = nnet.backward(
                head.predictor_spec, head.predictor_params, pred_cache, dpred
            )
            dalpha = np.sum(dweighted * Xb, axis=0) + lam * tau * np.sign(alpha)
            if head.bounded_alpha:
                draw = dalpha * alpha * (1.0 - alpha)
            else:
                draw = dalpha
            attn_grads, _ = nnet.backward(
                head.attention_spec, head.attention_params, attn_cache, draw[None, :]
            )
            nnet.adam_step(head.predictor_params, pred_grads, head.predictor_opt, config.learning_rate)
            nnet.adam_step(
                head.attention_params,
                attn_grads,
                head.attention_opt,
                config.learning_rate * config.attention_lr_scale,
            )
            nnet.commit_batchnorm(head.predictor_params, pred_cache)

        alpha = compute_attention(head, mode="eval")
        val_pred, _ = nnet.forward(
            head.predictor_spec, head.predictor_params, X_val * alpha, mode="eval"
        )
        val_pred_loss = nnet.prediction_loss(val_pred, y_val, task)
        val_total = val_pred_loss + penalty_term(alpha, tau, lam)
        monitored = val_total if config.monitor == "total" else val_pred_loss
        head.history.train_loss.append(float(np.mean(epoch_losses)))
        head.history.val_loss.append(monitored)
        head.history.epochs_trained = epoch + 1
        improved = monitored < control.best_val_loss
        stop = nnet.early_stop(control, monitored)
        if improved:
            head.history.best_val_loss = monitored
            head.history.best_epoch = epoch
            best_snapshot = (
                nnet.clone_params(head.attention_params),
                nnet.clone_params(head.predictor_params),
            )
        if stop:
            break

    if best_snapshot is not None:
        head.attention_params, head.predictor_params = best_snapshot
    compute_attention(head, mode="eval")
    return head


def train_mafs(X, y, priors: list[FilterPrior], config: MAFSConfig) -> MAFSModel:
    """Train one head per prior (Adam, early stopping); deterministic by seed."""
    if not priors:
        raise ValueError("at least one filter prior is required")
    X = as_matrix(X)
    target = as_target(y)
    task = target.task
    yv = target.values
    d = X.shape[1]
    for p in priors:
        if p.d != d:
            raise DimensionError(f"prior {p.method!r} length {p.d} != {d} columns")
    if X.shape[0] != yv.shape[0]:
        raise DimensionError("X and y row counts differ")

    rng_split = derive_rng(config.seed, "split")
    train_idx, val_idx = train_val_split(X.shape[0], task, yv, config.val_fraction, rng_split)
    heads = [HeadState(index=h, prior=p) for h, p in enumerate(priors)]

    def run(h: int) -> HeadState:
        return _train_head(heads[h], X, yv, task, config, train_idx, val_idx)

    heads = map_indexed(run, len(heads))
    return MAFSModel(heads=heads, task=task, d=d, config=config)


# ---------------------------------------------------------------------------
# Serialization (audit format; exact float round-trip via hex floats)


def _hex_list(arr: np.ndarray) -> list[str]:
    return [float(v).hex() for v in arr]


def _from_hex(values: list[str]) -> np.ndarray:
    return np.array([float.fromhex(v) for v in values])


def model_to_dict(model: MAFSModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "task": model.task,
        "d": model.d,
        "config": model.config.to_dict(),
        "heads": [
            {
                "index": head.index,
                "prior": head.prior.method,
                "alpha": _hex_list(head.alpha),
                "tau": _hex_list(head.tau),
                "epochs_trained": head.history.epochs_trained,
                "best_val_loss": float(head.history.best_val_loss).hex(),
            }
            for head in model.heads
        ],
    }


def model_from_dict(data: dict) -> MAFSModel:
    """Rehydrate the audit record: alphas, taus and prior names, no weights."""
    if data.get("schema") != MODEL_SCHEMA:
        raise ValueError(f"unsupported model schema {data.get('schema')!r}")
    config = MAFSConfig.from_dict(data["config"])
    heads = []
    for rec in data["heads"]:
        alpha = _from_hex(rec["alpha"])
        prior = FilterPrior(
            method=rec["prior"],
            raw=np.zeros_like(alpha),
            normalized=np.zeros_like(alpha),
            raw_mean=0.0,
            raw_sd=1.0,
        )
        head = HeadState(index=rec["index"], prior=prior)
        head.alpha = alpha
        head.tau = _from_hex(rec["tau"])
        head.history.epochs_trained = rec["epochs_trained"]
        head.history.best_val_loss = float.fromhex(rec["best_val_loss"])
        heads.append(head)
    return MAFSModel(heads=heads, task=data["task"], d=data["d"], config=config)
