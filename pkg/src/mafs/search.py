"""Seeded random search over hyperparameter ranges."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SearchError
from .rng import derive_rng


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def __post_init__(self):
        if not 0 < self.low <= self.high:
            raise ValueError("log-uniform range needs 0 < low <= high")

    def sample(self, rng):
        return float(np.exp(rng.uniform(math.log(self.low), math.log(self.high))))


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError("uniform range needs low <= high")

    def sample(self, rng):
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class Choice:
    options: tuple

    def __post_init__(self):
        if not self.options:
            raise ValueError("choice needs at least one option")
        object.__setattr__(self, "options", tuple(self.options))

    def sample(self, rng):
        return self.options[int(rng.integers(0, len(self.options)))]


@dataclass(frozen=True)
class SearchSpace:
    params: dict
    budget: int
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("trial budget must be >= 1")
        if not self.params:
            raise ValueError("search space has no parameters")

    def sample(self, rng) -> dict:
        # fixed key order so the stream is consumed identically every run
        return {name: self.params[name].sample(rng) for name in sorted(self.params)}


@dataclass
class Trial:
    index: int
    config: dict
    score: float | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def random_search(space: SearchSpace, objective) -> tuple[dict, list[Trial]]:
    """Sample ``budget`` configs, evaluate, return (best config, trial log).

    The best trial maximizes the objective; exact ties keep the earliest
    trial. Failing trials are logged and skipped; if every trial fails a
    SearchError is raised.
    """
    rng = derive_rng(space.seed, "search")
    trials: list[Trial] = []
    best: Trial | None = None
    for index in range(space.budget):
        config = space.sample(rng)
        trial = Trial(index=index, config=config)
        try:
            trial.score = float(objective(config))
        except Exception as exc:  # noqa: BLE001 - searches must survive bad trials
            trial.error = f"{type(exc).__name__}: {exc}"
        trials.append(trial)
        if not trial.failed and (best is None or trial.score > best.score):
            best = trial
    if best is None:
        raise SearchError("every search trial failed")
    return dict(best.config), trials


# Canonical per-method ranges for the synthetic benchmark setting.
def simulation_search_space(method: str, budget: int, seed: int = 0) -> SearchSpace:
    params = {
        "learning_rate": LogUniform(1e-6, 1e-4),
        "weight_decay": LogUniform(1e-6, 1e-4),
        "batch_size": Choice((32,)),
        "hidden_dim": Choice((200,)),
        "dropout_rate": Choice((0.4,)),
    }
    if method == "mafs":
        params["lambda_"] = LogUniform(1e-6, 1e-4)
        params["gamma"] = Uniform(0.1, 0.5)
    elif method == "cancelout":
        params["lambda1"] = LogUniform(1e-5, 1e-1)
        params["lambda2"] = LogUniform(1e-5, 1e-1)
    elif method in ("earfs", "earfs_filter_init"):
        params["lambda_"] = LogUniform(1e-6, 1e-4)
    else:
        raise ValueError(f"unknown method {method!r}")
    return SearchSpace(params=params, budget=budget, seed=seed)
