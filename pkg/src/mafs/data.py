"""Core data containers: feature matrices with column kinds, target vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericError

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


@dataclass
class DataMatrix:
    """Dense n-by-d feature matrix with a kind tag per column."""

    values: np.ndarray
    kinds: tuple[str, ...] = ()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DimensionError("feature matrix must be 2-D")
        if not self.kinds:
            self.kinds = (CONTINUOUS,) * self.values.shape[1]
        self.kinds = tuple(self.kinds)
        if len(self.kinds) != self.values.shape[1]:
            raise DimensionError("one kind tag per column required")
        if not np.all(np.isfinite(self.values)):
            raise NumericError("feature matrix contains non-finite entries")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def as_matrix(X) -> np.ndarray:
    """Accept a DataMatrix or array-like; return the validated ndarray."""
    if isinstance(X, DataMatrix):
        return X.values
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError("feature matrix must be 2-D")
    if not np.all(np.isfinite(X)):
        raise NumericError("feature matrix contains non-finite entries")
    return X


@dataclass
class TargetVector:
    """Outcome vector with its task type."""

    values: np.ndarray
    task: str = "regression"
    n_classes: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 1:
            raise DimensionError("target must be a vector")
        if self.task not in ("regression", "classification"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "classification":
            labels = self.values
            if not np.all(labels == labels.astype(int)):
                raise ValueError("classification targets must be integers")
            self.values = labels.astype(int)
            if self.n_classes is None:
                top = int(self.values.max()) + 1 if self.values.size else 2
                self.n_classes = max(top, 2)
            if self.n_classes < 2:
                raise ValueError("classification needs at least 2 classes")
            if self.values.size and (
                self.values.min() < 0 or self.values.max() >= self.n_classes
            ):
                raise ValueError("labels must lie in [0, n_classes)")
        else:
            self.values = self.values.astype(float)
            if not np.all(np.isfinite(self.values)):
                raise NumericError("target contains non-finite entries")

    @property
    def n(self) -> int:
        return self.values.shape[0]


def as_target(y, task: str | None = None) -> TargetVector:
    """Coerce to TargetVector, inferring the task when not given.

    Inference: integer-valued vectors with at most 10 distinct values are
    treated as classification labels, everything else as regression.
    """
    if isinstance(y, TargetVector):
        return y
    arr = np.asarray(y)
    if task is None or task == "auto":
        values = arr.astype(float)
        is_int = np.all(values == np.round(values))
        task = (
            "classification"
            if is_int and np.unique(values).size <= 10 and values.size > 0
            else "regression"
        )
    return TargetVector(values=arr, task=task)
