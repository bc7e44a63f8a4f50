"""Marginal dependence filters and prior normalization.

Three screeners score each feature's marginal association with the outcome:
absolute Pearson correlation, Kendall tau-b, and distance correlation.
Each raw score vector is z-normalized into a prior that seeds one
attention head downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .data import TargetVector, as_matrix
from .errors import (
    DegeneratePriorError,
    DegenerateTargetError,
    DimensionError,
    NumericError,
)
from .parallel import map_indexed

SD_FLOOR = 1e-12


def _target_values(y) -> np.ndarray:
    """Numeric view of the target; class labels enter as their numbers."""
    if isinstance(y, TargetVector):
        values = y.values.astype(float)
    else:
        values = np.asarray(y, dtype=float)
    if values.ndim != 1:
        raise DimensionError("target must be a vector")
    if not np.all(np.isfinite(values)):
        raise NumericError("target contains non-finite entries")
    return values


class FilterScores(NamedTuple):
    """Raw per-feature scores plus indices flagged as degenerate."""

    values: np.ndarray
    flagged: tuple[int, ...]


@dataclass
class FilterPrior:
    """One filter method's raw and z-normalized importance vector."""

    method: str
    raw: np.ndarray
    normalized: np.ndarray
    raw_mean: float
    raw_sd: float
    flagged: tuple[int, ...] = ()

    @property
    def d(self) -> int:
        return self.raw.shape[0]


def pearson_sis(X, y) -> FilterScores:
    """Absolute marginal Pearson correlation of each column with y.

    Zero-variance columns score 0 and are flagged; a zero-variance target
    is an error because no column can be ranked against it.
    """
    X = as_matrix(X)
    yv = _target_values(y)
    n = X.shape[0]
    if n < 3:
        raise DimensionError("pearson_sis needs n >= 3")
    if yv.shape[0] != n:
        raise DimensionError("X and y row counts differ")
    yc = yv - yv.mean()
    sy = float(np.sqrt(np.sum(yc * yc)))
    if sy < SD_FLOOR:
        raise DegenerateTargetError("target has zero variance")
    # per-column contiguous arithmetic keeps the result exactly equivariant
    # under column permutation (vectorized reductions are not)
    r = np.zeros(X.shape[1])
    flagged = []
    for k in range(X.shape[1]):
        x = np.ascontiguousarray(X[:, k])
        xc = x - x.mean()
        sx = float(np.sqrt(np.dot(xc, xc)))
        if sx < SD_FLOOR:
            flagged.append(k)
            continue
        r[k] = abs(float(np.dot(xc, yc))) / (sx * sy)
    return FilterScores(values=np.minimum(r, 1.0), flagged=tuple(flagged))


# ---------------------------------------------------------------------------
# Kendall tau-b


def _pair_count_from_breaks(new_run: np.ndarray, n: int) -> int:
    """Sum t*(t-1)/2 over runs delimited by the boolean new-run mask."""
    starts = np.concatenate(([0], np.nonzero(new_run)[0] + 1))
    ends = np.concatenate((starts[1:], [n]))
    runs = ends - starts
    return int(np.sum(runs * (runs - 1) // 2))


def _run_pair_count(sorted_values: np.ndarray) -> int:
    """Sum over runs of equal adjacent values of t*(t-1)/2."""
    n = sorted_values.shape[0]
    if n < 2:
        return 0
    return _pair_count_from_breaks(np.diff(sorted_values) != 0, n)


def _joint_run_pair_count(xs: np.ndarray, ys: np.ndarray) -> int:
    n = xs.shape[0]
    if n < 2:
        return 0
    new_run = (np.diff(xs) != 0) | (np.diff(ys) != 0)
    return _pair_count_from_breaks(new_run, n)


def _merge_count(values: list) -> int:
    """Count strict inversions with a bottom-up counting merge sort."""
    n = len(values)
    src = list(values)
    buf = [None] * n
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if src[j] < src[i]:
                    # src[j] jumps over the mid - i remaining left elements
                    swaps += mid - i
                    buf[k] = src[j]
                    j += 1
                else:
                    buf[k] = src[i]
                    i += 1
                k += 1
            buf[k : k + mid - i] = src[i:mid]
            k += mid - i
            buf[k : k + hi - j] = src[j:hi]
            src[lo:hi] = buf[lo:hi]
        width *= 2
    return swaps


def _tau_b_single(x: np.ndarray, y: np.ndarray, ties_y: int | None = None) -> float:
    """Tau-b via Knight's O(n log n) merge-count; 0.0 when undefined."""
    n = x.shape[0]
    order = np.lexsort((y, x))
    xs = x[order]
    ys = y[order]
    n0 = n * (n - 1) // 2
    ties_x = _run_pair_count(xs)
    ties_joint = _joint_run_pair_count(xs, ys)
    swaps = _merge_count(ys.tolist())
    if ties_y is None:
        ties_y = _run_pair_count(np.sort(y))
    d1 = n0 - ties_x
    d2 = n0 - ties_y
    if d1 <= 0 or d2 <= 0:
        return 0.0
    pq = n0 - ties_x - ties_y + ties_joint - 2 * swaps
    return pq / math.sqrt(d1 * d2)


def tau_b_pairs(x, y) -> float:
    """Tau-b by O(n^2) pair enumeration; the oracle path."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    iu = np.triu_indices(n, k=1)
    dx = np.sign(x[:, None] - x[None, :])[iu]
    dy = np.sign(y[:, None] - y[None, :])[iu]
    pq = int(np.sum((dx * dy).astype(int)))
    d1 = int(np.sum(dx != 0.0))
    d2 = int(np.sum(dy != 0.0))
    if d1 <= 0 or d2 <= 0:
        return 0.0
    return pq / math.sqrt(d1 * d2)


def kendall_tau(X, y) -> FilterScores:
    """Absolute Kendall tau-b of each column with y (tie-corrected)."""
    X = as_matrix(X)
    yv = _target_values(y)
    n = X.shape[0]
    if n < 2:
        raise DimensionError("kendall_tau needs n >= 2")
    if yv.shape[0] != n:
        raise DimensionError("X and y row counts differ")
    d = X.shape[1]
    if _all_tied(yv):
        return FilterScores(values=np.zeros(d), flagged=tuple(range(d)))
    ties_y = _run_pair_count(np.sort(yv))

    def one(k: int) -> float:
        return abs(_tau_b_single(X[:, k], yv, ties_y))

    values = np.array(map_indexed(one, d))
    flagged = tuple(int(i) for i in range(d) if _all_tied(X[:, i]))
    return FilterScores(values=np.minimum(values, 1.0), flagged=flagged)


def _all_tied(v: np.ndarray) -> bool:
    return bool(np.all(v == v[0]))


def kendall_tau_pairs(X, y) -> FilterScores:
    """O(n^2) pair-count version of :func:`kendall_tau`; oracle path."""
    X = as_matrix(X)
    yv = _target_values(y)
    d = X.shape[1]
    if _all_tied(yv):
        return FilterScores(values=np.zeros(d), flagged=tuple(range(d)))
    values = np.array([abs(tau_b_pairs(X[:, k], yv)) for k in range(d)])
    flagged = tuple(int(i) for i in range(d) if _all_tied(X[:, i]))
    return FilterScores(values=np.minimum(values, 1.0), flagged=flagged)


# ---------------------------------------------------------------------------
# Distance correlation


def _centered_distances(v: np.ndarray) -> np.ndarray:
    a = np.abs(v[:, None] - v[None, :])
    row = a.mean(axis=1, keepdims=True)
    col = a.mean(axis=0, keepdims=True)
    return a - row - col + a.mean()


def distance_corr(X, y) -> FilterScores:
    """Sample distance correlation of each column with y, in [0, 1].

    Uses double-centered distance matrices; columns (or targets) with zero
    distance variance score 0 and are flagged.
    """
    X = as_matrix(X)
    yv = _target_values(y)
    n = X.shape[0]
    if n < 4:
        raise DimensionError("distance_corr needs n >= 4")
    if yv.shape[0] != n:
        raise DimensionError("X and y row counts differ")
    B = _centered_distances(yv)
    dvar_y = float(np.mean(B * B))
    d = X.shape[1]
    if dvar_y <= 0.0:
        return FilterScores(values=np.zeros(d), flagged=tuple(range(d)))

    def one(k: int) -> float:
        A = _centered_distances(X[:, k])
        dvar_x = float(np.mean(A * A))
        if dvar_x <= 0.0:
            return 0.0
        dcov2 = float(np.mean(A * B))
        r2 = dcov2 / math.sqrt(dvar_x * dvar_y)
        return math.sqrt(max(r2, 0.0))

    values = np.array(map_indexed(one, d))
    flagged = tuple(int(i) for i in range(d) if _all_tied(X[:, i]))
    return FilterScores(values=np.minimum(values, 1.0), flagged=flagged)


# ---------------------------------------------------------------------------
# Normalization and orchestration


def normalize_prior(raw, method: str = "custom", flagged: tuple[int, ...] = ()) -> FilterPrior:
    """Z-normalize a raw score vector with the population standard deviation.

    A constant vector carries no ordering and raises; normalization is
    strictly monotone so argsort(raw) == argsort(normalized).
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 1 or raw.shape[0] < 2:
        raise DimensionError("prior must be a vector of length >= 2")
    mean = float(raw.mean())
    sd = float(raw.std())
    if sd < SD_FLOOR:
        raise DegeneratePriorError(
            f"filter {method!r} produced a constant score vector (sd={sd:g})"
        )
    return FilterPrior(
        method=method,
        raw=raw,
        normalized=(raw - mean) / sd,
        raw_mean=mean,
        raw_sd=sd,
        flagged=tuple(flagged),
    )


FILTER_REGISTRY: dict[str, Callable] = {
    "sis": pearson_sis,
    "kendall": kendall_tau,
    "dcor": distance_corr,
}

DEFAULT_FILTERS = ("sis", "kendall", "dcor")


def compute_priors(X, y, methods=DEFAULT_FILTERS) -> list[FilterPrior]:
    """Run each registered filter and normalize its output into a prior."""
    priors = []
    for method in methods:
        try:
            fn = FILTER_REGISTRY[method]
        except KeyError:
            raise KeyError(
                f"unknown filter {method!r}; registered: {sorted(FILTER_REGISTRY)}"
            ) from None
        scores = fn(X, y)
        priors.append(normalize_prior(scores.values, method=method, flagged=scores.flagged))
    return priors
