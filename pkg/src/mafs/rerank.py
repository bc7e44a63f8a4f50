"""Candidate-set construction and tree-ensemble re-ranking.

Per-head top-K feature sets are merged into a candidate set, then
re-scored by mean decrease of impurity over a forest of CART trees grown
on the candidate columns only. The filters from the screening stage are
never consulted here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import MAFSModel, head_ranking
from .data import as_matrix, as_target
from .errors import DegenerateTargetError, DimensionError
from .parallel import map_indexed
from .rng import derive_rng


@dataclass(frozen=True)
class CandidateSet:
    """Union of per-head nominations with provenance."""

    indices: tuple[int, ...]
    provenance: dict[int, tuple[int, ...]]
    k: int

    @property
    def size(self) -> int:
        return len(self.indices)


def build_candidate_set(model: MAFSModel, k: int) -> CandidateSet:
    """Merge each head's top-k features; records which heads nominated what."""
    if k > model.d:
        raise ValueError(f"k={k} exceeds feature count {model.d}")
    provenance: dict[int, list[int]] = {}
    for head in model.heads:
        for idx in head_ranking(head, k):
            provenance.setdefault(idx, []).append(head.index)
    indices = tuple(sorted(provenance))
    return CandidateSet(
        indices=indices,
        provenance={i: tuple(provenance[i]) for i in indices},
        k=k,
    )


# ---------------------------------------------------------------------------
# CART trees


@dataclass
class TreeNode:
    n_samples: int
    impurity: float
    value: float
    feature: int = -1
    threshold: float = float("nan")
    weighted_decrease: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass
class CartTree:
    root: TreeNode
    n_root: int


@dataclass
class TreeEnsemble:
    trees: list[CartTree]
    n_features: int
    task: str
    seed: int
    n_trees: int = 0

    def __post_init__(self):
        self.n_trees = len(self.trees)


def _node_impurity(y: np.ndarray, task: str, n_classes: int) -> float:
    n = y.shape[0]
    if task == "classification":
        counts = np.bincount(y, minlength=n_classes).astype(float)
        return float(1.0 - np.sum((counts / n) ** 2))
    s = float(np.sum(y))
    s2 = float(np.sum(y * y))
    return s2 / n - (s / n) ** 2


def _node_value(y: np.ndarray, task: str) -> float:
    if task == "classification":
        return float(np.bincount(y).argmax())
    return float(np.mean(y))


def _best_split(X: np.ndarray, y: np.ndarray, feats: np.ndarray, task: str, n_classes: int):
    """Best (child_term, feature, threshold) over candidate columns.

    Splits are scored by the sample-weighted child impurity term; the
    feature/threshold tie-break is ascending. Returns None when no
    boundary between distinct values exists.
    """
    n = X.shape[0]
    V = X[:, feats]
    order = np.argsort(V, axis=0, kind="stable")
    Vs = np.take_along_axis(V, order, axis=0)
    valid = Vs[:-1] != Vs[1:]
    if not np.any(valid):
        return None
    nL = np.arange(1, n, dtype=float)[:, None]
    nR = n - nL
    if task == "classification":
        onehot = (y[order][:, :, None] == np.arange(n_classes)[None, None, :]).astype(float)
        cum = np.cumsum(onehot, axis=0)[:-1]
        total = onehot.sum(axis=0, keepdims=True)
        right = total - cum
        impL = 1.0 - np.sum((cum / nL[:, :, None]) ** 2, axis=2)
        impR = 1.0 - np.sum((right / nR[:, :, None]) ** 2, axis=2)
    else:
        ys = y[order]
        cs = np.cumsum(ys, axis=0)[:-1]
        cs2 = np.cumsum(ys * ys, axis=0)[:-1]
        stot = cs[-1] + ys[-1]
        s2tot = cs2[-1] + ys[-1] * ys[-1]
        impL = cs2 / nL - (cs / nL) ** 2
        impR = (s2tot - cs2) / nR - ((stot - cs) / nR) ** 2
    term = (nL * impL + nR * impR) / n
    term[~valid] = np.inf
    # transpose so the flat argmax scans features first, boundaries second
    flat = np.argmin(term.T)
    j, b = divmod(flat, term.shape[0])
    if not np.isfinite(term[b, j]):
        return None
    threshold = (Vs[b, j] + Vs[b + 1, j]) / 2.0
    return float(term[b, j]), int(feats[j]), float(threshold)


def _subsample_size(m: int, task: str) -> int:
    if task == "classification":
        return int(np.ceil(np.sqrt(m)))
    return int(np.ceil(m / 3.0))


def fit_cart_tree(
    X: np.ndarray,
    y: np.ndarray,
    task: str,
    rng: np.random.Generator | None = None,
    max_features: int | None = None,
    n_classes: int = 0,
) -> CartTree:
    """Grow one unpruned CART tree (min split 2, min leaf 1).

    A node splits only when the best split strictly reduces impurity;
    ``max_features`` columns are redrawn at every node when set.
    """
    n, m = X.shape
    n_root = n

    def make_node(rows: np.ndarray) -> TreeNode:
        yn = y[rows]
        return TreeNode(
            n_samples=rows.shape[0],
            impurity=_node_impurity(yn, task, n_classes),
            value=_node_value(yn, task),
        )

    root_rows = np.arange(n)
    root = make_node(root_rows)
    stack = [(root, root_rows)]
    while stack:
        node, rows = stack.pop()
        if rows.shape[0] < 2 or node.impurity <= 0.0:
            continue
        if max_features is not None and max_features < m:
            feats = np.sort(rng.choice(m, size=max_features, replace=False))
        else:
            feats = np.arange(m)
        found = _best_split(X[rows], y[rows], feats, task, n_classes)
        if found is None:
            continue
        child_term, feature, threshold = found
        if not child_term < node.impurity:
            continue
        node.feature = feature
        node.threshold = threshold
        node.weighted_decrease = (rows.shape[0] / n_root) * (node.impurity - child_term)
        go_left = X[rows, feature] <= threshold
        left_rows, right_rows = rows[go_left], rows[~go_left]
        node.left = make_node(left_rows)
        node.right = make_node(right_rows)
        # left-first depth-first order keeps rng consumption deterministic
        stack.append((node.right, right_rows))
        stack.append((node.left, left_rows))
    return CartTree(root=root, n_root=n_root)


def fit_tree_ensemble(
    X,
    y,
    n_trees: int,
    task: str,
    seed: int,
    bootstrap: bool = True,
    max_features: int | str | None = "auto",
) -> TreeEnsemble:
    """Fit ``n_trees`` CART trees on bootstrap resamples of (X, y).

    Per-split feature subsampling defaults to ceil(sqrt(m)) for
    classification and ceil(m/3) for regression. Each tree owns a stream
    derived from the seed, so the forest is reproducible regardless of
    how tree fitting is scheduled.
    """
    X = as_matrix(X)
    target = as_target(y, task)
    yv = target.values
    n, m = X.shape
    if m < 1:
        raise DimensionError("need at least one candidate feature")
    if n < 4:
        raise DimensionError("tree fitting needs n >= 4")
    n_classes = 0
    if task == "classification":
        n_classes = int(target.n_classes)
        if np.unique(yv).size < 2:
            raise DegenerateTargetError("classification target has a single class")
    if max_features == "auto":
        k_feats = _subsample_size(m, task)
    else:
        k_feats = max_features
    if k_feats is not None:
        k_feats = min(int(k_feats), m)

    def grow(t: int) -> CartTree:
        rng = derive_rng(seed, "tree", t)
        if bootstrap:
            rows = rng.integers(0, n, size=n)
            Xb, yb = X[rows], yv[rows]
        else:
            Xb, yb = X, yv
        return fit_cart_tree(Xb, yb, task, rng, k_feats, n_classes)

    trees = map_indexed(grow, n_trees)
    return TreeEnsemble(trees=trees, n_features=m, task=task, seed=seed)


def iter_nodes(tree: CartTree):
    """Depth-first (left before right) iteration over all nodes."""
    stack = [tree.root]
    while stack:
        node = stack.pop()
        yield node
        if not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)


def impurity_importance(ensemble: TreeEnsemble) -> np.ndarray:
    """Mean over trees of the weighted impurity decrease per feature."""
    beta = np.zeros(ensemble.n_features)
    for tree in ensemble.trees:
        per_tree = np.zeros(ensemble.n_features)
        for node in iter_nodes(tree):
            if not node.is_leaf:
                per_tree[node.feature] += node.weighted_decrease
        beta += per_tree
    return beta / ensemble.n_trees


def tree_decrease_total(tree: CartTree) -> float:
    return float(
        sum(n.weighted_decrease for n in iter_nodes(tree) if not n.is_leaf)
    )


def tree_leaf_impurity(tree: CartTree) -> float:
    """Root impurity minus sample-weighted leaf impurities."""
    acc = sum(
        n.n_samples / tree.n_root * n.impurity for n in iter_nodes(tree) if n.is_leaf
    )
    return tree.root.impurity - float(acc)


# ---------------------------------------------------------------------------
# Final ranking


@dataclass(frozen=True)
class RankedFeature:
    feature: int
    score: float
    heads: tuple[int, ...] = ()


@dataclass(frozen=True)
class RankedFeatures:
    entries: tuple[RankedFeature, ...]
    ell: int

    def indices(self) -> list[int]:
        return [e.feature for e in self.entries]


def final_rank(
    candidates: CandidateSet, beta: np.ndarray, ell: int
) -> RankedFeatures:
    """Order candidates by descending importance, ascending index on ties."""
    if ell <= 0:
        raise ValueError("ell must be >= 1")
    if len(beta) != candidates.size:
        raise DimensionError("one importance score per candidate required")
    order = sorted(
        range(candidates.size), key=lambda i: (-beta[i], candidates.indices[i])
    )
    entries = tuple(
        RankedFeature(
            feature=candidates.indices[i],
            score=float(beta[i]),
            heads=candidates.provenance[candidates.indices[i]],
        )
        for i in order[: min(ell, candidates.size)]
    )
    return RankedFeatures(entries=entries, ell=ell)


def rerank_candidates(
    X,
    y,
    candidates: CandidateSet,
    task: str,
    n_trees: int,
    seed: int,
    ell: int,
    bootstrap: bool = True,
    max_features: int | str | None = "auto",
) -> tuple[RankedFeatures, TreeEnsemble]:
    """Re-score the candidate columns with a forest and emit the top-ell."""
    X = as_matrix(X)
    cols = np.asarray(candidates.indices, dtype=int)
    ensemble = fit_tree_ensemble(
        X[:, cols], y, n_trees, task, seed, bootstrap=bootstrap, max_features=max_features
    )
    beta = impurity_importance(ensemble)
    return final_rank(candidates, beta, ell), ensemble
