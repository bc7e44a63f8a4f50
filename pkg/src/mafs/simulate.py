"""Synthetic benchmark generator and coverage scoring.

Feature matrices are standard-normal (continuous), Binomial(2, maf)
genotype-style counts (categorical), or a 50/50 interleave of both. A
seeded causal assignment partitions causal features across seven
functional forms; the outcome mean combines them additively and targets
are drawn as Gaussian (continuous) or balanced Bernoulli (binary).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import CATEGORICAL, CONTINUOUS, DataMatrix, TargetVector, as_matrix
from .errors import DimensionError, EffectSizeLookupError
from .rng import derive_rng

LOG_SHIFT = 1e-6

FORMS = ("linear", "cosine", "log", "cubic", "exp", "combined", "interaction")

SINGLE_KIND_SET_SIZE = 5
SINGLE_KIND_PAIR_MEMBERS = 10
COMBINED_SET_SIZE = 3
COMBINED_PAIR_MEMBERS = 6


@dataclass(frozen=True)
class EffectSizes:
    """Coefficients for the seven feature-outcome relationship types."""

    linear: float
    cosine: float
    log: float
    cubic: float
    exp: float
    combined: float
    interaction: float

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.linear,
            self.cosine,
            self.log,
            self.cubic,
            self.exp,
            self.combined,
            self.interaction,
        )


# (n, feature_type, outcome_type) -> EffectSizes, or per-kind dict for combined
EFFECT_TABLE = {
    (500, "continuous", "binary"): EffectSizes(1.5, 3.0, 2.0, 0.5, 1.0, 0.4, 1.0),
    (500, "continuous", "continuous"): EffectSizes(1.5, 4.0, 3.0, 0.7, 1.2, 0.4, 1.2),
    (500, "categorical", "binary"): EffectSizes(1.5, 3.0, 0.15, 1.5, 1.0, 0.4, 1.2),
    (500, "categorical", "continuous"): EffectSizes(1.5, 3.0, 0.15, 1.5, 1.2, 0.4, 1.0),
    (500, "combined", "binary"): {
        CONTINUOUS: EffectSizes(1.5, 4.0, 2.0, 0.5, 0.8, 0.3, 1.0),
        CATEGORICAL: EffectSizes(1.5, 4.0, 0.4, 1.5, 0.8, 0.3, 1.0),
    },
    (500, "combined", "continuous"): {
        CONTINUOUS: EffectSizes(3.0, 4.0, 3.0, 0.5, 0.8, 0.4, 1.5),
        CATEGORICAL: EffectSizes(3.0, 4.0, 0.3, 0.8, 1.2, 0.5, 1.5),
    },
    (2000, "continuous", "binary"): EffectSizes(0.4, 1.5, 0.7, 0.15, 0.2, 0.08, 0.25),
    (2000, "continuous", "continuous"): EffectSizes(0.3, 1.0, 1.0, 0.12, 0.15, 0.05, 0.25),
    (2000, "categorical", "binary"): EffectSizes(0.4, 1.0, 0.1, 0.6, 0.6, 0.15, 0.3),
    (2000, "categorical", "continuous"): EffectSizes(1.0, 1.0, 0.05, 0.5, 0.3, 0.1, 0.15),
    (2000, "combined", "binary"): {
        CONTINUOUS: EffectSizes(0.2, 1.0, 0.5, 0.1, 0.08, 0.04, 0.15),
        CATEGORICAL: EffectSizes(0.3, 1.0, 0.05, 0.4, 0.15, 0.04, 0.2),
    },
    (2000, "combined", "continuous"): {
        CONTINUOUS: EffectSizes(0.2, 1.0, 0.5, 0.05, 0.08, 0.04, 0.15),
        CATEGORICAL: EffectSizes(0.3, 1.0, 0.05, 0.3, 0.15, 0.02, 0.2),
    },
}


def default_effect_sizes(n: int, feature_type: str, outcome_type: str):
    """Effect sizes for a grid cell; combined feature types get one
    EffectSizes per component kind."""
    try:
        return EFFECT_TABLE[(int(n), feature_type, outcome_type)]
    except KeyError:
        raise EffectSizeLookupError(
            f"no effect sizes defined for n={n}, features={feature_type!r}, "
            f"outcome={outcome_type!r}"
        ) from None


@dataclass(frozen=True)
class CausalAssignment:
    """Disjoint causal index sets per functional form plus interaction pairs."""

    linear: tuple[int, ...]
    cosine: tuple[int, ...]
    log: tuple[int, ...]
    cubic: tuple[int, ...]
    exp: tuple[int, ...]
    combined: tuple[int, ...]
    interaction_pairs: tuple[tuple[int, int], ...]
    kind_by_index: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        groups = [
            self.linear,
            self.cosine,
            self.log,
            self.cubic,
            self.exp,
            self.combined,
            self.pair_members(),
        ]
        seen: set[int] = set()
        for group in groups:
            for idx in group:
                if idx in seen:
                    raise ValueError(f"causal index {idx} assigned twice")
                seen.add(idx)

    def pair_members(self) -> tuple[int, ...]:
        return tuple(i for pair in self.interaction_pairs for i in pair)

    def form_members(self, form: str) -> tuple[int, ...]:
        if form == "interaction":
            return self.pair_members()
        return getattr(self, form)

    def causal_indices(self) -> tuple[int, ...]:
        out: list[int] = []
        for form in FORMS:
            out.extend(self.form_members(form))
        return tuple(sorted(out))

    @property
    def n_causal(self) -> int:
        return len(self.causal_indices())

    def to_dict(self) -> dict:
        return {
            "sets": {
                "A": list(self.linear),
                "B": list(self.cosine),
                "C": list(self.log),
                "D": list(self.cubic),
                "E": list(self.exp),
                "F": list(self.combined),
            },
            "pairs": [list(p) for p in self.interaction_pairs],
        }

    @classmethod
    def from_dict(cls, data: dict, kinds: dict[int, str] | None = None) -> "CausalAssignment":
        sets = data["sets"]
        return cls(
            linear=tuple(sets["A"]),
            cosine=tuple(sets["B"]),
            log=tuple(sets["C"]),
            cubic=tuple(sets["D"]),
            exp=tuple(sets["E"]),
            combined=tuple(sets["F"]),
            interaction_pairs=tuple((int(g), int(h)) for g, h in data["pairs"]),
            kind_by_index=kinds or {},
        )


@dataclass(frozen=True)
class SimulationSpec:
    n: int
    d: int
    feature_type: str = "continuous"
    outcome_type: str = "continuous"
    beta: EffectSizes | dict | None = None
    assignment: CausalAssignment | None = None
    seed: int = 0

    def __post_init__(self):
        if self.feature_type not in ("continuous", "categorical", "combined"):
            raise ValueError(f"unknown feature type {self.feature_type!r}")
        if self.outcome_type not in ("continuous", "binary"):
            raise ValueError(f"unknown outcome type {self.outcome_type!r}")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be >= 1")


def column_kinds(feature_type: str, d: int) -> tuple[str, ...]:
    """Kind tags per column; combined interleaves the two kinds 50/50."""
    if feature_type == "continuous":
        return (CONTINUOUS,) * d
    if feature_type == "categorical":
        return (CATEGORICAL,) * d
    return tuple(CONTINUOUS if i % 2 == 0 else CATEGORICAL for i in range(d))


def make_assignment(d: int, feature_type: str, rng: np.random.Generator) -> CausalAssignment:
    """Draw causal indices without replacement and partition them in
    fixed order across the six sets and the interaction pairs."""
    kinds = column_kinds(feature_type, d)
    if feature_type == "combined":
        per_kind_total = 6 * COMBINED_SET_SIZE + COMBINED_PAIR_MEMBERS
        pools = {
            CONTINUOUS: np.array([i for i in range(d) if kinds[i] == CONTINUOUS]),
            CATEGORICAL: np.array([i for i in range(d) if kinds[i] == CATEGORICAL]),
        }
        chosen = {}
        for kind in (CONTINUOUS, CATEGORICAL):
            pool = pools[kind]
            if pool.shape[0] < per_kind_total:
                raise DimensionError(
                    f"need >= {per_kind_total} {kind} columns, have {pool.shape[0]}"
                )
            chosen[kind] = pool[rng.choice(pool.shape[0], size=per_kind_total, replace=False)]
        sets: list[list[int]] = [[] for _ in range(6)]
        pairs: list[tuple[int, int]] = []
        for kind in (CONTINUOUS, CATEGORICAL):
            take = chosen[kind]
            pos = 0
            for s in range(6):
                sets[s].extend(int(i) for i in take[pos : pos + COMBINED_SET_SIZE])
                pos += COMBINED_SET_SIZE
            members = take[pos:]
            for a, b in zip(members[0::2], members[1::2]):
                pairs.append((int(a), int(b)))
    else:
        total = 6 * SINGLE_KIND_SET_SIZE + SINGLE_KIND_PAIR_MEMBERS
        if d < total:
            raise DimensionError(f"need d >= {total}, got {d}")
        take = rng.choice(d, size=total, replace=False)
        sets = []
        pos = 0
        for _ in range(6):
            sets.append([int(i) for i in take[pos : pos + SINGLE_KIND_SET_SIZE]])
            pos += SINGLE_KIND_SET_SIZE
        members = take[pos:]
        pairs = [(int(a), int(b)) for a, b in zip(members[0::2], members[1::2])]
    kind_map = {int(i): kinds[int(i)] for group in sets for i in group}
    for g, h in pairs:
        kind_map[g] = kinds[g]
        kind_map[h] = kinds[h]
    return CausalAssignment(
        linear=tuple(sets[0]),
        cosine=tuple(sets[1]),
        log=tuple(sets[2]),
        cubic=tuple(sets[3]),
        exp=tuple(sets[4]),
        combined=tuple(sets[5]),
        interaction_pairs=tuple(pairs),
        kind_by_index=kind_map,
    )


def make_simulation_spec(
    n: int,
    d: int,
    feature_type: str = "continuous",
    outcome_type: str = "continuous",
    seed: int = 0,
    beta=None,
) -> SimulationSpec:
    """Assemble a spec with seeded assignment and table-default effects."""
    rng = derive_rng(seed, "assignment")
    assignment = make_assignment(d, feature_type, rng)
    if beta is None:
        beta = default_effect_sizes(n, feature_type, outcome_type)
    return SimulationSpec(
        n=n,
        d=d,
        feature_type=feature_type,
        outcome_type=outcome_type,
        beta=beta,
        assignment=assignment,
        seed=seed,
    )


def gen_features(spec: SimulationSpec) -> DataMatrix:
    """Standard-normal continuous columns; Binomial(2, maf) categorical
    columns with per-column maf ~ Uniform(0.05, 0.5)."""
    rng = derive_rng(spec.seed, "features")
    kinds = column_kinds(spec.feature_type, spec.d)
    values = np.empty((spec.n, spec.d))
    cont_cols = [i for i in range(spec.d) if kinds[i] == CONTINUOUS]
    cat_cols = [i for i in range(spec.d) if kinds[i] == CATEGORICAL]
    if cont_cols:
        values[:, cont_cols] = rng.standard_normal((spec.n, len(cont_cols)))
    if cat_cols:
        maf = rng.uniform(0.05, 0.5, size=len(cat_cols))
        values[:, cat_cols] = rng.binomial(2, maf, size=(spec.n, len(cat_cols)))
    return DataMatrix(values=values, kinds=kinds)


def _beta_for(beta, kind: str) -> EffectSizes:
    if isinstance(beta, EffectSizes):
        return beta
    return beta[kind]


def compute_mu(X, assignment: CausalAssignment, beta) -> np.ndarray:
    """Additive mean over the seven functional forms.

    Logs are stabilized as log(|x| + 1e-6); the combined form applies all
    four nonlinear transforms to the same features; interaction pairs
    contribute cos(x_g) * exp(x_h).
    """
    kinds = X.kinds if isinstance(X, DataMatrix) else None
    X = as_matrix(X)
    n, d = X.shape
    if assignment.causal_indices() and max(assignment.causal_indices()) >= d:
        raise DimensionError("assignment references columns beyond d")

    def kind_of(idx: int) -> str:
        if assignment.kind_by_index:
            return assignment.kind_by_index.get(idx, CONTINUOUS)
        if kinds is not None:
            return kinds[idx]
        return CONTINUOUS

    mu = np.zeros(n)
    transforms = {
        "linear": lambda v: v,
        "cosine": np.cos,
        "log": lambda v: np.log(np.abs(v) + LOG_SHIFT),
        "cubic": lambda v: v**3,
        "exp": np.exp,
    }
    for form, fn in transforms.items():
        for idx in assignment.form_members(form):
            mu += getattr(_beta_for(beta, kind_of(idx)), form) * fn(X[:, idx])
    for idx in assignment.combined:
        coef = _beta_for(beta, kind_of(idx)).combined
        v = X[:, idx]
        mu += coef * (np.cos(v) + np.log(np.abs(v) + LOG_SHIFT) + v**3 + np.exp(v))
    for g, h in assignment.interaction_pairs:
        coef = _beta_for(beta, kind_of(g)).interaction
        mu += coef * np.cos(X[:, g]) * np.exp(X[:, h])
    return mu


def gen_outcome(
    mu: np.ndarray,
    outcome_type: str,
    rng: np.random.Generator,
    noise_scale: float = 1.0,
) -> TargetVector:
    """Gaussian outcome around mu, or balanced Bernoulli via centered mu."""
    mu = np.asarray(mu, dtype=float)
    if not np.all(np.isfinite(mu)):
        raise ValueError("mu contains non-finite entries")
    if outcome_type == "continuous":
        y = mu + noise_scale * rng.standard_normal(mu.shape[0])
        return TargetVector(values=y, task="regression")
    if outcome_type == "binary":
        centered = mu - mu.mean()
        p = 1.0 / (1.0 + np.exp(-centered))
        y = (rng.random(mu.shape[0]) < p).astype(int)
        return TargetVector(values=y, task="classification", n_classes=2)
    raise ValueError(f"unknown outcome type {outcome_type!r}")


def simulate_dataset(spec: SimulationSpec):
    """Generate (X, y) for a spec; deterministic in the spec seed."""
    X = gen_features(spec)
    mu = compute_mu(X, spec.assignment, spec.beta)
    y = gen_outcome(mu, spec.outcome_type, derive_rng(spec.seed, "outcome"))
    return X, y


@dataclass(frozen=True)
class CoverageReport:
    overall: float
    per_form: dict[str, float]
    selected_count: int
    causal_count: int

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "per_form": dict(self.per_form),
            "selected_count": self.selected_count,
            "causal_count": self.causal_count,
        }


def coverage(selected, assignment: CausalAssignment) -> CoverageReport:
    """Fraction of causal features recovered, overall and per form."""
    chosen = set(int(i) for i in selected)
    per_form: dict[str, float] = {}
    for form in FORMS:
        members = assignment.form_members(form)
        if members:
            per_form[form] = len(chosen & set(members)) / len(members)
        else:
            per_form[form] = 0.0
    causal = assignment.causal_indices()
    overall = len(chosen & set(causal)) / len(causal) if causal else 0.0
    return CoverageReport(
        overall=overall,
        per_form=per_form,
        selected_count=len(chosen),
        causal_count=len(causal),
    )
