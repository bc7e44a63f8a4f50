"""Marginal screening on a synthetic dataset.

Generates a small benchmark, runs the three filters (absolute Pearson,
Kendall tau-b, distance correlation), and shows how differently they rank
features with linear versus even-symmetric effects.
"""

import numpy as np

from mafs.filters import compute_priors
from mafs.simulate import EffectSizes, make_simulation_spec, simulate_dataset

beta = EffectSizes(
    linear=1.5, cosine=4.0, log=3.0, cubic=0.7, exp=1.2, combined=0.4, interaction=1.2
)
spec = make_simulation_spec(
    n=300, d=400, feature_type="continuous", outcome_type="continuous", seed=7, beta=beta
)
X, y = simulate_dataset(spec)
print(f"data: n={spec.n}, d={spec.d}, causal features: {spec.assignment.n_causal}")

priors = compute_priors(X.values, y)

for prior in priors:
    top = np.argsort(-np.abs(prior.normalized))[:20]
    hits = {
        form: len(set(top.tolist()) & set(spec.assignment.form_members(form)))
        for form in ("linear", "cosine", "log", "cubic", "exp")
    }
    print(f"\n{prior.method}: top-20 causal hits by form: {hits}")
    print(f"  normalized scores: mean={prior.normalized.mean():.1e}, sd={prior.normalized.std():.3f}")

# log(|x|) and cos(x) are even in x: Pearson and Kendall are nearly blind
# to them, distance correlation is not. That asymmetry is why each filter
# seeds its own attention head downstream.
