"""End-to-end selection with candidate union and forest re-ranking.

Runs the whole pipeline on one synthetic dataset and scores the selection
against the generator's ground truth.
"""

from mafs.attention import MAFSConfig
from mafs.pipeline import select_features
from mafs.simulate import EffectSizes, make_simulation_spec, simulate_dataset, coverage

beta = EffectSizes(
    linear=1.5, cosine=4.0, log=3.0, cubic=0.7, exp=1.2, combined=0.4, interaction=1.2
)
spec = make_simulation_spec(
    n=300, d=500, feature_type="continuous", outcome_type="continuous", seed=3, beta=beta
)
X, y = simulate_dataset(spec)

config = MAFSConfig(hidden_dim=64, max_epochs=40, n_trees=300, ell=40, seed=3)
records = select_features(X.values, y, config)

print("rank feature importance nominating_heads")
for r in records[:15]:
    print(f"{r.rank:4d} {r.feature:7d} {r.score:10.4f} {r.heads}")

report = coverage([r.feature for r in records], spec.assignment)
print(f"\noverall coverage at {len(records)} selected: {report.overall:.3f}")
for form, value in report.per_form.items():
    print(f"  {form:12s} {value:.2f}")
