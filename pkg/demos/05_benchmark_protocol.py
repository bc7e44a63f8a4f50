"""A miniature replicated benchmark with selection-ratio sweeps.

Small-scale version of the full study: several replications, several
selection ratios, mean coverage with confidence intervals. The full-size
protocol is available from the command line:

    mafs bench --n 500 --d 2000 --replications 5 --seed 1 --out-dir results/
"""

from mafs.attention import MAFSConfig
from mafs.baselines import BaselineConfig
from mafs.pipeline import run_bench
from mafs.simulate import EffectSizes

beta = EffectSizes(
    linear=1.5, cosine=4.0, log=3.0, cubic=0.7, exp=1.2, combined=0.4, interaction=1.2
)
rows, summary = run_bench(
    n=200,
    d=400,
    feature_type="continuous",
    outcome_type="continuous",
    methods=("mafs", "earfs_filter_init"),
    replications=3,
    seed=17,
    ratios_pct=(2.0, 5.0, 10.0),
    mafs_config=MAFSConfig(hidden_dim=32, max_epochs=25, n_trees=200),
    baseline_config=BaselineConfig(hidden_dim=32, max_epochs=25),
    beta=beta,
)

print("method             ratio  mean_coverage  ci95")
for s in summary:
    print(f"{s.method:18s} {s.ratio_pct:5.1f}  {s.mean_overall:12.3f}  {s.ci95:.3f}")
