"""Config comparison across the 5 bench replication seeds."""
import sys
import time

import numpy as np

from mafs.attention import MAFSConfig, train_mafs
from mafs.filters import compute_priors
from mafs.pipeline import replication_seed
from mafs.rerank import build_candidate_set, rerank_candidates
from mafs.simulate import make_simulation_spec, simulate_dataset, coverage

CONFIGS = {
    "freeze_lr1e-4": dict(learning_rate=1e-4),
    "sculpt": dict(learning_rate=3e-3, lambda_=3e-2, gamma=0.5, attention_lr_scale=5.0),
    "k60": dict(learning_rate=1e-3, lambda_=1e-4),
}

name = sys.argv[1]
kw = CONFIGS[name]
overalls, logs, lins = [], [], []
for rep in range(5):
    seed = replication_seed(20250810, rep)
    spec = make_simulation_spec(500, 2000, "continuous", "continuous", seed=seed)
    X, y = simulate_dataset(spec)
    Xv = X.values
    t0 = time.time()
    priors = compute_priors(Xv, y)
    cfg = MAFSConfig(seed=seed, ell=40, monitor="total", **kw)
    model = train_mafs(Xv, y, priors, cfg)
    cs = build_candidate_set(model, 60 if name == "k60" else 40)
    ranked, _ = rerank_candidates(Xv, y, cs, model.task, n_trees=500, seed=seed, ell=40)
    rep_cov = coverage(ranked.indices(), spec.assignment)
    causal = set(spec.assignment.causal_indices())
    print(
        f"{name} rep{rep}: {time.time()-t0:.0f}s |S|={cs.size} "
        f"S_causal={len(set(cs.indices) & causal)} overall={rep_cov.overall:.3f} "
        f"log={rep_cov.per_form['log']:.1f} lin={rep_cov.per_form['linear']:.1f}",
        flush=True,
    )
    overalls.append(rep_cov.overall)
    logs.append(rep_cov.per_form["log"])
    lins.append(rep_cov.per_form["linear"])
print(
    f"{name} MEAN overall={np.mean(overalls):.3f} log={np.mean(logs):.2f} lin={np.mean(lins):.2f}"
)