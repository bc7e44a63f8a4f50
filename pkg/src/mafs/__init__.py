"""Feature selection by filter-guided multi-head attention with re-ranking.

The package keeps this module import-light so the command-line entry point
can pin BLAS thread counts before numpy loads; the public API is re-exported
lazily.
"""

__version__ = "0.1.0"

_EXPORTS = {
    "DataMatrix": "data",
    "TargetVector": "data",
    "compute_priors": "filters",
    "pearson_sis": "filters",
    "kendall_tau": "filters",
    "distance_corr": "filters",
    "normalize_prior": "filters",
    "MAFSConfig": "attention",
    "MAFSModel": "attention",
    "train_mafs": "attention",
    "adaptive_penalty": "attention",
    "head_ranking": "attention",
    "build_candidate_set": "rerank",
    "fit_tree_ensemble": "rerank",
    "impurity_importance": "rerank",
    "final_rank": "rerank",
    "SimulationSpec": "simulate",
    "CausalAssignment": "simulate",
    "make_simulation_spec": "simulate",
    "gen_features": "simulate",
    "compute_mu": "simulate",
    "gen_outcome": "simulate",
    "coverage": "simulate",
    "default_effect_sizes": "simulate",
    "simulate_dataset": "simulate",
    "BaselineConfig": "baselines",
    "train_baseline": "baselines",
    "auroc": "metrics",
    "pearson_r": "metrics",
    "knn_evaluate": "metrics",
    "mlp_evaluate": "metrics",
    "SearchSpace": "search",
    "random_search": "search",
    "select_features": "pipeline",
    "score_coverage": "pipeline",
}


def __getattr__(name):
    module = _EXPORTS.get(name)
    if module is None:
        raise AttributeError(f"module 'mafs' has no attribute {name!r}")
    import importlib

    return getattr(importlib.import_module(f".{module}", __name__), name)


def __dir__():
    return sorted(set(globals()) | set(_EXPORTS))
