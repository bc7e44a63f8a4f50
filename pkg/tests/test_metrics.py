import numpy as np
import pytest

from mafs.errors import MetricError, SearchError
from mafs.metrics import auroc, knn_evaluate, knn_predict, mlp_evaluate, pearson_r
from mafs.rng import derive_rng
from mafs.search import (
    Choice,
    LogUniform,
    SearchSpace,
    Uniform,
    random_search,
    simulation_search_space,
)


def auroc_pairs(scores, labels):
    """Exhaustive positive/negative pair comparison with 0.5 for ties."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    ties = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                ties += 1.0
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0

    def test_all_equal_scores(self):
        assert auroc([0.3, 0.3, 0.3, 0.3], [0, 1, 0, 1]) == 0.5

    def test_hand_counted_example(self):
        assert auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75

    def test_single_class_rejected(self):
        with pytest.raises(MetricError):
            auroc([0.1, 0.2], [1, 1])

    def test_matches_pair_enumeration_exactly(self):
        rng = derive_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 60))
            scores = np.round(rng.random(n), 2)  # force ties
            labels = rng.integers(0, 2, size=n)
            if labels.min() == labels.max():
                continue
            assert auroc(scores, labels) == auroc_pairs(scores, labels)


class TestPearson:
    def test_identity(self):
        y = derive_rng(1).standard_normal(20)
        assert pearson_r(y, y) == pytest.approx(1.0)

    def test_negation(self):
        y = derive_rng(2).standard_normal(20)
        assert pearson_r(-y, y) == pytest.approx(-1.0)

    def test_hand_value(self):
        assert pearson_r([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 4.0]) == pytest.approx(0.8)

    def test_constant_rejected(self):
        with pytest.raises(MetricError):
            pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


class TestKnn:
    def test_k1_exact_match(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([5.0, 7.0, 9.0])
        pred = knn_predict(X, y, np.array([[1.0]]), k=1, task="regression")
        assert pred[0] == 7.0

    def test_k_equals_train_size_gives_global_mean(self):
        X = derive_rng(3).standard_normal((6, 2))
        y = np.arange(6.0)
        pred = knn_predict(X, y, np.zeros((3, 2)), k=6, task="regression")
        np.testing.assert_allclose(pred, np.full(3, y.mean()))

    def test_hand_enumerated_neighbor_means(self):
        X = np.array([[0.0], [1.0], [2.0], [10.0]])
        y = np.array([1.0, 2.0, 3.0, 40.0])
        # k=3 from 1.1: neighbors are x=1, 2, 0 -> mean(2, 3, 1) = 2
        pred = knn_predict(X, y, np.array([[1.1]]), k=3, task="regression")
        assert pred[0] == pytest.approx(2.0)

    def test_classification_vote_fraction(self):
        X = np.array([[0.0], [0.1], [0.2], [5.0]])
        y = np.array([1, 1, 0, 0])
        pred = knn_predict(X, y, np.array([[0.05]]), k=3, task="classification")
        assert pred[0] == pytest.approx(2 / 3)

    def test_evaluate_classification_auroc(self):
        rng = derive_rng(4)
        X = rng.standard_normal((80, 3))
        y = (X[:, 0] > 0).astype(int)
        score = knn_evaluate(X[:60], y[:60], X[60:], y[60:], k=5, task="classification")
        assert score > 0.8

    def test_empty_train_rejected(self):
        with pytest.raises(ValueError):
            knn_predict(np.zeros((0, 2)), np.zeros(0), np.zeros((1, 2)), 1, "regression")


class TestMlpEvaluate:
    def test_regression_recovers_linear_signal(self):
        rng = derive_rng(5)
        X = rng.standard_normal((120, 4))
        y = 2.0 * X[:, 0] + 0.1 * rng.standard_normal(120)
        r = mlp_evaluate(X[:90], y[:90], X[90:], y[90:], "regression", seed=1,
                         hidden_dims=(16, 8), max_epochs=60)
        assert r > 0.8

    def test_classification_auroc_above_chance(self):
        rng = derive_rng(6)
        X = rng.standard_normal((120, 4))
        y = (X[:, 1] > 0).astype(int)
        a = mlp_evaluate(X[:90], y[:90], X[90:], y[90:], "classification", seed=2,
                         hidden_dims=(16, 8), max_epochs=60)
        assert a > 0.8


class TestRandomSearch:
    def test_budget_one_returns_single_config(self):
        space = SearchSpace({"x": Uniform(0, 1)}, budget=1, seed=0)
        best, trials = random_search(space, lambda cfg: 1.0)
        assert len(trials) == 1 and best == trials[0].config

    def test_constant_objective_ties_go_to_first_trial(self):
        space = SearchSpace({"x": Uniform(0, 1)}, budget=10, seed=1)
        best, trials = random_search(space, lambda cfg: 42.0)
        assert best == trials[0].config

    def test_quadratic_objective_nearest_sample_wins(self):
        target = 3e-3
        space = SearchSpace({"lr": LogUniform(1e-5, 1e-1)}, budget=20, seed=2)
        best, trials = random_search(space, lambda cfg: -(cfg["lr"] - target) ** 2)
        sampled = [t.config["lr"] for t in trials]
        assert best["lr"] == min(sampled, key=lambda v: abs(v - target))

    def test_failed_trials_logged_and_skipped(self):
        space = SearchSpace({"x": Uniform(0, 1)}, budget=6, seed=3)
        calls = []

        def objective(cfg):
            calls.append(cfg["x"])
            if len(calls) % 2 == 0:
                raise RuntimeError("boom")
            return cfg["x"]

        best, trials = random_search(space, objective)
        assert sum(t.failed for t in trials) == 3
        assert best["x"] == max(c for i, c in enumerate(calls) if i % 2 == 0)

    def test_all_failed_raises(self):
        space = SearchSpace({"x": Uniform(0, 1)}, budget=3, seed=4)

        def objective(cfg):
            raise RuntimeError("nope")

        with pytest.raises(SearchError):
            random_search(space, objective)

    def test_sampling_deterministic(self):
        space = simulation_search_space("mafs", budget=5, seed=7)
        _, t1 = random_search(space, lambda cfg: cfg["learning_rate"])
        _, t2 = random_search(space, lambda cfg: cfg["learning_rate"])
        assert [t.config for t in t1] == [t.config for t in t2]

    def test_simulation_ranges_respected(self):
        space = simulation_search_space("cancelout", budget=40, seed=8)
        _, trials = random_search(space, lambda cfg: 0.0)
        for t in trials:
            assert 1e-6 <= t.config["learning_rate"] <= 1e-4
            assert 1e-5 <= t.config["lambda1"] <= 1e-1
            assert t.config["batch_size"] == 32

    def test_choice_values(self):
        c = Choice((1, 2, 3))
        rng = derive_rng(9)
        assert all(c.sample(rng) in (1, 2, 3) for _ in range(20))
