import math

import numpy as np
import pytest

from mafs.data import CATEGORICAL, CONTINUOUS
from mafs.errors import EffectSizeLookupError
from mafs.rng import derive_rng
from mafs.simulate import (
    CausalAssignment,
    EffectSizes,
    SimulationSpec,
    column_kinds,
    compute_mu,
    coverage,
    default_effect_sizes,
    gen_features,
    gen_outcome,
    make_assignment,
    make_simulation_spec,
    simulate_dataset,
)


def zero_effects(**overrides):
    base = dict(linear=0.0, cosine=0.0, log=0.0, cubic=0.0, exp=0.0,
                combined=0.0, interaction=0.0)
    base.update(overrides)
    return EffectSizes(**base)


class TestEffectSizes:
    def test_n2000_continuous_continuous_row(self):
        es = default_effect_sizes(2000, "continuous", "continuous")
        assert es.as_tuple() == (0.3, 1.0, 1.0, 0.12, 0.15, 0.05, 0.25)

    def test_n500_continuous_binary_row(self):
        es = default_effect_sizes(500, "continuous", "binary")
        assert es.as_tuple() == (1.5, 3.0, 2.0, 0.5, 1.0, 0.4, 1.0)

    def test_n2000_categorical_continuous_row(self):
        es = default_effect_sizes(2000, "categorical", "continuous")
        assert es.as_tuple() == (1.0, 1.0, 0.05, 0.5, 0.3, 0.1, 0.15)

    def test_combined_has_per_kind_rows(self):
        es = default_effect_sizes(500, "combined", "continuous")
        assert es[CONTINUOUS].as_tuple() == (3.0, 4.0, 3.0, 0.5, 0.8, 0.4, 1.5)
        assert es[CATEGORICAL].as_tuple() == (3.0, 4.0, 0.3, 0.8, 1.2, 0.5, 1.5)

    def test_unknown_cell_raises(self):
        with pytest.raises(EffectSizeLookupError):
            default_effect_sizes(1000, "continuous", "continuous")


class TestAssignment:
    def test_single_kind_cardinalities(self):
        assignment = make_assignment(2000, "continuous", derive_rng(0, "a"))
        assert assignment.n_causal == 40
        for form in ("linear", "cosine", "log", "cubic", "exp", "combined"):
            assert len(assignment.form_members(form)) == 5
        assert len(assignment.interaction_pairs) == 5

    def test_combined_cardinalities(self):
        assignment = make_assignment(2000, "combined", derive_rng(1, "a"))
        assert assignment.n_causal == 48
        for form in ("linear", "cosine", "log", "cubic", "exp", "combined"):
            members = assignment.form_members(form)
            assert len(members) == 6
            kinds = [assignment.kind_by_index[i] for i in members]
            assert kinds.count(CONTINUOUS) == 3 and kinds.count(CATEGORICAL) == 3
        assert len(assignment.interaction_pairs) == 6
        for g, h in assignment.interaction_pairs:
            assert assignment.kind_by_index[g] == assignment.kind_by_index[h]

    def test_disjointness_enforced(self):
        with pytest.raises(ValueError):
            CausalAssignment(
                linear=(1,), cosine=(1,), log=(), cubic=(), exp=(),
                combined=(), interaction_pairs=(),
            )

    def test_dict_round_trip(self):
        assignment = make_assignment(500, "continuous", derive_rng(2, "a"))
        back = CausalAssignment.from_dict(assignment.to_dict())
        assert back.causal_indices() == assignment.causal_indices()
        assert back.interaction_pairs == assignment.interaction_pairs

    def test_disjointness_over_many_seeds(self):
        for seed in range(30):
            for ftype, total in (("continuous", 40), ("combined", 48)):
                assignment = make_assignment(300, ftype, derive_rng(seed, "x"))
                assert assignment.n_causal == total  # duplicate would raise


class TestGenFeatures:
    def test_categorical_values_in_support(self):
        spec = make_simulation_spec(200, 60, "categorical", "continuous", seed=3,
                                    beta=zero_effects(linear=1.0))
        X = gen_features(spec)
        assert set(np.unique(X.values)) <= {0.0, 1.0, 2.0}

    def test_same_seed_identical(self):
        spec = make_simulation_spec(50, 60, "continuous", "continuous", seed=4,
                                    beta=zero_effects(linear=1.0))
        np.testing.assert_array_equal(gen_features(spec).values, gen_features(spec).values)

    def test_continuous_moments(self):
        spec = SimulationSpec(n=10000, d=1, seed=5)
        X = gen_features(spec)
        col = X.values[:, 0]
        assert abs(col.mean()) < 0.05
        assert abs(col.std() - 1.0) < 0.05

    def test_combined_interleaves_kinds(self):
        kinds = column_kinds("combined", 6)
        assert kinds == (CONTINUOUS, CATEGORICAL) * 3


def tiny_assignment(**kw):
    base = dict(linear=(), cosine=(), log=(), cubic=(), exp=(), combined=(),
                interaction_pairs=())
    base.update(kw)
    return CausalAssignment(**base)


class TestComputeMu:
    def test_zero_effects_zero_mu(self):
        X = derive_rng(6).standard_normal((10, 5))
        assignment = make_assignment(5, "continuous", derive_rng(7, "a")) if False else tiny_assignment(
            linear=(0,), cosine=(1,)
        )
        mu = compute_mu(X, assignment, zero_effects())
        assert np.all(mu == 0.0)

    def test_single_linear_feature(self):
        X = derive_rng(8).standard_normal((12, 4))
        assignment = tiny_assignment(linear=(2,))
        mu = compute_mu(X, assignment, zero_effects(linear=2.0))
        np.testing.assert_allclose(mu, 2.0 * X[:, 2])

    def test_hand_evaluated_row(self):
        X = np.array([[1.0, 0.0]])
        assignment = tiny_assignment(linear=(0,), cosine=(1,))
        mu = compute_mu(X, assignment, zero_effects(linear=0.3, cosine=1.0))
        assert mu[0] == pytest.approx(0.3 * 1.0 + 1.0 * math.cos(0.0))

    def test_all_seven_forms_hand_row(self):
        x = np.array([[0.5, -1.0, 2.0, 1.5, -0.5, 0.8, 1.2, -2.0]])
        assignment = tiny_assignment(
            linear=(0,), cosine=(1,), log=(2,), cubic=(3,), exp=(4,),
            combined=(5,), interaction_pairs=((6, 7),),
        )
        beta = EffectSizes(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0)
        v = x[0]
        want = (
            1.0 * v[0]
            + 2.0 * math.cos(v[1])
            + 3.0 * math.log(abs(v[2]) + 1e-6)
            + 4.0 * v[3] ** 3
            + 5.0 * math.exp(v[4])
            + 6.0 * (math.cos(v[5]) + math.log(abs(v[5]) + 1e-6) + v[5] ** 3 + math.exp(v[5]))
            + 7.0 * math.cos(v[6]) * math.exp(v[7])
        )
        assert compute_mu(x, assignment, beta)[0] == pytest.approx(want, rel=1e-12)

    def test_row_separability(self):
        spec = make_simulation_spec(40, 80, seed=9, beta=zero_effects(linear=1.0, exp=0.5))
        X = gen_features(spec)
        mu = compute_mu(X, spec.assignment, spec.beta)
        perm = derive_rng(10).permutation(40)
        mu_perm = compute_mu(X.values[perm], spec.assignment, spec.beta)
        np.testing.assert_array_equal(mu_perm, mu[perm])


class TestGenOutcome:
    def test_constant_mu_binary_balanced_exactly(self):
        mu = np.full(2000, 3.7)
        y = gen_outcome(mu, "binary", derive_rng(11))
        # centering forces p = 0.5 for every sample
        assert abs(y.values.mean() - 0.5) < 0.08

    def test_zero_noise_returns_mu(self):
        mu = derive_rng(12).standard_normal(30)
        y = gen_outcome(mu, "continuous", derive_rng(13), noise_scale=0.0)
        np.testing.assert_array_equal(y.values, mu)

    def test_logistic_arithmetic(self):
        # centered mu of log(3) gives p = 0.75
        mu = np.array([math.log(3.0), -math.log(3.0)])
        centered = mu - mu.mean()
        p = 1.0 / (1.0 + np.exp(-centered))
        assert p[0] == pytest.approx(0.75)

    def test_binary_balance_at_spec_scale(self):
        spec = make_simulation_spec(2000, 2000, "continuous", "binary", seed=14)
        _, y = simulate_dataset(spec)
        assert abs(y.values.mean() - 0.5) < 0.08


class TestCoverage:
    def setup_method(self):
        self.assignment = make_assignment(500, "continuous", derive_rng(15, "a"))

    def test_full_recovery(self):
        report = coverage(self.assignment.causal_indices(), self.assignment)
        assert report.overall == 1.0
        assert all(v == 1.0 for v in report.per_form.values())

    def test_empty_intersection(self):
        non_causal = [i for i in range(500) if i not in self.assignment.causal_indices()]
        report = coverage(non_causal[:40], self.assignment)
        assert report.overall == 0.0
        assert all(v == 0.0 for v in report.per_form.values())

    def test_ratio_arithmetic(self):
        causal = self.assignment.causal_indices()
        report = coverage(causal[:20], self.assignment)
        assert report.overall == pytest.approx(20 / 40)

    def test_monotone_in_selection(self):
        rng = derive_rng(16)
        ranking = rng.permutation(500)
        prev = None
        for size in (10, 20, 30, 40, 100):
            report = coverage(ranking[:size], self.assignment)
            if prev is not None:
                assert report.overall >= prev.overall
                for form in report.per_form:
                    assert report.per_form[form] >= prev.per_form[form]
            prev = report

    def test_interaction_counts_members_individually(self):
        g, h = self.assignment.interaction_pairs[0]
        report = coverage([g], self.assignment)
        assert report.per_form["interaction"] == pytest.approx(1 / 10)


class TestDeterminism:
    def test_dataset_reproducible(self):
        spec = make_simulation_spec(100, 120, "combined", "binary", seed=17,
                                     beta=default_effect_sizes(500, "combined", "binary"))
        X1, y1 = simulate_dataset(spec)
        X2, y2 = simulate_dataset(spec)
        np.testing.assert_array_equal(X1.values, X2.values)
        np.testing.assert_array_equal(y1.values, y2.values)
