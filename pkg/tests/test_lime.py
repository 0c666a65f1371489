import math

import numpy as np
import pytest

from thyrec.data import CATEGORICAL, Feature, FeatureSchema, Scaler
from thyrec.lime import (Discretizer, LimeConfig, SingularSystemError, build_stats,
                         explain, fit_discretizer, fit_surrogate, kernel_weight,
                         sample_perturbations)


def toy_schema(kinds_vocabs):
    feats = []
    for i, (kind, vocab) in enumerate(kinds_vocabs):
        feats.append(Feature(f"c{i}", kind, vocab))
    return FeatureSchema(tuple(feats), "y", ("No", "Yes"))


class TestDiscretizer:
    def test_quartile_edges_one_to_eight(self):
        X = np.arange(1.0, 9.0)[:, None]
        disc = fit_discretizer(X, schema=None)
        assert disc.edges[0] == pytest.approx([2.75, 4.5, 6.25], abs=1e-12)

    def test_constant_feature_single_bin(self):
        X = np.full((10, 1), 3.0)
        disc = fit_discretizer(X, schema=None)
        assert disc.edges[0].tolist() == [3.0, 3.0, 3.0]
        assert len({disc.bin_key(0, v) for v in X[:, 0]}) == 1

    def test_categorical_pass_through(self):
        schema = toy_schema([(CATEGORICAL, ("a", "b"))])
        disc = fit_discretizer(np.array([[0.0], [1.0], [0.0], [1.0]]), schema)
        assert disc.edges[0] is None
        assert disc.bin_key(0, 1.0) == 1.0

    def test_bin_assignment(self):
        disc = Discretizer(kinds=["numeric"], edges=[np.array([2.75, 4.5, 6.25])])
        assert disc.bin_key(0, 1.0) == 0
        assert disc.bin_key(0, 3.0) == 1
        assert disc.bin_key(0, 4.5) == 1      # boundary belongs to the lower bin
        assert disc.bin_key(0, 5.0) == 2
        assert disc.bin_key(0, 9.0) == 3

    def test_needs_four_rows(self):
        with pytest.raises(ValueError):
            fit_discretizer(np.ones((3, 1)), schema=None)


class TestSamplePerturbations:
    def setup_method(self):
        rng = np.random.default_rng(0)
        self.X = np.column_stack([rng.normal(size=60),
                                  rng.integers(0, 3, size=60).astype(float)])
        schema = toy_schema([("numeric", ()), (CATEGORICAL, ("a", "b", "c"))])
        self.stats = build_stats(self.X, fit_discretizer(self.X, schema))

    def test_shape_and_instance_row(self):
        Z, Zm = sample_perturbations(self.X[0], 50, self.stats,
                                     np.random.default_rng(1))
        assert Z.shape == (50, 2) and Zm.shape == (50, 2)
        assert np.all(Z[0] == 1.0)
        assert np.array_equal(Zm[0], self.X[0])
        assert set(np.unique(Z)) <= {0.0, 1.0}

    def test_categorical_values_stay_in_vocab(self):
        Z, Zm = sample_perturbations(self.X[3], 200, self.stats,
                                     np.random.default_rng(2))
        assert set(np.unique(Zm[:, 1])) <= {0.0, 1.0, 2.0}

    def test_match_keeps_instance_value(self):
        Z, Zm = sample_perturbations(self.X[5], 200, self.stats,
                                     np.random.default_rng(3))
        matched = Z[:, 0] == 1.0
        assert np.all(Zm[matched, 0] == self.X[5, 0])

    def test_single_category_column_all_ones(self):
        X = np.column_stack([np.random.default_rng(0).normal(size=20),
                             np.zeros(20)])
        schema = toy_schema([("numeric", ()), (CATEGORICAL, ("only",))])
        stats = build_stats(X, fit_discretizer(X, schema))
        Z, _ = sample_perturbations(X[0], 100, stats, np.random.default_rng(4))
        assert np.all(Z[:, 1] == 1.0)


class TestKernel:
    def test_zero_distance(self):
        assert kernel_weight(0.0, 0.75) == 1.0

    def test_width_distance(self):
        assert kernel_weight(2.0, 2.0) == pytest.approx(math.exp(-1.0), abs=1e-15)

    def test_monotone_decreasing(self):
        w = kernel_weight(np.array([0.0, 0.5, 1.0, 2.0, 4.0]), 1.3)
        assert np.all(np.diff(w) < 0.0)


def weighted_lstsq_oracle(Z, w, y):
    """Closed-form weighted least squares with intercept via sqrt-weighted
    design, independent of the ridge solver under test."""
    A = np.column_stack([np.ones(len(y)), Z]) * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(A, y * np.sqrt(w), rcond=None)
    return coef[0], coef[1:]


class TestFitSurrogate:
    def test_recovers_exact_linear_function(self):
        rng = np.random.default_rng(7)
        Z = rng.integers(0, 2, size=(300, 3)).astype(float)
        true = np.array([1.5, -2.0, 0.75])
        y = Z @ true + 0.3
        w = rng.uniform(0.1, 1.0, size=300)
        coefs, intercept, r2 = fit_surrogate(Z, w, y, ridge_lambda=1e-8)
        assert coefs == pytest.approx(true, abs=1e-4)
        assert intercept == pytest.approx(0.3, abs=1e-4)
        oracle_b0, oracle_b = weighted_lstsq_oracle(Z, w, y)
        assert coefs == pytest.approx(oracle_b, abs=1e-6)
        assert intercept == pytest.approx(oracle_b0, abs=1e-6)
        assert r2 > 0.999999

    def test_constant_targets(self):
        Z = np.random.default_rng(0).integers(0, 2, size=(50, 2)).astype(float)
        coefs, intercept, r2 = fit_surrogate(Z, np.ones(50), np.full(50, 0.7), 1.0)
        assert np.all(np.abs(coefs) < 1e-8)
        assert intercept == pytest.approx(0.7, abs=1e-8)
        assert r2 == 1.0

    def test_weight_scale_invariance(self):
        rng = np.random.default_rng(5)
        Z = rng.integers(0, 2, size=(80, 3)).astype(float)
        y = rng.normal(size=80)
        w = rng.uniform(0.0, 1.0, size=80)
        a = fit_surrogate(Z, w, y, ridge_lambda=1.0)
        b = fit_surrogate(Z, 2.0 * w, y, ridge_lambda=1.0)
        assert np.array_equal(a[0], b[0]) and a[1] == b[1]

    def test_singular_without_ridge(self):
        Z = np.column_stack([np.ones(20), np.ones(20)])   # duplicated column
        with pytest.raises(SingularSystemError):
            fit_surrogate(Z, np.ones(20), np.arange(20.0), ridge_lambda=0.0)

    def test_rejects_bad_weights(self):
        Z = np.ones((4, 1))
        with pytest.raises(ValueError):
            fit_surrogate(Z, np.zeros(4), np.ones(4), 1.0)
        with pytest.raises(ValueError):
            fit_surrogate(Z, np.array([1.0, -0.1, 1.0, 1.0]), np.ones(4), 1.0)


def sigmoid_3x1_minus_2x2(X):
    return 1.0 / (1.0 + np.exp(-(3.0 * X[:, 0] - 2.0 * X[:, 1])))


def standardized_two_level_data(n=400):
    """Two features taking values -1/+1 in equal halves: mean 0, std 1, and
    each quartile bin holds a single value."""
    col = np.array([-1.0, 1.0]).repeat(n // 2)
    return np.column_stack([col, np.roll(col, n // 4)])


class TestExplain:
    def test_signs_and_ranking_on_gaussian_data(self):
        X = np.random.default_rng(0).normal(size=(500, 2))
        for seed in range(20):
            config = LimeConfig(num_samples=2000, num_features=2,
                                ridge_lambda=1e-6, seed=seed)
            # instance high in both features: its x1 bin pushes toward class 1
            # (coefficient +3), its x2 bin pushes away (coefficient -2)
            exp = explain(sigmoid_3x1_minus_2x2, np.array([1.0, 1.0]), X, config)
            weights = dict(exp.feature_weights)
            w1 = next(w for f, w in exp.feature_weights if "f0" in f)
            w2 = next(w for f, w in exp.feature_weights if "f1" in f)
            assert w1 > 0.0 > w2, f"seed {seed}"
            assert abs(w1) > abs(w2), f"seed {seed}"
            assert len(weights) == 2

    def test_linear_fidelity(self):
        X = standardized_two_level_data()
        config = LimeConfig(num_samples=2000, num_features=2, ridge_lambda=1e-6, seed=0)
        exp = explain(sigmoid_3x1_minus_2x2, np.array([1.0, 1.0]), X, config)
        assert exp.local_r2 > 0.99

    def test_constant_black_box(self):
        X = np.random.default_rng(1).normal(size=(100, 3))
        config = LimeConfig(num_samples=500, num_features=3, seed=2)
        exp = explain(lambda Z: np.full(len(Z), 0.7), X[0], X, config)
        assert all(abs(w) < 1e-6 for _, w in exp.feature_weights)
        assert exp.intercept == pytest.approx(0.7, abs=1e-9)
        assert exp.class_probabilities == (pytest.approx(0.3), pytest.approx(0.7))

    def test_deterministic(self):
        X = np.random.default_rng(2).normal(size=(80, 4))
        config = LimeConfig(num_samples=300, seed=5)
        a = explain(lambda Z: 1.0 / (1.0 + np.exp(-Z.sum(axis=1))), X[1], X, config)
        b = explain(lambda Z: 1.0 / (1.0 + np.exp(-Z.sum(axis=1))), X[1], X, config)
        assert a == b

    def test_length_is_min_of_num_features_and_d(self):
        X = np.random.default_rng(3).normal(size=(50, 3))
        config = LimeConfig(num_samples=200, num_features=10, seed=0)
        exp = explain(lambda Z: Z[:, 0], X[0], X, config)
        assert len(exp.feature_weights) == 3

    def test_weights_sorted_by_magnitude(self):
        X = np.random.default_rng(4).normal(size=(200, 3))
        config = LimeConfig(num_samples=1000, num_features=3, seed=1)
        exp = explain(sigmoid_3x1_minus_2x2, X[0], X, config)
        mags = [abs(w) for _, w in exp.feature_weights]
        assert mags == sorted(mags, reverse=True)

    def test_surrogate_prediction_identity(self):
        X = np.random.default_rng(5).normal(size=(100, 2))
        config = LimeConfig(num_samples=500, num_features=2, seed=3)
        exp = explain(sigmoid_3x1_minus_2x2, X[2], X, config)
        assert exp.surrogate_prediction == pytest.approx(
            exp.intercept + sum(w for _, w in exp.feature_weights), abs=1e-12)

    def test_descriptors_use_schema_names(self):
        rng = np.random.default_rng(6)
        X = np.column_stack([rng.normal(size=40), rng.integers(0, 2, size=40)])
        schema = toy_schema([("numeric", ()), (CATEGORICAL, ("High", "Low"))])
        scaler = Scaler(means=np.zeros(2), stds=np.ones(2))
        config = LimeConfig(num_samples=200, num_features=2, seed=0)
        exp = explain(lambda Z: Z[:, 0] * 0 + 0.5, X[0], X, config,
                      schema=schema, scaler=scaler, instance_index=0)
        texts = [f for f, _ in exp.feature_weights]
        assert any("c0" in t for t in texts)
        assert any(t.startswith("c1 = ") for t in texts)
        assert exp.instance_index == 0
