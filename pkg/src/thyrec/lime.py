"""Local, model-agnostic explanations for single predictions.

The instance is perturbed in an interpretable binary space: per feature,
an entry is 1 iff the perturbed sample falls in the same quartile bin
(continuous features) or category (label-encoded features) as the instance.
A kernel-weighted ridge regression fit to the black box's outputs on those
perturbations yields per-feature contribution weights.

Model-space values for non-matching draws are real training values sampled
from the drawn bin/category, so perturbed rows always lie on the training
manifold (no Gaussian resampling of encoded categoricals).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import CATEGORICAL, NUMERIC, FeatureSchema, Scaler, decode_category


class SingularSystemError(ValueError):
    """Unpenalized surrogate fit on a rank-deficient design."""


@dataclass
class LimeConfig:
    num_samples: int = 5000
    kernel_width: float | None = None   # default 0.75 * sqrt(d), set at explain time
    num_features: int = 10
    ridge_lambda: float = 1.0
    seed: int = 0
    discretize_continuous: bool = True

    def __post_init__(self):
        if self.num_samples < 10:
            raise ValueError("num_samples must be >= 10")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ValueError("kernel_width must be > 0")
        if self.num_features < 1:
            raise ValueError("num_features must be >= 1")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")


@dataclass
class Discretizer:
    """Quartile edges per continuous feature; categorical features (and
    continuous ones when discretization is off) pass through and are binned
    by exact value."""
    kinds: list[str]
    edges: list[np.ndarray | None]

    def bin_key(self, feature: int, value: float) -> int | float:
        edges = self.edges[feature]
        if edges is None:
            return float(value)
        return int(np.searchsorted(edges, value, side="left"))


@dataclass
class FeatureBins:
    keys: list            # bin keys observed in training, ascending
    freqs: np.ndarray     # empirical probability per key
    values: list[np.ndarray]  # training model-space values per key


@dataclass
class PerturbationStats:
    discretizer: Discretizer
    bins: list[FeatureBins]


@dataclass
class Explanation:
    instance_index: int
    class_probabilities: tuple[float, float]
    feature_weights: list[tuple[str, float]]   # sorted by |weight| descending
    intercept: float
    local_r2: float
    surrogate_prediction: float


def fit_discretizer(X_train: np.ndarray, schema: FeatureSchema | None,
                    discretize_continuous: bool = True) -> Discretizer:
    """Quartile edges (q25, q50, q75) per continuous feature, computed with
    the linear-interpolation quantile rule on the training rows."""
    X_train = np.asarray(X_train, dtype=np.float64)
    if X_train.shape[0] < 4:
        raise ValueError("need at least 4 training rows to fit quartiles")
    d = X_train.shape[1]
    if schema is None:
        kinds = [NUMERIC] * d
    else:
        kinds = [f.kind for f in schema.features]
    edges: list[np.ndarray | None] = []
    for j in range(d):
        if kinds[j] == NUMERIC and discretize_continuous:
            edges.append(np.quantile(X_train[:, j], [0.25, 0.5, 0.75]))
        else:
            edges.append(None)
    return Discretizer(kinds=kinds, edges=edges)


def build_stats(X_train: np.ndarray, discretizer: Discretizer) -> PerturbationStats:
    """Per-feature empirical bin distribution and the training values in
    each bin, used to draw perturbations."""
    X_train = np.asarray(X_train, dtype=np.float64)
    bins: list[FeatureBins] = []
    for j in range(X_train.shape[1]):
        col = X_train[:, j]
        keys_per_row = [discretizer.bin_key(j, v) for v in col]
        keys = sorted(set(keys_per_row))
        counts = np.array([keys_per_row.count(k) for k in keys], dtype=np.float64)
        values = [col[[kk == k for kk in keys_per_row]] for k in keys]
        bins.append(FeatureBins(keys=keys, freqs=counts / counts.sum(), values=values))
    return PerturbationStats(discretizer=discretizer, bins=bins)


def sample_perturbations(instance: np.ndarray, n: int, stats: PerturbationStats,
                         rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw n perturbed samples around the instance.

    Returns (Z, Z_model): Z is the n x d binary interpretable matrix whose
    first row is the instance itself (all ones); Z_model holds the matching
    model-space rows. For every non-instance row and feature, a bin is drawn
    from the training empirical distribution; on a match the model value is
    the instance's own, otherwise a training value from the drawn bin.
    """
    if n < 2:
        raise ValueError("need n >= 2 perturbations")
    instance = np.asarray(instance, dtype=np.float64).ravel()
    d = instance.shape[0]
    Z = np.ones((n, d))
    Zm = np.tile(instance, (n, 1))
    for j in range(d):
        fb = stats.bins[j]
        inst_key = stats.discretizer.bin_key(j, instance[j])
        draws = rng.choice(len(fb.keys), size=n - 1, p=fb.freqs)
        for k, key in enumerate(fb.keys):
            if key == inst_key:
                continue
            rows = np.flatnonzero(draws == k) + 1
            if rows.size == 0:
                continue
            Z[rows, j] = 0.0
            vals = fb.values[k]
            Zm[rows, j] = vals[rng.integers(0, len(vals), size=rows.size)]
    return Z, Zm


def kernel_weight(distance: np.ndarray | float, width: float) -> np.ndarray | float:
    """exp(-distance^2 / width^2) over Euclidean distance between
    interpretable rows."""
    return np.exp(-np.square(distance) / (width * width))


def fit_surrogate(Z: np.ndarray, sample_weights: np.ndarray, targets: np.ndarray,
                  ridge_lambda: float) -> tuple[np.ndarray, float, float]:
    """Weighted ridge regression with an unpenalized intercept.

    Solves (Zc' W Zc + lambda I) beta = Zc' W yc after weighted centering.
    Weights are normalized to mean 1 first, so scaling all weights by a
    constant leaves the fit unchanged. Returns (coefficients, intercept,
    weighted R^2 of the fit).
    """
    Z = np.asarray(Z, dtype=np.float64)
    w = np.asarray(sample_weights, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if not (Z.shape[0] == w.shape[0] == y.shape[0]):
        raise ValueError("Z rows, weights and targets must have equal length")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("weights must be >= 0 with at least one > 0")
    d = Z.shape[1]
    wn = w / w.mean()
    sw = wn / wn.sum()
    z_bar = sw @ Z
    y_bar = float(sw @ y)
    Zc = Z - z_bar
    yc = y - y_bar
    A = (Zc * wn[:, None]).T @ Zc + ridge_lambda * np.eye(d)
    rhs = (Zc * wn[:, None]).T @ yc
    if ridge_lambda == 0.0 and np.linalg.matrix_rank(A) < d:
        raise SingularSystemError("rank-deficient design with lambda = 0")
    beta = np.linalg.solve(A, rhs)
    intercept = y_bar - float(z_bar @ beta)
    residual = y - (Z @ beta + intercept)
    ss_res = float(wn @ np.square(residual))
    ss_tot = float(wn @ np.square(yc))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return beta, intercept, min(max(r2, 0.0), 1.0)


def _descriptor(j: int, instance: np.ndarray, disc: Discretizer,
                schema: FeatureSchema | None, scaler: Scaler | None) -> str:
    name = schema.features[j].name if schema is not None else f"f{j}"
    edges = disc.edges[j]
    if disc.kinds[j] == CATEGORICAL and schema is not None:
        code = instance[j]
        if scaler is not None:
            code = code * scaler.stds[j] + scaler.means[j]
        return f"{name} = {decode_category(schema, j, code)}"
    if edges is None:
        return f"{name} = {instance[j]:.2f}"
    b = disc.bin_key(j, instance[j])
    if b == 0:
        return f"{name} <= {edges[0]:.2f}"
    if b == len(edges):
        return f"{name} > {edges[-1]:.2f}"
    return f"{edges[b - 1]:.2f} < {name} <= {edges[b]:.2f}"


def explain(predict_fn, instance: np.ndarray, X_train: np.ndarray,
            config: LimeConfig, schema: FeatureSchema | None = None,
            scaler: Scaler | None = None, instance_index: int = -1) -> Explanation:
    """Explain one prediction of a black-box P(class=1) function.

    Pipeline: discretize the training data, sample perturbations around the
    instance, weight them by kernel distance in interpretable space, fit the
    ridge surrogate, keep the num_features largest |coefficient| entries.
    Deterministic for a fixed config.seed.
    """
    X_train = np.asarray(X_train, dtype=np.float64)
    instance = np.asarray(instance, dtype=np.float64).ravel()
    d = X_train.shape[1]
    if instance.shape[0] != d:
        raise ValueError(f"instance has {instance.shape[0]} features, training data {d}")
    rng = np.random.default_rng(config.seed)
    disc = fit_discretizer(X_train, schema, config.discretize_continuous)
    stats = build_stats(X_train, disc)
    Z, Zm = sample_perturbations(instance, config.num_samples, stats, rng)
    width = config.kernel_width if config.kernel_width is not None else 0.75 * math.sqrt(d)
    distance = np.sqrt(np.square(1.0 - Z).sum(axis=1))
    weights = kernel_weight(distance, width)
    targets = np.asarray(predict_fn(Zm), dtype=np.float64).ravel()
    coefs, intercept, r2 = fit_surrogate(Z, weights, targets, config.ridge_lambda)
    k = min(config.num_features, d)
    top = np.argsort(-np.abs(coefs), kind="stable")[:k]
    feature_weights = [(_descriptor(j, instance, disc, schema, scaler), float(coefs[j]))
                       for j in top]
    p1 = float(np.asarray(predict_fn(instance[None, :])).ravel()[0])
    return Explanation(
        instance_index=instance_index,
        class_probabilities=(1.0 - p1, p1),
        feature_weights=feature_weights,
        intercept=intercept,
        local_r2=r2,
        surrogate_prediction=intercept + float(sum(w for _, w in feature_weights)),
    )
