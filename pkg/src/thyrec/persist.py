"""Model artifact persistence.

One self-describing JSON file holds the schema, scaler, layer shapes and
row-major weights, training configuration, final metrics and the split
fingerprint. Serialization is canonical (sorted keys, full-precision
shortest round-trip floats) so identical runs produce byte-identical files
and save -> load -> save is the identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import CATEGORICAL, NUMERIC, Feature, FeatureSchema, Scaler
from .metrics import ConfusionMatrix, MetricsReport
from .neural import MLP, RELU, SIGMOID, Layer, TrainConfig

FORMAT_VERSION = 1


class ArtifactError(Exception):
    """Base class for unreadable or inconsistent model artifacts."""


class UnsupportedVersionError(ArtifactError):
    pass


class CorruptArtifactError(ArtifactError):
    pass


class MissingFieldError(ArtifactError):
    pass


@dataclass
class SplitInfo:
    seed: int
    ratio: float
    stratified: bool
    indices_digest: str


@dataclass
class EvalResult:
    confusion: ConfusionMatrix
    metrics: MetricsReport


@dataclass
class ModelArtifact:
    schema: FeatureSchema
    scaler: Scaler
    mlp: MLP
    train_config: TrainConfig
    final_metrics: dict[str, EvalResult]   # keys "train" and "test"
    split: SplitInfo
    format_version: int = FORMAT_VERSION


def _schema_to_dict(schema: FeatureSchema) -> dict:
    return {
        "features": [
            {"name": f.name, "kind": f.kind, "vocab": list(f.vocab)}
            for f in schema.features
        ],
        "target_name": schema.target_name,
        "target_vocab": list(schema.target_vocab),
    }


def _eval_to_dict(result: EvalResult) -> dict:
    cm = result.confusion
    return {
        "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn},
        "metrics": result.metrics.as_dict(),
    }


def artifact_to_dict(artifact: ModelArtifact) -> dict:
    cfg = artifact.train_config
    return {
        "format_version": artifact.format_version,
        "schema": _schema_to_dict(artifact.schema),
        "scaler": {
            "means": artifact.scaler.means.tolist(),
            "stds": artifact.scaler.stds.tolist(),
        },
        "layers": [
            {
                "d_in": layer.W.shape[0],
                "d_out": layer.W.shape[1],
                "activation": layer.activation,
                "weights": layer.W.reshape(-1).tolist(),   # row-major
                "bias": layer.b.tolist(),
            }
            for layer in artifact.mlp.layers
        ],
        "dropout_rates": list(artifact.mlp.dropout_rates),
        "train_config": {
            "learning_rate": cfg.learning_rate,
            "beta1": cfg.beta1,
            "beta2": cfg.beta2,
            "epsilon": cfg.epsilon,
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "dropout": cfg.dropout,
            "validation_fraction": cfg.validation_fraction,
            "validation_source": cfg.validation_source,
            "seed": cfg.seed,
        },
        "final_metrics": {
            name: _eval_to_dict(result)
            for name, result in sorted(artifact.final_metrics.items())
        },
        "split": {
            "seed": artifact.split.seed,
            "ratio": artifact.split.ratio,
            "stratified": artifact.split.stratified,
            "indices_digest": artifact.split.indices_digest,
        },
    }


def save_model(artifact: ModelArtifact, path: str) -> None:
    text = json.dumps(artifact_to_dict(artifact), sort_keys=True, indent=1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")


def _get(mapping: dict, key: str, context: str):
    try:
        return mapping[key]
    except (KeyError, TypeError):
        raise MissingFieldError(f"missing field {context}.{key}") from None


def _schema_from_dict(d: dict) -> FeatureSchema:
    features = []
    for fd in _get(d, "features", "schema"):
        kind = _get(fd, "kind", "feature")
        if kind not in (NUMERIC, CATEGORICAL):
            raise CorruptArtifactError(f"unknown feature kind {kind!r}")
        features.append(Feature(_get(fd, "name", "feature"), kind,
                                tuple(_get(fd, "vocab", "feature"))))
    vocab = _get(d, "target_vocab", "schema")
    if len(vocab) != 2:
        raise CorruptArtifactError("target_vocab must have 2 entries")
    return FeatureSchema(tuple(features), _get(d, "target_name", "schema"),
                         (vocab[0], vocab[1]))


def _metrics_from_dict(d: dict) -> MetricsReport:
    return MetricsReport(**{k: _get(d, k, "metrics")
                            for k in ("accuracy", "sensitivity", "specificity",
                                      "ppv", "npv")})


def load_model(path: str) -> ModelArtifact:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ArtifactError(f"no such model file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise CorruptArtifactError(f"{path}: not valid JSON ({exc})") from exc

    version = _get(raw, "format_version", "artifact")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"format_version {version} not supported (expected {FORMAT_VERSION})")

    schema = _schema_from_dict(_get(raw, "schema", "artifact"))

    scaler_d = _get(raw, "scaler", "artifact")
    scaler = Scaler(means=np.asarray(_get(scaler_d, "means", "scaler"), dtype=np.float64),
                    stds=np.asarray(_get(scaler_d, "stds", "scaler"), dtype=np.float64))
    if scaler.means.shape != scaler.stds.shape:
        raise CorruptArtifactError("scaler means/stds length mismatch")

    layers = []
    prev_out = None
    for i, ld in enumerate(_get(raw, "layers", "artifact")):
        d_in, d_out = _get(ld, "d_in", "layer"), _get(ld, "d_out", "layer")
        weights = _get(ld, "weights", "layer")
        bias = _get(ld, "bias", "layer")
        if len(weights) != d_in * d_out or len(bias) != d_out:
            raise CorruptArtifactError(f"layer {i}: declared shape does not match array length")
        if prev_out is not None and d_in != prev_out:
            raise CorruptArtifactError(f"layer {i}: dimensions do not chain")
        activation = _get(ld, "activation", "layer")
        if activation not in (RELU, SIGMOID):
            raise CorruptArtifactError(f"layer {i}: unknown activation {activation!r}")
        layers.append(Layer(
            W=np.asarray(weights, dtype=np.float64).reshape(d_in, d_out),
            b=np.asarray(bias, dtype=np.float64),
            activation=activation,
        ))
        prev_out = d_out
    if not layers:
        raise CorruptArtifactError("artifact has no layers")
    if layers[0].W.shape[0] != len(schema.features):
        raise CorruptArtifactError("first layer width does not match the schema")

    dropout_rates = [float(x) for x in _get(raw, "dropout_rates", "artifact")]
    mlp = MLP(layers=layers, dropout_rates=dropout_rates)

    cfg_d = _get(raw, "train_config", "artifact")
    config = TrainConfig(**{k: _get(cfg_d, k, "train_config") for k in (
        "learning_rate", "beta1", "beta2", "epsilon", "epochs", "batch_size",
        "dropout", "validation_fraction", "validation_source", "seed")})

    final = {}
    for name, ed in _get(raw, "final_metrics", "artifact").items():
        cm_d = _get(ed, "confusion", "final_metrics")
        cm = ConfusionMatrix(**{k: _get(cm_d, k, "confusion")
                                for k in ("tp", "fp", "tn", "fn")})
        final[name] = EvalResult(confusion=cm,
                                 metrics=_metrics_from_dict(_get(ed, "metrics",
                                                                 "final_metrics")))

    split_d = _get(raw, "split", "artifact")
    split = SplitInfo(seed=_get(split_d, "seed", "split"),
                      ratio=_get(split_d, "ratio", "split"),
                      stratified=_get(split_d, "stratified", "split"),
                      indices_digest=_get(split_d, "indices_digest", "split"))

    return ModelArtifact(schema=schema, scaler=scaler, mlp=mlp, train_config=config,
                         final_metrics=final, split=split, format_version=version)
