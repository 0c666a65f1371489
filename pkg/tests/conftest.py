import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from synth import write_csv
from thyrec.data import apply_scaler, fit_scaler, label_encode, load_csv, split
from thyrec.metrics import compute_metrics, confusion
from thyrec.neural import TrainConfig, init_mlp, predict_label, train


@dataclass
class RecurrenceSource:
    path: Path
    is_real: bool

    @property
    def label(self) -> str:
        return "UCI file" if self.is_real else "synthetic stand-in"


@pytest.fixture(scope="session")
def recurrence_source(tmp_path_factory) -> RecurrenceSource:
    """The real UCI recurrence CSV when available (THYREC_DATA env var or
    data/Thyroid_Diff.csv), otherwise a deterministic synthetic stand-in
    with the same schema and size."""
    candidates = []
    if os.environ.get("THYREC_DATA"):
        candidates.append(Path(os.environ["THYREC_DATA"]))
    candidates.append(Path(__file__).resolve().parents[1] / "data" / "Thyroid_Diff.csv")
    for candidate in candidates:
        if candidate.is_file():
            return RecurrenceSource(candidate, True)
    path = tmp_path_factory.mktemp("data") / "recurrence.csv"
    write_csv(path)
    return RecurrenceSource(path, False)


@dataclass
class TrainedRun:
    seed: int
    mlp: object
    scaler: object
    schema: object
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    test_metrics: object


@dataclass
class TrainedSweep:
    runs: list
    elapsed: float
    source: RecurrenceSource


@pytest.fixture(scope="session")
def trained_sweep(recurrence_source) -> TrainedSweep:
    """Default-config training runs over seeds 1..5, shared by the
    end-to-end acceptance criteria."""
    dataset = load_csv(str(recurrence_source.path))
    encoded = label_encode(dataset)
    runs = []
    started = time.perf_counter()
    for seed in range(1, 6):
        idx = split(len(encoded.y), 0.8, seed)
        scaler = fit_scaler(encoded.X[idx.train])
        X_train = apply_scaler(scaler, encoded.X[idx.train])
        X_test = apply_scaler(scaler, encoded.X[idx.test])
        y_train, y_test = encoded.y[idx.train], encoded.y[idx.test]
        mlp = init_mlp(X_train.shape[1], [128, 64, 32], seed=seed, dropout=0.5)
        mlp, _ = train(mlp, X_train, y_train, TrainConfig(seed=seed))
        cm = confusion(y_test, predict_label(mlp, X_test))
        runs.append(TrainedRun(seed=seed, mlp=mlp, scaler=scaler,
                               schema=encoded.schema, X_train=X_train,
                               y_train=y_train, X_test=X_test, y_test=y_test,
                               test_metrics=compute_metrics(cm)))
    return TrainedSweep(runs=runs, elapsed=time.perf_counter() - started,
                        source=recurrence_source)
