"""Dense feed-forward binary classifier built from scratch.

Explicit forward/backward passes over ReLU hidden layers with inverted
dropout and a sigmoid output unit, trained by mini-batch Adam on clamped
binary cross-entropy. Everything is deterministic given (seed, data, config):
shuffles and dropout masks are drawn from a single seeded generator in a
fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

RELU = "relu"
SIGMOID = "sigmoid"

# Probability clamp for the loss; matches the common framework epsilon.
BCE_EPS = 1e-7

VAL_FROM_TRAIN = "train"
VAL_FROM_TEST_AS_PAPER = "test-as-paper"


@dataclass
class Layer:
    W: np.ndarray          # (d_in, d_out)
    b: np.ndarray          # (d_out,)
    activation: str        # RELU for hidden layers, SIGMOID for the output


@dataclass
class MLP:
    layers: list[Layer]
    dropout_rates: list[float]     # one rate per hidden layer

    @property
    def d_in(self) -> int:
        return self.layers[0].W.shape[0]

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list [W0, b0, W1, b1, ...] shared with AdamState."""
        params: list[np.ndarray] = []
        for layer in self.layers:
            params.append(layer.W)
            params.append(layer.b)
        return params

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 100
    batch_size: int = 32
    dropout: float = 0.5
    validation_fraction: float = 0.2
    validation_source: str = VAL_FROM_TRAIN
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in [0, 1)")


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0


@dataclass
class TrainHistory:
    """Per-epoch loss/accuracy on the training set and the validation set.

    Validation entries are NaN when no validation data was configured.
    """
    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_loss)


@dataclass
class ForwardPass:
    """Cache of one forward pass, consumed by backward()."""
    inputs: list[np.ndarray]          # input fed to each layer
    pre: list[np.ndarray]             # pre-activation z per layer
    masks: list[np.ndarray | None]    # inverted-dropout mask per hidden layer
    probs: np.ndarray                 # (n,) sigmoid outputs


def init_mlp(d_in: int, hidden: list[int], seed: int, dropout: float = 0.5) -> MLP:
    """Glorot-uniform weights, zero biases, ReLU hidden layers and a single
    sigmoid output unit; the dropout rate is attached to every hidden layer."""
    if d_in < 1 or not hidden:
        raise ValueError("need d_in >= 1 and a non-empty hidden layout")
    rng = np.random.default_rng(seed)
    dims = [d_in] + list(hidden) + [1]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append(Layer(W=W, b=np.zeros(fan_out), activation=RELU))
    layers[-1].activation = SIGMOID
    return MLP(layers=layers, dropout_rates=[dropout] * len(hidden))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(mlp: MLP, X: np.ndarray, train: bool = False,
            rng: np.random.Generator | None = None) -> ForwardPass:
    """Run the network on a batch.

    In train mode each hidden activation is multiplied by an inverted-dropout
    mask (Bernoulli keep-prob 1-rate, scaled by 1/(1-rate)); inference applies
    no mask and is a pure function of (mlp, X).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != mlp.d_in:
        raise ValueError(f"dimension mismatch: X is {X.shape}, model expects (n, {mlp.d_in})")
    inputs, pre, masks = [], [], []
    a = X
    for l, layer in enumerate(mlp.layers):
        inputs.append(a)
        z = a @ layer.W + layer.b
        pre.append(z)
        if layer.activation == RELU:
            a = np.maximum(z, 0.0)
            rate = mlp.dropout_rates[l]
            if train and rate > 0.0:
                if rng is None:
                    raise ValueError("train-mode forward with dropout needs an rng")
                keep = 1.0 - rate
                mask = (rng.random(a.shape) < keep) / keep
                a = a * mask
                masks.append(mask)
            else:
                masks.append(None)
        else:
            a = _sigmoid(z)
    return ForwardPass(inputs=inputs, pre=pre, masks=masks, probs=a[:, 0])


def bce_loss(p: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy with probabilities clamped away from {0, 1}."""
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {y.shape}")
    pc = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    return float(np.mean(-(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))))


def backward(mlp: MLP, cache: ForwardPass, y: np.ndarray) -> list[np.ndarray]:
    """Exact gradients of the clamped-BCE mean, in parameters() order.

    Dropout masks cached by the forward pass are applied identically here;
    rows where the output probability sits on the clamp contribute zero
    gradient (the clamp is flat there).
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if cache.probs.shape != y.shape:
        raise ValueError("stale cache: probs/targets length mismatch")
    if len(cache.inputs) != len(mlp.layers) or cache.inputs[0].shape[0] != n:
        raise ValueError("stale cache: activation shapes do not match this batch")
    p = cache.probs
    inside = (p > BCE_EPS) & (p < 1.0 - BCE_EPS)
    dz = (np.where(inside, p - y, 0.0) / n)[:, None]
    grads: list[np.ndarray] = [np.empty(0)] * (2 * len(mlp.layers))
    for l in range(len(mlp.layers) - 1, -1, -1):
        a_in = cache.inputs[l]
        grads[2 * l] = a_in.T @ dz
        grads[2 * l + 1] = dz.sum(axis=0)
        if l > 0:
            da = dz @ mlp.layers[l].W.T
            mask = cache.masks[l - 1]
            if mask is not None:
                da = da * mask
            dz = da * (cache.pre[l - 1] > 0.0)
    return grads


def init_adam(params: list[np.ndarray]) -> AdamState:
    return AdamState(m=[np.zeros_like(p) for p in params],
                     v=[np.zeros_like(p) for p in params], t=0)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState, config: TrainConfig) -> tuple[list[np.ndarray], AdamState]:
    """One Adam update, in place: bias-corrected first/second moments,
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("shape mismatch: params/grads/state lengths differ")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch: param {p.shape} vs grad {g.shape}")
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)
    return params, state


def predict_proba(mlp: MLP, X: np.ndarray) -> np.ndarray:
    """P(class=1) per row, inference mode (no dropout, deterministic)."""
    return forward(mlp, X, train=False).probs


def predict_label(mlp: MLP, X: np.ndarray) -> np.ndarray:
    """Hard labels at the fixed 0.5 threshold."""
    return (predict_proba(mlp, X) >= 0.5).astype(np.int64)


def _accuracy(p: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean((p >= 0.5).astype(np.int64) == y))


def train(mlp: MLP, X: np.ndarray, y: np.ndarray, config: TrainConfig,
          X_val: np.ndarray | None = None,
          y_val: np.ndarray | None = None) -> tuple[MLP, TrainHistory]:
    """Mini-batch Adam training for config.epochs epochs.

    Each epoch reshuffles the training rows and walks them in sequential
    mini-batches, final partial batch included. When no explicit validation
    data is given and validation_source is "train", validation rows are
    carved from the tail of a seeded shuffle of the training set and excluded
    from the updates. Validation is monitoring only; there is no early
    stopping.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(config.seed)

    if (X_val is None and config.validation_source == VAL_FROM_TRAIN
            and config.validation_fraction > 0.0 and X.shape[0] >= 2):
        perm = rng.permutation(X.shape[0])
        n_val = min(int(math.floor(config.validation_fraction * X.shape[0] + 0.5)),
                    X.shape[0] - 1)
        train_idx, val_idx = perm[:X.shape[0] - n_val], perm[X.shape[0] - n_val:]
        X, y, X_val, y_val = X[train_idx], y[train_idx], X[val_idx], y[val_idx]

    params = mlp.parameters()
    state = init_adam(params)
    history = TrainHistory()
    n = X.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            cache = forward(mlp, X[batch], train=True, rng=rng)
            grads = backward(mlp, cache, y[batch])
            adam_step(params, grads, state, config)
        p_train = predict_proba(mlp, X)
        history.train_loss.append(bce_loss(p_train, y))
        history.train_accuracy.append(_accuracy(p_train, y))
        if X_val is not None and len(X_val) > 0:
            p_val = predict_proba(mlp, X_val)
            history.val_loss.append(bce_loss(p_val, np.asarray(y_val, dtype=np.int64)))
            history.val_accuracy.append(_accuracy(p_val, np.asarray(y_val, dtype=np.int64)))
        else:
            history.val_loss.append(float("nan"))
            history.val_accuracy.append(float("nan"))
    return mlp, history
