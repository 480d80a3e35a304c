"""Feed-forward neural rank predictors trained from scratch.

A key enters the network as its 64-bit binary expansion (most significant
bit first). Zero, one, or two fully connected hidden layers of 256 relu
units feed a single linear output unit that predicts the normalized rank;
predictions are denormalized by rank_scale = n - 1.

Training is plain mini-batch stochastic gradient descent with classical
momentum: v <- mu * v - lr * grad; theta <- theta + v. Gradients are exact
batch-mean MSE gradients computed by backpropagation, with the relu
subgradient at zero taken as zero. Everything runs in float64 and is
deterministic for a fixed seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .datasets import SortedTable

INPUT_BITS = 64
HIDDEN_WIDTH = 256
HIDDEN_CHOICES = (0, 1, 2)


class DivergenceError(RuntimeError):
    """Training loss left the finite range; carries the 1-based epoch."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged (loss not finite) in epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the gradient-descent training scheme."""

    learning_rate: float = 0.1
    momentum: float = 0.9
    batch_size: int = 64
    epochs: int = 200
    stop_tolerance: float = 0.0  # 0 disables the early-stop rule
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.stop_tolerance < 0:
            raise ValueError("stop_tolerance must be non-negative")


PAPER_EPOCHS = 2000
DESK_EPOCHS = 200


def binarize(key: int) -> np.ndarray:
    """64 bits of the key as floats, most significant bit first."""
    return binarize_many(np.array([key], dtype=np.uint64))[0]


def binarize_many(keys: np.ndarray) -> np.ndarray:
    """(m, 64) float64 matrix of binary expansions, MSB first."""
    big_endian = np.ascontiguousarray(keys, dtype=np.uint64).astype(">u8")
    bits = np.unpackbits(big_endian.view(np.uint8)).reshape(-1, INPUT_BITS)
    return bits.astype(np.float64)


@dataclass(frozen=True)
class NeuralModel:
    """Trained fully connected rank predictor."""

    hidden_layers: int
    weights: List[np.ndarray]  # per layer, shape (fan_in, fan_out)
    biases: List[np.ndarray]
    rank_scale: float
    hidden_width: int = HIDDEN_WIDTH
    train_seconds: Optional[float] = field(default=None, compare=False)
    epochs_run: Optional[int] = field(default=None, compare=False)
    final_loss: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        dims = layer_dims(self.hidden_layers, self.hidden_width)
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("layer count mismatch")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i} has shape {w.shape}, expected {(dims[i], dims[i + 1])}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError("parameters must be finite")

    @property
    def name(self) -> str:
        return f"NN{self.hidden_layers}"

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def predict(self, key: int) -> float:
        return float(self.predict_many(np.array([key], dtype=np.uint64))[0])

    def predict_many(self, keys: np.ndarray) -> np.ndarray:
        """Unclamped rank estimates for an array of keys."""
        return forward_many(self, binarize_many(keys))


def layer_dims(hidden_layers: int, hidden_width: int = HIDDEN_WIDTH) -> List[int]:
    if hidden_layers not in HIDDEN_CHOICES:
        raise ValueError("hidden_layers must be 0, 1, or 2")
    return [INPUT_BITS] + [hidden_width] * hidden_layers + [1]


def init_parameters(
    hidden_layers: int, seed: int, hidden_width: int = HIDDEN_WIDTH
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """Uniform init in +-sqrt(6 / (fan_in + fan_out)); zero biases.

    The symmetric fan bound keeps the first steps stable at the default
    learning rate of 0.1 with momentum 0.9; a fan-in-only bound makes the
    deeper variants blow up within one epoch at those settings.
    """
    rng = np.random.default_rng(seed)
    dims = layer_dims(hidden_layers, hidden_width)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _forward_normalized(weights, biases, x: np.ndarray) -> np.ndarray:
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        h = h @ w + b
        if i < last:
            np.maximum(h, 0.0, out=h)
    return h


def forward(model: NeuralModel, encoding: np.ndarray) -> float:
    """Scaled rank estimate for one 64-bit encoding."""
    x = np.asarray(encoding, dtype=np.float64).reshape(1, INPUT_BITS)
    out = _forward_normalized(model.weights, model.biases, x)
    return float(out[0, 0] * model.rank_scale)


def forward_many(model: NeuralModel, encodings: np.ndarray) -> np.ndarray:
    x = np.asarray(encodings, dtype=np.float64).reshape(-1, INPUT_BITS)
    out = _forward_normalized(model.weights, model.biases, x)
    return out[:, 0] * model.rank_scale


def backward(
    weights: List[np.ndarray],
    biases: List[np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
) -> Tuple[List[np.ndarray], List[np.ndarray], float]:
    """Exact gradients of the batch-mean squared error.

    x is a (b, 64) batch of encodings, y a (b,) vector of normalized rank
    targets. Returns (weight grads, bias grads, batch loss).
    """
    if x.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    batch = x.shape[0]
    last = len(weights) - 1

    activations = [x]
    h = x
    for i, (w, b) in enumerate(zip(weights, biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, 0.0)
        activations.append(h)

    pred = activations[-1][:, 0]
    err = pred - y
    loss = float(err @ err) / batch

    delta = (2.0 / batch) * err.reshape(-1, 1)
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    for i in range(last, -1, -1):
        grads_w[i] = activations[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (activations[i] > 0.0)
    return grads_w, grads_b, loss


def train_nn(table: SortedTable, hidden_layers: int, config: TrainConfig) -> NeuralModel:
    """Train a rank predictor on the table by SGD with momentum.

    Targets are ranks normalized to [0, 1]. Batches are drawn from a fresh
    shuffle every epoch; the trailing partial batch is kept. The epoch loss
    is the mean of its batch losses, and when stop_tolerance is positive,
    training halts once consecutive epoch losses differ by at most that
    amount. A non-finite epoch loss raises DivergenceError.
    """
    n = table.n
    t0 = time.perf_counter()
    x_all = binarize_many(table.keys)
    y_all = np.arange(n, dtype=np.float64) / (n - 1)

    weights, biases = init_parameters(hidden_layers, config.seed)
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    rng = np.random.default_rng(config.seed)

    mu, lr = config.momentum, config.learning_rate
    prev_loss = None
    epoch_loss = float("nan")
    epochs_run = 0
    # overflow inside a diverging run is reported via DivergenceError, not warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(n)
            total = 0.0
            batches = 0
            for start in range(0, n, config.batch_size):
                idx = order[start:start + config.batch_size]
                grads_w, grads_b, loss = backward(weights, biases, x_all[idx], y_all[idx])
                total += loss
                batches += 1
                for i in range(len(weights)):
                    vel_w[i] = mu * vel_w[i] - lr * grads_w[i]
                    vel_b[i] = mu * vel_b[i] - lr * grads_b[i]
                    weights[i] = weights[i] + vel_w[i]
                    biases[i] = biases[i] + vel_b[i]
            epoch_loss = total / batches
            epochs_run = epoch
            if not np.isfinite(epoch_loss):
                raise DivergenceError(epoch)
            if config.stop_tolerance > 0 and prev_loss is not None:
                if abs(prev_loss - epoch_loss) <= config.stop_tolerance:
                    break
            prev_loss = epoch_loss

    return NeuralModel(
        hidden_layers=hidden_layers,
        weights=weights,
        biases=biases,
        rank_scale=float(n - 1),
        train_seconds=time.perf_counter() - t0,
        epochs_run=epochs_run,
        final_loss=epoch_loss,
    )
