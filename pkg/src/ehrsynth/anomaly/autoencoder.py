"""Bottleneck autoencoder trained with MSE and adaptive moment estimation.

Hand-rolled dense network on numpy arrays: rectifier hidden layers, identity
output, mirror-symmetric widths, Glorot-uniform seeded init. Training is
single-threaded and fully deterministic per seed, which keeps pipeline
artifacts byte-reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class DimensionMismatch(ValueError):
    """Matrix width does not match the network's input width."""


def default_widths(d: int) -> tuple[int, ...]:
    return (d, math.ceil(d / 2), math.ceil(d / 4), math.ceil(d / 2), d)


def _validate_widths(widths: Sequence[int]) -> tuple[int, ...]:
    widths = tuple(int(w) for w in widths)
    if len(widths) < 3 or len(widths) % 2 == 0:
        raise ValueError("widths must be an odd-length mirror-symmetric schedule")
    if widths != widths[::-1]:
        raise ValueError(f"widths must be mirror-symmetric, got {widths}")
    encoder = widths[: len(widths) // 2 + 1]
    if any(a < b for a, b in zip(encoder, encoder[1:])):
        raise ValueError(f"encoder widths must shrink toward the bottleneck, got {widths}")
    if widths[len(widths) // 2] >= widths[0]:
        raise ValueError("latent width must be smaller than the input width")
    return widths


@dataclass
class Autoencoder:
    widths: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int
    loss_history: list[float] = field(default_factory=list)

    @property
    def input_width(self) -> int:
        return self.widths[0]


def init_autoencoder(widths: Sequence[int], seed: int = 0) -> Autoencoder:
    """Glorot-uniform init: weights in ±sqrt(6/(fan_in+fan_out)), zero biases."""
    widths = _validate_widths(widths)
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(widths, widths[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return Autoencoder(widths=widths, weights=weights, biases=biases, seed=seed)


def forward(model: Autoencoder, X: np.ndarray) -> list[np.ndarray]:
    """Layer activations; rectifier on hidden layers, identity on the output."""
    if X.shape[1] != model.input_width:
        raise DimensionMismatch(
            f"matrix width {X.shape[1]} != network input width {model.input_width}"
        )
    activations = [X]
    h = X
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W + b
        h = z if i == last else np.maximum(z, 0.0)
        activations.append(h)
    return activations


def reconstruct(model: Autoencoder, X: np.ndarray) -> np.ndarray:
    return forward(model, X)[-1]


def mse_loss(X: np.ndarray, X_hat: np.ndarray) -> float:
    return float(np.mean((X_hat - X) ** 2))


def gradients(model: Autoencoder, X: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Analytic gradients of the mean squared reconstruction error.

    Loss = mean over every (row, feature) of (x_hat - x)^2.
    """
    activations = forward(model, X)
    n_elements = X.size
    delta = 2.0 * (activations[-1] - X) / n_elements
    grad_w: list[Optional[np.ndarray]] = [None] * len(model.weights)
    grad_b: list[Optional[np.ndarray]] = [None] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        grad_w[i] = activations[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i].T) * (activations[i] > 0.0)
    return grad_w, grad_b  # type: ignore[return-value]


def train_autoencoder(
    matrix: np.ndarray,
    widths: Optional[Sequence[int]] = None,
    epochs: int = 200,
    lr: float = 1e-3,
    batch_size: int = 32,
    seed: int = 0,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Autoencoder:
    """Train a seeded autoencoder; zero epochs returns the initial weights.

    loss_history[0] is the initial full-data loss; one entry follows per epoch.
    """
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training matrix must be a nonempty 2-D array")
    if widths is None:
        widths = default_widths(X.shape[1])
    model = init_autoencoder(widths, seed=seed)
    if X.shape[1] != model.input_width:
        raise DimensionMismatch(
            f"matrix width {X.shape[1]} != widths[0] = {model.input_width}"
        )
    rng = np.random.Generator(np.random.PCG64(derive_stream_seed(seed)))
    m_w = [np.zeros_like(w) for w in model.weights]
    v_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_b = [np.zeros_like(b) for b in model.biases]
    step = 0
    model.loss_history.append(mse_loss(X, reconstruct(model, X)))
    for _ in range(epochs):
        order = rng.permutation(X.shape[0])
        for start in range(0, len(order), batch_size):
            batch = X[order[start:start + batch_size]]
            grad_w, grad_b = gradients(model, batch)
            step += 1
            bias1 = 1.0 - beta1 ** step
            bias2 = 1.0 - beta2 ** step
            for params, grads, ms, vs in (
                (model.weights, grad_w, m_w, v_w),
                (model.biases, grad_b, m_b, v_b),
            ):
                for i, g in enumerate(grads):
                    ms[i] = beta1 * ms[i] + (1.0 - beta1) * g
                    vs[i] = beta2 * vs[i] + (1.0 - beta2) * g * g
                    params[i] -= lr * (ms[i] / bias1) / (np.sqrt(vs[i] / bias2) + eps)
        model.loss_history.append(mse_loss(X, reconstruct(model, X)))
    return model


def derive_stream_seed(seed: int) -> int:
    # shuffle stream kept distinct from the init stream of the same seed
    return (seed * 2654435761 + 0x9E3779B9) % (2 ** 63)


def reconstruction_errors(model: Autoencoder, matrix: np.ndarray) -> np.ndarray:
    """Per-row mean squared error between input and reconstruction."""
    X = np.asarray(matrix, dtype=np.float64)
    X_hat = reconstruct(model, X)
    return np.mean((X_hat - X) ** 2, axis=1)
