"""A small fully connected quantile network on plain numpy.

Architecture: input -> hidden ReLU layers -> linear output, one output unit
per forecast step. Trained full batch with Adam on either the pinball loss
at a fixed level tau (quantile regression) or the mean squared error (point
regression). Backpropagation is written out by hand so the analytic
gradients can be checked against finite differences.

Everything is float64 and seeded: two trainings with the same data, config
and seed produce bitwise identical parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidTau, NonFiniteLoss
from .framing import SupervisedFrame

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_FORMAT_NAME = "conformalts-quantile-net"
_FORMAT_VERSION = 1


def pinball_loss(y, y_hat, tau: float):
    """Pinball (quantile) loss max(tau * u, (tau - 1) * u) with u = y - y_hat.

    Scalars give a scalar; arrays give the mean over all components.
    """
    if not 0.0 < tau < 1.0:
        raise InvalidTau(f"tau must be in (0, 1), got {tau}")
    u = np.asarray(y, dtype=float) - np.asarray(y_hat, dtype=float)
    loss = np.maximum(tau * u, (tau - 1.0) * u)
    return float(np.mean(loss))


@dataclass
class TrainConfig:
    """Optimizer settings. ``hidden`` fixes the widths of the ReLU layers."""

    epochs: int = 1000
    learning_rate: float = 1e-3
    seed: int = 0
    hidden: tuple[int, ...] = (64, 64)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if len(self.hidden) == 0 or any(w < 1 for w in self.hidden):
            raise ValueError("hidden widths must be positive")


class QuantileNet:
    """Weights and biases of the fitted network.

    ``tau`` is the quantile level the net was trained for, or None for a net
    trained on squared error.
    """

    def __init__(self, weights, biases, tau: float | None):
        if tau is not None and not 0.0 < tau < 1.0:
            raise InvalidTau(f"tau must be in (0, 1), got {tau}")
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.tau = tau
        self.loss_history: list[float] = []

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    @property
    def n_outputs(self) -> int:
        return self.weights[-1].shape[1]

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.layer_sizes[0]:
            raise DimensionMismatch(
                f"expected (n, {self.layer_sizes[0]}) covariates, got {X.shape}"
            )
        a = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ W + b, 0.0)
        return a @ self.weights[-1] + self.biases[-1]

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.layer_sizes[0]:
            raise DimensionMismatch(
                f"expected {self.layer_sizes[0]} covariates, got {x.size}"
            )
        return self.predict_batch(x[None, :])[0]

    __call__ = predict


def init_net(
    n_inputs: int, n_outputs: int, hidden: tuple[int, ...], tau: float | None, seed: int
) -> QuantileNet:
    """Fresh network with fan-in scaled uniform weights and zero biases."""
    rng = np.random.default_rng(seed)
    sizes = (n_inputs, *hidden, n_outputs)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return QuantileNet(weights, biases, tau)


def _forward_trace(net: QuantileNet, X: np.ndarray):
    # activations[0] is the input; preacts[k] feeds layer k's nonlinearity
    activations = [X]
    preacts = []
    a = X
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        z = a @ W + b
        preacts.append(z)
        a = np.maximum(z, 0.0)
        activations.append(a)
    out = a @ net.weights[-1] + net.biases[-1]
    return activations, preacts, out


def loss_and_gradients(net: QuantileNet, X: np.ndarray, Y: np.ndarray, objective: str):
    """Mean loss over all rows and output components, with gradients for
    every weight matrix and bias vector.

    ``objective`` is "pinball" (uses net.tau; at a zero residual the
    subgradient takes the tau branch) or "squared".
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    activations, preacts, out = _forward_trace(net, X)
    u = Y - out
    n_terms = u.size
    if objective == "pinball":
        tau = net.tau
        if tau is None:
            raise InvalidTau("net has no tau; it was trained for squared error")
        loss = float(np.mean(np.maximum(tau * u, (tau - 1.0) * u)))
        dloss_dout = np.where(u >= 0.0, -tau, 1.0 - tau) / n_terms
    elif objective == "squared":
        loss = float(np.mean(u * u))
        dloss_dout = (2.0 * (out - Y)) / n_terms
    else:
        raise ValueError(f"unknown objective {objective!r}")

    grad_w = [np.empty_like(w) for w in net.weights]
    grad_b = [np.empty_like(b) for b in net.biases]
    delta = dloss_dout
    for k in range(len(net.weights) - 1, -1, -1):
        grad_w[k] = activations[k].T @ delta
        grad_b[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ net.weights[k].T) * (preacts[k - 1] > 0.0)
    return loss, grad_w, grad_b


def _fit(frame: SupervisedFrame, tau: float | None, objective: str, config: TrainConfig) -> QuantileNet:
    # Optimize in standardized units (series values can sit far from the
    # origin, which starves full-batch Adam at a fixed step size), then fold
    # the affine maps into the first and last layers so the returned net
    # works in original units.
    loc = float(np.mean(frame.covariates))
    scale = float(np.std(frame.covariates))
    if not scale > 0.0:
        scale = 1.0
    X = (frame.covariates - loc) / scale
    Y = (frame.targets - loc) / scale
    net = init_net(frame.n_lags, frame.horizon, tuple(config.hidden), tau, config.seed)
    params = net.weights + net.biases
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    lr = config.learning_rate
    history = []
    for step in range(1, config.epochs + 1):
        loss, grad_w, grad_b = loss_and_gradients(net, X, Y, objective)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} at epoch {step}")
        history.append(loss)
        grads = grad_w + grad_b
        c1 = 1.0 - ADAM_BETA1**step
        c2 = 1.0 - ADAM_BETA2**step
        for p, g, mi, vi in zip(params, grads, m, v):
            mi += (1.0 - ADAM_BETA1) * (g - mi)
            vi += (1.0 - ADAM_BETA2) * (g * g - vi)
            p -= lr * (mi / c1) / (np.sqrt(vi / c2) + ADAM_EPS)
    final_loss, _, _ = loss_and_gradients(net, X, Y, objective)
    if not np.isfinite(final_loss):
        raise NonFiniteLoss("loss became non-finite after the last epoch")
    history.append(final_loss)
    w0, b0 = net.weights[0], net.biases[0]
    net.weights[0] = w0 / scale
    net.biases[0] = b0 - (loc / scale) * w0.sum(axis=0)
    net.weights[-1] = net.weights[-1] * scale
    net.biases[-1] = net.biases[-1] * scale + loc
    net.loss_history = history
    return net


def train(frame: SupervisedFrame, tau: float, config: TrainConfig) -> QuantileNet:
    """Fit a quantile network at level tau on the frame (full-batch Adam)."""
    if not 0.0 < tau < 1.0:
        raise InvalidTau(f"tau must be in (0, 1), got {tau}")
    return _fit(frame, tau, "pinball", config)


def mse_train(frame: SupervisedFrame, config: TrainConfig) -> QuantileNet:
    """Fit a point-forecast network on squared error (tau is None)."""
    return _fit(frame, None, "squared", config)


def save_net(net: QuantileNet, path) -> None:
    """Dump parameters to a versioned JSON file (row-major weight lists)."""
    payload = {
        "format": _FORMAT_NAME,
        "format_version": _FORMAT_VERSION,
        "tau": net.tau,
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_net(path) -> QuantileNet:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != _FORMAT_NAME:
        raise ValueError(f"{path} is not a saved quantile net")
    if payload.get("format_version") != _FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {payload.get('format_version')}")
    net = QuantileNet(payload["weights"], payload["biases"], payload["tau"])
    if list(net.layer_sizes) != list(payload["layer_sizes"]):
        raise ValueError("layer_sizes header disagrees with stored weights")
    return net
