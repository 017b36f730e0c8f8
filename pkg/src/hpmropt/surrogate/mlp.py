"""Small fully connected regressor trained with minibatch Adam in numpy.

Backpropagation is written out by hand; :func:`loss_and_grad` exposes the
flat gradient so it can be checked against finite differences.

With ``halving=True`` the full-batch training loss is evaluated after every
epoch; an epoch that fails to improve it is rolled back and the step size
halved, so the recorded loss history never increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Standardizer


class DivergenceError(FloatingPointError):
    pass


ACTIVATIONS = {
    "tanh": (np.tanh, lambda a, z: 1.0 - a * a),
    "softplus": (lambda z: np.logaddexp(0.0, z), lambda a, z: 1.0 / (1.0 + np.exp(-z))),
    "relu": (lambda z: np.maximum(z, 0.0), lambda a, z: (z > 0).astype(float)),
}


@dataclass
class MLPConfig:
    hidden: tuple = (64, 64)
    activation: str = "tanh"
    learning_rate: float = 3e-3
    epochs: int = 1500
    batch_size: int = 64
    seed: int = 0
    halving: bool = True
    min_learning_rate: float = 1e-6
    weight_decay: float = 0.0

    @classmethod
    def from_dict(cls, d: dict | None) -> "MLPConfig":
        d = dict(d or {})
        if "hidden" in d:
            d["hidden"] = tuple(int(h) for h in d["hidden"])
        return cls(**d)


@dataclass
class MLPModel:
    weights: list
    biases: list
    activation: str
    x_scaler: Standardizer
    y_scaler: Standardizer
    config: MLPConfig = field(default_factory=MLPConfig)
    loss_history: list = field(default_factory=list)

    @property
    def sizes(self) -> list:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def params(self) -> list:
        return [p for wb in zip(self.weights, self.biases) for p in wb]

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "activation": self.activation,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "x_scaler": self.x_scaler.to_dict(),
            "y_scaler": self.y_scaler.to_dict(),
            "config": {**self.config.__dict__, "hidden": list(self.config.hidden)},
            "final_loss": self.loss_history[-1] if self.loss_history else None,
        }

    @classmethod
    def from_dict(cls, d) -> "MLPModel":
        return cls(
            weights=[np.asarray(w, dtype=float) for w in d["weights"]],
            biases=[np.asarray(b, dtype=float) for b in d["biases"]],
            activation=d["activation"],
            x_scaler=Standardizer.from_dict(d["x_scaler"]),
            y_scaler=Standardizer.from_dict(d["y_scaler"]),
            config=MLPConfig.from_dict(d.get("config")),
        )


def init_params(sizes, rng: np.random.Generator):
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        lim = math.sqrt(6.0 / (n_in + n_out))  # Glorot uniform
        weights.append(rng.uniform(-lim, lim, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return weights, biases


def forward(weights, biases, X, activation="tanh"):
    """Returns the output and the per-layer caches ``(a_prev, z)``."""
    act = ACTIVATIONS[activation][0]
    a = X
    caches = []
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = a @ W + b
        caches.append((a, z))
        a = z if i == len(weights) - 1 else act(z)
    return a, caches


def loss_and_grad(weights, biases, X, Y, activation="tanh", weight_decay=0.0):
    """Mean squared error (halved) and gradients by backpropagation."""
    d_act = ACTIVATIONS[activation][1]
    out, caches = forward(weights, biases, X, activation)
    n = len(X)
    diff = out - Y
    loss = 0.5 * np.mean(np.sum(diff * diff, axis=1))
    if weight_decay:
        loss += 0.5 * weight_decay * sum(np.sum(W * W) for W in weights)
    gW = [None] * len(weights)
    gb = [None] * len(weights)
    delta = diff / n
    for i in range(len(weights) - 1, -1, -1):
        a_prev, z = caches[i]
        gW[i] = a_prev.T @ delta + weight_decay * weights[i]
        gb[i] = delta.sum(axis=0)
        if i > 0:
            z_prev = caches[i - 1][1]
            delta = (delta @ weights[i].T) * d_act(a_prev, z_prev)
    return loss, gW, gb


def _as_2d(Y):
    Y = np.asarray(Y, dtype=float)
    return Y[:, None] if Y.ndim == 1 else Y


def mlp_fit(X, Y, config: MLPConfig | None = None) -> MLPModel:
    cfg = config or MLPConfig()
    if cfg.activation not in ACTIVATIONS:
        raise ValueError(f"unknown activation {cfg.activation!r}")
    X = np.asarray(X, dtype=float)
    Y = _as_2d(Y)
    # constant columns keep unit scale: a constant input carries no signal,
    # a constant target is simply learned as an offset
    xs = Standardizer.fit(X, allow_constant=True)
    ys = Standardizer.fit(Y, allow_constant=True)
    Xs, Ys = xs.transform(X), ys.transform(Y)
    rng = np.random.default_rng(cfg.seed)
    sizes = [X.shape[1], *cfg.hidden, Y.shape[1]]
    W, B = init_params(sizes, rng)
    params = W + B
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    lr = cfg.learning_rate
    step = 0
    n = len(X)
    bs = max(1, min(cfg.batch_size, n))

    def full_loss(W, B):
        return loss_and_grad(W, B, Xs, Ys, cfg.activation, cfg.weight_decay)[0]

    best = full_loss(W, B)
    history = [float(best)]
    for epoch in range(cfg.epochs):
        saved = ([w.copy() for w in W], [b.copy() for b in B], [a.copy() for a in m], [a.copy() for a in v], step)
        perm = rng.permutation(n)
        for start in range(0, n, bs):
            idx = perm[start : start + bs]
            _, gW, gB = loss_and_grad(W, B, Xs[idx], Ys[idx], cfg.activation, cfg.weight_decay)
            step += 1
            for p, g, mm, vv in zip(W + B, gW + gB, m, v):
                mm *= b1
                mm += (1 - b1) * g
                vv *= b2
                vv += (1 - b2) * g * g
                p -= lr * (mm / (1 - b1**step)) / (np.sqrt(vv / (1 - b2**step)) + eps)
        cur = full_loss(W, B)
        if not np.isfinite(cur):
            if not cfg.halving:
                raise DivergenceError(f"MLP training diverged at epoch {epoch} (seed={cfg.seed}, config={cfg})")
            cur = math.inf
        if cfg.halving and cur > best:
            W, B, m, v, step = saved
            lr *= 0.5
            history.append(float(best))
            if lr < cfg.min_learning_rate:
                break
            continue
        best = min(best, cur)
        history.append(float(cur))
    if not all(np.all(np.isfinite(p)) for p in W + B):
        raise DivergenceError(f"MLP weights not finite (seed={cfg.seed}, config={cfg})")
    return MLPModel(weights=W, biases=B, activation=cfg.activation, x_scaler=xs, y_scaler=ys, config=cfg,
                    loss_history=history)


def mlp_predict(model: MLPModel, X) -> np.ndarray:
    Xs = model.x_scaler.transform(np.atleast_2d(np.asarray(X, dtype=float)))
    out, _ = forward(model.weights, model.biases, Xs, model.activation)
    return model.y_scaler.inverse(out)
