"""Exact Gaussian-process regression with an RBF kernel.

Inputs and targets are standardized inside the model. Hyperparameters
(log length scale(s), log signal variance, log noise variance) maximize the
log marginal likelihood: a small grid of starting length scales followed by
L-BFGS-B with analytic gradients. Several target columns may share one
kernel; each keeps its own output scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .dataset import Standardizer

JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
LENGTH_GRID = (0.5, 1.0, 2.0, 4.0)
BOUNDS = {
    "log_length": (math.log(1e-2), math.log(1e2)),
    "log_signal": (math.log(1e-3), math.log(1e3)),
    "log_noise": (math.log(1e-10), math.log(1.0)),
}


class KernelNotPDError(np.linalg.LinAlgError):
    pass


class NotFittedError(RuntimeError):
    pass


def _sqdist_parts(A, B):
    """Per-dimension squared differences, shape (d, n, m)."""
    return (A.T[:, :, None] - B.T[:, None, :]) ** 2


def rbf(A, B, length_scale, signal_var):
    ls = np.broadcast_to(np.asarray(length_scale, dtype=float), (A.shape[1],))
    d2 = (((A[:, None, :] - B[None, :, :]) / ls) ** 2).sum(axis=-1)
    return signal_var * np.exp(-0.5 * d2)


def robust_cholesky(K):
    """Lower Cholesky factor, escalating diagonal jitter 1e-10 -> 1e-6."""
    scale = max(float(np.mean(np.diag(K))), 1e-300)
    for j in JITTERS:
        try:
            return cholesky(K + j * scale * np.eye(len(K)), lower=True), j
        except np.linalg.LinAlgError:
            continue
    raise KernelNotPDError("kernel matrix not positive definite after jitter escalation to 1e-6")


@dataclass
class GPModel:
    length_scale: np.ndarray
    signal_var: float
    noise_var: float
    X_train: np.ndarray  # standardized
    Y_train: np.ndarray  # standardized, (n, m)
    x_scaler: Standardizer
    y_scaler: Standardizer
    jitter: float = 0.0
    log_marginal_likelihood: float = float("nan")
    _L: np.ndarray = None
    _alpha: np.ndarray = None

    def __post_init__(self):
        self.length_scale = np.broadcast_to(np.asarray(self.length_scale, dtype=float), (self.X_train.shape[1],)).copy()
        if self._L is None:
            self._factorize()

    def _factorize(self):
        K = rbf(self.X_train, self.X_train, self.length_scale, self.signal_var)
        K[np.diag_indices_from(K)] += self.noise_var
        self._L, self.jitter = robust_cholesky(K)
        self._alpha = cho_solve((self._L, True), self.Y_train)

    @property
    def n_outputs(self) -> int:
        return self.Y_train.shape[1]

    def to_dict(self) -> dict:
        return {
            "kernel": "rbf",
            "length_scale": self.length_scale.tolist(),
            "signal_var": self.signal_var,
            "noise_var": self.noise_var,
            "x_scaler": self.x_scaler.to_dict(),
            "y_scaler": self.y_scaler.to_dict(),
            "X_train": self.X_train.tolist(),
            "Y_train": self.Y_train.tolist(),
            "log_marginal_likelihood": self.log_marginal_likelihood,
        }

    @classmethod
    def from_dict(cls, d) -> "GPModel":
        return cls(
            length_scale=np.asarray(d["length_scale"], dtype=float),
            signal_var=float(d["signal_var"]),
            noise_var=float(d["noise_var"]),
            X_train=np.asarray(d["X_train"], dtype=float),
            Y_train=np.asarray(d["Y_train"], dtype=float),
            x_scaler=Standardizer.from_dict(d["x_scaler"]),
            y_scaler=Standardizer.from_dict(d["y_scaler"]),
            log_marginal_likelihood=float(d.get("log_marginal_likelihood", float("nan"))),
        )


def _neg_lml(theta, X, Y, D2, ard):
    """Negative log marginal likelihood (summed over columns) and its gradient."""
    d = X.shape[1]
    n, m = Y.shape
    log_ls = theta[:d] if ard else np.full(d, theta[0])
    k = d if ard else 1
    s2 = math.exp(theta[k])
    sn2 = math.exp(theta[k + 1])
    ls2 = np.exp(2.0 * log_ls)
    Kf = s2 * np.exp(-0.5 * np.tensordot(1.0 / ls2, D2, axes=1))
    K = Kf + sn2 * np.eye(n)
    try:
        L = cholesky(K, lower=True)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)
    alpha = cho_solve((L, True), Y)
    lml = -0.5 * np.sum(Y * alpha) - m * np.log(np.diag(L)).sum() - 0.5 * n * m * math.log(2 * math.pi)
    Kinv = cho_solve((L, True), np.eye(n))
    W = alpha @ alpha.T - m * Kinv
    WK = W * Kf
    g_ls = 0.5 * np.tensordot(D2, WK, axes=([1, 2], [0, 1])) / ls2  # d/d log l_d
    grad = np.empty_like(theta)
    if ard:
        grad[:d] = g_ls
    else:
        grad[0] = g_ls.sum()
    grad[k] = 0.5 * np.sum(WK)
    grad[k + 1] = 0.5 * sn2 * np.trace(W)
    return -lml, -grad


def gp_fit(
    X,
    Y,
    ard: bool = False,
    optimize: bool = True,
    length_scale=1.0,
    signal_var: float = 1.0,
    noise_var: float = 1e-6,
    max_iter: int = 200,
) -> GPModel:
    """Fit a GP to ``X (n, d)`` and ``Y (n,)`` or ``(n, m)``.

    With ``optimize=False`` the given hyperparameters (in standardized units)
    are used as-is.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or len(X) != len(Y):
        raise ValueError("X must be (n, d) with as many rows as Y")
    if len(X) < 1:
        raise ValueError("GP needs at least one training point")
    xs = Standardizer.fit(X, allow_constant=True)
    ys = Standardizer.fit(Y, allow_constant=True)
    Xs, Ys = xs.transform(X), ys.transform(Y)
    if not np.any(Ys):
        optimize = False  # constant target: the posterior mean is that constant
    d = X.shape[1]
    lml = float("nan")
    if optimize:
        D2 = _sqdist_parts(Xs, Xs)
        k = d if ard else 1
        bounds = [BOUNDS["log_length"]] * k + [BOUNDS["log_signal"], BOUNDS["log_noise"]]
        best = None
        for ls0 in LENGTH_GRID:
            theta0 = np.array([math.log(ls0 * math.sqrt(d))] * k + [0.0, math.log(1e-4)])
            f0, _ = _neg_lml(theta0, Xs, Ys, D2, ard)
            if best is None or f0 < best[0]:
                best = (f0, theta0)
        res = minimize(_neg_lml, best[1], args=(Xs, Ys, D2, ard), jac=True, method="L-BFGS-B",
                       bounds=bounds, options={"maxiter": max_iter})
        theta = res.x if res.fun <= best[0] else best[1]
        length_scale = np.exp(theta[:d]) if ard else np.full(d, math.exp(theta[0]))
        signal_var = math.exp(theta[k])
        noise_var = math.exp(theta[k + 1])
        lml = -float(min(res.fun, best[0]))
    return GPModel(
        length_scale=np.broadcast_to(np.asarray(length_scale, dtype=float), (d,)).copy(),
        signal_var=float(signal_var),
        noise_var=float(noise_var),
        X_train=Xs,
        Y_train=Ys,
        x_scaler=xs,
        y_scaler=ys,
        log_marginal_likelihood=lml,
    )


def gp_predict(model: GPModel, X, return_var: bool = True):
    """Predictive mean ``(n, m)`` and variance ``(n, m)`` in target units."""
    if model is None or model._alpha is None:
        raise NotFittedError("GP model is not fitted")
    Xs = model.x_scaler.transform(np.atleast_2d(np.asarray(X, dtype=float)))
    Ks = rbf(Xs, model.X_train, model.length_scale, model.signal_var)
    mean = model.y_scaler.inverse(Ks @ model._alpha)
    if not return_var:
        return mean
    v = solve_triangular(model._L, Ks.T, lower=True)
    var_s = np.maximum(model.signal_var - np.sum(v * v, axis=0), 0.0)
    var = var_s[:, None] * model.y_scaler.std[None, :] ** 2
    return mean, var
