from __future__ import annotations

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from .. import errors
from .base import Classifier, Standardizer


def pack(W: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.concatenate([W.ravel(), b])


def unpack(theta: np.ndarray, d: int, k: int):
    return theta[: d * k].reshape(d, k), theta[d * k :]


def loss_and_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray, k: int, lam: float):
    """Mean multinomial negative log-likelihood plus ``lam / (2n) * ||W||^2``.

    The intercepts are not penalized. Returns ``(loss, gradient)`` with the
    gradient packed like ``theta``.
    """
    n, d = X.shape
    W, b = unpack(theta, d, k)
    logits = X @ W + b
    lse = logsumexp(logits, axis=1)
    nll = (lse - logits[np.arange(n), y]).sum()
    loss = nll / n + 0.5 * lam * float((W * W).sum()) / n
    P = np.exp(logits - lse[:, None])
    P[np.arange(n), y] -= 1.0
    gW = X.T @ P / n + lam * W / n
    gb = P.sum(axis=0) / n
    return loss, pack(gW, gb)


class LogisticRegression(Classifier):
    """L2-penalized multinomial logistic regression on z-scored features.

    Optimized with L-BFGS; the loss trajectory is recorded and must be
    non-increasing.
    """

    kind = "LR"

    def __init__(self, seed=0, l2=1.0, max_iter=500, tol=1e-6):
        super().__init__(seed, l2=l2, max_iter=max_iter, tol=tol)
        self.l2 = float(l2)
        self.max_iter = int(max_iter)
        self.tol = float(tol)
        self.loss_history_: list[float] = []

    @classmethod
    def from_coefficients(cls, W, b, classes=None, mean=None, scale=None) -> "LogisticRegression":
        W = np.asarray(W, dtype=float)
        b = np.asarray(b, dtype=float)
        d, k = W.shape
        model = cls()
        model.classes_ = np.arange(k) if classes is None else np.asarray(classes)
        model.n_features_ = d
        model.scaler_ = Standardizer(np.zeros(d) if mean is None else mean, np.ones(d) if scale is None else scale)
        model.W_, model.b_ = W, b
        return model

    def _fit(self, X, y):
        self.scaler_ = Standardizer().fit(X)
        Z = self.scaler_.transform(X)
        d = Z.shape[1]
        k = len(self.classes_)
        theta0 = np.zeros(d * k + k)
        history = [float(loss_and_grad(theta0, Z, y, k, self.l2)[0])]

        def record(intermediate_result):
            history.append(float(intermediate_result.fun))

        res = minimize(
            loss_and_grad,
            theta0,
            args=(Z, y, k, self.l2),
            jac=True,
            method="L-BFGS-B",
            callback=record,
            options={"maxiter": self.max_iter, "ftol": self.tol},
        )
        for prev, cur in zip(history, history[1:]):
            if cur > prev + 1e-12 * max(1.0, abs(prev)):
                raise errors.ConvergenceError(f"logistic loss increased from {prev} to {cur}")
        self.loss_history_ = history
        self.W_, self.b_ = unpack(res.x, d, k)

    def _predict_proba(self, X):
        Z = self.scaler_.transform(X)
        return softmax(Z @ self.W_ + self.b_, axis=1)

    def get_state(self):
        return {
            "mean": self.scaler_.mean_.tolist(),
            "scale": self.scaler_.scale_.tolist(),
            "W": self.W_.tolist(),
            "b": self.b_.tolist(),
        }

    def set_state(self, state):
        self.scaler_ = Standardizer(state["mean"], state["scale"])
        self.W_ = np.asarray(state["W"], dtype=float)
        self.b_ = np.asarray(state["b"], dtype=float)
