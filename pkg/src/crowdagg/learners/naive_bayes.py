from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .base import Classifier


class BernoulliNB(Classifier):
    """Bernoulli naive Bayes over features binarized at their training medians.

    A feature is "on" when strictly above the median. Laplace smoothing with
    ``alpha`` on both the class priors and the per-feature Bernoulli rates.
    """

    kind = "BNB"

    def __init__(self, seed=0, alpha=1.0):
        super().__init__(seed, alpha=alpha)
        self.alpha = float(alpha)

    def _fit(self, X, y):
        self.threshold_ = np.median(X, axis=0)
        B = (X > self.threshold_).astype(float)
        n_classes = len(self.classes_)
        counts = np.bincount(y, minlength=n_classes).astype(float)
        a = self.alpha
        self.log_prior_ = np.log((counts + a) / (counts.sum() + a * n_classes))
        on = np.vstack([B[y == c].sum(axis=0) for c in range(n_classes)])
        p = (on + a) / (counts[:, None] + 2.0 * a)
        self.log_p_ = np.log(p)
        self.log_q_ = np.log1p(-p)

    def _predict_proba(self, X):
        B = (X > self.threshold_).astype(float)
        joint = self.log_prior_ + B @ self.log_p_.T + (1.0 - B) @ self.log_q_.T
        return np.exp(joint - logsumexp(joint, axis=1, keepdims=True))

    def get_state(self):
        return {
            "threshold": self.threshold_.tolist(),
            "log_prior": self.log_prior_.tolist(),
            "log_p": self.log_p_.tolist(),
            "log_q": self.log_q_.tolist(),
        }

    def set_state(self, state):
        self.threshold_ = np.asarray(state["threshold"], dtype=float)
        self.log_prior_ = np.asarray(state["log_prior"], dtype=float)
        self.log_p_ = np.asarray(state["log_p"], dtype=float)
        self.log_q_ = np.asarray(state["log_q"], dtype=float)
