from __future__ import annotations

import numpy as np

from .base import Classifier, Standardizer


class KNearestNeighbors(Classifier):
    """k-NN on z-scored features; probability = share of the k neighbours per class.

    Distance ties are broken by training-row order.
    """

    kind = "KNN"

    def __init__(self, seed=0, k=5):
        super().__init__(seed, k=k)
        self.k = int(k)

    def _fit(self, X, y):
        self.scaler_ = Standardizer().fit(X)
        self.Z_ = self.scaler_.transform(X)
        self.y_ = y

    def _predict_proba(self, X):
        Q = self.scaler_.transform(X)
        k = min(self.k, self.Z_.shape[0])
        n_classes = len(self.classes_)
        out = np.zeros((Q.shape[0], n_classes))
        for i, q in enumerate(Q):
            d2 = ((self.Z_ - q) ** 2).sum(axis=1)
            nearest = np.argsort(d2, kind="stable")[:k]
            out[i] = np.bincount(self.y_[nearest], minlength=n_classes) / k
        return out

    def get_state(self):
        return {
            "mean": self.scaler_.mean_.tolist(),
            "scale": self.scaler_.scale_.tolist(),
            "Z": self.Z_.tolist(),
            "y": self.y_.tolist(),
        }

    def set_state(self, state):
        self.scaler_ = Standardizer(state["mean"], state["scale"])
        self.Z_ = np.asarray(state["Z"], dtype=float)
        self.y_ = np.asarray(state["y"], dtype=np.int64)
