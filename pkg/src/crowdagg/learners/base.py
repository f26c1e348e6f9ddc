from __future__ import annotations

import numpy as np

from .. import errors


class Standardizer:
    """Column z-scoring learned on training data; constant columns map to 0."""

    def __init__(self, mean=None, scale=None):
        self.mean_ = None if mean is None else np.asarray(mean, dtype=float)
        self.scale_ = None if scale is None else np.asarray(scale, dtype=float)

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        # constant columns: centred values are exactly 0, keep them there
        self.scale_ = np.where(std > 0.0, std, 1.0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        Z = (np.asarray(X, dtype=float) - self.mean_) / self.scale_
        return Z


class Classifier:
    """Common surface of the in-repo classifiers.

    ``fit`` learns ``classes_`` (sorted class ids seen in training);
    ``predict_proba`` returns one row per query aligned with ``classes_``.
    A single training class is not an error: every query then gets
    probability 1 for it.
    """

    kind: str = ""

    def __init__(self, seed: int = 0, **params):
        self.seed = int(seed)
        self.params = params
        self.classes_: np.ndarray | None = None
        self.n_features_: int | None = None

    def fit(self, X, y) -> "Classifier":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2 or X.shape[0] == 0:
            raise errors.EmptyTrainingSet("no training instances")
        if X.shape[1] == 0:
            raise errors.WidthMismatch("training rows have no features")
        if y.shape[0] != X.shape[0]:
            raise errors.WidthMismatch(f"{X.shape[0]} rows but {y.shape[0]} labels")
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        self.n_features_ = X.shape[1]
        if len(self.classes_) > 1:
            self._fit(X, y_idx.astype(np.int64))
        return self

    def predict_proba(self, X) -> np.ndarray:
        if self.classes_ is None:
            raise RuntimeError("model is not fitted")
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_:
            raise errors.WidthMismatch(f"model expects {self.n_features_} features, got {X.shape[1]}")
        if len(self.classes_) == 1:
            return np.ones((X.shape[0], 1))
        return self._predict_proba(X)

    def predict(self, X) -> np.ndarray:
        P = self.predict_proba(X)
        return self.classes_[np.argmax(P, axis=1)]

    def proba_of(self, X, cls) -> np.ndarray:
        """Probability of class ``cls`` per row; 0 when never seen in training."""
        P = self.predict_proba(X)
        hit = np.nonzero(self.classes_ == cls)[0]
        if len(hit) == 0:
            return np.zeros(P.shape[0])
        return P[:, hit[0]]

    # subclass hooks
    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        raise NotImplementedError

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def get_state(self) -> dict:
        raise NotImplementedError

    def set_state(self, state: dict) -> None:
        raise NotImplementedError
