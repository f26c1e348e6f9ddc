"""Multi-label problem transformations: binary relevance, classifier chain, label power-set.

Each wrapper reports, per label, the probability that the label is 1.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import errors
from ..seeding import derive_seed
from .registry import make_classifier

SCHEMES = ("BR", "CC", "LP")


class MultiLabelWrapper:
    def __init__(self, scheme: str, base: str, params: dict | None = None, seed: int = 0, labels: Sequence[str] | None = None):
        scheme = scheme.upper()
        if scheme not in SCHEMES:
            raise ValueError(f"unknown multi-label scheme {scheme!r}")
        self.scheme = scheme
        self.base = base.upper()
        self.params = dict(params or {})
        self.seed = int(seed)
        self.labels = None if labels is None else tuple(labels)
        self.models_: list = []
        self.n_features_: int | None = None

    def _model(self, j: int):
        return make_classifier(self.base, self.params, derive_seed(self.seed, self.scheme, j))

    def fit(self, X, Y) -> "MultiLabelWrapper":
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise errors.EmptyTrainingSet("no training instances")
        if X.shape[1] == 0:
            raise errors.WidthMismatch("multi-label training rows have no features")
        if Y.ndim != 2 or Y.shape[0] != X.shape[0]:
            raise errors.WidthMismatch("label matrix does not match the instances")
        if self.labels is None:
            self.labels = tuple(f"label{j}" for j in range(Y.shape[1]))
        elif len(self.labels) != Y.shape[1]:
            raise errors.WidthMismatch(f"{len(self.labels)} label names for {Y.shape[1]} label columns")
        self.n_features_ = X.shape[1]
        L = Y.shape[1]
        if self.scheme == "BR":
            self.models_ = [self._model(j).fit(X, Y[:, j]) for j in range(L)]
        elif self.scheme == "CC":
            # training inputs carry the true preceding labels
            self.models_ = [self._model(j).fit(np.hstack([X, Y[:, :j]]), Y[:, j]) for j in range(L)]
        else:
            codes = Y @ (1 << np.arange(L, dtype=np.int64))
            self.models_ = [self._model(0).fit(X, codes)]
        return self

    def predict_label_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features_:
            raise errors.WidthMismatch(f"wrapper expects {self.n_features_} features, got {X.shape[1]}")
        L = len(self.labels)
        out = np.zeros((X.shape[0], L))
        if self.scheme == "BR":
            for j, m in enumerate(self.models_):
                out[:, j] = m.proba_of(X, 1)
        elif self.scheme == "CC":
            hard = np.zeros((X.shape[0], 0))
            for j, m in enumerate(self.models_):
                p = m.proba_of(np.hstack([X, hard]), 1)
                out[:, j] = p
                # prediction-time chain inputs are the thresholded earlier outputs
                hard = np.hstack([hard, (p > 0.5).astype(float)[:, None]])
        else:
            m = self.models_[0]
            P = m.predict_proba(X)
            bits = (m.classes_[:, None] >> np.arange(L)) & 1
            out = P @ bits
        return np.clip(out, 0.0, 1.0)

    @property
    def power_set_classes(self) -> list[tuple[int, ...]]:
        if self.scheme != "LP":
            raise AttributeError("only label power-set wrappers have combination classes")
        L = len(self.labels)
        return [tuple(int((c >> j) & 1) for j in range(L)) for c in self.models_[0].classes_]


def wrap_binary_relevance(base, instances, multilabels, seed=0, params=None, labels=None) -> MultiLabelWrapper:
    return MultiLabelWrapper("BR", base, params, seed, labels).fit(instances, multilabels)


def wrap_classifier_chain(base, instances, multilabels, seed=0, params=None, labels=None) -> MultiLabelWrapper:
    return MultiLabelWrapper("CC", base, params, seed, labels).fit(instances, multilabels)


def wrap_label_powerset(base, instances, multilabels, seed=0, params=None, labels=None) -> MultiLabelWrapper:
    return MultiLabelWrapper("LP", base, params, seed, labels).fit(instances, multilabels)
