from __future__ import annotations

import numpy as np

from .base import Classifier
from .forest import RandomForest
from .knn import KNearestNeighbors
from .logistic import LogisticRegression
from .naive_bayes import BernoulliNB

CLASSIFIERS: dict[str, type[Classifier]] = {
    "BNB": BernoulliNB,
    "KNN": KNearestNeighbors,
    "LR": LogisticRegression,
    "RF": RandomForest,
}
KINDS = tuple(CLASSIFIERS)

DEFAULT_PARAMS: dict[str, dict] = {
    "BNB": {"alpha": 1.0},
    "KNN": {"k": 5},
    "LR": {"l2": 1.0, "max_iter": 500, "tol": 1e-6},
    "RF": {"n_trees": 100, "max_features": "sqrt", "max_depth": None, "min_leaf": 1, "bootstrap": True},
}


def make_classifier(kind: str, params: dict | None = None, seed: int = 0) -> Classifier:
    kind = kind.upper()
    if kind not in CLASSIFIERS:
        raise ValueError(f"unknown classifier kind {kind!r}; expected one of {KINDS}")
    merged = {**DEFAULT_PARAMS[kind], **(params or {})}
    return CLASSIFIERS[kind](seed=seed, **merged)


def fit(kind: str, hyperparameters: dict | None, instances, labels, seed: int = 0) -> Classifier:
    return make_classifier(kind, hyperparameters, seed).fit(instances, labels)


def predict_proba(model: Classifier, instance) -> dict:
    """Class distribution for a single instance as ``{class: probability}``."""
    row = model.predict_proba(np.asarray(instance, dtype=float).reshape(1, -1))[0]
    return {c.item() if hasattr(c, "item") else c: float(p) for c, p in zip(model.classes_, row)}
