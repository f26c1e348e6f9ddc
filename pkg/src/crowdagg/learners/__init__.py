"""In-repo classifier suite (BNB, KNN, LR, RF) and multi-label wrappers."""

from .base import Classifier, Standardizer
from .forest import RandomForest
from .knn import KNearestNeighbors
from .logistic import LogisticRegression
from .naive_bayes import BernoulliNB
from .registry import CLASSIFIERS, DEFAULT_PARAMS, KINDS, fit, make_classifier, predict_proba
from .multilabel import (
    SCHEMES,
    MultiLabelWrapper,
    wrap_binary_relevance,
    wrap_classifier_chain,
    wrap_label_powerset,
)
from .serialize import load_model, model_from_dict, model_to_dict, save_model

__all__ = [
    "BernoulliNB",
    "CLASSIFIERS",
    "Classifier",
    "DEFAULT_PARAMS",
    "KINDS",
    "KNearestNeighbors",
    "LogisticRegression",
    "MultiLabelWrapper",
    "RandomForest",
    "SCHEMES",
    "Standardizer",
    "fit",
    "load_model",
    "make_classifier",
    "model_from_dict",
    "model_to_dict",
    "predict_proba",
    "save_model",
    "wrap_binary_relevance",
    "wrap_classifier_chain",
    "wrap_label_powerset",
]
