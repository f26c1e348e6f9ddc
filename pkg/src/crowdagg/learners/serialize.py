"""Fitted-model artifacts: JSON documents with a format version."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import errors
from .multilabel import MultiLabelWrapper
from .registry import make_classifier

FORMAT = "crowdagg.model"
FORMAT_VERSION = 1


def _classifier_doc(model) -> dict:
    return {
        "kind": model.kind,
        "seed": model.seed,
        "params": model.params,
        "classes": model.classes_.tolist(),
        "n_features": model.n_features_,
        "state": model.get_state() if len(model.classes_) > 1 else None,
    }


def _classifier_from(doc: dict):
    model = make_classifier(doc["kind"], doc["params"], doc["seed"])
    model.classes_ = np.asarray(doc["classes"])
    model.n_features_ = doc["n_features"]
    if doc["state"] is not None:
        model.set_state(doc["state"])
    return model


def model_to_dict(model) -> dict:
    if isinstance(model, MultiLabelWrapper):
        body = {
            "type": "multilabel",
            "scheme": model.scheme,
            "base": model.base,
            "params": model.params,
            "seed": model.seed,
            "labels": list(model.labels),
            "n_features": model.n_features_,
            "models": [_classifier_doc(m) for m in model.models_],
        }
    else:
        body = {"type": "classifier", **_classifier_doc(model)}
    return {"format": FORMAT, "format_version": FORMAT_VERSION, "model": body}


def model_from_dict(doc: dict):
    if doc.get("format") != FORMAT:
        raise errors.ModelFormatError(f"not a model artifact: format={doc.get('format')!r}")
    if doc.get("format_version") != FORMAT_VERSION:
        raise errors.ModelFormatError(f"unsupported model format version {doc.get('format_version')!r}")
    body = doc["model"]
    if body["type"] == "classifier":
        return _classifier_from(body)
    wrapper = MultiLabelWrapper(body["scheme"], body["base"], body["params"], body["seed"], body["labels"])
    wrapper.n_features_ = body["n_features"]
    wrapper.models_ = [_classifier_from(m) for m in body["models"]]
    return wrapper


def save_model(model, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True))


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))
