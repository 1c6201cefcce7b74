"""Classifier backends that turn weighted samples into probability models."""

from __future__ import annotations

import json
import os

import numpy as np

from ..errors import InvalidArgumentError
from .encoding import encode_inputs, encoded_width
from .gbt import GbtClassifier, GbtConfig, train_gbt
from .mlp import (
    LOGIT_CLAMP,
    PROB_CLIP,
    MlpClassifier,
    MlpConfig,
    WeightedTrainingSet,
    classification_loss,
    grad_loss_wrt_params,
    train_mlp,
)

__all__ = [
    "WeightedTrainingSet",
    "classification_loss",
    "MlpConfig",
    "MlpClassifier",
    "train_mlp",
    "grad_loss_wrt_params",
    "GbtConfig",
    "GbtClassifier",
    "train_gbt",
    "predict",
    "save_classifier",
    "load_classifier",
    "PROB_CLIP",
    "LOGIT_CLAMP",
    "encode_inputs",
    "encoded_width",
]

Classifier = MlpClassifier | GbtClassifier


def predict(classifier: Classifier, points: np.ndarray) -> np.ndarray:
    """Predicted positive-class probabilities, strictly inside (0, 1)."""
    if not isinstance(classifier, (MlpClassifier, GbtClassifier)):
        raise InvalidArgumentError(f"unsupported classifier {type(classifier)!r}")
    return classifier.predict(np.atleast_2d(np.asarray(points, dtype=float)))


def save_classifier(classifier: Classifier, path: str | os.PathLike) -> None:
    """Write a classifier to a versioned JSON file (exact round-trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(classifier.to_jsonable(), fh)


def load_classifier(path: str | os.PathLike) -> Classifier:
    """Read back a classifier written by :func:`save_classifier`."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    kind = data.get("kind")
    if kind == "mlp":
        return MlpClassifier.from_jsonable(data)
    if kind == "gbt":
        return GbtClassifier.from_jsonable(data)
    raise InvalidArgumentError(f"unknown classifier kind {kind!r}")
