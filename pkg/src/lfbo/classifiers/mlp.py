"""Feed-forward network classifier trained on the weighted objective.

The model is a small fully connected network with ReLU hidden layers
and a sigmoid output.  Training minimizes the weighted classification
loss

    L = (1/n) * sum_i [ -pos_w_i * log C(x_i) - neg_w_i * log(1 - C(x_i)) ]

with the Adam optimizer.  Every sample contributes a negative-label
term (weight 1 by default) and, when its positive weight is nonzero, a
positive-label term scaled by that weight.  The pointwise minimizer is
C = pos_w / (pos_w + neg_w), which is what turns a trained classifier
into an acquisition function via the ratio C / (1 - C).

Output logits are clamped so predictions stay inside
[1e-6, 1 - 1e-6]; gradients are treated as zero outside the clamp.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..core import SearchSpace
from ..errors import DegenerateTrainingError, DomainError, InvalidArgumentError
from .encoding import encode_inputs, encoded_width

__all__ = [
    "PROB_CLIP",
    "LOGIT_CLAMP",
    "WeightedTrainingSet",
    "classification_loss",
    "MlpConfig",
    "MlpClassifier",
    "train_mlp",
    "grad_loss_wrt_params",
]

# Predictions are kept inside [PROB_CLIP, 1 - PROB_CLIP] before any log.
PROB_CLIP = 1e-6
# logit(1 - PROB_CLIP); clamping pre-activations at +/- this bound is
# equivalent to clipping probabilities at PROB_CLIP.
LOGIT_CLAMP = math.log((1.0 - PROB_CLIP) / PROB_CLIP)

_ADAM_B1 = 0.9
_ADAM_B2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class WeightedTrainingSet:
    """Classifier training data: points plus per-sample label weights.

    Parameters
    ----------
    space : SearchSpace
        Domain the points live in (drives encoding and validation).
    points : numpy.ndarray
        ``(n, dims)`` array of valid points.
    pos_weights : numpy.ndarray
        Non-negative weight of each sample's positive-label term, the
        utility values ``u(y_i; tau)``.
    neg_weights : numpy.ndarray, optional
        Weight of each sample's negative-label term.  Defaults to all
        ones, the weighting used by the utility-based recipe.  A plain
        unweighted classifier (labels 1 above the threshold, 0 below)
        is expressed as ``pos_weights=labels, neg_weights=1-labels``.
    """

    space: SearchSpace
    points: np.ndarray
    pos_weights: np.ndarray
    neg_weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        pw = np.asarray(self.pos_weights, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "pos_weights", pw)
        if pts.shape[0] != pw.shape[0] or pw.ndim != 1:
            raise InvalidArgumentError("points and pos_weights lengths differ")
        if pts.shape[0] == 0:
            raise InvalidArgumentError("training set must not be empty")
        if not np.all(np.isfinite(pw)) or np.any(pw < 0):
            raise InvalidArgumentError("pos_weights must be finite and >= 0")
        if self.neg_weights is not None:
            nw = np.asarray(self.neg_weights, dtype=float)
            object.__setattr__(self, "neg_weights", nw)
            if nw.shape != pw.shape:
                raise InvalidArgumentError("neg_weights length differs from points")
            if not np.all(np.isfinite(nw)) or np.any(nw < 0):
                raise InvalidArgumentError("neg_weights must be finite and >= 0")
        for row in pts:
            if not self.space.is_valid(row):
                raise DomainError(f"training point {row} outside the search space")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def neg_weights_or_ones(self) -> np.ndarray:
        if self.neg_weights is None:
            return np.ones(self.n)
        return self.neg_weights


def classification_loss(
    c_values: np.ndarray,
    pos_weights: np.ndarray,
    neg_weights: np.ndarray | None = None,
) -> float:
    """Weighted binary cross entropy of predicted probabilities.

    ``-(1/n) * sum_i [pos_w_i * log C_i + neg_w_i * log(1 - C_i)]`` with
    ``C`` clipped into ``[1e-6, 1 - 1e-6]`` before the logs.

    Raises
    ------
    DomainError
        If any ``C`` lies outside the open interval (0, 1).
    """
    c = np.asarray(c_values, dtype=float)
    pw = np.asarray(pos_weights, dtype=float)
    if c.shape != pw.shape or c.ndim != 1 or c.size == 0:
        raise InvalidArgumentError("c_values and pos_weights must be equal-length 1-d")
    if not np.all((c > 0.0) & (c < 1.0)):
        raise DomainError("predicted probabilities must lie strictly inside (0, 1)")
    if not np.all(np.isfinite(pw)) or np.any(pw < 0):
        raise InvalidArgumentError("pos_weights must be finite and >= 0")
    nw = np.ones_like(pw) if neg_weights is None else np.asarray(neg_weights, dtype=float)
    if nw.shape != pw.shape or not np.all(np.isfinite(nw)) or np.any(nw < 0):
        raise InvalidArgumentError("neg_weights must match and be finite and >= 0")
    c = np.clip(c, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(np.mean(-pw * np.log(c) - nw * np.log1p(-c)))


@dataclass(frozen=True)
class MlpConfig:
    """Training configuration for :func:`train_mlp`.

    ``batch_size=None`` trains full batch.  Defaults suit the small
    refits inside an optimization loop; the large-sample consistency
    study overrides them (wider layers, more epochs, full batch).
    """

    hidden_units: tuple[int, ...] = (32, 32)
    epochs: int = 200
    batch_size: int | None = 64
    learning_rate: float = 1e-2
    weight_decay: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.hidden_units) == 0 or any(u < 1 for u in self.hidden_units):
            raise InvalidArgumentError("hidden_units must be positive and non-empty")
        if self.epochs < 1:
            raise InvalidArgumentError("epochs must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidArgumentError("batch_size must be None or >= 1")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise InvalidArgumentError("learning_rate must be positive")
        if self.weight_decay < 0 or not math.isfinite(self.weight_decay):
            raise InvalidArgumentError("weight_decay must be finite and >= 0")


class MlpClassifier:
    """Network parameters plus the optimizer state that produced them.

    ``weights[k]`` has shape ``(fan_in, fan_out)`` and ``biases[k]``
    shape ``(fan_out,)``.  Hidden layers are initialized uniformly in
    ``+/- 1/sqrt(fan_in)``; the output layer starts at zero, so an
    untrained model predicts exactly 0.5 everywhere.
    """

    def __init__(
        self,
        space: SearchSpace,
        weights: list[np.ndarray],
        biases: list[np.ndarray],
        adam_m: list[np.ndarray] | None = None,
        adam_v: list[np.ndarray] | None = None,
        adam_step: int = 0,
    ) -> None:
        self.space = space
        self.weights = weights
        self.biases = biases
        n_params = len(weights) + len(biases)
        zeros = lambda: [np.zeros_like(p) for p in weights + biases]
        self.adam_m = adam_m if adam_m is not None else zeros()
        self.adam_v = adam_v if adam_v is not None else zeros()
        self.adam_step = adam_step
        if len(self.adam_m) != n_params or len(self.adam_v) != n_params:
            raise InvalidArgumentError("optimizer state does not match parameters")

    @staticmethod
    def initialize(
        space: SearchSpace, hidden_units: tuple[int, ...], rng: np.random.Generator
    ) -> "MlpClassifier":
        sizes = [encoded_width(space), *hidden_units, 1]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        weights[-1] = np.zeros_like(weights[-1])
        biases[-1] = np.zeros_like(biases[-1])
        return MlpClassifier(space, weights, biases)

    def logits(self, encoded: np.ndarray) -> np.ndarray:
        """Unclamped output logits for already-encoded inputs."""
        a = encoded
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ w + b, 0.0)
        return (a @ self.weights[-1] + self.biases[-1])[:, 0]

    def predict(self, points: np.ndarray) -> np.ndarray:
        """Predicted probabilities, strictly inside (0, 1)."""
        z = self.logits(encode_inputs(self.space, points))
        return _sigmoid(np.clip(z, -LOGIT_CLAMP, LOGIT_CLAMP))

    def to_jsonable(self) -> dict:
        return {
            "format": "lfbo-classifier",
            "kind": "mlp",
            "version": 1,
            "space": _space_to_jsonable(self.space),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "adam_m": [m.tolist() for m in self.adam_m],
            "adam_v": [v.tolist() for v in self.adam_v],
            "adam_step": self.adam_step,
        }

    @staticmethod
    def from_jsonable(data: dict) -> "MlpClassifier":
        if data.get("format") != "lfbo-classifier" or data.get("kind") != "mlp":
            raise InvalidArgumentError("not a serialized mlp classifier")
        if data.get("version") != 1:
            raise InvalidArgumentError(f"unsupported version {data.get('version')}")
        return MlpClassifier(
            _space_from_jsonable(data["space"]),
            [np.asarray(w, dtype=float) for w in data["weights"]],
            [np.asarray(b, dtype=float) for b in data["biases"]],
            [np.asarray(m, dtype=float) for m in data["adam_m"]],
            [np.asarray(v, dtype=float) for v in data["adam_v"]],
            int(data["adam_step"]),
        )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _space_to_jsonable(space: SearchSpace) -> dict:
    return {
        "dims": space.dims,
        "bounds": [list(b) for b in space.bounds],
        "categorical_dims": [list(c) for c in space.categorical_dims],
    }


def _space_from_jsonable(data: dict) -> SearchSpace:
    return SearchSpace(
        dims=int(data["dims"]),
        bounds=tuple((float(lo), float(hi)) for lo, hi in data["bounds"]),
        categorical_dims=tuple((int(i), int(c)) for i, c in data["categorical_dims"]),
    )


def _forward_backward(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    encoded: np.ndarray,
    pos_w: np.ndarray,
    neg_w: np.ndarray,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Analytic gradient of the mean weighted loss over one batch."""
    n = encoded.shape[0]
    acts = [encoded]
    pre: list[np.ndarray] = []
    a = encoded
    for w, b in zip(weights[:-1], biases[:-1]):
        z = a @ w + b
        pre.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    z_out = (a @ weights[-1] + biases[-1])[:, 0]
    c = _sigmoid(np.clip(z_out, -LOGIT_CLAMP, LOGIT_CLAMP))
    # d(mean loss)/dz for the sigmoid-of-clamped-logit composition;
    # samples sitting on the clamp contribute no gradient.
    dz = ((pos_w + neg_w) * c - pos_w) / n
    dz[np.abs(z_out) >= LOGIT_CLAMP] = 0.0
    dz = dz[:, None]
    grads_w = [np.empty(0)] * len(weights)
    grads_b = [np.empty(0)] * len(weights)
    grads_w[-1] = acts[-1].T @ dz
    grads_b[-1] = dz.sum(axis=0)
    da = dz @ weights[-1].T
    for k in range(len(weights) - 2, -1, -1):
        dzk = da * (pre[k] > 0.0)
        grads_w[k] = acts[k].T @ dzk
        grads_b[k] = dzk.sum(axis=0)
        if k > 0:
            da = dzk @ weights[k].T
    return grads_w, grads_b


def grad_loss_wrt_params(
    model: MlpClassifier, ts: WeightedTrainingSet
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradient of :func:`classification_loss` over the full training set.

    Returns one ``(dW, db)`` pair per layer, in layer order.  Weight
    decay is not included; this is the pure data term, suitable for
    checking against finite differences.
    """
    encoded = encode_inputs(model.space, ts.points)
    gw, gb = _forward_backward(
        model.weights, model.biases, encoded, ts.pos_weights, ts.neg_weights_or_ones()
    )
    return list(zip(gw, gb))


def train_mlp(ts: WeightedTrainingSet, config: MlpConfig) -> MlpClassifier:
    """Fit the network on a weighted training set.

    Deterministic given ``config.seed`` (initialization and batch
    shuffling share one generator).  The returned model's full-data
    loss never exceeds the loss at initialization: in the rare case an
    optimization run ends worse than it started, the initial
    parameters are returned instead.

    Raises
    ------
    DegenerateTrainingError
        If no sample has a positive ``pos_weight``.
    """
    if not np.any(ts.pos_weights > 0):
        raise DegenerateTrainingError("training requires at least one positive weight")
    rng = np.random.default_rng(config.seed)
    model = MlpClassifier.initialize(ts.space, config.hidden_units, rng)
    encoded = encode_inputs(ts.space, ts.points)
    pos_w = ts.pos_weights
    neg_w = ts.neg_weights_or_ones()
    n = ts.n
    params = model.weights + model.biases
    init_params = [p.copy() for p in params]
    init_loss = classification_loss(model.predict(ts.points), pos_w, neg_w)

    n_w = len(model.weights)
    batch = n if config.batch_size is None else min(config.batch_size, n)
    lr, wd = config.learning_rate, config.weight_decay
    for _ in range(config.epochs):
        order = rng.permutation(n) if batch < n else np.arange(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            gw, gb = _forward_backward(
                model.weights, model.biases, encoded[idx], pos_w[idx], neg_w[idx]
            )
            grads = gw + gb
            model.adam_step += 1
            t = model.adam_step
            for k, (p, g) in enumerate(zip(params, grads)):
                if wd > 0 and k < n_w:
                    g = g + wd * p
                m = model.adam_m[k]
                v = model.adam_v[k]
                m *= _ADAM_B1
                m += (1 - _ADAM_B1) * g
                v *= _ADAM_B2
                v += (1 - _ADAM_B2) * np.square(g)
                m_hat = m / (1 - _ADAM_B1**t)
                v_hat = v / (1 - _ADAM_B2**t)
                p -= lr * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)

    final_loss = classification_loss(model.predict(ts.points), pos_w, neg_w)
    if final_loss > init_loss:
        for p, p0 in zip(params, init_params):
            p[...] = p0
    return model
