"""Composite objectives: exploit known structure between outputs and score.

Some objectives decompose as ``g(x) = -|| h(x) - z* ||^2`` where the
vector-valued part ``h`` is observed and the target ``z*`` is known.
Instead of classifying on the scalar score alone, the composite model
learns a network ``h_net`` approximating ``h`` and pushes it through
the known outer structure: the predicted score is
``s(x) = -|| h_net(x) - z* ||^2``, the hinge utility
``u = max(s - tau, 0)`` converts it to a positive-class weight, and
``C(x) = u / (u + 1)`` is the induced classifier probability.  Training
combines the weighted classification terms with a regression term
tying ``h_net`` to the observed vectors.

The bundled example is a two-release pollutant dispersion model on a
monitoring grid: each parameter setting induces a field of
concentrations over (location, time) cells, and the objective is the
negative squared distance between that field and the field of the true
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .classifiers.encoding import encode_inputs, encoded_width
from .classifiers.mlp import PROB_CLIP, _ADAM_B1, _ADAM_B2, _ADAM_EPS
from .core import SearchSpace
from .errors import DegenerateTrainingError, DomainError, InvalidArgumentError

__all__ = [
    "EnvModelParams",
    "ENV_GRID_LOCATIONS",
    "ENV_GRID_TIMES",
    "ENV_TRUE_PARAMS",
    "ENV_PARAM_BOUNDS",
    "env_space",
    "env_concentration",
    "env_field",
    "env_objective",
    "make_env_objective",
    "CompositeObjective",
    "VectorObservation",
    "CompositeConfig",
    "CompositeClassifier",
    "composite_forward",
    "composite_loss",
    "grad_composite_loss",
    "train_composite",
]

# Monitoring grid: concentrations are read at every (location, time) pair.
ENV_GRID_LOCATIONS = (0.0, 1.0, 2.5)
ENV_GRID_TIMES = (15.0, 30.0, 45.0, 60.0)

# Parameter vector layout: (mass, diffusion, second release location,
# second release time), with the calibration ranges used by the demo.
ENV_PARAM_BOUNDS = (
    (7.0, 13.0),
    (0.02, 0.12),
    (0.01, 3.0),
    (30.01, 30.295),
)


@dataclass(frozen=True)
class EnvModelParams:
    """Parameters of the two-release dispersion model."""

    mass: float
    diffusion: float
    second_location: float
    second_time: float

    def __post_init__(self) -> None:
        vals = (self.mass, self.diffusion, self.second_location, self.second_time)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidArgumentError("parameters must be finite")
        if self.diffusion <= 0:
            raise InvalidArgumentError(f"diffusion must be > 0, got {self.diffusion}")

    def as_vector(self) -> np.ndarray:
        return np.asarray(
            [self.mass, self.diffusion, self.second_location, self.second_time]
        )

    @staticmethod
    def from_vector(x: np.ndarray) -> "EnvModelParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (4,):
            raise InvalidArgumentError(f"expected 4 parameters, got shape {x.shape}")
        return EnvModelParams(x[0], x[1], x[2], x[3])


ENV_TRUE_PARAMS = EnvModelParams(10.0, 0.07, 1.505, 30.1525)


def env_space() -> SearchSpace:
    """The calibration search space for the dispersion parameters."""
    return SearchSpace.continuous(ENV_PARAM_BOUNDS)


def env_concentration(location: float, time: float, p: EnvModelParams) -> float:
    """Concentration at a point in space-time under two instantaneous releases.

    The first release (mass ``M``, diffusion ``D``) happens at the
    origin at time zero; the second, of equal mass, at location
    ``second_location`` and time ``second_time``, contributes only once
    that time has passed:

        c = M / sqrt(4 pi D t) * exp(-a^2 / (4 D t))
          + 1{t > t2} * M / sqrt(4 pi D (t - t2)) * exp(-(a - K)^2 / (4 D (t - t2)))

    Raises
    ------
    DomainError
        If ``time`` is not strictly positive.
    """
    if not (math.isfinite(location) and math.isfinite(time)):
        raise InvalidArgumentError("location and time must be finite")
    if time <= 0:
        raise DomainError(f"time must be > 0, got {time}")
    m, d = p.mass, p.diffusion
    c = m / math.sqrt(4.0 * math.pi * d * time) * math.exp(
        -(location**2) / (4.0 * d * time)
    )
    dt = time - p.second_time
    if dt > 0:
        c += m / math.sqrt(4.0 * math.pi * d * dt) * math.exp(
            -((location - p.second_location) ** 2) / (4.0 * d * dt)
        )
    return c


def env_field(p: EnvModelParams) -> np.ndarray:
    """Concentrations over the monitoring grid, flattened location-major."""
    return np.asarray(
        [
            env_concentration(a, b, p)
            for a in ENV_GRID_LOCATIONS
            for b in ENV_GRID_TIMES
        ]
    )


def env_objective(p: EnvModelParams, p_true: EnvModelParams) -> float:
    """Sum of squared field differences over the monitoring grid (>= 0)."""
    diff = env_field(p) - env_field(p_true)
    return float(diff @ diff)


@dataclass(frozen=True)
class CompositeObjective:
    """A score of the form ``g(x) = -|| h(x) - z_star ||^2``.

    ``g`` is never positive and vanishes exactly when the observed
    vector matches the target.
    """

    h: Callable[[np.ndarray], np.ndarray]
    z_star: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "z_star", np.asarray(self.z_star, dtype=float))
        if self.z_star.ndim != 1 or not np.all(np.isfinite(self.z_star)):
            raise InvalidArgumentError("z_star must be a finite 1-d vector")

    def g(self, x: np.ndarray) -> float:
        diff = np.asarray(self.h(x), dtype=float) - self.z_star
        return float(-diff @ diff)


def make_env_objective(
    p_true: EnvModelParams = ENV_TRUE_PARAMS,
) -> CompositeObjective:
    """The dispersion calibration problem as a composite objective."""
    return CompositeObjective(
        h=lambda x: env_field(EnvModelParams.from_vector(x)),
        z_star=env_field(p_true),
    )


@dataclass(frozen=True)
class VectorObservation:
    """One evaluated point with its vector-valued outcome."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidArgumentError("observation entries must be finite")
        if y.ndim != 1:
            raise InvalidArgumentError("vector outcome must be 1-d")

    def scalar_outcome(self, z_star: np.ndarray) -> float:
        diff = self.y - np.asarray(z_star, dtype=float)
        return float(-diff @ diff)


@dataclass(frozen=True)
class CompositeConfig:
    """Training configuration for :func:`train_composite`."""

    space: SearchSpace
    z_star: np.ndarray
    tau: float
    hidden_units: tuple[int, ...] = (64, 64)
    epochs: int = 400
    learning_rate: float = 1e-2
    weight_decay: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "z_star", np.asarray(self.z_star, dtype=float))
        if len(self.hidden_units) == 0 or any(u < 1 for u in self.hidden_units):
            raise InvalidArgumentError("hidden_units must be positive and non-empty")
        if self.epochs < 1:
            raise InvalidArgumentError("epochs must be >= 1")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise InvalidArgumentError("learning_rate must be positive")
        if self.weight_decay < 0 or not math.isfinite(self.weight_decay):
            raise InvalidArgumentError("weight_decay must be finite and >= 0")
        if not math.isfinite(self.tau):
            raise InvalidArgumentError("tau must be finite")


class CompositeClassifier:
    """A vector regressor pushed through the known outer structure.

    The network maps an encoded input to a predicted outcome vector;
    the predicted score, hinge utility, and classifier probability are
    deterministic functions of that vector and the stored target and
    threshold.
    """

    def __init__(
        self,
        space: SearchSpace,
        z_star: np.ndarray,
        tau: float,
        weights: list[np.ndarray],
        biases: list[np.ndarray],
    ) -> None:
        self.space = space
        self.z_star = np.asarray(z_star, dtype=float)
        self.tau = float(tau)
        self.weights = weights
        self.biases = biases

    @staticmethod
    def initialize(
        space: SearchSpace,
        z_star: np.ndarray,
        tau: float,
        hidden_units: tuple[int, ...],
        rng: np.random.Generator,
    ) -> "CompositeClassifier":
        z_star = np.asarray(z_star, dtype=float)
        sizes = [encoded_width(space), *hidden_units, z_star.size]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return CompositeClassifier(space, z_star, tau, weights, biases)

    def predict_h(self, points: np.ndarray) -> np.ndarray:
        """Predicted outcome vectors, shape (n, len(z_star))."""
        a = encode_inputs(self.space, points)
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ w + b, 0.0)
        return a @ self.weights[-1] + self.biases[-1]

    def predict_s(self, points: np.ndarray) -> np.ndarray:
        """Predicted scores ``-|| h_net(x) - z_star ||^2``."""
        diff = self.predict_h(points) - self.z_star
        return -np.sum(diff * diff, axis=1)

    def predict(self, points: np.ndarray) -> np.ndarray:
        """Classifier probabilities ``u / (u + 1)``; exactly 0 where u is 0."""
        u = np.maximum(self.predict_s(points) - self.tau, 0.0)
        return u / (u + 1.0)


def composite_forward(
    classifier: CompositeClassifier, x: np.ndarray
) -> tuple[float, float, np.ndarray]:
    """Evaluate the whole composite head at one point.

    Returns ``(C(x), s(x), h_net(x))``: the classifier probability, the
    predicted score, and the predicted outcome vector.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    h = classifier.predict_h(x)[0]
    diff = h - classifier.z_star
    s = float(-diff @ diff)
    u = max(s - classifier.tau, 0.0)
    return u / (u + 1.0), s, h


def _positive_weights(
    data: list[VectorObservation], z_star: np.ndarray, tau: float
) -> np.ndarray:
    g_obs = np.asarray([obs.scalar_outcome(z_star) for obs in data])
    return np.maximum(g_obs - tau, 0.0)


def composite_loss(
    classifier: CompositeClassifier,
    data: list[VectorObservation],
    z_star: np.ndarray,
    tau: float,
) -> float:
    """Weighted classification loss plus the vector regression penalty.

    The positive weight of an observation is the hinge utility of its
    *observed* score, ``max(-||y - z*||^2 - tau, 0)``; probabilities
    are clipped into ``[1e-6, 1 - 1e-6]`` before the logs so the value
    stays finite even where the predicted utility is zero.  With no
    positively weighted observation the classification part reduces to
    the negative-label terms.
    """
    if len(data) == 0:
        raise InvalidArgumentError("data must not be empty")
    z_star = np.asarray(z_star, dtype=float)
    w = _positive_weights(data, z_star, tau)
    points = np.stack([obs.x for obs in data])
    targets = np.stack([obs.y for obs in data])
    h = classifier.predict_h(points)
    diff_star = h - z_star
    s = -np.sum(diff_star * diff_star, axis=1)
    u = np.maximum(s - tau, 0.0)
    c = np.clip(u / (u + 1.0), PROB_CLIP, 1.0 - PROB_CLIP)
    classification = np.mean(-w * np.log(c) - np.log1p(-c))
    residual = h - targets
    regression = np.mean(np.sum(residual * residual, axis=1))
    return float(classification + regression)


def _loss_and_grads(
    classifier: CompositeClassifier,
    encoded: np.ndarray,
    targets: np.ndarray,
    w: np.ndarray,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    weights, biases = classifier.weights, classifier.biases
    z_star, tau = classifier.z_star, classifier.tau
    n = encoded.shape[0]
    acts = [encoded]
    pre: list[np.ndarray] = []
    a = encoded
    for wk, bk in zip(weights[:-1], biases[:-1]):
        z = a @ wk + bk
        pre.append(z)
        a = np.maximum(z, 0.0)
        acts.append(a)
    h = a @ weights[-1] + biases[-1]

    diff_star = h - z_star
    s = -np.sum(diff_star * diff_star, axis=1)
    u = np.maximum(s - tau, 0.0)
    c_raw = u / (u + 1.0)
    c = np.clip(c_raw, PROB_CLIP, 1.0 - PROB_CLIP)
    residual = h - targets
    loss = float(
        np.mean(-w * np.log(c) - np.log1p(-c))
        + np.mean(np.sum(residual * residual, axis=1))
    )

    # Chain rule down to the predicted vectors.  The hinge contributes
    # only where s > tau (subgradient 0 at the kink) and the clip
    # blocks gradients where c_raw sits outside the clipped range.
    dl_dc = (-w / c + 1.0 / (1.0 - c)) / n
    active = (s > tau) & (c_raw > PROB_CLIP) & (c_raw < 1.0 - PROB_CLIP)
    dc_du = 1.0 / (u + 1.0) ** 2
    dl_ds = np.where(active, dl_dc * dc_du, 0.0)
    dh = dl_ds[:, None] * (-2.0 * diff_star) + (2.0 / n) * residual

    grads_w = [np.empty(0)] * len(weights)
    grads_b = [np.empty(0)] * len(weights)
    grads_w[-1] = acts[-1].T @ dh
    grads_b[-1] = dh.sum(axis=0)
    da = dh @ weights[-1].T
    for k in range(len(weights) - 2, -1, -1):
        dzk = da * (pre[k] > 0.0)
        grads_w[k] = acts[k].T @ dzk
        grads_b[k] = dzk.sum(axis=0)
        if k > 0:
            da = dzk @ weights[k].T
    return loss, grads_w, grads_b


def grad_composite_loss(
    classifier: CompositeClassifier,
    data: list[VectorObservation],
    z_star: np.ndarray,
    tau: float,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Analytic gradient of :func:`composite_loss` w.r.t. the network params."""
    z_star = np.asarray(z_star, dtype=float)
    w = _positive_weights(data, z_star, tau)
    encoded = encode_inputs(classifier.space, np.stack([obs.x for obs in data]))
    targets = np.stack([obs.y for obs in data])
    # gradient is taken at the classifier's stored target/threshold
    tmp = CompositeClassifier(
        classifier.space, z_star, tau, classifier.weights, classifier.biases
    )
    _, gw, gb = _loss_and_grads(tmp, encoded, targets, w)
    return list(zip(gw, gb))


def train_composite(
    data: list[VectorObservation], config: CompositeConfig
) -> CompositeClassifier:
    """Fit the composite head with full-batch Adam.

    Deterministic given ``config.seed``.  The returned parameters never
    lose to the initialization on the training loss; if the run ends
    worse it is rolled back.

    Raises
    ------
    DegenerateTrainingError
        If no observation scores above the threshold.
    """
    if len(data) == 0:
        raise InvalidArgumentError("data must not be empty")
    z_star = config.z_star
    w = _positive_weights(data, z_star, config.tau)
    if not np.any(w > 0):
        raise DegenerateTrainingError("no observation improves on the threshold")
    rng = np.random.default_rng(config.seed)
    model = CompositeClassifier.initialize(
        config.space, z_star, config.tau, config.hidden_units, rng
    )
    encoded = encode_inputs(config.space, np.stack([obs.x for obs in data]))
    targets = np.stack([obs.y for obs in data])
    params = model.weights + model.biases
    init_params = [p.copy() for p in params]
    init_loss, _, _ = _loss_and_grads(model, encoded, targets, w)

    n_w = len(model.weights)
    adam_m = [np.zeros_like(p) for p in params]
    adam_v = [np.zeros_like(p) for p in params]
    lr, wd = config.learning_rate, config.weight_decay
    for t in range(1, config.epochs + 1):
        _, gw, gb = _loss_and_grads(model, encoded, targets, w)
        grads = gw + gb
        for k, (p, g) in enumerate(zip(params, grads)):
            if wd > 0 and k < n_w:
                g = g + wd * p
            m, v = adam_m[k], adam_v[k]
            m *= _ADAM_B1
            m += (1 - _ADAM_B1) * g
            v *= _ADAM_B2
            v += (1 - _ADAM_B2) * np.square(g)
            p -= lr * (m / (1 - _ADAM_B1**t)) / (np.sqrt(v / (1 - _ADAM_B2**t)) + _ADAM_EPS)

    final_loss, _, _ = _loss_and_grads(model, encoded, targets, w)
    if final_loss > init_loss:
        for p, p0 in zip(params, init_params):
            p[...] = p0
    return model
