"""Acquisition values from classifiers, and candidate proposal strategies.

A trained classifier ``C`` induces the acquisition function
``a(x) = C(x) / (1 - C(x))``.  When ``C`` was trained on the weighted
objective, that ratio estimates the conditional mean utility
``E[u(y; tau) | x]``, so maximizing it reproduces the classical
improvement-based acquisition the utility encodes (probability of
improvement for indicator weights, expected improvement for hinge
weights, and so on).

Maximization is randomized: score a batch of uniform candidates and
take the best.  An epsilon-greedy wrapper can replace a proposal with
a uniform draw at a fixed rate for extra exploration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .classifiers import predict
from .core import SearchSpace, Utility
from .errors import DomainError, InvalidArgumentError

__all__ = [
    "AcquisitionModel",
    "CandidateProposal",
    "acq_value",
    "acq_values",
    "maximize_random_search",
    "epsilon_greedy_wrap",
    "solve_variational_scalar",
    "bore_to_pi_transform",
    "ProposalFn",
]

SOURCE_RANDOM_SEARCH = "random-search"
SOURCE_EPSILON_UNIFORM = "epsilon-greedy-uniform"


@dataclass(frozen=True)
class AcquisitionModel:
    """A classifier together with the context it was trained under.

    ``utility``, ``tau`` and ``gamma`` record how the training weights
    were produced; the acquisition itself only needs the classifier.
    """

    classifier: object
    utility: Utility
    tau: float
    gamma: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.tau):
            raise InvalidArgumentError(f"tau must be finite, got {self.tau}")
        if not 0.0 < self.gamma < 1.0:
            raise InvalidArgumentError(f"gamma must be in (0, 1), got {self.gamma}")


@dataclass(frozen=True)
class CandidateProposal:
    """A proposed next point, its acquisition value, and how it was chosen."""

    x: np.ndarray
    acq_value: float
    source: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.source not in (SOURCE_RANDOM_SEARCH, SOURCE_EPSILON_UNIFORM):
            raise InvalidArgumentError(f"unknown proposal source {self.source!r}")


ProposalFn = Callable[[AcquisitionModel, SearchSpace], CandidateProposal]


def acq_values(model: AcquisitionModel, points: np.ndarray) -> np.ndarray:
    """Acquisition ``C / (1 - C)`` for a batch of points.

    Classifier outputs are clipped away from 0 and 1 before the ratio,
    so values are finite and at most about 1e6.
    """
    c = predict(model.classifier, points)
    return c / (1.0 - c)


def acq_value(model: AcquisitionModel, x: np.ndarray) -> float:
    """Acquisition value at a single point."""
    return float(acq_values(model, np.atleast_2d(np.asarray(x, dtype=float)))[0])


def maximize_random_search(
    model: AcquisitionModel,
    space: SearchSpace,
    n_candidates: int = 512,
    seed: int | np.random.Generator = 0,
) -> CandidateProposal:
    """Best of ``n_candidates`` uniform draws under the acquisition.

    Ties are broken toward the lowest candidate index, so the result is
    deterministic given the seed (or generator state).
    """
    if n_candidates < 1:
        raise InvalidArgumentError(f"n_candidates must be >= 1, got {n_candidates}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    candidates = space.sample_batch(rng, n_candidates)
    values = acq_values(model, candidates)
    best = int(np.argmax(values))
    return CandidateProposal(candidates[best], float(values[best]), SOURCE_RANDOM_SEARCH)


def epsilon_greedy_wrap(
    proposal_fn: ProposalFn, epsilon: float, seed: int = 0
) -> ProposalFn:
    """Replace a fraction ``epsilon`` of proposals with uniform draws.

    The wrapper owns its own random stream (seeded once, advanced per
    call).  ``epsilon=0`` returns ``proposal_fn`` unchanged; uniform
    proposals report the model's acquisition value at the drawn point
    and are tagged with their source.
    """
    if not (0.0 <= epsilon <= 1.0):
        raise InvalidArgumentError(f"epsilon must be in [0, 1], got {epsilon}")
    if epsilon == 0.0:
        return proposal_fn
    rng = np.random.default_rng(seed)

    def wrapped(model: AcquisitionModel, space: SearchSpace) -> CandidateProposal:
        if rng.random() < epsilon:
            x = space.sample(rng)
            return CandidateProposal(x, acq_value(model, x), SOURCE_EPSILON_UNIFORM)
        return proposal_fn(model, space)

    return wrapped


def _ratio_objective(mean_u: float, s: np.ndarray) -> np.ndarray:
    # E[u] * log(s / (s + 1)) - log(s + 1), the scalar dual objective
    # whose unique maximizer over s > 0 is E[u] itself.
    return mean_u * (np.log(s) - np.log1p(s)) - np.log1p(s)


def solve_variational_scalar(u_samples: np.ndarray, iterations: int = 200) -> float:
    """Numerically recover the mean utility from the dual objective.

    For a fixed input location the classifier's training objective
    reduces to a one-dimensional concave problem in the ratio
    ``s = C / (1 - C)``; its maximizer equals the sample mean of the
    utilities.  This routine finds that maximizer by golden-section
    search on ``log s`` and exists as an independent check that the
    ratio recovers the mean: no classifier is involved.

    Parameters
    ----------
    u_samples : array-like
        Non-negative finite utility samples; all zero returns 0.
    iterations : int
        Golden-section refinement steps over the bracket
        ``log s`` in ``[log 1e-8, log(10 * max(u) + 1)]``.

    Returns
    -------
    float
        The maximizing ratio, equal to ``mean(u_samples)`` up to
        bracketing tolerance.
    """
    u = np.asarray(u_samples, dtype=float)
    if u.ndim != 1 or u.size == 0:
        raise InvalidArgumentError("u_samples must be a non-empty 1-d array")
    if not np.all(np.isfinite(u)) or np.any(u < 0):
        raise InvalidArgumentError("u_samples must be finite and >= 0")
    u_max = float(u.max())
    if u_max == 0.0:
        return 0.0
    mean_u = float(u.mean())
    lo = math.log(1e-8)
    hi = math.log(10.0 * u_max + 1.0)
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = _ratio_objective(mean_u, np.exp(c))
    fd = _ratio_objective(mean_u, np.exp(d))
    for _ in range(iterations):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = _ratio_objective(mean_u, np.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = _ratio_objective(mean_u, np.exp(d))
    return float(np.exp(0.5 * (a + b)))


def bore_to_pi_transform(c: float, gamma: float) -> float:
    """Map an unweighted classifier's output onto the improvement scale.

    Computes ``c / (c + (1 - gamma) / gamma)``, the strictly increasing
    map that places the plain-classifier acquisition on the same (0, 1)
    scale as a probability of improvement with threshold fraction
    ``gamma``.  Monotonicity means the argmax is unchanged.

    Raises
    ------
    DomainError
        If ``c`` or ``gamma`` lies outside the open interval (0, 1).
    """
    if not (isinstance(c, (int, float)) and 0.0 < c < 1.0):
        raise DomainError(f"c must be in (0, 1), got {c}")
    if not (isinstance(gamma, (int, float)) and 0.0 < gamma < 1.0):
        raise DomainError(f"gamma must be in (0, 1), got {gamma}")
    return c / (c + (1.0 - gamma) / gamma)
