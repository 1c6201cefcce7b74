"""Search spaces, observations, utility weights and improvement thresholds.

The toolkit treats acquisition-function construction as weighted binary
classification: every observed outcome ``y`` is scored by a non-negative
utility ``u(y; tau)`` measuring how much it improves on a threshold
``tau``, and those scores become per-sample weights for a classifier.
This module holds the pieces everything else builds on: the search
space, immutable observation containers, the utility family, threshold
selection, and weight construction.

All outcomes follow a single sign convention: larger ``y`` is better.
Benchmarks that are naturally minimization problems are negated before
they enter a :class:`Dataset`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, EmptyDatasetError, InvalidArgumentError

__all__ = [
    "UtilityKind",
    "Utility",
    "eval_utility",
    "utility_values",
    "SearchSpace",
    "Observation",
    "Dataset",
    "ThresholdPolicy",
    "select_threshold",
    "build_weights",
]


class UtilityKind(enum.Enum):
    """Supported utility families."""

    PROBABILITY_OF_IMPROVEMENT = "pi"
    EXPECTED_IMPROVEMENT = "ei"
    POWER = "power"


@dataclass(frozen=True)
class Utility:
    """A utility function ``u(y; tau)`` scoring improvement over a threshold.

    Three families are supported:

    * ``pi``: indicator of improvement, ``1`` if ``y > tau`` else ``0``.
    * ``ei``: magnitude of improvement, ``max(y - tau, 0)``.
    * ``power``: ``(y - tau) ** exponent`` if ``y > tau`` else ``0``.

    ``power`` with exponent 0 agrees with ``pi`` and with exponent 1
    agrees with ``ei``.  Exactly at ``y == tau`` every family returns 0
    (the improvement test is strict).
    """

    kind: UtilityKind
    exponent: float | None = None

    def __post_init__(self) -> None:
        if self.kind is UtilityKind.POWER:
            if self.exponent is None:
                raise InvalidArgumentError("power utility requires an exponent")
            if not math.isfinite(self.exponent) or self.exponent < 0:
                raise InvalidArgumentError(
                    f"power exponent must be finite and >= 0, got {self.exponent}"
                )
        elif self.exponent is not None:
            raise InvalidArgumentError(f"{self.kind.value} utility takes no exponent")

    @staticmethod
    def pi() -> "Utility":
        return Utility(UtilityKind.PROBABILITY_OF_IMPROVEMENT)

    @staticmethod
    def ei() -> "Utility":
        return Utility(UtilityKind.EXPECTED_IMPROVEMENT)

    @staticmethod
    def power(exponent: float) -> "Utility":
        return Utility(UtilityKind.POWER, exponent)


def eval_utility(utility: Utility, y: float, tau: float) -> float:
    """Evaluate ``u(y; tau)`` for a single outcome.

    Parameters
    ----------
    utility : Utility
        The utility family to apply.
    y : float
        Observed outcome (larger is better).
    tau : float
        Improvement threshold.

    Returns
    -------
    float
        A non-negative weight; 0 whenever ``y <= tau``.

    Raises
    ------
    InvalidArgumentError
        If ``y`` or ``tau`` is not finite.
    """
    if not (math.isfinite(y) and math.isfinite(tau)):
        raise InvalidArgumentError(f"y and tau must be finite, got y={y}, tau={tau}")
    return float(utility_values(utility, np.asarray([y], dtype=float), tau)[0])


def utility_values(utility: Utility, y: np.ndarray, tau: float) -> np.ndarray:
    """Vectorized :func:`eval_utility` over an array of outcomes."""
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(y)) and math.isfinite(tau)):
        raise InvalidArgumentError("outcomes and tau must be finite")
    improved = y > tau
    if utility.kind is UtilityKind.PROBABILITY_OF_IMPROVEMENT:
        return improved.astype(float)
    if utility.kind is UtilityKind.EXPECTED_IMPROVEMENT:
        return np.where(improved, y - tau, 0.0)
    out = np.zeros_like(y)
    if np.any(improved):
        out[improved] = np.power(y[improved] - tau, utility.exponent)
    return out


@dataclass(frozen=True)
class SearchSpace:
    """A box-bounded search domain with optional categorical dimensions.

    Parameters
    ----------
    dims : int
        Total number of dimensions.
    bounds : tuple of (lower, upper)
        One pair per *continuous* dimension, in ascending dimension
        order.  Each pair must satisfy ``lower < upper`` and be finite.
    categorical_dims : tuple of (index, count)
        Dimensions that take integer codes ``0 .. count - 1``.  Indices
        must be unique, in range, and each count at least 2.

    Points are 1-d float arrays of length ``dims``; categorical entries
    hold integer-valued codes.
    """

    dims: int
    bounds: tuple[tuple[float, float], ...]
    categorical_dims: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.dims < 1:
            raise InvalidArgumentError(f"dims must be >= 1, got {self.dims}")
        object.__setattr__(
            self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        )
        object.__setattr__(
            self,
            "categorical_dims",
            tuple((int(i), int(c)) for i, c in self.categorical_dims),
        )
        cat_idx = [i for i, _ in self.categorical_dims]
        if len(set(cat_idx)) != len(cat_idx):
            raise InvalidArgumentError("duplicate categorical dimension index")
        for i, count in self.categorical_dims:
            if not 0 <= i < self.dims:
                raise InvalidArgumentError(f"categorical index {i} out of range")
            if count < 2:
                raise InvalidArgumentError(f"categorical dim {i} needs >= 2 categories")
        if len(self.bounds) + len(self.categorical_dims) != self.dims:
            raise InvalidArgumentError(
                "bounds must cover exactly the non-categorical dimensions: "
                f"{len(self.bounds)} bounds + {len(self.categorical_dims)} "
                f"categorical != {self.dims} dims"
            )
        for lo, hi in self.bounds:
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise InvalidArgumentError(f"invalid bound ({lo}, {hi})")

    @staticmethod
    def continuous(bounds: Iterable[tuple[float, float]]) -> "SearchSpace":
        """Build an all-continuous space from a list of (lower, upper)."""
        bounds = tuple(bounds)
        return SearchSpace(dims=len(bounds), bounds=bounds)

    @staticmethod
    def categorical(counts: Iterable[int]) -> "SearchSpace":
        """Build an all-categorical space from per-dimension category counts."""
        counts = tuple(counts)
        return SearchSpace(
            dims=len(counts),
            bounds=(),
            categorical_dims=tuple((i, c) for i, c in enumerate(counts)),
        )

    @property
    def continuous_indices(self) -> tuple[int, ...]:
        cat = {i for i, _ in self.categorical_dims}
        return tuple(i for i in range(self.dims) if i not in cat)

    @property
    def category_counts(self) -> dict[int, int]:
        return dict(self.categorical_dims)

    def is_valid(self, x: np.ndarray) -> bool:
        """Whether ``x`` is a point of this space."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dims,) or not np.all(np.isfinite(x)):
            return False
        counts = self.category_counts
        b = iter(self.bounds)
        for i in range(self.dims):
            if i in counts:
                if x[i] != int(x[i]) or not 0 <= x[i] < counts[i]:
                    return False
            else:
                lo, hi = next(b)
                if not lo <= x[i] <= hi:
                    return False
        return True

    def validate(self, x: np.ndarray) -> np.ndarray:
        """Return ``x`` as a float array, raising ``DomainError`` if invalid."""
        arr = np.asarray(x, dtype=float)
        if not self.is_valid(arr):
            raise DomainError(f"point {x!r} is not a member of the search space")
        return arr

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one uniform point."""
        return self.sample_batch(rng, 1)[0]

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` uniform points as an ``(n, dims)`` array.

        Continuous dimensions are uniform over their bounds; categorical
        dimensions are uniform over their codes.  Columns are filled in
        dimension order so draws are reproducible given the generator
        state.
        """
        if n < 1:
            raise InvalidArgumentError(f"n must be >= 1, got {n}")
        out = np.empty((n, self.dims), dtype=float)
        counts = self.category_counts
        b = iter(self.bounds)
        for i in range(self.dims):
            if i in counts:
                out[:, i] = rng.integers(0, counts[i], size=n)
            else:
                lo, hi = next(b)
                out[:, i] = rng.uniform(lo, hi, size=n)
        return out


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Observation:
    """One evaluated point: input ``x`` and scalar outcome ``y`` (larger is better)."""

    x: np.ndarray
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _readonly(np.atleast_1d(self.x)))
        object.__setattr__(self, "y", float(self.y))
        if not np.all(np.isfinite(self.x)):
            raise InvalidArgumentError("observation input must be finite")
        if not math.isfinite(self.y):
            raise InvalidArgumentError(f"observation outcome must be finite, got {self.y}")


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of observations over one search space."""

    space: SearchSpace
    observations: tuple[Observation, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "observations", tuple(self.observations))
        for obs in self.observations:
            if not self.space.is_valid(obs.x):
                raise DomainError(f"observation at {obs.x} lies outside the space")

    @property
    def n(self) -> int:
        return len(self.observations)

    @property
    def xs(self) -> np.ndarray:
        if not self.observations:
            return np.empty((0, self.space.dims))
        return np.stack([o.x for o in self.observations])

    @property
    def ys(self) -> np.ndarray:
        return np.asarray([o.y for o in self.observations], dtype=float)

    def append(self, obs: Observation) -> "Dataset":
        """Return a new dataset with ``obs`` added."""
        return Dataset(self.space, self.observations + (obs,))


@dataclass(frozen=True)
class ThresholdPolicy:
    """Quantile rule for the improvement threshold.

    ``gamma`` is the fraction of observed outcomes treated as
    improvement targets: the threshold is the ``(1 - gamma)`` empirical
    quantile of the outcomes, so roughly a ``gamma`` share of the data
    sits above it.
    """

    gamma: float = 0.33

    def __post_init__(self) -> None:
        if not (math.isfinite(self.gamma) and 0.0 < self.gamma < 1.0):
            raise InvalidArgumentError(f"gamma must be in (0, 1), got {self.gamma}")


def select_threshold(dataset: Dataset, policy: ThresholdPolicy) -> float:
    """Pick the improvement threshold from observed outcomes.

    Returns the ``(1 - gamma)`` empirical quantile of ``dataset.ys``
    using linear interpolation between order statistics (the value at
    fractional position ``(1 - gamma) * (n - 1)`` of the sorted
    outcomes).

    Raises
    ------
    EmptyDatasetError
        If the dataset has no observations.
    """
    if dataset.n == 0:
        raise EmptyDatasetError("cannot select a threshold from an empty dataset")
    return float(np.quantile(dataset.ys, 1.0 - policy.gamma, method="linear"))


def build_weights(
    dataset: Dataset,
    utility: Utility,
    tau: float,
    normalize: bool = True,
) -> np.ndarray:
    """Compute per-observation classification weights ``u(y_i; tau)``.

    With ``normalize=True`` (the default used inside optimization
    loops) the strictly positive weights are rescaled so their mean is
    exactly 1; zero weights are untouched.  Normalization removes the
    arbitrary scale of the utility, which only enters the classifier's
    optimum through a constant factor.

    Returns
    -------
    numpy.ndarray
        Non-negative finite weights, one per observation.
    """
    if dataset.n == 0:
        raise EmptyDatasetError("cannot build weights for an empty dataset")
    w = utility_values(utility, dataset.ys, tau)
    if normalize:
        pos = w > 0
        if np.any(pos):
            w = w.copy()
            w[pos] /= w[pos].mean()
    return w
