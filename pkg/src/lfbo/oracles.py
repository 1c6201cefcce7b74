"""Analytic ground-truth acquisitions and an exact Gaussian-process baseline.

When the outcome at a point is believed Gaussian, the probability of
improvement and the expected improvement over a threshold have closed
forms.  These serve two roles: as the ground truth that classifier-based
acquisitions are measured against, and as the acquisition of the exact
GP baseline optimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.special import erfc

from .core import Dataset, SearchSpace
from .errors import EmptyDatasetError, InvalidArgumentError, NumericalError

__all__ = [
    "normal_pdf",
    "normal_cdf",
    "GaussianBelief",
    "true_pi",
    "true_ei",
    "GpHyperparams",
    "GpModel",
    "gp_fit",
    "gp_posterior",
    "gp_ei_acq",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def normal_pdf(z):
    """Standard normal density, vectorized."""
    z = np.asarray(z, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def normal_cdf(z):
    """Standard normal distribution function via erfc (accurate in both tails)."""
    z = np.asarray(z, dtype=float)
    return 0.5 * erfc(-z / _SQRT2)


@dataclass(frozen=True)
class GaussianBelief:
    """A Gaussian belief about the outcome at one point."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise InvalidArgumentError("mu and sigma must be finite")
        if self.sigma <= 0:
            raise InvalidArgumentError(f"sigma must be > 0, got {self.sigma}")


def true_pi(belief: GaussianBelief, tau: float) -> float:
    """Probability the outcome exceeds ``tau``: Phi((mu - tau) / sigma)."""
    if not math.isfinite(tau):
        raise InvalidArgumentError(f"tau must be finite, got {tau}")
    return float(normal_cdf((belief.mu - tau) / belief.sigma))


def true_ei(belief: GaussianBelief, tau: float) -> float:
    """Expected improvement over ``tau``: E[max(y - tau, 0)].

    Equals ``(mu - tau) * Phi(z) + sigma * phi(z)`` with
    ``z = (mu - tau) / sigma``.  Always non-negative.
    """
    if not math.isfinite(tau):
        raise InvalidArgumentError(f"tau must be finite, got {tau}")
    z = (belief.mu - tau) / belief.sigma
    value = (belief.mu - tau) * normal_cdf(z) + belief.sigma * normal_pdf(z)
    return float(max(value, 0.0))


@dataclass(frozen=True)
class GpHyperparams:
    """Matern-5/2 kernel hyperparameters on [0, 1]-normalized inputs.

    ``refine_lengthscale=True`` replaces the fixed length scale by the
    best value on ``lengthscale_grid`` under the log marginal
    likelihood before fitting.
    """

    lengthscale: float = 1.0
    signal_variance: float = 1.0
    noise_variance: float = 1e-4
    refine_lengthscale: bool = False
    lengthscale_grid: tuple[float, ...] = (0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0)

    def __post_init__(self) -> None:
        if self.lengthscale <= 0 or self.signal_variance <= 0:
            raise InvalidArgumentError("lengthscale and signal_variance must be > 0")
        if self.noise_variance < 0:
            raise InvalidArgumentError("noise_variance must be >= 0")
        if any(l <= 0 for l in self.lengthscale_grid):
            raise InvalidArgumentError("lengthscale grid values must be > 0")


def _normalize(space: SearchSpace, points: np.ndarray) -> np.ndarray:
    """Rescale points into the unit box; categorical codes map onto [0, 1]."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty_like(points)
    counts = space.category_counts
    bounds = iter(space.bounds)
    for i in range(space.dims):
        if i in counts:
            out[:, i] = points[:, i] / (counts[i] - 1)
        else:
            lo, hi = next(bounds)
            out[:, i] = (points[:, i] - lo) / (hi - lo)
    return out


def _matern52(a: np.ndarray, b: np.ndarray, lengthscale: float, signal: float) -> np.ndarray:
    d2 = np.maximum(
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T),
        0.0,
    )
    r = np.sqrt(d2) / lengthscale
    s5r = math.sqrt(5.0) * r
    return signal * (1.0 + s5r + (5.0 / 3.0) * r * r) * np.exp(-s5r)


_JITTERS = (0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4)


@dataclass(frozen=True)
class GpModel:
    """An exact GP posterior, stored via the Cholesky factor of the Gram matrix."""

    space: SearchSpace
    x_train: np.ndarray  # normalized inputs, shape (n, dims)
    y_mean: float
    chol: np.ndarray | None  # lower factor of K + (noise + jitter) I, None when empty
    alpha: np.ndarray  # solve of the centered targets
    hyperparams: GpHyperparams
    jitter: float


def _fit_with(space, x_norm, y, hp: GpHyperparams) -> GpModel:
    n = x_norm.shape[0]
    y_mean = float(np.mean(y)) if n else 0.0
    if n == 0:
        return GpModel(space, x_norm, y_mean, None, np.empty(0), hp, 0.0)
    centered = y - y_mean
    gram = _matern52(x_norm, x_norm, hp.lengthscale, hp.signal_variance)
    for jitter in _JITTERS:
        try:
            lower = cholesky(
                gram + (hp.noise_variance + jitter * hp.signal_variance) * np.eye(n),
                lower=True,
            )
        except np.linalg.LinAlgError:
            continue
        alpha = cho_solve((lower, True), centered)
        return GpModel(space, x_norm, y_mean, lower, alpha, hp, jitter)
    raise NumericalError("Gram matrix not positive definite even with maximum jitter")


def _log_marginal_likelihood(model: GpModel, y: np.ndarray) -> float:
    centered = y - model.y_mean
    n = y.size
    return float(
        -0.5 * centered @ model.alpha
        - np.sum(np.log(np.diag(model.chol)))
        - 0.5 * n * math.log(2.0 * math.pi)
    )


def gp_fit(dataset: Dataset, hyperparams: GpHyperparams = GpHyperparams()) -> GpModel:
    """Fit the exact GP to a dataset.

    Inputs are normalized to the unit box first.  If the Gram matrix is
    numerically singular, escalating diagonal jitter is applied before
    giving up with :class:`NumericalError`.  An empty dataset yields
    the prior.
    """
    x_norm = _normalize(dataset.space, dataset.xs) if dataset.n else dataset.xs
    y = dataset.ys
    if hyperparams.refine_lengthscale and dataset.n > 0:
        best, best_lml = None, -np.inf
        for ls in hyperparams.lengthscale_grid:
            candidate = GpHyperparams(
                lengthscale=ls,
                signal_variance=hyperparams.signal_variance,
                noise_variance=hyperparams.noise_variance,
            )
            model = _fit_with(dataset.space, x_norm, y, candidate)
            lml = _log_marginal_likelihood(model, y)
            if lml > best_lml:
                best, best_lml = model, lml
        return best
    return _fit_with(dataset.space, x_norm, y, hyperparams)


def gp_posterior(model: GpModel, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at raw (unnormalized) points.

    Variances are clamped at zero from below.  With an empty training
    set this is the prior: mean zero, variance equal to the signal
    variance.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    hp = model.hyperparams
    if model.chol is None:
        return (
            np.zeros(points.shape[0]),
            np.full(points.shape[0], hp.signal_variance),
        )
    x_norm = _normalize(model.space, points)
    k_star = _matern52(x_norm, model.x_train, hp.lengthscale, hp.signal_variance)
    mean = model.y_mean + k_star @ model.alpha
    v = solve_triangular(model.chol, k_star.T, lower=True)
    var = hp.signal_variance - np.sum(v * v, axis=0)
    return mean, np.maximum(var, 0.0)


def gp_ei_acq(model: GpModel, x: np.ndarray, tau: float) -> float:
    """Expected improvement over ``tau`` under the GP posterior at ``x``.

    At points where the posterior variance collapses to (numerical)
    zero, the degenerate-belief limit ``max(mu - tau, 0)`` is used.
    """
    mean, var = gp_posterior(model, np.atleast_2d(np.asarray(x, dtype=float)))
    mu, sigma = float(mean[0]), math.sqrt(max(float(var[0]), 0.0))
    if sigma < 1e-12:
        return max(mu - tau, 0.0)
    return true_ei(GaussianBelief(mu, sigma), tau)
