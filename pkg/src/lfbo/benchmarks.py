"""Benchmark objectives with known optima for regret accounting.

Everything here follows the internal sign convention: benchmarks are
maximization problems.  Objectives that are naturally minimized (the
classic smooth 1-d test function, tabulated losses) are negated when
they are wrapped, and their declared optima refer to the negated
values.  Declared optima of analytic 1-d benchmarks are re-derived at
construction time from a dense grid plus local refinement, so the
stored values cannot drift from the stored functions.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .composite import ENV_TRUE_PARAMS, EnvModelParams, env_objective, env_space
from .core import SearchSpace
from .errors import (
    DomainError,
    InvalidArgumentError,
    TableParseError,
    TableSchemaError,
)

__all__ = [
    "synthetic_g",
    "forrester",
    "grid_argmax",
    "AnalyticBenchmark",
    "TabularBenchmark",
    "load_tabular",
    "get_benchmark",
    "list_benchmarks",
]


def synthetic_g(x):
    """Smooth multimodal 1-d objective on [-1, 1] (maximization)."""
    x = np.asarray(x, dtype=float)
    return -np.sin(3.0 * x) - x * x + 0.6 * x


def forrester(x):
    """The classic smooth 1-d test function ``(6x - 2)^2 sin(12x - 4)`` on [0, 1].

    This is a minimization objective; the benchmark wrapper negates it.
    """
    x = np.asarray(x, dtype=float)
    return (6.0 * x - 2.0) ** 2 * np.sin(12.0 * x - 4.0)


def grid_argmax(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    n: int = 1_000_001,
    refine: bool = True,
) -> tuple[float, float]:
    """Maximize a vectorized 1-d function by dense grid plus refinement.

    Evaluates ``f`` on ``n`` equispaced points and, when ``refine`` is
    set, polishes the best grid point with a bounded scalar search in
    its neighboring interval.  Returns ``(x_best, f(x_best))``.
    """
    xs = np.linspace(lo, hi, n)
    ys = f(xs)
    i = int(np.argmax(ys))
    x_best, y_best = float(xs[i]), float(ys[i])
    if refine:
        a, b = xs[max(i - 1, 0)], xs[min(i + 1, n - 1)]
        res = minimize_scalar(
            lambda t: -float(f(np.asarray([t]))[0]),
            bounds=(a, b),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if -res.fun > y_best:
            x_best, y_best = float(res.x), float(-res.fun)
    return x_best, y_best


@dataclass(frozen=True)
class AnalyticBenchmark:
    """A closed-form objective, optionally observed with Gaussian noise."""

    name: str
    space: SearchSpace
    f: Callable[[np.ndarray], float]
    noise_sigma: float
    optimum_x: np.ndarray
    optimum_value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "optimum_x", np.asarray(self.optimum_x, dtype=float))
        if self.noise_sigma < 0 or not math.isfinite(self.noise_sigma):
            raise InvalidArgumentError("noise_sigma must be finite and >= 0")

    def evaluate(self, x: np.ndarray, rng: np.random.Generator | None = None) -> float:
        """Observed (possibly noisy) outcome at a valid point."""
        x = self.space.validate(x)
        y = float(self.f(x))
        if self.noise_sigma > 0:
            if rng is None:
                raise InvalidArgumentError(f"{self.name} is noisy and needs an rng")
            y += self.noise_sigma * float(rng.standard_normal())
        return y


@dataclass(frozen=True)
class TabularBenchmark:
    """A benchmark backed by pre-recorded evaluations of a finite space.

    ``outcomes`` maps each configuration (tuple of integer codes) to
    the recorded outcome samples, already negated into maximization
    orientation.  Evaluation draws one recorded sample uniformly; the
    declared optimum is the best per-configuration mean.
    """

    name: str
    space: SearchSpace
    outcomes: dict[tuple[int, ...], np.ndarray]
    optimum_x: np.ndarray
    optimum_value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "optimum_x", np.asarray(self.optimum_x, dtype=float))

    @property
    def noise_sigma(self) -> float:
        # resampling noise, not parametric; nonzero only to signal "noisy"
        return 1.0

    def evaluate(self, x: np.ndarray, rng: np.random.Generator | None = None) -> float:
        x = self.space.validate(x)
        if rng is None:
            raise InvalidArgumentError(f"{self.name} resamples and needs an rng")
        samples = self.outcomes[tuple(int(v) for v in x)]
        return float(samples[int(rng.integers(samples.size))])


def load_tabular(
    path: str,
    category_counts: tuple[int, ...] | None = None,
    name: str | None = None,
) -> TabularBenchmark:
    """Load a tabular benchmark from CSV.

    The header names the configuration columns followed by a single
    outcome column; each row is one recorded sample for one
    configuration.  Outcomes are treated as losses and negated.  When
    ``category_counts`` is omitted the per-column counts are inferred
    as ``max code + 1``.

    Raises
    ------
    TableParseError
        For rows that cannot be parsed (with their row index).
    TableSchemaError
        For configurations outside the declared space, or
        configurations of the space with no recorded sample.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TableSchemaError(f"{path}: empty file") from None
        if len(header) < 2:
            raise TableSchemaError(f"{path}: need >= 1 config column plus an outcome")
        n_cfg = len(header) - 1
        rows: list[tuple[tuple[int, ...], float]] = []
        for i, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise TableParseError(f"{path} row {i}: expected {len(header)} fields")
            try:
                cfg = tuple(int(v) for v in row[:n_cfg])
                outcome = float(row[n_cfg])
            except ValueError as exc:
                raise TableParseError(f"{path} row {i}: {exc}") from None
            if not math.isfinite(outcome):
                raise TableParseError(f"{path} row {i}: non-finite outcome")
            if any(v < 0 for v in cfg):
                raise TableSchemaError(f"{path} row {i}: negative category code")
            rows.append((cfg, outcome))
    if not rows:
        raise TableSchemaError(f"{path}: no data rows")
    if category_counts is None:
        category_counts = tuple(
            max(cfg[j] for cfg, _ in rows) + 1 for j in range(n_cfg)
        )
    if len(category_counts) != n_cfg:
        raise TableSchemaError(
            f"{path}: {len(category_counts)} counts for {n_cfg} config columns"
        )
    try:
        space = SearchSpace.categorical(category_counts)
    except InvalidArgumentError as exc:
        raise TableSchemaError(f"{path}: {exc}") from None
    grouped: dict[tuple[int, ...], list[float]] = {}
    for cfg, outcome in rows:
        if any(v >= c for v, c in zip(cfg, category_counts)):
            raise TableSchemaError(f"{path}: configuration {cfg} outside the space")
        grouped.setdefault(cfg, []).append(-outcome)
    for cfg in itertools.product(*(range(c) for c in category_counts)):
        if cfg not in grouped:
            raise TableSchemaError(f"{path}: configuration {cfg} has no samples")
    outcomes = {cfg: np.asarray(vals) for cfg, vals in grouped.items()}
    means = {cfg: float(v.mean()) for cfg, v in outcomes.items()}
    best_cfg = max(sorted(means), key=lambda cfg: means[cfg])
    return TabularBenchmark(
        name=name or path,
        space=space,
        outcomes=outcomes,
        optimum_x=np.asarray(best_cfg, dtype=float),
        optimum_value=means[best_cfg],
    )


@lru_cache(maxsize=None)
def _build(name: str) -> AnalyticBenchmark:
    if name == "synthetic1d":
        x_best, y_best = grid_argmax(synthetic_g, -1.0, 1.0)
        return AnalyticBenchmark(
            name="synthetic1d",
            space=SearchSpace.continuous([(-1.0, 1.0)]),
            f=lambda x: float(synthetic_g(x[0])),
            noise_sigma=0.1,
            optimum_x=np.asarray([x_best]),
            optimum_value=y_best,
        )
    if name == "forrester":
        neg = lambda x: -forrester(x)
        x_best, y_best = grid_argmax(neg, 0.0, 1.0)
        return AnalyticBenchmark(
            name="forrester",
            space=SearchSpace.continuous([(0.0, 1.0)]),
            f=lambda x: float(neg(x[0])),
            noise_sigma=0.0,
            optimum_x=np.asarray([x_best]),
            optimum_value=y_best,
        )
    if name == "env":
        return AnalyticBenchmark(
            name="env",
            space=env_space(),
            f=lambda x: -env_objective(EnvModelParams.from_vector(x), ENV_TRUE_PARAMS),
            noise_sigma=0.0,
            optimum_x=ENV_TRUE_PARAMS.as_vector(),
            optimum_value=0.0,
        )
    raise InvalidArgumentError(f"unknown benchmark {name!r}")


def get_benchmark(name: str) -> AnalyticBenchmark:
    """Look up a bundled benchmark by name."""
    return _build(name)


def list_benchmarks() -> tuple[str, ...]:
    return ("synthetic1d", "forrester", "env")
