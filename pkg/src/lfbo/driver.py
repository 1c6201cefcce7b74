"""Optimization loops, the estimator consistency study, and trace output.

The main loop is deliberately plain: sample ``n_init`` uniform points,
then alternate fit / maximize / evaluate until the budget is spent.
The classifier is refit from scratch every iteration on all data so no
stale state survives; all randomness flows from a single seeded
generator, making complete runs bit-reproducible.

Regret accounting uses the internal maximization convention.  The
trace records the clamped regret ``max(y* - incumbent, 0)``: with
noisy observations the incumbent can overshoot a noiseless optimum,
and clamping keeps the reported sequence non-increasing (the raw
difference is emitted on the debug log).
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .acquisition import (
    AcquisitionModel,
    epsilon_greedy_wrap,
    maximize_random_search,
)
from .benchmarks import synthetic_g
from .classifiers import (
    GbtConfig,
    MlpConfig,
    WeightedTrainingSet,
    train_gbt,
    train_mlp,
)
from .composite import (
    CompositeConfig,
    CompositeObjective,
    VectorObservation,
    train_composite,
)
from .core import (
    Dataset,
    Observation,
    SearchSpace,
    ThresholdPolicy,
    Utility,
    build_weights,
    select_threshold,
)
from .errors import DegenerateTrainingError, InvalidArgumentError
from .oracles import (
    GaussianBelief,
    GpHyperparams,
    gp_fit,
    gp_posterior,
    normal_cdf,
    normal_pdf,
)

__all__ = [
    "METHODS",
    "BACKENDS",
    "BoConfig",
    "IterationRecord",
    "RegretTrace",
    "ObjectiveEvaluationError",
    "immediate_regret",
    "run_bo",
    "CompositeBoConfig",
    "run_composite_bo",
    "EquivalenceConfig",
    "EquivalenceRow",
    "EquivalenceReport",
    "run_equivalence_experiment",
    "trace_to_csv",
    "trace_records_from_csv",
    "summarize_traces",
    "write_summary_csv",
    "write_equivalence_csv",
]

logger = logging.getLogger(__name__)

METHODS = ("lfbo-ei", "lfbo-pi", "lfbo-power", "bore", "gp-ei", "random")
BACKENDS = ("mlp", "gbt")

ObjectiveFn = Callable[[np.ndarray, np.random.Generator], float]


@dataclass(frozen=True)
class BoConfig:
    """Everything one optimization run needs.

    ``objective`` is called as ``objective(x, rng)`` and must return a
    finite float (larger is better).  ``optimum_value`` is the known
    best value used for regret accounting.  ``power_exponent`` is
    required by (and only by) the ``lfbo-power`` method.
    """

    space: SearchSpace
    objective: ObjectiveFn
    optimum_value: float
    method: str = "lfbo-ei"
    backend: str = "mlp"
    power_exponent: float | None = None
    policy: ThresholdPolicy = ThresholdPolicy()
    normalize_weights: bool = True
    n_init: int = 10
    budget: int = 50
    n_candidates: int = 512
    epsilon: float = 0.0
    seed: int = 0
    mlp: MlpConfig = MlpConfig()
    gbt: GbtConfig = GbtConfig()
    gp: GpHyperparams = GpHyperparams(refine_lengthscale=True)

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown method {self.method!r}")
        if self.backend not in BACKENDS:
            raise InvalidArgumentError(f"unknown backend {self.backend!r}")
        if self.method == "lfbo-power":
            if self.power_exponent is None:
                raise InvalidArgumentError("lfbo-power requires power_exponent")
        elif self.power_exponent is not None:
            raise InvalidArgumentError(f"{self.method} takes no power_exponent")
        if not 1 <= self.n_init <= self.budget:
            raise InvalidArgumentError("need 1 <= n_init <= budget")
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidArgumentError("epsilon must be in [0, 1]")
        if self.n_candidates < 1:
            raise InvalidArgumentError("n_candidates must be >= 1")
        if not math.isfinite(self.optimum_value):
            raise InvalidArgumentError("optimum_value must be finite")

    def utility(self) -> Utility:
        """The utility the method's weights are built from."""
        if self.method == "lfbo-ei":
            return Utility.ei()
        if self.method in ("lfbo-pi", "bore"):
            return Utility.pi()
        if self.method == "lfbo-power":
            return Utility.power(self.power_exponent)
        raise InvalidArgumentError(f"{self.method} does not use a utility")


@dataclass(frozen=True)
class IterationRecord:
    """One evaluated point and the regret bookkeeping after it."""

    iteration: int
    x: np.ndarray
    y: float
    incumbent: float
    regret: float


@dataclass(frozen=True)
class RegretTrace:
    """The full record of one optimization run."""

    method: str
    seed: int
    optimum_value: float
    records: tuple[IterationRecord, ...]

    @property
    def final_regret(self) -> float:
        return self.records[-1].regret

    @property
    def regrets(self) -> np.ndarray:
        return np.asarray([r.regret for r in self.records])


class ObjectiveEvaluationError(RuntimeError):
    """An objective call failed; the records so far are attached."""

    def __init__(self, cause: Exception, partial: tuple[IterationRecord, ...]):
        super().__init__(f"objective evaluation failed: {cause}")
        self.cause = cause
        self.partial = partial


def immediate_regret(y_star: float, incumbent: float) -> float:
    """Absolute gap between the known optimum and the incumbent."""
    if not (math.isfinite(y_star) and math.isfinite(incumbent)):
        raise InvalidArgumentError("y_star and incumbent must be finite")
    return abs(y_star - incumbent)


def _fit_classifier(
    config: BoConfig, dataset: Dataset, tau: float, train_seed: int
):
    """Train the configured backend; None when no sample gets positive weight."""
    if config.method == "bore":
        labels = (dataset.ys > tau).astype(float)
        pos, neg = labels, 1.0 - labels
    else:
        pos = build_weights(
            dataset, config.utility(), tau, normalize=config.normalize_weights
        )
        neg = None
    if not np.any(pos > 0):
        return None
    ts = WeightedTrainingSet(dataset.space, dataset.xs, pos, neg)
    if config.backend == "mlp":
        return train_mlp(ts, dataclasses.replace(config.mlp, seed=train_seed))
    return train_gbt(ts, config.gbt)


def _gp_propose(
    config: BoConfig, dataset: Dataset, incumbent: float, rng: np.random.Generator
) -> np.ndarray:
    model = gp_fit(dataset, config.gp)
    candidates = config.space.sample_batch(rng, config.n_candidates)
    mean, var = gp_posterior(model, candidates)
    sigma = np.sqrt(np.maximum(var, 0.0))
    gap = mean - incumbent
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 1e-12, gap / np.where(sigma > 0, sigma, 1.0), 0.0)
    ei = np.where(
        sigma > 1e-12,
        gap * normal_cdf(z) + sigma * normal_pdf(z),
        np.maximum(gap, 0.0),
    )
    return candidates[int(np.argmax(ei))]


def run_bo(config: BoConfig) -> RegretTrace:
    """Run one seeded optimization loop and return its trace.

    Uniform exploration covers the first ``n_init`` evaluations (and
    every evaluation for the ``random`` method).  After that each
    iteration selects a threshold, builds weights, refits the backend,
    and takes the best of ``n_candidates`` uniform draws under the
    acquisition; if every weight is zero the iteration falls back to a
    uniform draw.  Exactly ``budget`` evaluations are spent.

    Raises
    ------
    ObjectiveEvaluationError
        If ``objective`` raises; completed records are attached.
    """
    rng = np.random.default_rng(config.seed)
    eps_fn = epsilon_greedy_wrap(
        lambda model, space: maximize_random_search(
            model, space, config.n_candidates, int(rng.integers(2**31))
        ),
        config.epsilon,
        seed=config.seed + 1,
    )
    records: list[IterationRecord] = []
    observations: list[Observation] = []
    incumbent = -math.inf
    for i in range(config.budget):
        if i < config.n_init or config.method == "random":
            x = config.space.sample(rng)
        elif config.method == "gp-ei":
            if config.epsilon > 0 and rng.random() < config.epsilon:
                x = config.space.sample(rng)
            else:
                x = _gp_propose(
                    config, Dataset(config.space, tuple(observations)), incumbent, rng
                )
        else:
            dataset = Dataset(config.space, tuple(observations))
            tau = select_threshold(dataset, config.policy)
            classifier = _fit_classifier(
                config, dataset, tau, int(rng.integers(2**31))
            )
            if classifier is None:
                logger.debug("iteration %d: all weights zero, uniform fallback", i)
                x = config.space.sample(rng)
            else:
                model = AcquisitionModel(
                    classifier, config.utility(), tau, config.policy.gamma
                )
                x = eps_fn(model, config.space).x
        try:
            y = float(config.objective(x, rng))
        except Exception as exc:  # persist what we have before re-raising
            raise ObjectiveEvaluationError(exc, tuple(records)) from exc
        observations.append(Observation(x, y))
        incumbent = max(incumbent, y)
        raw = config.optimum_value - incumbent
        logger.debug("iteration %d: raw regret %.6g", i, raw)
        records.append(IterationRecord(i, np.asarray(x, dtype=float), y, incumbent, max(raw, 0.0)))
    return RegretTrace(config.method, config.seed, config.optimum_value, tuple(records))


@dataclass(frozen=True)
class CompositeBoConfig:
    """Configuration of the structure-aware optimization loop.

    The threshold is the ``tau_quantile`` empirical quantile of the
    observed scalar scores (a low quantile, so most samples carry
    positive weight and the regression term sees plenty of signal).
    """

    space: SearchSpace
    objective: CompositeObjective
    optimum_value: float = 0.0
    tau_quantile: float = 0.10
    hidden_units: tuple[int, ...] = (128, 128)
    epochs: int = 800
    learning_rate: float = 1e-2
    weight_decay: float = 1e-6
    n_init: int = 10
    budget: int = 50
    n_candidates: int = 512
    epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.tau_quantile < 1.0:
            raise InvalidArgumentError("tau_quantile must be in (0, 1)")
        if not 1 <= self.n_init <= self.budget:
            raise InvalidArgumentError("need 1 <= n_init <= budget")
        if not 0.0 <= self.epsilon <= 1.0:
            raise InvalidArgumentError("epsilon must be in [0, 1]")
        if self.n_candidates < 1:
            raise InvalidArgumentError("n_candidates must be >= 1")


def run_composite_bo(config: CompositeBoConfig) -> RegretTrace:
    """Optimization loop that observes outcome vectors, not just scores.

    Mirrors :func:`run_bo` with the composite head as the model: the
    acquisition ranking is the predicted score pushed through the known
    structure, which shares its argmax with the classifier ratio.
    """
    rng = np.random.default_rng(config.seed)
    z_star = config.objective.z_star
    records: list[IterationRecord] = []
    observations: list[VectorObservation] = []
    incumbent = -math.inf
    for i in range(config.budget):
        x: np.ndarray
        if i < config.n_init:
            x = config.space.sample(rng)
        else:
            g_obs = np.asarray([o.scalar_outcome(z_star) for o in observations])
            tau = float(np.quantile(g_obs, config.tau_quantile, method="linear"))
            train_seed = int(rng.integers(2**31))
            if not np.any(g_obs > tau):
                logger.debug("iteration %d: no positive scores, uniform fallback", i)
                x = config.space.sample(rng)
            else:
                model = train_composite(
                    observations,
                    CompositeConfig(
                        space=config.space,
                        z_star=z_star,
                        tau=tau,
                        hidden_units=config.hidden_units,
                        epochs=config.epochs,
                        learning_rate=config.learning_rate,
                        weight_decay=config.weight_decay,
                        seed=train_seed,
                    ),
                )
                if config.epsilon > 0 and rng.random() < config.epsilon:
                    x = config.space.sample(rng)
                else:
                    candidates = config.space.sample_batch(rng, config.n_candidates)
                    scores = model.predict_s(candidates)
                    x = candidates[int(np.argmax(scores))]
        try:
            y_vec = np.asarray(config.objective.h(x), dtype=float)
        except Exception as exc:
            raise ObjectiveEvaluationError(exc, tuple(records)) from exc
        obs = VectorObservation(x, y_vec)
        observations.append(obs)
        g = obs.scalar_outcome(z_star)
        incumbent = max(incumbent, g)
        raw = config.optimum_value - incumbent
        logger.debug("iteration %d: raw regret %.6g", i, raw)
        records.append(
            IterationRecord(i, np.asarray(x, dtype=float), g, incumbent, max(raw, 0.0))
        )
    return RegretTrace("composite", config.seed, config.optimum_value, tuple(records))


@dataclass(frozen=True)
class EquivalenceConfig:
    """Setup of the estimator consistency study.

    For each sample size, i.i.d. uniform inputs on [-1, 1] are scored
    by the smooth 1-d objective plus Gaussian noise; each method's
    classifier is trained once per seed and its acquisition is compared
    on a fixed grid against the closed-form targets computed from the
    exact outcome distribution.  Weights stay unnormalized here so the
    estimates carry the same absolute scale as the targets.
    """

    n_values: tuple[int, ...] = (100, 1000, 10000)
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    methods: tuple[str, ...] = ("lfbo-ei", "lfbo-pi", "bore")
    grid_size: int = 1001
    gamma: float = 0.33
    noise_sigma: float = 0.1
    mlp: MlpConfig = MlpConfig(
        hidden_units=(128, 128),
        epochs=1000,
        batch_size=None,
        learning_rate=1e-2,
        weight_decay=1e-6,
    )

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise InvalidArgumentError("gamma must be in (0, 1)")
        if self.noise_sigma <= 0:
            raise InvalidArgumentError("noise_sigma must be > 0")
        if self.grid_size < 2:
            raise InvalidArgumentError("grid_size must be >= 2")
        if any(n < 2 for n in self.n_values):
            raise InvalidArgumentError("sample sizes must be >= 2")
        for m in self.methods:
            if m not in ("lfbo-ei", "lfbo-pi", "bore"):
                raise InvalidArgumentError(f"unsupported equivalence method {m!r}")


@dataclass(frozen=True)
class EquivalenceRow:
    """Grid-averaged absolute error of one fit against one target."""

    method: str
    truth: str  # "pi" or "ei"
    n: int
    seed: int
    l1_error: float


@dataclass(frozen=True)
class EquivalenceReport:
    config: EquivalenceConfig
    rows: tuple[EquivalenceRow, ...]

    def mean_error(self, method: str, truth: str, n: int) -> float:
        vals = [
            r.l1_error
            for r in self.rows
            if r.method == method and r.truth == truth and r.n == n
        ]
        if not vals:
            raise InvalidArgumentError(f"no rows for {method}/{truth}/n={n}")
        return float(np.mean(vals))


def run_equivalence_experiment(config: EquivalenceConfig = EquivalenceConfig()) -> EquivalenceReport:
    """Measure how each estimator converges to its closed-form target."""
    space = SearchSpace.continuous([(-1.0, 1.0)])
    grid = np.linspace(-1.0, 1.0, config.grid_size)
    grid_points = grid[:, None]
    g_grid = synthetic_g(grid)
    rows: list[EquivalenceRow] = []
    for n in config.n_values:
        for seed in config.seeds:
            rng = np.random.default_rng([seed, n])
            xs = rng.uniform(-1.0, 1.0, size=n)
            ys = synthetic_g(xs) + config.noise_sigma * rng.standard_normal(n)
            tau = float(np.quantile(ys, 1.0 - config.gamma, method="linear"))
            # closed-form targets under the exact outcome distribution
            z = (g_grid - tau) / config.noise_sigma
            truth = {
                "pi": normal_cdf(z),
                "ei": (g_grid - tau) * normal_cdf(z)
                + config.noise_sigma * normal_pdf(z),
            }
            points = xs[:, None]
            for method in config.methods:
                if method == "lfbo-ei":
                    pos = np.maximum(ys - tau, 0.0)
                    neg = None
                elif method == "lfbo-pi":
                    pos = (ys > tau).astype(float)
                    neg = None
                else:
                    pos = (ys > tau).astype(float)
                    neg = 1.0 - pos
                ts = WeightedTrainingSet(space, points, pos, neg)
                fit_seed = int(rng.integers(2**31))
                clf = train_mlp(ts, dataclasses.replace(config.mlp, seed=fit_seed))
                c = clf.predict(grid_points)
                if method == "bore":
                    # comparability pipeline: the plain classifier's odds,
                    # rescaled to a density-ratio estimate, pushed through
                    # the ratio-to-probability transform -- which composes
                    # to the classifier output itself:
                    #   r = (1-gamma)/gamma * c/(1-c);  r/(r + (1-gamma)/gamma) = c
                    estimate = c
                else:
                    estimate = c / (1.0 - c)
                for truth_name, truth_vals in truth.items():
                    rows.append(
                        EquivalenceRow(
                            method,
                            truth_name,
                            n,
                            seed,
                            float(np.mean(np.abs(estimate - truth_vals))),
                        )
                    )
    return EquivalenceReport(config, tuple(rows))


def trace_to_csv(trace: RegretTrace, path: str) -> None:
    """Write one trace; columns are seed, iteration, the point, y, incumbent, regret."""
    dims = trace.records[0].x.size if trace.records else 0
    header = ["seed", "iteration", *(f"x_{d}" for d in range(dims)), "y", "incumbent", "regret"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in trace.records:
            writer.writerow(
                [
                    trace.seed,
                    r.iteration,
                    *(repr(float(v)) for v in r.x),
                    repr(float(r.y)),
                    repr(float(r.incumbent)),
                    repr(float(r.regret)),
                ]
            )


def trace_records_from_csv(path: str) -> tuple[int, tuple[IterationRecord, ...]]:
    """Read back ``(seed, records)`` from a trace file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dims = len(header) - 5
        seed = 0
        records = []
        for row in reader:
            seed = int(row[0])
            x = np.asarray([float(v) for v in row[2 : 2 + dims]])
            y, incumbent, regret = (float(v) for v in row[2 + dims :])
            records.append(IterationRecord(int(row[1]), x, y, incumbent, regret))
    return seed, tuple(records)


def summarize_traces(
    traces_records: Sequence[Sequence[IterationRecord]],
) -> list[tuple[int, float, float]]:
    """Per-iteration (iteration, mean regret, median regret) across runs."""
    if not traces_records:
        raise InvalidArgumentError("no traces to summarize")
    lengths = {len(records) for records in traces_records}
    if len(lengths) != 1:
        raise InvalidArgumentError("traces have differing lengths")
    by_iter = np.asarray(
        [[r.regret for r in records] for records in traces_records]
    )  # (runs, iters)
    out = []
    for i in range(by_iter.shape[1]):
        col = by_iter[:, i]
        out.append((i, float(np.mean(col)), float(np.median(col))))
    return out


def write_summary_csv(rows: Iterable[tuple[int, float, float]], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "mean_regret", "median_regret"])
        for iteration, mean_r, median_r in rows:
            writer.writerow([iteration, repr(float(mean_r)), repr(float(median_r))])


def write_equivalence_csv(report: EquivalenceReport, path: str) -> None:
    """One row per (method, target, sample size, seed)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "n", "seed", "l1_error"])
        for r in report.rows:
            writer.writerow(
                [f"{r.method}_vs_{r.truth}", r.n, r.seed, repr(float(r.l1_error))]
            )
