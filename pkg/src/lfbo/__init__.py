"""Likelihood-free Bayesian optimization via weighted classification.

The toolkit turns each round of a black-box optimization loop into a
weighted binary classification problem: observations above a threshold
are positives (weighted by how much they improve on it), the rest are
negatives, and the trained classifier's odds ratio is the acquisition
function.  Two classifier backends (a small neural network and
Newton-boosted trees), a structure-aware variant for objectives with
known outer shape, analytic oracles for verification, and a seeded
benchmark runner are included.
"""

from .acquisition import (
    AcquisitionModel,
    CandidateProposal,
    acq_value,
    acq_values,
    bore_to_pi_transform,
    epsilon_greedy_wrap,
    maximize_random_search,
    solve_variational_scalar,
)
from .benchmarks import (
    AnalyticBenchmark,
    TabularBenchmark,
    forrester,
    get_benchmark,
    grid_argmax,
    list_benchmarks,
    load_tabular,
    synthetic_g,
)
from .classifiers import (
    Classifier,
    GbtClassifier,
    GbtConfig,
    MlpClassifier,
    MlpConfig,
    WeightedTrainingSet,
    classification_loss,
    grad_loss_wrt_params,
    load_classifier,
    predict,
    save_classifier,
    train_gbt,
    train_mlp,
)
from .composite import (
    CompositeClassifier,
    CompositeConfig,
    CompositeObjective,
    EnvModelParams,
    VectorObservation,
    composite_loss,
    env_concentration,
    env_field,
    env_objective,
    grad_composite_loss,
    make_env_objective,
    train_composite,
)
from .core import (
    Dataset,
    Observation,
    SearchSpace,
    ThresholdPolicy,
    Utility,
    UtilityKind,
    build_weights,
    eval_utility,
    select_threshold,
    utility_values,
)
from .driver import (
    BoConfig,
    CompositeBoConfig,
    EquivalenceConfig,
    EquivalenceReport,
    EquivalenceRow,
    IterationRecord,
    ObjectiveEvaluationError,
    RegretTrace,
    immediate_regret,
    run_bo,
    run_composite_bo,
    run_equivalence_experiment,
    summarize_traces,
    trace_records_from_csv,
    trace_to_csv,
    write_equivalence_csv,
    write_summary_csv,
)
from .errors import (
    DegenerateTrainingError,
    DomainError,
    EmptyDatasetError,
    InvalidArgumentError,
    NumericalError,
    TableParseError,
    TableSchemaError,
)
from .oracles import (
    GaussianBelief,
    GpHyperparams,
    GpModel,
    gp_ei_acq,
    gp_fit,
    gp_posterior,
    normal_cdf,
    normal_pdf,
    true_ei,
    true_pi,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # core
    "Utility",
    "UtilityKind",
    "SearchSpace",
    "Observation",
    "Dataset",
    "ThresholdPolicy",
    "eval_utility",
    "utility_values",
    "select_threshold",
    "build_weights",
    # classifiers
    "WeightedTrainingSet",
    "classification_loss",
    "grad_loss_wrt_params",
    "MlpConfig",
    "MlpClassifier",
    "train_mlp",
    "GbtConfig",
    "GbtClassifier",
    "train_gbt",
    "Classifier",
    "predict",
    "save_classifier",
    "load_classifier",
    # acquisition
    "AcquisitionModel",
    "CandidateProposal",
    "acq_value",
    "acq_values",
    "maximize_random_search",
    "epsilon_greedy_wrap",
    "solve_variational_scalar",
    "bore_to_pi_transform",
    # oracles
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
    # composite
    "CompositeObjective",
    "VectorObservation",
    "CompositeConfig",
    "CompositeClassifier",
    "composite_loss",
    "grad_composite_loss",
    "train_composite",
    "EnvModelParams",
    "env_concentration",
    "env_field",
    "env_objective",
    "make_env_objective",
    # benchmarks
    "synthetic_g",
    "forrester",
    "grid_argmax",
    "AnalyticBenchmark",
    "TabularBenchmark",
    "load_tabular",
    "get_benchmark",
    "list_benchmarks",
    # driver
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
    # errors
    "InvalidArgumentError",
    "EmptyDatasetError",
    "DomainError",
    "DegenerateTrainingError",
    "NumericalError",
    "TableSchemaError",
    "TableParseError",
]
