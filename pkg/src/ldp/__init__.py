"""Local discovery by partitioning.

Causal covariate labeling for an exposure-outcome pair from conditional
independence tests, with valid-adjustment-set discovery under the backdoor
criterion, an exact d-separation oracle, synthetic benchmark generators,
and an experiment harness.
"""

from .algorithm import (
    LdpResult,
    SelectionCriterion,
    run_ldp,
    select_covariates,
)
from .citest import (
    CachedTester,
    ChiSquareTester,
    CiOutcome,
    CiQuery,
    FisherZTester,
    OracleTester,
    TestCounters,
    cached,
)
from .dag import (
    Dag,
    PartitionLabel,
    PathType,
    PathTypePair,
    classify_path_types,
    d_separated,
    enumerate_active_paths,
    ground_truth_partition,
    is_valid_adjustment_set,
    random_dag,
)
from .evaluate import (
    MetricsReport,
    ReplicateOutcome,
    aggregate,
    ate_estimate,
    partition_accuracy,
    z1_precision_recall,
)
from .harness import ExperimentConfig, run_dataset, run_experiment, run_scaling
from .synth import (
    Dataset,
    ScmSpec,
    build_scm,
    mask_latents,
    named_graph,
    sample,
    scaling_graph,
)

__version__ = "0.1.0"

__all__ = [
    "Dag",
    "PartitionLabel",
    "PathType",
    "PathTypePair",
    "d_separated",
    "enumerate_active_paths",
    "classify_path_types",
    "ground_truth_partition",
    "is_valid_adjustment_set",
    "random_dag",
    "CiQuery",
    "CiOutcome",
    "TestCounters",
    "OracleTester",
    "FisherZTester",
    "ChiSquareTester",
    "CachedTester",
    "cached",
    "LdpResult",
    "SelectionCriterion",
    "run_ldp",
    "select_covariates",
    "Dataset",
    "ScmSpec",
    "named_graph",
    "scaling_graph",
    "build_scm",
    "sample",
    "mask_latents",
    "MetricsReport",
    "ReplicateOutcome",
    "partition_accuracy",
    "z1_precision_recall",
    "ate_estimate",
    "aggregate",
    "ExperimentConfig",
    "run_dataset",
    "run_experiment",
    "run_scaling",
    "__version__",
]
