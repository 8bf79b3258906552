"""Metrics over predicted partitions, adjustment sets, and effect estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .dag import GROUND_TRUTH_LABELS, PartitionLabel
from .synth import Dataset

__all__ = [
    "ReplicateOutcome",
    "MetricsReport",
    "partition_accuracy",
    "z1_precision_recall",
    "ate_estimate",
    "aggregate",
]

# Superset labels that count as correct for the partitions they aggregate.
_SUPERSET_COVERS = {
    PartitionLabel.Z_POST: {PartitionLabel.Z2, PartitionLabel.Z3, PartitionLabel.Z6},
    PartitionLabel.Z57: {PartitionLabel.Z5, PartitionLabel.Z7},
}


def partition_accuracy(
    pred: Mapping[str, PartitionLabel], truth: Mapping[str, PartitionLabel]
) -> float:
    """Fraction of predicted labels consistent with ground truth.

    A superset label counts as correct for every partition it aggregates.
    """
    if set(pred) != set(truth):
        raise ValueError("prediction and truth must cover the same variables")
    if not truth:
        return 1.0
    correct = 0
    for v, t in truth.items():
        if t not in GROUND_TRUTH_LABELS:
            raise ValueError(f"truth label for {v!r} must be a base partition")
        p = pred[v]
        if p == t or t in _SUPERSET_COVERS.get(p, ()):
            correct += 1
    return correct / len(truth)


def z1_precision_recall(
    adjustment: Iterable[str], truth: Mapping[str, PartitionLabel]
) -> tuple[float, float]:
    """Confounder precision and recall of an adjustment set.

    An empty adjustment set scores (1, 1) when there are no true confounders
    and (0, 0) otherwise.
    """
    adj = set(adjustment)
    true_z1 = {v for v, label in truth.items() if label is PartitionLabel.Z1}
    hits = len(adj & true_z1)
    if not adj:
        return (1.0, 1.0) if not true_z1 else (0.0, 0.0)
    precision = hits / len(adj)
    recall = hits / len(true_z1) if true_z1 else 1.0
    return precision, recall


def ate_estimate(
    data: Dataset, exposure: str, outcome: str, adjustment: Iterable[str]
) -> float:
    """Exposure coefficient from OLS of outcome on exposure plus adjustment."""
    adjustment = list(dict.fromkeys(adjustment))
    for name in (exposure, outcome, *adjustment):
        data.column(name)  # raises on unknown columns
    y = data.column(outcome)
    cols = [np.ones(data.n), data.column(exposure)]
    cols += [data.column(v) for v in adjustment]
    design = np.column_stack(cols)
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise ValueError("rank-deficient design matrix")
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(beta[1])


@dataclass(frozen=True)
class ReplicateOutcome:
    """Per-replicate evaluation record fed into :func:`aggregate`."""

    accuracy: float
    z1_precision: float
    z1_recall: float
    vas_valid: bool
    z5_passed: bool
    tests_executed: int
    cache_hits: int = 0
    ate: Optional[float] = None
    runtime_ms: float = 0.0
    seed: Optional[int] = None


@dataclass(frozen=True)
class MetricsReport:
    """Replicate aggregates with symmetric normal-approximation 95% CIs."""

    replicates: int
    partition_accuracy: float
    z1_precision: float
    z1_recall: float
    vas_valid_fraction: float
    z5_pass_fraction: float
    ate_mean: Optional[float]
    ate_mse: Optional[float]
    tests_mean: float
    runtime_ms_mean: float
    ci95: dict[str, tuple[float, float]] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        payload = {
            "replicates": self.replicates,
            "partition_accuracy": self.partition_accuracy,
            "z1_precision": self.z1_precision,
            "z1_recall": self.z1_recall,
            "vas_valid_fraction": self.vas_valid_fraction,
            "z5_pass_fraction": self.z5_pass_fraction,
            "ate_mean": self.ate_mean,
            "ate_mse": self.ate_mse,
            "tests_mean": self.tests_mean,
            "runtime_ms_mean": self.runtime_ms_mean,
            "ci95": {k: list(v) for k, v in sorted(self.ci95.items())},
        }
        return payload

    CSV_FIELDS = (
        "replicates",
        "partition_accuracy",
        "z1_precision",
        "z1_recall",
        "vas_valid_fraction",
        "z5_pass_fraction",
        "ate_mean",
        "ate_mse",
        "tests_mean",
        "runtime_ms_mean",
    )

    def to_csv_row(self) -> list:
        return [getattr(self, name) for name in self.CSV_FIELDS]


def _mean_ci(values: Sequence[float]) -> tuple[float, tuple[float, float]]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, (mean, mean)
    half = 1.96 * float(arr.std(ddof=1)) / math.sqrt(arr.size)
    return mean, (mean - half, mean + half)


def aggregate(
    replicates: Sequence[ReplicateOutcome], true_ate: Optional[float] = None
) -> MetricsReport:
    """Means and 95% confidence intervals across replicate outcomes.

    Replicates without an effect estimate are excluded from the ATE mean and
    mean squared error; the MSE requires ``true_ate``.
    """
    if not replicates:
        raise ValueError("need at least one replicate")
    ci: dict[str, tuple[float, float]] = {}
    acc, ci["partition_accuracy"] = _mean_ci([r.accuracy for r in replicates])
    prec, ci["z1_precision"] = _mean_ci([r.z1_precision for r in replicates])
    rec, ci["z1_recall"] = _mean_ci([r.z1_recall for r in replicates])
    valid, ci["vas_valid_fraction"] = _mean_ci(
        [1.0 if r.vas_valid else 0.0 for r in replicates]
    )
    passed, ci["z5_pass_fraction"] = _mean_ci(
        [1.0 if r.z5_passed else 0.0 for r in replicates]
    )
    tests, ci["tests_mean"] = _mean_ci([float(r.tests_executed) for r in replicates])
    runtime, ci["runtime_ms_mean"] = _mean_ci([r.runtime_ms for r in replicates])

    ates = [r.ate for r in replicates if r.ate is not None]
    ate_mean: Optional[float] = None
    ate_mse: Optional[float] = None
    if ates:
        ate_mean, ci["ate_mean"] = _mean_ci(ates)
        if true_ate is not None:
            errors = [(a - true_ate) ** 2 for a in ates]
            ate_mse, ci["ate_mse"] = _mean_ci(errors)

    return MetricsReport(
        replicates=len(replicates),
        partition_accuracy=acc,
        z1_precision=prec,
        z1_recall=rec,
        vas_valid_fraction=valid,
        z5_pass_fraction=passed,
        ate_mean=ate_mean,
        ate_mse=ate_mse,
        tests_mean=tests,
        runtime_ms_mean=runtime,
        ci95=ci,
    )
