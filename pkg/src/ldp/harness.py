"""Replicated-experiment harness shared by the CLI and the test suite.

A single experiment configuration names a built-in graph, a structural
process, a tester, sample size, replicate count, latent columns, and a
covariate-selection criterion. Replicates are seeded ``seed + index`` and
evaluated independently, so they may be dispatched to a process pool;
aggregation happens after all replicates complete.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .algorithm import LdpResult, SelectionCriterion, run_ldp, select_covariates
from .citest import ChiSquareTester, FisherZTester, OracleTester, cached
from .dag import Dag, PartitionLabel, ground_truth_partition, is_valid_adjustment_set
from .evaluate import MetricsReport, ReplicateOutcome, ate_estimate, aggregate
from .synth import Dataset, build_scm, mask_latents, named_graph, sample, scaling_graph

__all__ = [
    "ExperimentConfig",
    "ScalingRow",
    "run_dataset",
    "run_experiment",
    "run_scaling",
    "true_total_effect",
]

_TESTS = ("oracle", "fisher_z", "chi_square")
_CONFIG_KEYS = {
    "version",
    "graph_id",
    "process_id",
    "n",
    "replicates",
    "alpha",
    "test",
    "hidden",
    "seed",
    "criterion",
}
CONFIG_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    graph_id: str
    test: str
    process_id: Optional[str] = None
    n: int = 10_000
    replicates: int = 1
    alpha: float = 0.001
    hidden: tuple[str, ...] = ()
    seed: int = 0
    criterion: str = SelectionCriterion.COMMON_CAUSE.value

    def __post_init__(self):
        graph = named_graph(self.graph_id)  # validates the id
        if self.test not in _TESTS:
            raise ValueError(f"test must be one of {_TESTS}")
        if self.test != "oracle":
            if self.process_id is None:
                raise ValueError("statistical tests require a process_id")
            build_scm(self.graph_id, self.process_id)  # validates the pair
            if self.n < 1:
                raise ValueError("n must be >= 1")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        SelectionCriterion(self.criterion)
        candidates = set(graph.candidates())
        for h in self.hidden:
            if h not in candidates:
                raise ValueError(f"hidden variable {h!r} is not a graph candidate")

    @staticmethod
    def from_json_dict(payload: Mapping) -> "ExperimentConfig":
        unknown = set(payload) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if payload.get("version") != CONFIG_VERSION:
            raise ValueError(f"config version must be {CONFIG_VERSION}")
        return ExperimentConfig(
            graph_id=payload["graph_id"],
            test=payload["test"],
            process_id=payload.get("process_id"),
            n=int(payload.get("n", 10_000)),
            replicates=int(payload.get("replicates", 1)),
            alpha=float(payload.get("alpha", 0.001)),
            hidden=tuple(payload.get("hidden", ())),
            seed=int(payload.get("seed", 0)),
            criterion=payload.get("criterion", SelectionCriterion.COMMON_CAUSE.value),
        )


def _tester_for(config: ExperimentConfig, graph: Dag, data: Optional[Dataset]):
    if config.test == "oracle":
        return OracleTester(graph)
    if config.test == "fisher_z":
        return FisherZTester(data, alpha=config.alpha)
    return ChiSquareTester(data, alpha=config.alpha)


def true_total_effect(spec, seed: int) -> float:
    """Sum over directed exposure-outcome paths of the edge-weight products.

    Defined for the linear continuous processes, where the regression
    estimand equals this path sum.
    """
    from .synth import _edge_weight  # local: weights are seed-deterministic

    g = spec.dag
    if spec.discretize:
        raise ValueError("total effect is defined for linear continuous processes")
    memo: dict[str, float] = {g.outcome: 1.0}

    def effect_to_outcome(v: str) -> float:
        if v in memo:
            return memo[v]
        total = 0.0
        for child in g.children(v):
            if child == g.outcome or g.outcome in g.descendants(child):
                total += _edge_weight(spec, v, child, seed) * effect_to_outcome(child)
        memo[v] = total
        return total

    return effect_to_outcome(g.exposure)


def _evaluate_run(
    graph: Dag,
    truth: Mapping[str, PartitionLabel],
    result: LdpResult,
    criterion: str,
    data: Optional[Dataset],
    estimate_ate: bool,
    runtime_ms: float,
    seed: int,
) -> ReplicateOutcome:
    from .evaluate import partition_accuracy, z1_precision_recall

    observed_truth = {v: truth[v] for v in result.candidates}
    accuracy = partition_accuracy(result.labels, observed_truth)
    selected = select_covariates(result, criterion)
    # precision/recall judged against the confounders of the full graph
    precision, recall = z1_precision_recall(selected, truth)
    valid = bool(
        result.z5_criterion_passed and is_valid_adjustment_set(graph, selected)
    )
    ate = None
    if data is not None and estimate_ate and result.z5_criterion_passed:
        ate = ate_estimate(data, graph.exposure, graph.outcome, selected)
    return ReplicateOutcome(
        accuracy=accuracy,
        z1_precision=precision,
        z1_recall=recall,
        vas_valid=valid,
        z5_passed=result.z5_criterion_passed,
        tests_executed=result.counters.executed,
        cache_hits=result.counters.cache_hits,
        ate=ate,
        runtime_ms=runtime_ms,
        seed=seed,
    )


def run_replicate(
    config: ExperimentConfig, index: int, truth: Mapping[str, PartitionLabel]
) -> ReplicateOutcome:
    """Run one seeded replicate of the experiment and evaluate it."""
    graph = named_graph(config.graph_id)
    seed = config.seed + index
    data: Optional[Dataset] = None
    estimate_ate = False

    if config.test == "oracle":
        candidates = tuple(
            v for v in graph.candidates() if v not in set(config.hidden)
        )
        start = time.perf_counter()
        tester = cached(OracleTester(graph))
        result = run_ldp(tester, candidates, graph.exposure, graph.outcome)
        runtime_ms = (time.perf_counter() - start) * 1000.0
    else:
        spec = build_scm(config.graph_id, config.process_id)
        full = sample(spec, config.n, seed)
        data = mask_latents(full, config.hidden)
        candidates = data.candidate_columns()
        estimate_ate = not spec.discretize
        start = time.perf_counter()
        tester = cached(_tester_for(config, graph, data))
        result = run_ldp(tester, candidates, graph.exposure, graph.outcome)
        runtime_ms = (time.perf_counter() - start) * 1000.0

    return _evaluate_run(
        graph, truth, result, config.criterion, data, estimate_ate, runtime_ms, seed
    )


def _replicate_task(args) -> tuple[int, ReplicateOutcome]:
    config, index, truth = args
    return index, run_replicate(config, index, truth)


def run_experiment(
    config: ExperimentConfig, workers: Optional[int] = None
) -> tuple[list[ReplicateOutcome], MetricsReport]:
    """Run all replicates (optionally on a process pool) and aggregate."""
    graph = named_graph(config.graph_id)
    truth = ground_truth_partition(graph)
    if workers is None:
        workers = min(os.cpu_count() or 1, config.replicates)
    tasks = [(config, i, truth) for i in range(config.replicates)]
    if workers > 1 and config.replicates > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            indexed = list(pool.map(_replicate_task, tasks))
        indexed.sort(key=lambda pair: pair[0])
        outcomes = [r for _, r in indexed]
    else:
        outcomes = [run_replicate(config, i, truth) for i in range(config.replicates)]

    report = aggregate(outcomes)
    if config.test != "oracle":
        spec = build_scm(config.graph_id, config.process_id)
        if not spec.discretize:
            # MSE against each replicate's own true effect (random-weight
            # processes draw new path coefficients per replicate)
            errors = [
                (r.ate - true_total_effect(spec, config.seed + i)) ** 2
                for i, r in enumerate(outcomes)
                if r.ate is not None
            ]
            if errors:
                import numpy as np
                from dataclasses import replace as _replace

                report = _replace(report, ate_mse=float(np.mean(errors)))
    return outcomes, report


@dataclass(frozen=True)
class ScalingRow:
    k: int
    n_candidates: int
    tests_executed: int
    cache_hits: int
    ratio: float
    runtime_ms: float


def run_scaling(max_k: int) -> list[ScalingRow]:
    """Oracle runs on partition-scaled graphs, recording executed tests."""
    if not 1 <= max_k <= 10:
        raise ValueError("max_k must be between 1 and 10")
    rows = []
    for k in range(1, max_k + 1):
        graph = scaling_graph(k)
        candidates = graph.candidates()
        start = time.perf_counter()
        tester = cached(OracleTester(graph))
        result = run_ldp(tester, candidates, graph.exposure, graph.outcome)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        n_z = len(candidates)
        rows.append(
            ScalingRow(
                k=k,
                n_candidates=n_z,
                tests_executed=result.counters.executed,
                cache_hits=result.counters.cache_hits,
                ratio=result.counters.executed / (n_z * n_z),
                runtime_ms=elapsed_ms,
            )
        )
    return rows


def run_dataset(
    data: Dataset,
    exposure: str,
    outcome: str,
    test: str,
    alpha: float,
) -> LdpResult:
    """One-shot discovery over a dataset's columns."""
    if test not in ("fisher_z", "chi_square"):
        raise ValueError("dataset runs support fisher_z or chi_square")
    if exposure not in data.columns or outcome not in data.columns:
        raise ValueError("exposure and outcome must be dataset columns")
    if exposure == outcome:
        raise ValueError("exposure and outcome must be distinct")
    tester = (
        FisherZTester(data, alpha=alpha)
        if test == "fisher_z"
        else ChiSquareTester(data, alpha=alpha)
    )
    candidates = tuple(c for c in data.columns if c not in (exposure, outcome))
    return run_ldp(cached(tester), candidates, exposure, outcome)
