"""Partitioning procedure: goldens on the named graphs plus structural properties."""

import json

import numpy as np
import pytest

from ldp.algorithm import (
    WARN_CRITERION_FAILED,
    WARN_NO_INSTRUMENT,
    SelectionCriterion,
    run_ldp,
    select_covariates,
)
from ldp.citest import OracleTester, cached
from ldp.dag import (
    Dag,
    PartitionLabel,
    ground_truth_partition,
    is_valid_adjustment_set,
    random_dag,
)
from ldp.evaluate import partition_accuracy
from ldp.synth import named_graph, scaling_graph

L = PartitionLabel


def oracle_run(g, candidates=None, hidden=()):
    candidates = list(candidates if candidates is not None else g.candidates())
    candidates = [v for v in candidates if v not in set(hidden)]
    return run_ldp(cached(OracleTester(g)), candidates, g.exposure, g.outcome)


class TestTenNodeOracle:
    def test_exact_labels_and_vas(self):
        g = named_graph("ten_node")
        r = oracle_run(g)
        assert r.labels == {
            "Z1": L.Z1,
            "Z2": L.Z_POST,
            "Z3": L.Z_POST,
            "Z4": L.Z4,
            "Z5": L.Z5,
            "Z6": L.Z_POST,
            "Z7": L.Z7,
            "Z8": L.Z8,
        }
        assert r.vas == ("Z1",)
        assert r.z5_criterion_passed
        assert partition_accuracy(r.labels, ground_truth_partition(g)) == 1.0

    def test_step7_runs_from_cache(self):
        r = oracle_run(named_graph("ten_node"))
        assert r.step_tests["step_7"] == 0

    def test_no_direct_effect_variant(self):
        g = named_graph("ten_node_no_direct")
        r = oracle_run(g)
        assert r.vas == ("Z1",)
        assert partition_accuracy(r.labels, ground_truth_partition(g)) == 1.0

    def test_counters_invariant(self):
        r = oracle_run(named_graph("ten_node"))
        assert r.counters.executed == 50
        assert r.counters.total == r.counters.executed + r.counters.cache_hits


class TestTrivialCases:
    def test_single_isolated_candidate(self):
        g = Dag(["X", "Y", "W"], [("X", "Y")], "X", "Y")
        r = oracle_run(g)
        assert r.labels == {"W": L.Z8}
        assert r.vas is None
        assert not r.z5_criterion_passed
        assert WARN_NO_INSTRUMENT in r.warnings

    def test_empty_candidate_list(self):
        g = Dag(["X", "Y"], [("X", "Y")], "X", "Y")
        r = oracle_run(g, candidates=[])
        assert r.labels == {}
        assert r.vas is None

    def test_rejects_candidate_overlap(self):
        g = named_graph("ten_node")
        with pytest.raises(ValueError):
            run_ldp(cached(OracleTester(g)), ["X", "Z1"], "X", "Y")

    def test_instrument_only_graph_keeps_superset_label(self):
        # no confounder anywhere: the step-3 superset is never resolved
        g = Dag(["X", "Y", "W"], [("W", "X"), ("X", "Y")], "X", "Y")
        r = oracle_run(g)
        assert r.labels["W"] is L.Z57
        assert r.vas is None

    def test_criterion_failure_warning(self):
        # confounder hidden: instruments exist but cannot be separated
        g = named_graph("latent_18")
        r = oracle_run(g, hidden=("Z1",))
        assert not r.z5_criterion_passed
        assert WARN_CRITERION_FAILED in r.warnings


class TestMStructure:
    def test_labels_and_selection(self):
        g = named_graph("m_structure_13")
        r = oracle_run(g)
        truth = ground_truth_partition(g)
        assert partition_accuracy(r.labels, truth) == 1.0
        assert r.vas == ("Z1",)
        assert select_covariates(r, SelectionCriterion.OUTCOME) == ("Z1", "Z4", "M2")

    def test_disjunctive_cause_on_ten_node(self):
        r = oracle_run(named_graph("ten_node"))
        assert select_covariates(r, "disjunctive_cause") == ("Z1", "Z4", "Z5")

    def test_empty_result_selection(self):
        g = Dag(["X", "Y"], [("X", "Y")], "X", "Y")
        r = oracle_run(g, candidates=[])
        assert select_covariates(r, "common_cause") == ()


class TestButterflyAndSeventeen:
    def test_butterfly_recovers_all_confounders(self):
        g = named_graph("butterfly_13")
        r = oracle_run(g)
        assert set(r.vas) == {"Z1", "B1", "B2", "B3"}
        assert partition_accuracy(r.labels, ground_truth_partition(g)) == 1.0
        assert is_valid_adjustment_set(g, r.vas)

    def test_seventeen_node(self):
        g = named_graph("seventeen_node")
        r = oracle_run(g)
        assert set(r.vas) == {"Z1", "B1", "B2", "B3"}
        assert partition_accuracy(r.labels, ground_truth_partition(g)) == 1.0
        assert is_valid_adjustment_set(g, r.vas)


class TestComplexBackdoor:
    def test_known_mislabelings_still_give_valid_set(self):
        g = named_graph("complex_backdoor")
        r = oracle_run(g)
        truth = ground_truth_partition(g)
        assert truth["Z1_3"] is L.Z1 and r.labels["Z1_3"] is L.Z_POST
        assert truth["Z2_2"] is L.Z2 and r.labels["Z2_2"] is L.Z1
        # the two mislabelings above are the only ones: 12 of 14 correct
        assert partition_accuracy(r.labels, truth) == pytest.approx(12 / 14)
        assert set(r.vas) == {"Z1_1", "Z1_2", "Z1_4", "Z1_5", "Z1_6", "Z2_2"}
        assert r.z5_criterion_passed
        assert is_valid_adjustment_set(g, r.vas)


class TestLatent18:
    EXPECTED = {
        "B1": True,
        "B2": True,
        "Z4a": True,
        "M2": True,
        "Z5a": True,
        "M1": True,
        "Z1": False,
        "B3": False,
    }

    def test_full_observation_recovers_everything(self):
        g = named_graph("latent_18")
        r = oracle_run(g)
        assert set(r.vas) == {"Z1", "B1", "B2", "B3"}
        assert partition_accuracy(r.labels, ground_truth_partition(g)) == 1.0

    def test_single_latent_concordance(self):
        g = named_graph("latent_18")
        for hidden, should_pass in self.EXPECTED.items():
            r = oracle_run(g, hidden=(hidden,))
            assert r.z5_criterion_passed == should_pass, hidden
            if should_pass:
                assert is_valid_adjustment_set(g, r.vas), hidden

    def test_both_m_parents_latent_fails_criterion(self):
        # with the collider's parents unobserved it is absorbed into the
        # confounder set, and the criterion reports non-identifiability
        g = named_graph("latent_18")
        r = oracle_run(g, hidden=("M1", "M2"))
        assert not r.z5_criterion_passed


class TestDeterminism:
    def test_identical_runs(self):
        g = named_graph("latent_18")
        r1, r2 = oracle_run(g), oracle_run(g)
        assert r1.labels == r2.labels
        assert r1.vas == r2.vas
        assert r1.step_trace == r2.step_trace
        assert r1.counters.executed == r2.counters.executed

    def test_json_schema(self):
        r = oracle_run(named_graph("ten_node"))
        payload = json.loads(json.dumps(r.to_json_dict()))
        assert set(payload) == {
            "labels",
            "vas",
            "z5_criterion",
            "tests_executed",
            "cache_hits",
            "warnings",
        }
        assert payload["vas"] == ["Z1"]
        assert payload["labels"]["Z2"] == "ZPost"


class TestProperties:
    def test_executed_bounded_by_three_z_squared(self):
        for k in (1, 2, 5, 10):
            g = scaling_graph(k)
            r = oracle_run(g)
            nz = len(g.candidates())
            assert r.counters.executed <= 3 * nz * nz
        for seed in range(25):
            g = random_dag(14, seed=seed)
            r = oracle_run(g)
            nz = len(g.candidates())
            assert r.counters.executed <= 3 * nz * nz

    def test_large_random_graph_bound(self):
        g = random_dag(82, seed=1, edge_prob=0.2)
        r = oracle_run(g)
        nz = len(g.candidates())
        assert r.counters.executed <= 3 * nz * nz

    @staticmethod
    def _satisfies_conditions(g, truth):
        # at least one prognostic variable, and at least one *discoverable*
        # instrument (marginally dependent on the outcome, which fails when
        # the exposure's effect on the outcome is null) such that every
        # confounder is marginally independent of some discoverable instrument
        from ldp.dag import d_separated

        z4 = [v for v, l in truth.items() if l is L.Z4]
        z5 = [v for v, l in truth.items() if l is L.Z5]
        z1 = [v for v, l in truth.items() if l is L.Z1]
        if not z4 or not z5:
            return False
        discoverable = [s for s in z5 if not d_separated(g, s, g.outcome)]
        if not discoverable:
            return False
        return all(any(d_separated(g, c, s) for s in discoverable) for c in z1)

    def test_no_exposure_descendants_in_confounder_output(self):
        checked = 0
        for seed in range(400):
            g = random_dag(10, seed=seed)
            truth = ground_truth_partition(g)
            if not self._satisfies_conditions(g, truth):
                continue
            checked += 1
            r = oracle_run(g)
            desc = g.descendants(g.exposure)
            z1_out = {v for v, l in r.labels.items() if l is L.Z1}
            assert not (z1_out & desc), f"seed={seed}"
        assert checked >= 30

    def test_z5_criterion_implies_valid_adjustment(self):
        # spot check; the 500-graph sweep with latent deletions runs in acceptance
        rng = np.random.default_rng(42)
        passed = 0
        for seed in range(150):
            g = random_dag(10, seed=seed)
            candidates = list(g.candidates())
            n_hide = int(rng.integers(0, 3))
            hidden = set(rng.choice(candidates, size=n_hide, replace=False)) if n_hide else set()
            r = oracle_run(g, hidden=hidden)
            if r.z5_criterion_passed:
                passed += 1
                assert is_valid_adjustment_set(g, r.vas), f"seed={seed} hidden={hidden}"
        assert passed >= 2  # non-vacuous; the big filtered sweep runs in acceptance

    def test_z4_z8_robust_to_latents(self):
        rng = np.random.default_rng(7)
        for seed in range(120):
            g = random_dag(10, seed=seed)
            truth = ground_truth_partition(g)
            candidates = list(g.candidates())
            n_hide = int(rng.integers(0, 4))
            hidden = set(rng.choice(candidates, size=n_hide, replace=False)) if n_hide else set()
            r = oracle_run(g, hidden=hidden)
            for v, label in r.labels.items():
                if label in (L.Z4, L.Z8):
                    assert truth[v] is label, f"seed={seed} var={v} hidden={hidden}"

    @staticmethod
    def _no_inter_partition_paths(g, truth):
        # marginally active paths between members of different partitions
        # that are not mediated by the exposure or outcome
        from itertools import combinations

        from ldp.dag import enumerate_active_paths

        for u, v in combinations(g.candidates(), 2):
            if truth[u] is truth[v]:
                continue
            if enumerate_active_paths(g, u, v, exclude={g.exposure, g.outcome}):
                return False
        return True

    def test_root_confounder_per_backdoor_path(self):
        # requires the discoverability conditions plus the absence of
        # inter-partition active paths (under which the claim is proven);
        # plain random graphs rarely satisfy all of them, so most coverage
        # comes from the partitioned template family
        from generators import random_partitioned_dag

        from ldp.dag import enumerate_active_paths

        graphs = [random_dag(10, seed=s) for s in range(200)]
        graphs += [random_partitioned_dag(seed=s) for s in range(100)]
        checked = 0
        for seed, g in enumerate(graphs):
            truth = ground_truth_partition(g)
            if not self._satisfies_conditions(g, truth):
                continue
            if not self._no_inter_partition_paths(g, truth):
                continue
            checked += 1
            r = oracle_run(g)
            z1_out = {v for v, l in r.labels.items() if l is L.Z1}
            x, y = g.exposure, g.outcome
            for path in enumerate_active_paths(g, x, y):
                # backdoor = first edge points into the exposure
                if (path[1], x) in g.edges:
                    assert set(path[1:-1]) & z1_out, f"seed={seed} path={path}"
        assert checked >= 60
