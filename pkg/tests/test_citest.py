"""Independence testers: canonicalization, caching, oracle fidelity, calibration."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldp.citest import (
    CachedTester,
    ChiSquareTester,
    CiQuery,
    FisherZTester,
    OracleTester,
    cached,
)
from ldp.dag import random_dag
from ldp.synth import Dataset, named_graph

from oracles import bruteforce_d_separated


def _dataset(columns, matrix):
    return Dataset(columns=tuple(columns), values=np.asarray(matrix, dtype=float))


class TestCiQuery:
    def test_symmetric_keys(self):
        assert CiQuery("a", "b", frozenset({"c"})).key() == CiQuery(
            "b", "a", frozenset({"c"})
        ).key()

    def test_cond_order_irrelevant(self):
        k1 = CiQuery("a", "b", frozenset({"c", "d"})).key()
        k2 = CiQuery("a", "b", frozenset({"d", "c"})).key()
        assert k1 == k2

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            CiQuery("a", "a")
        with pytest.raises(ValueError):
            CiQuery("a", "b", frozenset({"a"}))


class TestOracle:
    def test_chain(self):
        from ldp.dag import Dag

        g = Dag(["A", "B", "C"], [("A", "B"), ("B", "C")], "A", "C")
        t = OracleTester(g)
        assert t.test("A", "C", ("B",)).independent
        assert not t.test("A", "C").independent

    def test_ten_node_collider_at_outcome(self):
        t = OracleTester(named_graph("ten_node"))
        assert not t.test("X", "Z4", ("Y",)).independent
        assert t.test("X", "Z4").independent
        assert t.test("X", "Z8").independent

    def test_matches_graph_everywhere(self):
        g = random_dag(8, seed=3)
        t = OracleTester(g)
        rng = np.random.default_rng(0)
        nodes = list(g.nodes)
        for _ in range(80):
            a, b = rng.choice(nodes, size=2, replace=False)
            rest = [v for v in nodes if v not in (a, b)]
            k = int(rng.integers(0, 3))
            cond = tuple(rng.choice(rest, size=k, replace=False)) if k else ()
            assert t.test(a, b, cond).independent == bruteforce_d_separated(
                g, a, b, cond
            )


class TestCache:
    def test_repeat_query_counted_once(self):
        t = cached(OracleTester(named_graph("ten_node")))
        t.test("X", "Z1")
        t.test("X", "Z1")
        assert t.counters.executed == 1
        assert t.counters.cache_hits == 1

    def test_symmetry_canonicalization(self):
        t = cached(OracleTester(named_graph("ten_node")))
        t.test("Z1", "Z5", ("X",))
        t.test("Z5", "Z1", ("X",))
        assert t.counters.executed == 1
        assert t.counters.cache_hits == 1

    def test_idempotent_wrap(self):
        t = cached(OracleTester(named_graph("ten_node")))
        assert cached(t) is t

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 500), queries=st.integers(5, 40))
    def test_transparency(self, seed, queries):
        # identical outcomes with and without the wrapper, only counters differ
        g = random_dag(7, seed=seed)
        plain = OracleTester(g)
        wrapped = cached(OracleTester(g))
        rng = np.random.default_rng(seed)
        nodes = list(g.nodes)
        for _ in range(queries):
            a, b = rng.choice(nodes, size=2, replace=False)
            rest = [v for v in nodes if v not in (a, b)]
            k = int(rng.integers(0, 3))
            cond = tuple(rng.choice(rest, size=k, replace=False)) if k else ()
            assert plain.test(a, b, cond) == wrapped.test(a, b, cond)
        assert wrapped.counters.total == queries


class TestFisherZ:
    def test_independent_columns_accepted(self):
        # rejection rate should be close to alpha across seeded trials
        alpha, trials, rejections = 0.01, 300, 0
        for seed in range(trials):
            rng = np.random.default_rng(seed)
            data = _dataset(["a", "b"], rng.normal(size=(10_000, 2)))
            t = FisherZTester(data, alpha=alpha)
            if not t.test("a", "b").independent:
                rejections += 1
        assert rejections / trials <= 0.02  # >= 98% accepted

    def test_near_deterministic_dependence(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=5000)
        b = a + 0.01 * rng.normal(size=5000)
        t = FisherZTester(_dataset(["a", "b"], np.column_stack([a, b])), alpha=0.01)
        out = t.test("a", "b")
        assert not out.independent
        assert out.p_value < 1e-10

    def test_chain_conditional_acceptance_rate(self):
        alpha, trials, accepted = 0.05, 400, 0
        for seed in range(trials):
            rng = np.random.default_rng(10_000 + seed)
            x = rng.normal(size=2000)
            z = x + rng.normal(size=2000)
            y = z + rng.normal(size=2000)
            t = FisherZTester(
                _dataset(["x", "z", "y"], np.column_stack([x, z, y])), alpha=alpha
            )
            if t.test("x", "y", ("z",)).independent:
                accepted += 1
        rate = accepted / trials
        # acceptance ~ 1 - alpha; allow a generous band around it
        assert abs(rate - (1 - alpha)) < 0.04

    def test_singular_matrix_inconclusive(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=100)
        data = _dataset(["a", "b", "c"], np.column_stack([a, a, rng.normal(size=100)]))
        out = FisherZTester(data, alpha=0.01).test("a", "c", ("b",))
        assert out.inconclusive and not out.independent

    def test_constant_column_inconclusive(self):
        data = _dataset(["a", "b"], np.column_stack([np.ones(50), np.arange(50.0)]))
        out = FisherZTester(data, alpha=0.01).test("a", "b")
        assert out.inconclusive and not out.independent

    def test_insufficient_samples(self):
        rng = np.random.default_rng(3)
        data = _dataset(list("abcdef"), rng.normal(size=(6, 6)))
        t = FisherZTester(data)
        with pytest.raises(ValueError, match="insufficient"):
            t.test("a", "b", ("c", "d", "e"))

    def test_p_values_in_range(self):
        rng = np.random.default_rng(4)
        data = _dataset(["a", "b", "c"], rng.normal(size=(500, 3)))
        t = FisherZTester(data, alpha=0.05)
        for cond in ((), ("c",)):
            out = t.test("a", "b", cond)
            assert 0.0 <= out.p_value <= 1.0
            assert np.isfinite(out.statistic)


class TestChiSquare:
    def test_independent_bernoulli_accepted(self):
        alpha, trials, rejections = 0.001, 300, 0
        for seed in range(trials):
            rng = np.random.default_rng(seed)
            data = _dataset(["a", "b"], rng.integers(0, 2, size=(10_000, 2)))
            if not ChiSquareTester(data, alpha=alpha).test("a", "b").independent:
                rejections += 1
        assert rejections / trials <= 0.01  # >= 99% accepted

    def test_copied_column_dependent(self):
        rng = np.random.default_rng(5)
        a = rng.integers(0, 3, size=2000)
        out = ChiSquareTester(
            _dataset(["a", "b"], np.column_stack([a, a])), alpha=0.001
        ).test("a", "b")
        assert not out.independent

    def test_conditioning_on_collider_creates_dependence(self):
        hits = 0
        for seed in range(40):
            rng = np.random.default_rng(seed)
            a = rng.integers(0, 2, size=8000)
            b = rng.integers(0, 2, size=8000)
            c = a + b
            data = _dataset(["a", "b", "c"], np.column_stack([a, b, c]))
            t = ChiSquareTester(data, alpha=0.001)
            assert t.test("a", "b").independent or seed > 0  # marginal: independent
            if not t.test("a", "b", ("c",)).independent:
                hits += 1
        assert hits >= 36  # dependent in most trials

    def test_rejects_non_integer_columns(self):
        rng = np.random.default_rng(6)
        with pytest.raises(ValueError, match="integer"):
            ChiSquareTester(_dataset(["a", "b"], rng.normal(size=(100, 2))))

    def test_zero_usable_strata_inconclusive(self):
        # conditioning on a unique-per-row column leaves no usable stratum
        n = 60
        a = np.arange(n) % 2
        b = (np.arange(n) // 2) % 2
        c = np.arange(n)  # unique values: every stratum has one row
        data = _dataset(["a", "b", "c"], np.column_stack([a, b, c]))
        out = ChiSquareTester(data, alpha=0.001).test("a", "b", ("c",))
        assert out.inconclusive and not out.independent

    def test_statistic_and_p_value_finite(self):
        rng = np.random.default_rng(7)
        a = rng.integers(0, 3, size=5000)
        b = (a + rng.integers(0, 2, size=5000)) % 3
        c = rng.integers(0, 2, size=5000)
        data = _dataset(["a", "b", "c"], np.column_stack([a, b, c]))
        out = ChiSquareTester(data, alpha=0.001).test("a", "b", ("c",))
        assert 0.0 <= out.p_value <= 1.0
        assert np.isfinite(out.statistic)

    def test_unknown_column(self):
        rng = np.random.default_rng(8)
        data = _dataset(["a", "b"], rng.integers(0, 2, size=(100, 2)))
        with pytest.raises(ValueError, match="unknown column"):
            ChiSquareTester(data).test("a", "q")
