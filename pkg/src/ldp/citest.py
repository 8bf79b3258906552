"""Conditional-independence testing behind one uniform interface.

Three testers share the ``test(a, b, cond)`` protocol: an exact graph
oracle (d-separation stands in for infinite data), a partial-correlation
z-test for continuous data, and a stratified chi-square test for
integer-coded data. ``cached`` wraps any tester with canonical-key result
caching plus executed/cache-hit accounting, which the partition procedure
relies on both for speed and for its step that must run entirely off
previously seen marginals.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, runtime_checkable

import numpy as np
from scipy import stats

from .dag import Dag, d_separated

__all__ = [
    "CiQuery",
    "CiOutcome",
    "TestCounters",
    "CITester",
    "OracleTester",
    "FisherZTester",
    "ChiSquareTester",
    "CachedTester",
    "cached",
]

# Partial correlations are clipped away from +/-1 to keep the z-transform finite.
_RHO_CLIP = 1.0 - 1e-7

# Stratum usability floor for the stratified chi-square test: at least a 2x2
# table with this many observations, after dropping empty rows/columns.
_MIN_STRATUM_TOTAL = 10


@dataclass(frozen=True)
class CiQuery:
    """A conditional-independence query in canonical (symmetric) form."""

    a: str
    b: str
    cond: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("query endpoints must be distinct")
        if self.a in self.cond or self.b in self.cond:
            raise ValueError("endpoints must not appear in the conditioning set")

    def key(self) -> tuple[str, str, tuple[str, ...]]:
        lo, hi = sorted((self.a, self.b))
        return (lo, hi, tuple(sorted(self.cond)))


@dataclass(frozen=True)
class CiOutcome:
    independent: bool
    p_value: Optional[float] = None
    statistic: Optional[float] = None
    inconclusive: bool = False


@dataclass
class TestCounters:
    executed: int = 0
    cache_hits: int = 0

    @property
    def total(self) -> int:
        return self.executed + self.cache_hits


@runtime_checkable
class CITester(Protocol):
    def test(self, a: str, b: str, cond: Iterable[str] = ()) -> CiOutcome: ...


class OracleTester:
    """Answers queries from graph d-separation, simulating infinite data."""

    def __init__(self, graph: Dag):
        self.graph = graph

    def test(self, a: str, b: str, cond: Iterable[str] = ()) -> CiOutcome:
        return CiOutcome(independent=d_separated(self.graph, a, b, cond))


class FisherZTester:
    """Partial-correlation z-test for jointly Gaussian-ish continuous data.

    The sample correlation matrix is computed once; each query reads the
    partial correlation of the pair given the conditioning set from the
    precision of the relevant submatrix.
    """

    def __init__(self, dataset, alpha: float = 0.01):
        self.alpha = float(alpha)
        self._cols = {name: i for i, name in enumerate(dataset.columns)}
        values = np.asarray(dataset.values, dtype=float)
        self._n = values.shape[0]
        if self._n < 5:
            raise ValueError("need at least 5 samples")
        with np.errstate(invalid="ignore", divide="ignore"):
            self._corr = np.corrcoef(values, rowvar=False)

    def test(self, a: str, b: str, cond: Iterable[str] = ()) -> CiOutcome:
        q = CiQuery(a, b, frozenset(cond))
        for name in (q.a, q.b, *q.cond):
            if name not in self._cols:
                raise ValueError(f"unknown column: {name!r}")
        k = len(q.cond)
        if self._n <= k + 3:
            raise ValueError(f"insufficient samples: n={self._n} with |cond|={k}")
        idx = [self._cols[q.a], self._cols[q.b]] + sorted(
            self._cols[c] for c in q.cond
        )
        sub = self._corr[np.ix_(idx, idx)]
        if not np.all(np.isfinite(sub)):
            return CiOutcome(independent=False, inconclusive=True)
        try:
            prec = np.linalg.inv(sub)
        except np.linalg.LinAlgError:
            return CiOutcome(independent=False, inconclusive=True)
        denom = prec[0, 0] * prec[1, 1]
        if denom <= 0 or not np.isfinite(denom):
            return CiOutcome(independent=False, inconclusive=True)
        rho = float(np.clip(-prec[0, 1] / math.sqrt(denom), -_RHO_CLIP, _RHO_CLIP))
        z = 0.5 * math.log((1.0 + rho) / (1.0 - rho))
        statistic = math.sqrt(self._n - k - 3) * abs(z)
        p_value = float(2.0 * stats.norm.sf(statistic))
        return CiOutcome(
            independent=p_value > self.alpha, p_value=p_value, statistic=statistic
        )


class ChiSquareTester:
    """Stratified Pearson chi-square test for integer-coded data.

    Rows are stratified by the joint value of the conditioning columns; each
    usable stratum contributes its Pearson statistic and degrees of freedom,
    and the sums are referred to a chi-square tail. A stratum is usable when
    its table is at least 2x2 with a minimum total count; cells with expected
    count below one are pooled into an "other" bucket per margin first.
    """

    def __init__(self, dataset, alpha: float = 0.001):
        self.alpha = float(alpha)
        values = np.asarray(dataset.values, dtype=float)
        if not np.allclose(values, np.round(values), atol=1e-9):
            raise ValueError("chi-square tester requires integer-valued columns")
        ints = np.round(values).astype(np.int64)
        self._n = ints.shape[0]
        self._cols = {name: i for i, name in enumerate(dataset.columns)}
        self._codes = np.empty_like(ints)
        self._cards = np.empty(ints.shape[1], dtype=np.int64)
        for j in range(ints.shape[1]):
            _, inv = np.unique(ints[:, j], return_inverse=True)
            self._codes[:, j] = inv
            self._cards[j] = inv.max() + 1

    def _stratum_ids(self, cond_idx: list[int]) -> tuple[np.ndarray, int]:
        sid = np.zeros(self._n, dtype=np.int64)
        for j in cond_idx:
            sid = sid * self._cards[j] + self._codes[:, j]
        _, inv = np.unique(sid, return_inverse=True)
        return inv, int(inv.max()) + 1

    def test(self, a: str, b: str, cond: Iterable[str] = ()) -> CiOutcome:
        q = CiQuery(a, b, frozenset(cond))
        for name in (q.a, q.b, *q.cond):
            if name not in self._cols:
                raise ValueError(f"unknown column: {name!r}")
        ai, bi = self._cols[q.a], self._cols[q.b]
        na, nb = int(self._cards[ai]), int(self._cards[bi])
        a_codes, b_codes = self._codes[:, ai], self._codes[:, bi]

        cond_idx = sorted(self._cols[c] for c in q.cond)
        if cond_idx:
            sid, n_strata = self._stratum_ids(cond_idx)
        else:
            sid, n_strata = np.zeros(self._n, dtype=np.int64), 1

        combined = (sid * na + a_codes) * nb + b_codes
        tables = np.bincount(combined, minlength=n_strata * na * nb).reshape(
            n_strata, na, nb
        )

        stat_sum = 0.0
        dof_sum = 0
        for s in range(n_strata):
            contrib = _stratum_chi2(tables[s])
            if contrib is not None:
                stat_sum += contrib[0]
                dof_sum += contrib[1]
        if dof_sum == 0:
            # no usable strata: treated as dependent, flagged for audit
            return CiOutcome(independent=False, inconclusive=True)
        p_value = float(stats.chi2.sf(stat_sum, dof_sum))
        return CiOutcome(
            independent=p_value > self.alpha, p_value=p_value, statistic=stat_sum
        )


def _pool_margins(table: np.ndarray) -> np.ndarray:
    """Merge the two smallest-margin rows/columns while expected counts < 1."""
    while True:
        rm = table.sum(axis=1)
        cm = table.sum(axis=0)
        expected = np.outer(rm, cm) / table.sum()
        if expected.min() >= 1.0:
            return table
        if table.shape[0] > 2:
            i, j = np.argsort(rm, kind="stable")[:2]
            keep = [k for k in range(table.shape[0]) if k != max(i, j)]
            merged = table[min(i, j)] + table[max(i, j)]
            table = table[keep]
            table[min(i, j)] = merged
            continue
        if table.shape[1] > 2:
            i, j = np.argsort(cm, kind="stable")[:2]
            keep = [k for k in range(table.shape[1]) if k != max(i, j)]
            merged = table[:, min(i, j)] + table[:, max(i, j)]
            table = table[:, keep]
            table[:, min(i, j)] = merged
            continue
        return table


def _stratum_chi2(table: np.ndarray) -> Optional[tuple[float, int]]:
    """Pearson statistic and dof for one stratum, or None when unusable."""
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    if table.shape[0] < 2 or table.shape[1] < 2:
        return None
    total = table.sum()
    if total < _MIN_STRATUM_TOTAL:
        return None
    table = _pool_margins(table.astype(np.float64))
    if table.shape[0] < 2 or table.shape[1] < 2:
        return None
    rm = table.sum(axis=1, keepdims=True)
    cm = table.sum(axis=0, keepdims=True)
    expected = rm @ cm / table.sum()
    stat = float(((table - expected) ** 2 / expected).sum())
    dof = (table.shape[0] - 1) * (table.shape[1] - 1)
    return stat, dof


class CachedTester:
    """Canonical-key cache around any tester, with execution accounting.

    Symmetric queries hash identically, so ``(a, b | S)`` and ``(b, a | S)``
    cost one execution between them. Counters satisfy
    ``executed + cache_hits == total queries answered``. A lock makes
    concurrent use safe; the experiment harness still gives each replicate
    its own instance.
    """

    def __init__(self, inner: CITester):
        self.inner = inner
        self.counters = TestCounters()
        self._cache: dict[tuple, CiOutcome] = {}
        self._lock = threading.Lock()

    @property
    def alpha(self):
        return getattr(self.inner, "alpha", None)

    @alpha.setter
    def alpha(self, value: float) -> None:
        if not hasattr(self.inner, "alpha"):
            raise AttributeError("underlying tester has no significance level")
        self.inner.alpha = value

    def test(self, a: str, b: str, cond: Iterable[str] = ()) -> CiOutcome:
        key = CiQuery(a, b, frozenset(cond)).key()
        with self._lock:
            hit = self._cache.get(key)
            if hit is not None:
                self.counters.cache_hits += 1
                return hit
        outcome = self.inner.test(a, b, cond)
        with self._lock:
            if key in self._cache:
                self.counters.cache_hits += 1
                return self._cache[key]
            self._cache[key] = outcome
            self.counters.executed += 1
        return outcome

    def __contains__(self, query: CiQuery) -> bool:
        return query.key() in self._cache


def cached(tester: CITester) -> CachedTester:
    """Wrap ``tester`` with the canonical-key cache (idempotent)."""
    if isinstance(tester, CachedTester):
        return tester
    return CachedTester(tester)
