"""Local discovery by partitioning.

Labels every covariate by its causal relation to an exposure-outcome pair
using only marginal and low-order conditional independence tests, then
emits the discovered confounder set as a valid adjustment set when an
instrument-based separation check certifies that all backdoor paths are
blocked.

The eight steps run in a fixed order over fixed iteration orders, so a run
is a deterministic function of the tester's answers and the candidate
order. Test execution is batched per step: each step evaluates its full
query battery against every candidate (or candidate pair) it inspects,
with results answered from the shared cache whenever a query was already
executed. Step 7 in particular issues no new tests, only cache reads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .citest import CachedTester, CITester, TestCounters, cached
from .dag import PartitionLabel

__all__ = [
    "LdpResult",
    "SelectionCriterion",
    "StepRecord",
    "run_ldp",
    "select_covariates",
    "WARN_NO_INSTRUMENT",
    "WARN_CRITERION_FAILED",
]

WARN_NO_INSTRUMENT = (
    "no instrument candidates discovered; backdoor coverage of the "
    "confounder set cannot be verified"
)
WARN_CRITERION_FAILED = (
    "instrument separation check failed; adjustment set not identifiable"
)


class SelectionCriterion(str, enum.Enum):
    """Covariate-selection rules over the final partition labels."""

    COMMON_CAUSE = "common_cause"
    DISJUNCTIVE_CAUSE = "disjunctive_cause"
    OUTCOME = "outcome"


_CRITERION_LABELS = {
    SelectionCriterion.COMMON_CAUSE: (PartitionLabel.Z1,),
    SelectionCriterion.DISJUNCTIVE_CAUSE: (
        PartitionLabel.Z1,
        PartitionLabel.Z4,
        PartitionLabel.Z5,
    ),
    SelectionCriterion.OUTCOME: (PartitionLabel.Z1, PartitionLabel.Z4),
}


@dataclass(frozen=True)
class StepRecord:
    """One labeling decision, with the certifying query when one exists."""

    step: int
    variable: str
    assigned: str
    via: str = ""


@dataclass
class LdpResult:
    """Output of one partitioning run."""

    labels: dict[str, PartitionLabel]
    vas: Optional[tuple[str, ...]]
    z5_criterion_passed: bool
    counters: TestCounters
    step_trace: tuple[StepRecord, ...]
    warnings: tuple[str, ...]
    step_tests: dict[str, int]
    candidates: tuple[str, ...] = ()
    exposure: str = ""
    outcome: str = ""

    def members(self, label: PartitionLabel) -> tuple[str, ...]:
        return tuple(v for v in self.candidates if self.labels[v] is label)

    def to_json_dict(self) -> dict:
        return {
            "labels": {v: self.labels[v].value for v in self.candidates},
            "vas": list(self.vas) if self.vas is not None else None,
            "z5_criterion": self.z5_criterion_passed,
            "tests_executed": self.counters.executed,
            "cache_hits": self.counters.cache_hits,
            "warnings": list(self.warnings),
        }


def run_ldp(
    tester: CITester,
    candidates: Sequence[str],
    exposure: str,
    outcome: str,
    alpha: Optional[float] = None,
) -> LdpResult:
    """Partition ``candidates`` and search for a valid adjustment set.

    ``tester`` answers independence queries over the candidates plus the
    exposure-outcome pair; it is wrapped in the canonical-key cache if not
    already. ``alpha`` optionally overrides the tester's significance level.
    """
    candidates = list(candidates)
    if len(set(candidates)) != len(candidates):
        raise ValueError("duplicate candidate names")
    if exposure in candidates or outcome in candidates:
        raise ValueError("exposure and outcome must not be candidates")
    if exposure == outcome:
        raise ValueError("exposure and outcome must be distinct")

    t: CachedTester = cached(tester)
    if alpha is not None:
        t.alpha = alpha

    x, y = exposure, outcome
    order = {v: i for i, v in enumerate(candidates)}

    def ind(a: str, b: str, cond: Iterable[str] = ()) -> bool:
        return t.test(a, b, cond).independent

    trace: list[StepRecord] = []
    warnings: list[str] = []
    step_tests: dict[str, int] = {}
    mark = t.counters.executed

    def close_step(name: str) -> None:
        nonlocal mark
        step_tests[name] = t.counters.executed - mark
        mark = t.counters.executed

    # Steps 1-3: one battery of four queries per candidate, then the cascade.
    # The pair's own marginal dependence is an input assumption, not tested.
    z8: list[str] = []
    z4: list[str] = []
    z57: list[str] = []
    for z in candidates:
        x_z = ind(x, z)
        y_z = ind(y, z)
        x_z_given_y = ind(x, z, (y,))
        y_z_given_x = ind(y, z, (x,))
        if x_z and y_z:
            z8.append(z)
            trace.append(StepRecord(1, z, "Z8", f"{x}_||_{z} and {y}_||_{z}"))
        elif x_z and not x_z_given_y:
            z4.append(z)
            trace.append(StepRecord(2, z, "Z4", f"{x}_||_{z} and {x}_dep_{z}|{y}"))
        elif not y_z and y_z_given_x:
            z57.append(z)
            trace.append(StepRecord(3, z, "Z57", f"{y}_dep_{z} and {y}_||_{z}|{x}"))
    close_step("steps_1_3")

    removed = set(z8) | set(z4) | set(z57)
    zprime = [z for z in candidates if z not in removed]

    # Step 4: screen the remainder against every known Z4 partner. The
    # disjunction short-circuits left to right per pair (the conditional is
    # only evaluated when the pair is marginally independent); the partner
    # loop itself is exhaustive.
    zpost: list[str] = []
    if z4:
        for z in zprime:
            certifier = None
            for w in z4:
                if (not ind(z, w)) or ind(z, w, (x, y)):
                    certifier = certifier or w
            if certifier is not None:
                zpost.append(z)
                trace.append(StepRecord(4, z, "ZPost", f"partner={certifier}"))
    zprime = [z for z in zprime if z not in set(zpost)]
    close_step("step_4")

    # Step 5: candidates separable from the outcome given the exposure and
    # all other unlabeled candidates (conditioning set snapshot taken once).
    zmix5: list[str] = []
    base = tuple(zprime)
    for z in base:
        if not ind(y, z):
            cond = (x,) + tuple(u for u in base if u != z)
            if ind(y, z, cond):
                zmix5.append(z)
                trace.append(StepRecord(5, z, "ZMix", f"{y}_||_{z}|{{{x}}}+rest"))
    zprime = [z for z in zprime if z not in set(zmix5)]
    close_step("step_5")

    # Step 6: merge the step-3 superset into the mixed pool, then use
    # v-structure probes at the exposure to pull confounders out of the
    # remainder and instruments-or-confounders out of the pool.
    zmix: list[str] = list(zmix5) + list(z57)
    from_step5 = set(zmix5)
    z15: list[str] = []
    z1: list[str] = []
    promoted: set[str] = set()
    if zmix and zprime:
        pool = tuple(zmix)
        for z in zprime:
            witness = None
            for m in pool:
                if ind(m, z) and not ind(m, z, (x,)):
                    witness = witness or m
                    if m not in promoted:
                        promoted.add(m)
                        z15.append(m)
            if witness is not None:
                z1.append(z)
                trace.append(StepRecord(6, z, "Z1", f"witness={witness}"))
            else:
                zpost.append(z)
                trace.append(StepRecord(6, z, "ZPost", "no v-structure witness"))
        for m in [u for u in zmix if u not in promoted]:
            free = None
            for w in z15:
                if ind(w, m):
                    free = free or w
            if free is not None:
                promoted.add(m)
                z1.append(m)
                trace.append(StepRecord(6, m, "Z1", f"independent_of={free}"))
            elif m in from_step5:
                zpost.append(m)
                trace.append(StepRecord(6, m, "ZPost", "dependent on all candidates"))
            # unresolved step-3 members stay in the Z57 superset
    close_step("step_6")

    # Assigned only once a confounder or instrument candidate exists; with
    # none discovered, the step-3 superset keeps its unresolved label.
    z7: list[str] = []
    if z15 or z1:
        z7 = [m for m in z57 if m not in promoted]
        for m in z7:
            trace.append(StepRecord(6, m, "Z7", "confounders exist, superset resolved"))

    # Step 7: split the instrument-or-confounder pool by marginal dependence
    # on the confounders found in step 6. Every query here was executed
    # during step 6, so this step is answered purely from cache.
    z5: list[str] = []
    if z15 and z1:
        known = tuple(z1)
        for m in z15:
            partner = None
            for w in known:
                if not ind(m, w):
                    partner = partner or w
            if partner is not None:
                z1.append(m)
                trace.append(StepRecord(7, m, "Z1", f"dependent_on={partner}"))
            else:
                z5.append(m)
                trace.append(StepRecord(7, m, "Z5", "independent of all known confounders"))
    close_step("step_7")

    # Step 8: the instrument separation check. Any instrument separable from
    # the outcome given the exposure plus the discovered confounders
    # certifies the confounder set as a valid adjustment set.
    vas: Optional[tuple[str, ...]] = None
    z5_passed = False
    if z5:
        cond = (x,) + tuple(z1)
        separator = None
        for s in z5:
            if ind(s, y, cond):
                separator = separator or s
        z5_passed = separator is not None
        if z5_passed:
            vas = tuple(sorted(z1, key=order.__getitem__))
            trace.append(StepRecord(8, separator, "VAS", "separated from outcome"))
        else:
            warnings.append(WARN_CRITERION_FAILED)
    else:
        warnings.append(WARN_NO_INSTRUMENT)
    close_step("step_8")

    labels: dict[str, PartitionLabel] = {}
    leftover57 = [] if (z15 or z1) else [m for m in z57 if m not in promoted]
    assignment = [
        (z8, PartitionLabel.Z8),
        (z4, PartitionLabel.Z4),
        (z1, PartitionLabel.Z1),
        (z5, PartitionLabel.Z5),
        (z7, PartitionLabel.Z7),
        (zpost, PartitionLabel.Z_POST),
        (leftover57, PartitionLabel.Z57),
    ]
    for group, label in assignment:
        for v in group:
            labels[v] = label
    for v in candidates:
        if v not in labels:
            labels[v] = PartitionLabel.NOT_IDENTIFIABLE
            trace.append(StepRecord(8, v, "NotIdentifiable"))

    return LdpResult(
        labels=labels,
        vas=vas,
        z5_criterion_passed=z5_passed,
        counters=t.counters,
        step_trace=tuple(trace),
        warnings=tuple(warnings),
        step_tests=step_tests,
        candidates=tuple(candidates),
        exposure=x,
        outcome=y,
    )


def select_covariates(
    result: LdpResult, criterion: SelectionCriterion | str
) -> tuple[str, ...]:
    """Covariates retained under a selection criterion, in candidate order."""
    criterion = SelectionCriterion(criterion)
    wanted = _CRITERION_LABELS[criterion]
    return tuple(v for v in result.candidates if result.labels[v] in wanted)
