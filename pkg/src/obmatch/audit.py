"""Run-vs-removal auditing: thresholds, multiset lemmas, no-surpassing.

For a fixed rank draw, the full run R is compared against the runs R_j
obtained by deleting one bidder j (ranks unchanged for survivors).  From
those traces we extract per-edge thresholds, check the multiset
containment facts relating available bidders across the two runs, and
hunt for violations of the no-surpassing property - the open empirical
question for general instances (it provably never fails for OBM and
single-valued ones, which the same checks confirm statistically).
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .engines import (
    ONE_MINUS_1_OVER_E,
    RankAssignment,
    RunOutcome,
    run_for_class,
)
from .instance import Instance, ProblemClass

# Guard against float rounding at decision boundaries; all quantities
# compared are products of the same price values, so this is generous.
EPS = 1e-12


@dataclass(frozen=True)
class RemovalRun:
    removed: int
    outcome: RunOutcome


def run_with_removal(instance: Instance, ranks: RankAssignment, j: int) -> RemovalRun:
    """Run the class-appropriate engine on the instance minus bidder j,
    under the same ranks, with a full trace."""
    sub = instance.without_bidder(j)
    return RemovalRun(j, run_for_class(sub, ranks, trace=True))


def edge_effective_bid(instance: Instance, ranks: RankAssignment, i: int, j: int) -> float:
    return instance.bid(i, j) * (1.0 - ranks.prices[j])


def threshold_cap(instance: Instance, i: int, j: int) -> float:
    """Truncation cap for edge (i, j): bid * (1 - 1/e); for OBM this is
    just 1 - 1/e and the threshold needs no truncation."""
    return instance.bid(i, j) * ONE_MINUS_1_OVER_E


@dataclass(frozen=True)
class ThresholdRow:
    query: int
    bidder: int
    u_removal: float  # utility of the query in the removal run
    u_e: float  # threshold (truncated for budgeted classes)


def thresholds(
    instance: Instance, ranks: RankAssignment, j: int, removal: Optional[RemovalRun] = None
) -> list[ThresholdRow]:
    """Threshold rows for every edge incident to bidder j."""
    if removal is None:
        removal = run_with_removal(instance, ranks, j)
    rows = []
    for i in range(instance.num_queries):
        if j in instance.neighbors(i):
            ut = removal.outcome.u[i]
            if instance.problem_class is ProblemClass.OBM:
                u_e = ut
            else:
                u_e = min(ut, threshold_cap(instance, i, j))
            rows.append(ThresholdRow(i, j, ut, u_e))
    return rows


# -- no-surpassing -------------------------------------------------------


@dataclass(frozen=True)
class NoSurpassViolation:
    query: int
    bidder: int
    ebid: float  # the removed bidder's effective bid to the query
    beta: float  # best effective bid the query saw in the removal run
    surpassing_bid: float  # offending offer in the full run
    surpassing_bidder: int


@dataclass
class NoSurpassStats:
    edges_tested: int = 0
    antecedent_true: int = 0
    violations: list[NoSurpassViolation] = field(default_factory=list)

    @property
    def violation_count(self) -> int:
        return len(self.violations)

    def rates(self, num_queries: int) -> dict:
        """Per-edge, per-query and per-run violation rates; "rare" can
        reasonably mean any of the three, so all are reported."""
        bad_queries = {v.query for v in self.violations}
        return {
            "per_edge": self.violation_count / self.edges_tested
            if self.edges_tested
            else 0.0,
            "per_query": len(bad_queries) / num_queries if num_queries else 0.0,
            "per_run": 1.0 if self.violations else 0.0,
        }


def check_no_surpassing(
    instance: Instance,
    ranks: RankAssignment,
    full_run: Optional[RunOutcome] = None,
    removals: Optional[dict[int, RemovalRun]] = None,
) -> NoSurpassStats:
    """For every edge (i, j): if j's effective bid to i beats everything
    i saw in the removal run R_j, record a violation iff some offer to i
    in the full run strictly exceeds j's effective bid."""
    if full_run is None:
        full_run = run_for_class(instance, ranks, trace=True)
    stats = NoSurpassStats()
    offers_full = [step.offers for step in full_run.trace.steps]
    for bidder in instance.bidders:
        j = bidder.id
        removal = (removals or {}).get(j) or run_with_removal(instance, ranks, j)
        offers_rj = [step.offers for step in removal.outcome.trace.steps]
        for i in range(instance.num_queries):
            if j not in instance.neighbors(i):
                continue
            stats.edges_tested += 1
            ebid = edge_effective_bid(instance, ranks, i, j)
            beta = max((v for _, v in offers_rj[i]), default=0.0)
            if ebid > beta + EPS:
                stats.antecedent_true += 1
                for other, v in offers_full[i]:
                    if v > ebid + EPS:
                        stats.violations.append(
                            NoSurpassViolation(i, j, ebid, beta, v, other)
                        )
                        break
    return stats


# -- multiset lemmas -----------------------------------------------------


def _initial_copies(instance: Instance) -> dict[int, int]:
    if instance.problem_class is ProblemClass.OBM:
        return {b.id: 1 for b in instance.bidders}
    if instance.problem_class is ProblemClass.SINGLE_VALUED:
        return {b.id: b.k for b in instance.bidders}
    return {b.id: b.budget for b in instance.bidders}


def _split_sets(instance: Instance, ranks: RankAssignment, j: int):
    """F1/F2 per the class-appropriate definition: copies of bidders with
    strictly better / strictly worse standing than j.  Single-valued
    compares effective bids b_l(1-p_l); OBM and general compare prices."""
    copies = _initial_copies(instance)
    f1: Counter = Counter()
    f2: Counter = Counter()
    if instance.problem_class is ProblemClass.SINGLE_VALUED:
        key_j = instance.bidder_by_id(j).b * (1.0 - ranks.prices[j])
        for b in instance.bidders:
            if b.id == j:
                continue
            key = b.b * (1.0 - ranks.prices[b.id])
            if key > key_j:
                f1[b.id] = copies[b.id]
            elif key < key_j:
                f2[b.id] = copies[b.id]
    else:
        p_j = ranks.prices[j]
        for b in instance.bidders:
            if b.id == j:
                continue
            p = ranks.prices[b.id]
            if p < p_j:
                f1[b.id] = copies[b.id]
            elif p > p_j:
                f2[b.id] = copies[b.id]
    return f1, f2


def _cap_counter(avail: dict[int, int], f: Counter) -> Counter:
    return Counter({k: min(avail.get(k, 0), c) for k, c in f.items() if min(avail.get(k, 0), c) > 0})


def _contains(a: Counter, b: Counter) -> bool:
    """a <= b as multisets."""
    return all(b.get(k, 0) >= c for k, c in a.items())


@dataclass(frozen=True)
class MultisetVerdict:
    step: int
    removed: int
    f1_equal: bool
    f2_subset: bool
    s_subset: bool

    @property
    def ok(self) -> bool:
        return self.f1_equal and self.f2_subset and self.s_subset


def check_multiset_lemmas(
    instance: Instance,
    ranks: RankAssignment,
    j: int,
    full_run: Optional[RunOutcome] = None,
    removal: Optional[RemovalRun] = None,
) -> list[MultisetVerdict]:
    """At every arrival step, with T / T_j the available-copy multisets
    of the two runs: T_j ^ F1 == T ^ F1, T_j ^ F2 <= T ^ F2, and the
    neighbor restrictions satisfy S_j <= S."""
    if full_run is None:
        full_run = run_for_class(instance, ranks, trace=True)
    if removal is None:
        removal = run_with_removal(instance, ranks, j)
    f1, f2 = _split_sets(instance, ranks, j)
    verdicts = []
    for i in range(instance.num_queries):
        t_full = full_run.trace.steps[i].available
        t_rem = removal.outcome.trace.steps[i].available
        f1_equal = _cap_counter(t_rem, f1) == _cap_counter(t_full, f1)
        f2_subset = _contains(_cap_counter(t_rem, f2), _cap_counter(t_full, f2))
        nbrs = set(instance.neighbors(i))
        s_full = Counter({k: c for k, c in t_full.items() if k in nbrs})
        s_rem = Counter({k: c for k, c in t_rem.items() if k in nbrs and k != j})
        s_subset = _contains(s_rem, s_full)
        verdicts.append(MultisetVerdict(i, j, f1_equal, f2_subset, s_subset))
    return verdicts


# -- threshold dominance -------------------------------------------------


@dataclass(frozen=True)
class DominanceVerdict:
    query: int
    bidder: int
    u_full: float
    u_e: float
    dominance_ok: bool  # u_i in the full run >= threshold
    matched_when_cheap_ok: bool  # OBM only; vacuously true otherwise


def check_threshold_dominance(
    instance: Instance,
    ranks: RankAssignment,
    full_run: Optional[RunOutcome] = None,
    removals: Optional[dict[int, RemovalRun]] = None,
) -> list[DominanceVerdict]:
    """Per edge (i, j): the query's utility in the full run dominates the
    threshold; for OBM additionally, whenever p_j < 1 - u_e the removed
    good is matched in the full run."""
    if full_run is None:
        full_run = run_for_class(instance, ranks, trace=True)
    matched = full_run.matched_bidders()
    verdicts = []
    for bidder in instance.bidders:
        j = bidder.id
        removal = (removals or {}).get(j) or run_with_removal(instance, ranks, j)
        for row in thresholds(instance, ranks, j, removal):
            u_full = full_run.u[row.query]
            dom_ok = u_full >= row.u_e - EPS
            cheap_ok = True
            if instance.problem_class is ProblemClass.OBM:
                if ranks.prices[j] < 1.0 - row.u_e - EPS:
                    cheap_ok = j in matched
            verdicts.append(
                DominanceVerdict(row.query, j, u_full, row.u_e, dom_ok, cheap_ok)
            )
    return verdicts


# -- assembled report ----------------------------------------------------


@dataclass
class AuditReport:
    instance_class: str
    seed: Optional[tuple[int, ...]]
    no_surpass: NoSurpassStats
    multiset_verdicts: list[MultisetVerdict]
    dominance_verdicts: list[DominanceVerdict]
    num_queries: int

    @property
    def multiset_ok(self) -> bool:
        return all(v.ok for v in self.multiset_verdicts)

    @property
    def dominance_ok(self) -> bool:
        return all(v.dominance_ok and v.matched_when_cheap_ok for v in self.dominance_verdicts)

    def to_dict(self) -> dict:
        return {
            "class": self.instance_class,
            "seed": list(self.seed) if self.seed is not None else None,
            "edges_tested": self.no_surpass.edges_tested,
            "antecedent_true": self.no_surpass.antecedent_true,
            "violations": [
                {
                    "query": v.query,
                    "bidder": v.bidder,
                    "ebid": v.ebid,
                    "beta": v.beta,
                    "surpassing_bid": v.surpassing_bid,
                    "surpassing_bidder": v.surpassing_bidder,
                }
                for v in self.no_surpass.violations
            ],
            "violation_rates": self.no_surpass.rates(self.num_queries),
            "multiset_ok": self.multiset_ok,
            "multiset_failures": [
                {"step": v.step, "removed": v.removed}
                for v in self.multiset_verdicts
                if not v.ok
            ],
            "dominance_ok": self.dominance_ok,
            "dominance_failures": [
                {"query": v.query, "bidder": v.bidder}
                for v in self.dominance_verdicts
                if not (v.dominance_ok and v.matched_when_cheap_ok)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    def violations_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(
            ["seed", "query", "bidder", "ebid", "beta", "surpassing_bid", "surpassing_bidder"]
        )
        seed = ":".join(map(str, self.seed)) if self.seed is not None else ""
        for v in self.no_surpass.violations:
            writer.writerow(
                [seed, v.query, v.bidder, repr(v.ebid), repr(v.beta), repr(v.surpassing_bid), v.surpassing_bidder]
            )
        return buf.getvalue()


def audit(
    instance: Instance,
    ranks: RankAssignment,
    checks: tuple[str, ...] = ("no_surpass", "multiset", "dominance"),
) -> AuditReport:
    """Run R once and R_j for every bidder, then apply the selected
    checks.  Deterministic: equal (instance, ranks) gives an identical
    report."""
    full_run = run_for_class(instance, ranks, trace=True)
    removals = {
        b.id: run_with_removal(instance, ranks, b.id) for b in instance.bidders
    }
    ns = (
        check_no_surpassing(instance, ranks, full_run, removals)
        if "no_surpass" in checks
        else NoSurpassStats()
    )
    ms: list[MultisetVerdict] = []
    if "multiset" in checks:
        for b in instance.bidders:
            ms.extend(
                check_multiset_lemmas(instance, ranks, b.id, full_run, removals[b.id])
            )
    dom = (
        check_threshold_dominance(instance, ranks, full_run, removals)
        if "dominance" in checks
        else []
    )
    return AuditReport(
        instance.problem_class.value,
        ranks.seed,
        ns,
        ms,
        dom,
        instance.num_queries,
    )
