"""The five online allocation engines behind one uniform interface.

Randomized engines (rank-based matching, the single-valued rule, and the
fake-money general rule) consume an :class:`Instance` and a
:class:`RankAssignment`; the deterministic baselines (greedy, balance-
style bid scaling) take no randomness.  All produce a :class:`RunOutcome`
with optional per-step tracing.

The randomized engines are budget-oblivious by construction: the bid
selection loop only ever asks a ledger "is bidder j still available" and
never reads budget magnitudes.  Ties in effective bids break by lowest
bidder id (adjacency lists are stored in id order, and comparisons are
strict), which keeps runs and audits reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .instance import Instance, ProblemClass

ONE_MINUS_1_OVER_E = 1.0 - 1.0 / math.e


class ClassMismatchError(ValueError):
    """Engine invoked on an instance of the wrong problem class."""


@dataclass(frozen=True)
class RankAssignment:
    """One draw of per-bidder ranks w in [0,1] and prices exp(w-1).

    The sole source of randomness per run; ``seed`` records provenance
    (None for injected ranks).
    """

    ranks: dict[int, float]  # bidder id -> w
    prices: dict[int, float]  # bidder id -> exp(w - 1)
    seed: Optional[tuple[int, ...]] = None

    @staticmethod
    def from_ranks(ranks: dict[int, float], seed=None) -> "RankAssignment":
        for j, w in ranks.items():
            if not (0.0 <= w <= 1.0):
                raise ValueError(f"rank for bidder {j} outside [0,1]: {w}")
        prices = {j: float(np.exp(np.float64(w) - 1.0)) for j, w in ranks.items()}
        return RankAssignment(dict(ranks), prices, seed)


def draw_ranks(instance: Instance, seed) -> RankAssignment:
    """One uniform rank per bidder, deterministic in the seed.

    ``seed`` may be an int or a sequence of ints (the harness derives
    per-trial seeds as (master_seed, trial_index)).
    """
    rng = np.random.default_rng(seed)
    w = rng.random(instance.num_bidders)
    ranks = {b.id: float(w[t]) for t, b in enumerate(instance.bidders)}
    prices = {
        b.id: float(np.exp(w[t] - 1.0)) for t, b in enumerate(instance.bidders)
    }
    if isinstance(seed, int):
        seed = (seed,)
    return RankAssignment(ranks, prices, tuple(seed) if seed is not None else None)


@dataclass
class TraceStep:
    """State at one arrival: available copies of every bidder, the bids
    offered to the query, and the accepted bidder (if any)."""

    query: int
    available: dict[int, int]  # bidder id -> copies (leftover units)
    offers: list[tuple[int, float]]  # (bidder id, effective bid)
    accepted: Optional[int]


@dataclass
class RunTrace:
    steps: list[TraceStep] = field(default_factory=list)


@dataclass
class RunOutcome:
    matching: list[tuple[int, int, int]]  # (query, bidder, weight)
    u: list[float]  # per-query utility, 0 if unmatched
    r: dict[int, float]  # per-bidder revenue, 0 if never matched
    W: int  # real money
    Wf: int  # fake money
    leftover: dict[int, int]  # per-bidder leftover units (budget or bid slots)
    trace: Optional[RunTrace] = None

    def matched_bidders(self) -> set[int]:
        return {j for _, j, _ in self.matching}

    def matching_pairs(self) -> set[tuple[int, int]]:
        return {(q, j) for q, j, _ in self.matching}

    def to_dict(self) -> dict:
        return {
            "matching": [[q, j, w] for q, j, w in self.matching],
            "W": self.W,
            "Wf": self.Wf,
            "u": list(self.u),
            "r": [self.r[j] for j in sorted(self.r)],
        }


class AvailabilityLedger:
    """Tracks per-bidder capacity.  The bid-selection loop may only call
    :meth:`available`; :meth:`charge` settles an accepted match and
    :meth:`copies` exists for trace recording only."""

    def __init__(self, capacity: dict[int, int], unit_charge: bool):
        self._left = dict(capacity)
        self._unit = unit_charge

    def available(self, bidder_id: int) -> bool:
        return self._left[bidder_id] > 0

    def charge(self, bidder_id: int, bid: int) -> tuple[int, int]:
        """Settle a match; returns (real, fake) money moved."""
        if self._unit:
            self._left[bidder_id] -= 1
            return bid, 0
        pay = min(self._left[bidder_id], bid)
        self._left[bidder_id] -= pay
        return pay, bid - pay

    def copies(self, bidder_id: int) -> int:
        return self._left[bidder_id]

    def snapshot(self) -> dict[int, int]:
        return dict(self._left)


def _run_priced(
    instance: Instance,
    ranks: RankAssignment,
    unit_charge: bool,
    capacity: dict[int, int],
    trace: bool,
    ledger: Optional[AvailabilityLedger] = None,
) -> RunOutcome:
    prices = ranks.prices
    if ledger is None:
        ledger = AvailabilityLedger(capacity, unit_charge)
    n = instance.num_queries
    u = [0.0] * n
    r = {b.id: 0.0 for b in instance.bidders}
    matching: list[tuple[int, int, int]] = []
    W = 0
    Wf = 0
    run_trace = RunTrace() if trace else None

    for i in range(n):
        best = -1
        best_val = 0.0
        best_bid = 0
        offers: list[tuple[int, float]] = []
        for j, bid in instance.edges[i]:
            if ledger.available(j):
                val = bid * (1.0 - prices[j])
                if trace:
                    offers.append((j, val))
                if best < 0 or val > best_val:
                    best, best_val, best_bid = j, val, bid
        if trace:
            avail = {
                b.id: ledger.copies(b.id)
                for b in instance.bidders
                if ledger.copies(b.id) > 0
            }
        if best >= 0:
            p = prices[best]
            u[i] = best_bid * (1.0 - p)
            r[best] += best_bid * p
            real, fake = ledger.charge(best, best_bid)
            W += real
            Wf += fake
            matching.append((i, best, best_bid))
        if trace:
            run_trace.steps.append(
                TraceStep(i, avail, offers, best if best >= 0 else None)
            )

    return RunOutcome(matching, u, r, W, Wf, ledger.snapshot(), run_trace)


# -- randomized engines --------------------------------------------------


def run_ranking(
    instance: Instance,
    ranks: RankAssignment,
    trace: bool = False,
    ledger: Optional[AvailabilityLedger] = None,
) -> RunOutcome:
    """Rank-based matching, price form: each buyer takes the cheapest
    available liked good; on a match u = 1 - p and r = p."""
    if instance.problem_class is not ProblemClass.OBM:
        raise ClassMismatchError("run_ranking requires an OBM instance")
    cap = {b.id: 1 for b in instance.bidders}
    return _run_priced(instance, ranks, True, cap, trace, ledger)


def run_ranking_permutation(instance: Instance, permutation) -> RunOutcome:
    """Rank-based matching, permutation form: each buyer takes the first
    unmatched liked good in the fixed order.  Carries no prices, so u and
    r are left at zero and only the matching is meaningful."""
    if instance.problem_class is not ProblemClass.OBM:
        raise ClassMismatchError("run_ranking_permutation requires an OBM instance")
    order = {j: t for t, j in enumerate(permutation)}
    matched: set[int] = set()
    matching = []
    for i in range(instance.num_queries):
        cands = [j for j, _ in instance.edges[i] if j not in matched]
        if cands:
            j = min(cands, key=lambda j: order[j])
            matched.add(j)
            matching.append((i, j, 1))
    n = instance.num_queries
    return RunOutcome(
        matching,
        [0.0] * n,
        {b.id: 0.0 for b in instance.bidders},
        len(matching),
        0,
        {b.id: 0 if b.id in matched else 1 for b in instance.bidders},
        None,
    )


def run_single_valued(
    instance: Instance,
    ranks: RankAssignment,
    trace: bool = False,
    ledger: Optional[AvailabilityLedger] = None,
) -> RunOutcome:
    """Single-valued rule: bidder j is available while matched fewer than
    k_j times; offers b_j*(1-p_j); the largest effective bid wins."""
    if instance.problem_class is not ProblemClass.SINGLE_VALUED:
        raise ClassMismatchError("run_single_valued requires a single_valued instance")
    cap = {b.id: b.k for b in instance.bidders}
    return _run_priced(instance, ranks, True, cap, trace, ledger)


def run_general(
    instance: Instance,
    ranks: RankAssignment,
    trace: bool = False,
    ledger: Optional[AvailabilityLedger] = None,
) -> RunOutcome:
    """Fake-money rule for general instances: bidder j is available while
    any budget is left; offers bid*(1-p_j); on accept the shortfall past
    the leftover budget is paid in fake money (tracked in Wf)."""
    if instance.problem_class is not ProblemClass.GENERAL:
        raise ClassMismatchError("run_general requires a general instance")
    cap = {b.id: b.budget for b in instance.bidders}
    return _run_priced(instance, ranks, False, cap, trace, ledger)


# -- deterministic baselines ---------------------------------------------


def run_greedy(instance: Instance) -> RunOutcome:
    """Deterministic baseline: each query goes to the available bidder
    with the highest (raw) bid, paying min(leftover, bid); no fake money.
    Ties break by lowest bidder id."""
    left = {b.id: b.budget for b in instance.bidders}
    n = instance.num_queries
    matching = []
    r = {b.id: 0.0 for b in instance.bidders}
    W = 0
    for i in range(n):
        best = -1
        best_bid = 0
        for j, bid in instance.edges[i]:
            if left[j] > 0 and bid > best_bid:
                best, best_bid = j, bid
        if best >= 0:
            pay = min(left[best], best_bid)
            left[best] -= pay
            W += pay
            r[best] += pay
            matching.append((i, best, pay))
    return RunOutcome(matching, [0.0] * n, r, W, 0, left, None)


def msvv_discount(spent_fraction: float) -> float:
    """Trade-off function 1 - e^{-(1-f)} for spent fraction f."""
    return 1.0 - math.exp(-(1.0 - spent_fraction))


def run_msvv(instance: Instance) -> RunOutcome:
    """Deterministic bid-scaling baseline: each query goes to the
    available bidder maximizing bid * discount(spent fraction); pays
    min(leftover, bid); no fake money."""
    budgets = {b.id: b.budget for b in instance.bidders}
    left = dict(budgets)
    n = instance.num_queries
    matching = []
    r = {b.id: 0.0 for b in instance.bidders}
    W = 0
    for i in range(n):
        best = -1
        best_score = 0.0
        best_bid = 0
        for j, bid in instance.edges[i]:
            if left[j] > 0:
                f = (budgets[j] - left[j]) / budgets[j]
                score = bid * msvv_discount(f)
                if best < 0 or score > best_score:
                    best, best_score, best_bid = j, score, bid
        if best >= 0:
            pay = min(left[best], best_bid)
            left[best] -= pay
            W += pay
            r[best] += pay
            matching.append((i, best, pay))
    return RunOutcome(matching, [0.0] * n, r, W, 0, left, None)


# -- dispatch ------------------------------------------------------------

RANDOMIZED_ALGORITHMS = ("ranking", "single_valued", "general")
DETERMINISTIC_ALGORITHMS = ("greedy", "msvv")
ALGORITHMS = RANDOMIZED_ALGORITHMS + DETERMINISTIC_ALGORITHMS

_CLASS_ENGINE = {
    ProblemClass.OBM: run_ranking,
    ProblemClass.SINGLE_VALUED: run_single_valued,
    ProblemClass.GENERAL: run_general,
}


def run_for_class(
    instance: Instance, ranks: RankAssignment, trace: bool = False
) -> RunOutcome:
    """The class-appropriate randomized engine."""
    return _CLASS_ENGINE[instance.problem_class](instance, ranks, trace=trace)


def run_algorithm(
    instance: Instance,
    algorithm: str,
    ranks: Optional[RankAssignment] = None,
    trace: bool = False,
) -> RunOutcome:
    if algorithm == "greedy":
        return run_greedy(instance)
    if algorithm == "msvv":
        if instance.problem_class is not ProblemClass.GENERAL:
            raise ClassMismatchError("msvv requires a general instance")
        return run_msvv(instance)
    if ranks is None:
        raise ValueError(f"algorithm {algorithm!r} needs a rank assignment")
    if algorithm == "ranking":
        return run_ranking(instance, ranks, trace=trace)
    if algorithm == "single_valued":
        return run_single_valued(instance, ranks, trace=trace)
    if algorithm == "general":
        return run_general(instance, ranks, trace=trace)
    raise ValueError(f"unknown algorithm {algorithm!r}")
