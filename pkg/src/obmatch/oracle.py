"""Offline optima for competitive-ratio denominators.

Exact maximum matching for OBM (augmenting paths), exact max-weight
b-matching for single-valued instances (integer min-cost flow), exact
branch-and-bound for small general instances, cheap upper bounds, and
planted-solution certificates.  All arithmetic on money is integer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import networkx as nx

from .instance import Instance, ProblemClass


class OptKind(str, enum.Enum):
    EXACT = "exact"
    UPPER_BOUND = "upper_bound"
    PLANTED_CERTIFICATE = "planted_certificate"


class NodeLimitExceeded(RuntimeError):
    """Branch-and-bound gave up; callers should fall back to bounds."""


@dataclass(frozen=True)
class OfflineOptimum:
    value: int
    kind: OptKind
    witness: Optional[tuple[tuple[int, int], ...]] = None  # (query, bidder)

    def to_dict(self) -> dict:
        out = {"value": self.value, "kind": self.kind.value}
        if self.witness is not None:
            out["witness"] = [[q, j] for q, j in self.witness]
        return out


def _witness_value(instance: Instance, witness) -> int:
    return sum(instance.bid(q, j) for q, j in witness)


def _check_witness(instance: Instance, witness) -> None:
    spend: dict[int, int] = {}
    seen = set()
    for q, j in witness:
        assert q not in seen, f"witness reuses query {q}"
        seen.add(q)
        spend[j] = spend.get(j, 0) + instance.bid(q, j)
    for j, s in spend.items():
        assert s <= instance.bidder_by_id(j).budget, f"witness overspends bidder {j}"


def opt_obm(instance: Instance) -> OfflineOptimum:
    """Exact maximum-cardinality matching by repeated augmenting paths."""
    if instance.problem_class is not ProblemClass.OBM:
        raise ValueError("opt_obm requires an OBM instance")
    match_good: dict[int, int] = {}  # good -> query

    def try_augment(i: int, visited: set[int]) -> bool:
        for j, _ in instance.edges[i]:
            if j in visited:
                continue
            visited.add(j)
            if j not in match_good or try_augment(match_good[j], visited):
                match_good[j] = i
                return True
        return False

    for i in range(instance.num_queries):
        try_augment(i, set())
    witness = tuple(sorted((q, j) for j, q in match_good.items()))
    _check_witness(instance, witness)
    return OfflineOptimum(len(witness), OptKind.EXACT, witness)


def opt_single_valued(instance: Instance) -> OfflineOptimum:
    """Exact max-weight b-matching via integer min-cost flow.

    Queries have capacity 1, bidder j capacity k_j, edge weight b_j; a
    zero-cost bypass arc makes leaving a query unmatched free, so the
    min-cost max-flow maximizes total matched weight.
    """
    if instance.problem_class is not ProblemClass.SINGLE_VALUED:
        raise ValueError("opt_single_valued requires a single_valued instance")
    g = nx.DiGraph()
    n = instance.num_queries
    for i in range(n):
        g.add_edge("s", ("q", i), capacity=1, weight=0)
        for j, bid in instance.edges[i]:
            g.add_edge(("q", i), ("b", j), capacity=1, weight=-bid)
    for b in instance.bidders:
        g.add_edge(("b", b.id), "t", capacity=b.k, weight=0)
    g.add_edge("s", "t", capacity=n, weight=0)
    flow = nx.max_flow_min_cost(g, "s", "t")
    witness = []
    for i in range(n):
        for j, f in flow.get(("q", i), {}).items():
            if f > 0:
                witness.append((i, j[1]))
    witness = tuple(sorted(witness))
    _check_witness(instance, witness)
    return OfflineOptimum(_witness_value(instance, witness), OptKind.EXACT, witness)


def opt_general_bound(instance: Instance) -> OfflineOptimum:
    """Upper bound min(sum of budgets, sum of per-query max bids)."""
    per_query = sum(
        max((b for _, b in adj), default=0) for adj in instance.edges
    )
    return OfflineOptimum(min(instance.total_budget(), per_query), OptKind.UPPER_BOUND)


def opt_general_exact(instance: Instance, node_limit: int = 2_000_000) -> OfflineOptimum:
    """Exact optimum for small general instances by branch-and-bound.

    Branches over query -> bidder assignments (or skip) in arrival order;
    prunes with min(sum of remaining max bids, sum of leftover budgets).
    Raises :class:`NodeLimitExceeded` past ``node_limit`` nodes.
    """
    if instance.problem_class is not ProblemClass.GENERAL:
        raise ValueError("opt_general_exact requires a general instance")
    n = instance.num_queries
    left = {b.id: b.budget for b in instance.bidders}
    # suffix_max[i] = sum over queries >= i of their largest bid
    suffix_max = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_max[i] = suffix_max[i + 1] + max(
            (b for _, b in instance.edges[i]), default=0
        )

    best_value = 0
    best_witness: list[tuple[int, int]] = []
    nodes = 0

    def recurse(i: int, value: int, chosen: list[tuple[int, int]]):
        nonlocal best_value, best_witness, nodes
        nodes += 1
        if nodes > node_limit:
            raise NodeLimitExceeded(f"node limit {node_limit} exceeded")
        if value > best_value:
            best_value = value
            best_witness = list(chosen)
        if i == n:
            return
        if value + min(suffix_max[i], sum(left.values())) <= best_value:
            return
        options = sorted(
            (b for b in instance.edges[i] if b[1] <= left[b[0]]),
            key=lambda jb: -jb[1],
        )
        for j, bid in options:
            left[j] -= bid
            chosen.append((i, j))
            recurse(i + 1, value + bid, chosen)
            chosen.pop()
            left[j] += bid
        recurse(i + 1, value, chosen)  # leave query i unmatched

    recurse(0, 0, [])
    witness = tuple(sorted(best_witness))
    _check_witness(instance, witness)
    assert _witness_value(instance, witness) == best_value
    return OfflineOptimum(best_value, OptKind.EXACT, witness)


def planted_certificate(instance: Instance) -> Optional[OfflineOptimum]:
    """Certified optimum from the planted solution, when it is tight.

    A planted assignment is a lower-bound witness; it certifies the
    optimum exactly when its value meets an upper bound (for general and
    single-valued: the total budget; for OBM: the number of queries or
    goods).
    """
    value = instance.planted_value()
    if value is None:
        return None
    if instance.problem_class is ProblemClass.OBM:
        bound = min(instance.num_queries, instance.num_bidders)
    else:
        bound = opt_general_bound(instance).value
    if value != bound:
        return None
    witness = tuple(sorted(instance.planted_opt.assignment))
    _check_witness(instance, witness)
    return OfflineOptimum(value, OptKind.PLANTED_CERTIFICATE, witness)


def offline_optimum(
    instance: Instance, node_limit: int = 2_000_000, allow_bound: bool = False
) -> OfflineOptimum:
    """Best available denominator: planted certificate, else exact solve,
    else (with ``allow_bound``) the cheap upper bound."""
    cert = planted_certificate(instance)
    if cert is not None:
        return cert
    if instance.problem_class is ProblemClass.OBM:
        return opt_obm(instance)
    if instance.problem_class is ProblemClass.SINGLE_VALUED:
        return opt_single_valued(instance)
    try:
        return opt_general_exact(instance, node_limit)
    except NodeLimitExceeded:
        if allow_bound:
            return opt_general_bound(instance)
        raise
