"""Problem instances: data model, validation, generators, and file I/O.

An instance is a bipartite market: queries arrive online in index order
(the arrival order is fixed when the instance is built), bidders sit
offline with integer budgets, and every edge carries a positive integer
bid.  Three problem classes are supported:

- ``obm``: all bids and budgets are 1 (online bipartite matching),
- ``single_valued``: bidder ``j`` bids a single value ``b_j`` and can win
  at most ``k_j`` queries, with budget ``B_j = k_j * b_j``,
- ``general``: arbitrary per-edge bids with ``bid <= B_j``.

Money is exact integer arithmetic throughout this module.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np


class ProblemClass(str, enum.Enum):
    OBM = "obm"
    SINGLE_VALUED = "single_valued"
    GENERAL = "general"


@dataclass(frozen=True)
class Bidder:
    """One offline bidder. ``b`` and ``k`` are set for single-valued only."""

    id: int
    budget: int
    b: Optional[int] = None
    k: Optional[int] = None


@dataclass(frozen=True)
class PlantedSolution:
    """A feasibility witness: a partial assignment query -> bidder.

    The value is the sum of the assigned bids; generators that plant a
    budget-exhausting solution certify the offline optimum this way.
    """

    assignment: tuple[tuple[int, int], ...]  # (query, bidder) pairs

    def as_dict(self) -> dict[int, int]:
        return dict(self.assignment)


@dataclass(frozen=True)
class Instance:
    problem_class: ProblemClass
    num_queries: int
    bidders: tuple[Bidder, ...]
    edges: tuple[tuple[tuple[int, int], ...], ...]  # per query: ((bidder_id, bid), ...)
    planted_opt: Optional[PlantedSolution] = None

    def __post_init__(self):
        # Normalize adjacency to bidder-id order; engines break effective-bid
        # ties by lowest bidder id, so iteration order must be canonical.
        bidders = tuple(self.bidders)
        edges = tuple(tuple(sorted((int(j), int(b)) for j, b in adj)) for adj in self.edges)
        object.__setattr__(self, "bidders", bidders)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "problem_class", ProblemClass(self.problem_class))

    # -- basic accessors -------------------------------------------------

    @property
    def num_bidders(self) -> int:
        return len(self.bidders)

    def bidder_by_id(self, bidder_id: int) -> Bidder:
        for b in self.bidders:
            if b.id == bidder_id:
                return b
        raise KeyError(f"unknown bidder id {bidder_id}")

    def bid(self, query: int, bidder_id: int) -> int:
        for j, b in self.edges[query]:
            if j == bidder_id:
                return b
        raise KeyError(f"no edge ({query}, {bidder_id})")

    def neighbors(self, query: int) -> list[int]:
        return [j for j, _ in self.edges[query]]

    def edge_list(self) -> list[tuple[int, int, int]]:
        """All edges as (query, bidder_id, bid)."""
        return [(i, j, b) for i in range(self.num_queries) for j, b in self.edges[i]]

    def planted_value(self) -> Optional[int]:
        if self.planted_opt is None:
            return None
        return sum(self.bid(q, j) for q, j in self.planted_opt.assignment)

    def total_budget(self) -> int:
        return sum(b.budget for b in self.bidders)

    def without_bidder(self, bidder_id: int) -> "Instance":
        """The instance with one bidder (and its edges) removed.

        The number of queries is unchanged, so step indices of a run on
        the reduced instance line up with the original run.
        """
        self.bidder_by_id(bidder_id)  # raise on unknown id
        return Instance(
            problem_class=self.problem_class,
            num_queries=self.num_queries,
            bidders=tuple(b for b in self.bidders if b.id != bidder_id),
            edges=tuple(
                tuple((j, b) for j, b in adj if j != bidder_id) for adj in self.edges
            ),
            planted_opt=None,
        )


# -- validation ----------------------------------------------------------


def validate(instance: Instance) -> list[str]:
    """Return all invariant violations; an empty list means well-formed.

    Violations are data, not faults: malformed instances never raise.
    """
    v: list[str] = []
    ids = [b.id for b in instance.bidders]
    if len(set(ids)) != len(ids):
        v.append("duplicate bidder ids")
    id_set = set(ids)
    budgets = {b.id: b.budget for b in instance.bidders}

    for b in instance.bidders:
        if b.budget < 1:
            v.append(f"bidder {b.id}: budget {b.budget} < 1")

    if len(instance.edges) != instance.num_queries:
        v.append(
            f"edges list has {len(instance.edges)} entries for {instance.num_queries} queries"
        )

    for i, adj in enumerate(instance.edges):
        seen = set()
        for j, bid in adj:
            if j not in id_set:
                v.append(f"query {i}: edge to unknown bidder {j}")
                continue
            if j in seen:
                v.append(f"query {i}: duplicate edge to bidder {j}")
            seen.add(j)
            if bid < 1:
                v.append(f"query {i}, bidder {j}: bid {bid} is not a positive integer")
            elif bid > budgets[j]:
                v.append(f"query {i}, bidder {j}: bid {bid} exceeds budget {budgets[j]}")

    if instance.problem_class is ProblemClass.OBM:
        for b in instance.bidders:
            if b.budget != 1:
                v.append(f"bidder {b.id}: OBM budgets must be 1")
        for i, adj in enumerate(instance.edges):
            for j, bid in adj:
                if bid != 1:
                    v.append(f"query {i}, bidder {j}: OBM bids must be 1")
    elif instance.problem_class is ProblemClass.SINGLE_VALUED:
        for b in instance.bidders:
            if b.b is None or b.k is None:
                v.append(f"bidder {b.id}: single-valued bidder needs b and k")
                continue
            if b.b < 1 or b.k < 1:
                v.append(f"bidder {b.id}: b and k must be >= 1")
            if b.budget != b.b * b.k:
                v.append(f"bidder {b.id}: budget {b.budget} != k*b = {b.k * b.b}")
        for i, adj in enumerate(instance.edges):
            for j, bid in adj:
                if j in id_set:
                    bj = instance.bidder_by_id(j).b
                    if bj is not None and bid != bj:
                        v.append(f"query {i}, bidder {j}: bid {bid} != b_j = {bj}")

    if instance.planted_opt is not None:
        used_queries = set()
        spend: dict[int, int] = {b.id: 0 for b in instance.bidders}
        for q, j in instance.planted_opt.assignment:
            if q in used_queries:
                v.append(f"planted: query {q} assigned more than once")
            used_queries.add(q)
            if not (0 <= q < instance.num_queries) or j not in id_set:
                v.append(f"planted: assignment ({q}, {j}) out of range")
                continue
            try:
                spend[j] += instance.bid(q, j)
            except KeyError:
                v.append(f"planted: assignment ({q}, {j}) is not an edge")
        for j, s in spend.items():
            if s > budgets.get(j, 0):
                v.append(f"planted: bidder {j} spend {s} exceeds budget {budgets[j]}")
    return v


# -- fixed adversarial generators -----------------------------------------


def gen_upper_triangular(n: int) -> Instance:
    """The standard worst-case family for rank-based matching.

    Query i likes goods i..n-1; the identity matching is perfect and is
    planted as the offline optimum.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    bidders = tuple(Bidder(id=j, budget=1) for j in range(n))
    edges = tuple(tuple((j, 1) for j in range(i, n)) for i in range(n))
    planted = PlantedSolution(tuple((i, i) for i in range(n)))
    return Instance(ProblemClass.OBM, n, bidders, edges, planted)


def gen_example_three(W: int) -> tuple[Instance, Instance, Instance]:
    """Three two-bidder instances on which any greedy-style rule loses half.

    Both bidders have budget W.  I1 and I2 have W unit-bid queries wanted
    by both, then one W-bid query wanted by bidder 0 (I1) or bidder 1
    (I2).  I3 has 2W unit-bid queries wanted by both.  Each instance has
    a planted budget-exhausting optimum of value 2W.
    """
    if W < 1:
        raise ValueError("W must be >= 1")
    bidders = (Bidder(id=0, budget=W), Bidder(id=1, budget=W))
    unit = ((0, 1), (1, 1))

    e1 = tuple([unit] * W + [((0, W),)])
    p1 = PlantedSolution(tuple((q, 1) for q in range(W)) + ((W, 0),))
    i1 = Instance(ProblemClass.GENERAL, W + 1, bidders, e1, p1)

    e2 = tuple([unit] * W + [((1, W),)])
    p2 = PlantedSolution(tuple((q, 0) for q in range(W)) + ((W, 1),))
    i2 = Instance(ProblemClass.GENERAL, W + 1, bidders, e2, p2)

    e3 = tuple([unit] * (2 * W))
    p3 = PlantedSolution(
        tuple((q, 0) for q in range(W)) + tuple((q, 1) for q in range(W, 2 * W))
    )
    i3 = Instance(ProblemClass.GENERAL, 2 * W, bidders, e3, p3)
    return i1, i2, i3


def gen_example_no_surpass(alpha: int, k: int) -> Instance:
    """The doctored two-bidder family that breaks no-surpassing.

    Bidder 0 bids alpha on all k queries (budget alpha*k); bidder 1 bids
    alpha-1 on the first k-1 and (alpha-1)*(k-1) on the last (budget
    (alpha-1)*(k-1)).  With equal prices for the two bidders, the last
    query is taken by bidder 1 even though bidder 0's effective bid beats
    everything it saw in the removal run.
    """
    if alpha < 2:
        raise ValueError("alpha must be >= 2")
    if k < 3:
        raise ValueError("k must be >= 3")
    big = (alpha - 1) * (k - 1)
    bidders = (Bidder(id=0, budget=alpha * k), Bidder(id=1, budget=big))
    edges = tuple(
        ((0, alpha), (1, alpha - 1)) for _ in range(k - 1)
    ) + (((0, alpha), (1, big)),)
    return Instance(ProblemClass.GENERAL, k, bidders, edges, None)


# -- random generators ---------------------------------------------------


def _ensure_edge(rng, adj: list[tuple[int, int]], candidates: Sequence[tuple[int, int]]):
    if not adj:
        adj.append(candidates[rng.integers(len(candidates))])


def gen_random(
    problem_class: ProblemClass | str,
    n: int,
    m: int,
    density: float,
    bid_range: tuple[int, int] = (1, 1),
    budget_policy: tuple[int, int] = (1, 1),
    seed: int = 0,
) -> Instance:
    """Reproducible random instance; every query gets at least one edge.

    ``budget_policy`` is the (lo, hi) range of budgets for general
    instances and of ``k_j`` for single-valued ones.  For OBM all bids
    and budgets are 1 regardless of the ranges.
    """
    problem_class = ProblemClass(problem_class)
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    if not (0 < density <= 1):
        raise ValueError("density must be in (0, 1]")
    if bid_range[0] < 1 or bid_range[0] > bid_range[1]:
        raise ValueError(f"bad bid_range {bid_range}")
    if budget_policy[0] < 1 or budget_policy[0] > budget_policy[1]:
        raise ValueError(f"bad budget_policy {budget_policy}")
    rng = np.random.default_rng(seed)

    if problem_class is ProblemClass.OBM:
        bidders = tuple(Bidder(id=j, budget=1) for j in range(m))
    elif problem_class is ProblemClass.SINGLE_VALUED:
        bs = rng.integers(bid_range[0], bid_range[1] + 1, size=m)
        ks = rng.integers(budget_policy[0], budget_policy[1] + 1, size=m)
        bidders = tuple(
            Bidder(id=j, budget=int(bs[j] * ks[j]), b=int(bs[j]), k=int(ks[j]))
            for j in range(m)
        )
    else:
        budgets = rng.integers(
            max(budget_policy[0], bid_range[0]), budget_policy[1] + 1, size=m
        )
        if bid_range[0] > budgets.min():
            raise ValueError("bid_range lower bound exceeds smallest budget")
        bidders = tuple(Bidder(id=j, budget=int(budgets[j])) for j in range(m))

    edges = []
    for _ in range(n):
        mask = rng.random(m) < density
        adj: list[tuple[int, int]] = []
        for j in range(m):
            if mask[j]:
                if problem_class is ProblemClass.OBM:
                    bid = 1
                elif problem_class is ProblemClass.SINGLE_VALUED:
                    bid = bidders[j].b
                else:
                    hi = min(bid_range[1], bidders[j].budget)
                    bid = int(rng.integers(bid_range[0], hi + 1))
                adj.append((j, bid))
        if not adj:
            j = int(rng.integers(m))
            if problem_class is ProblemClass.OBM:
                bid = 1
            elif problem_class is ProblemClass.SINGLE_VALUED:
                bid = bidders[j].b
            else:
                hi = min(bid_range[1], bidders[j].budget)
                bid = int(rng.integers(bid_range[0], hi + 1))
            adj.append((j, bid))
        edges.append(tuple(adj))
    return Instance(problem_class, n, bidders, tuple(edges), None)


def gen_planted(
    problem_class: ProblemClass | str,
    n: int,
    m: int,
    mu_target: float = 1.0,
    seed: int = 0,
    distractor_density: float = 0.25,
) -> Instance:
    """Instance with a planted assignment that exhausts every budget.

    The planted value therefore equals the sum of budgets and certifies
    the offline optimum without solving.  For general instances the
    largest bid is capped so that mu(instance) <= mu_target.
    """
    problem_class = ProblemClass(problem_class)
    if not (0 < mu_target <= 1):
        raise ValueError("mu_target must be in (0, 1]")
    if n < m or m < 1:
        raise ValueError("need n >= m >= 1")
    rng = np.random.default_rng(seed)

    if problem_class is ProblemClass.OBM:
        bidders = tuple(Bidder(id=j, budget=1) for j in range(m))
        perm = rng.permutation(n)
        owner = {int(perm[t]): t for t in range(m)}  # query -> good
        edges = []
        for i in range(n):
            adj = {owner[i]: 1} if i in owner else {}
            for j in range(m):
                if j not in adj and rng.random() < distractor_density:
                    adj[j] = 1
            if not adj:
                adj[int(rng.integers(m))] = 1
            edges.append(tuple(sorted(adj.items())))
        planted = PlantedSolution(tuple(sorted(owner.items())))
        return Instance(problem_class, n, bidders, tuple(edges), planted)

    # Split queries across bidders; bidder j owns counts[j] planted queries.
    counts = [n // m + (1 if j < n % m else 0) for j in range(m)]

    if problem_class is ProblemClass.SINGLE_VALUED:
        bs = []
        for j in range(m):
            # keep (b-1)/(k*b) <= mu_target
            cap = 9
            while cap > 1 and (cap - 1) > mu_target * counts[j] * cap:
                cap -= 1
            bs.append(int(rng.integers(1, cap + 1)))
        bidders = tuple(
            Bidder(id=j, budget=bs[j] * counts[j], b=bs[j], k=counts[j])
            for j in range(m)
        )
        owners = rng.permutation(np.repeat(np.arange(m), counts))
        edges = []
        assignment = []
        for i in range(n):
            o = int(owners[i])
            adj = {o: bs[o]}
            assignment.append((i, o))
            for j in range(m):
                if j != o and rng.random() < distractor_density:
                    adj[j] = bs[j]
            edges.append(tuple(sorted(adj.items())))
        planted = PlantedSolution(tuple(assignment))
        return Instance(problem_class, n, bidders, tuple(edges), planted)

    # GENERAL: per bidder, draw counts[j] bids in [1, bcap_j] with one bid
    # forced to bcap_j; budget is their exact sum, so (bcap-1)/B_j <= mu.
    bid_lists: list[list[int]] = []
    bcaps = []
    for j in range(m):
        c = counts[j]
        bcap = int(mu_target * c) + 1
        bcaps.append(bcap)
        bids = [bcap] + [int(rng.integers(1, bcap + 1)) for _ in range(c - 1)]
        bid_lists.append(bids)
    budgets = [sum(bl) for bl in bid_lists]
    bidders = tuple(Bidder(id=j, budget=budgets[j]) for j in range(m))

    slots = [(j, bid) for j in range(m) for bid in bid_lists[j]]
    order = rng.permutation(len(slots))
    edges = []
    assignment = []
    for i in range(n):
        o, bid = slots[int(order[i])]
        adj = {o: bid}
        assignment.append((i, o))
        for j in range(m):
            if j != o and rng.random() < distractor_density:
                adj[j] = int(rng.integers(1, bcaps[j] + 1))
        edges.append(tuple(sorted(adj.items())))
    planted = PlantedSolution(tuple(assignment))
    return Instance(problem_class, n, bidders, tuple(edges), planted)


# -- smallness measure ---------------------------------------------------


def mu(instance: Instance) -> Fraction:
    """max over bidders of (largest bid on the bidder - 1) / budget.

    Bidders with no incident edges contribute 0.  All-unit-bid instances
    have mu = 0.
    """
    best = Fraction(0)
    max_bid: dict[int, int] = {}
    for _, j, b in instance.edge_list():
        max_bid[j] = max(max_bid.get(j, 0), b)
    for bidder in instance.bidders:
        if bidder.id in max_bid:
            best = max(best, Fraction(max_bid[bidder.id] - 1, bidder.budget))
    return best


# -- file format ---------------------------------------------------------


class InstanceParseError(ValueError):
    pass


def instance_to_dict(instance: Instance) -> dict:
    bidders = []
    for b in instance.bidders:
        d = {"id": b.id, "budget": b.budget}
        if instance.problem_class is ProblemClass.SINGLE_VALUED:
            d["b"] = b.b
            d["k"] = b.k
        bidders.append(d)
    out = {
        "class": instance.problem_class.value,
        "n": instance.num_queries,
        "bidders": bidders,
        "edges": [[[j, bid] for j, bid in adj] for adj in instance.edges],
    }
    if instance.planted_opt is not None:
        out["planted_opt"] = {
            "assignment": [[q, j] for q, j in instance.planted_opt.assignment]
        }
    return out


def instance_from_dict(data: dict) -> Instance:
    try:
        cls = ProblemClass(data["class"])
        n = int(data["n"])
        bidders = []
        for idx, b in enumerate(data["bidders"]):
            try:
                bidders.append(
                    Bidder(
                        id=int(b["id"]),
                        budget=int(b["budget"]),
                        b=int(b["b"]) if "b" in b and b["b"] is not None else None,
                        k=int(b["k"]) if "k" in b and b["k"] is not None else None,
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise InstanceParseError(f"bidders[{idx}]: {exc}") from exc
        edges = []
        for i, adj in enumerate(data["edges"]):
            try:
                edges.append(tuple((int(j), int(bid)) for j, bid in adj))
            except (TypeError, ValueError) as exc:
                raise InstanceParseError(f"edges[{i}]: {exc}") from exc
        planted = None
        if data.get("planted_opt") is not None:
            try:
                planted = PlantedSolution(
                    tuple((int(q), int(j)) for q, j in data["planted_opt"]["assignment"])
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise InstanceParseError(f"planted_opt: {exc}") from exc
        return Instance(cls, n, tuple(bidders), tuple(edges), planted)
    except InstanceParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceParseError(str(exc)) from exc


def write_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh)
        fh.write("\n")


def read_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return instance_from_dict(data)
