"""Seeded Monte-Carlo measurement: competitive ratios, edge and star
contribution bounds, fake-money accounting, and smallness sweeps.

All estimators are deterministic in the master seed: trial t draws its
ranks from the sub-stream (seed, t), and reductions run in fixed trial
order.  Statistical margins are one-sided 3*SE throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .audit import check_no_surpassing
from .engines import (
    ONE_MINUS_1_OVER_E,
    DETERMINISTIC_ALGORITHMS,
    RANDOMIZED_ALGORITHMS,
    draw_ranks,
    run_algorithm,
)
from .fastpath import BatchResult, run_batch
from .instance import Instance, ProblemClass, gen_planted, mu
from .oracle import OfflineOptimum, OptKind, offline_optimum


def _mean_se(samples: np.ndarray) -> tuple[float, float]:
    mean = float(samples.mean())
    if samples.size < 2:
        return mean, 0.0
    return mean, float(samples.std(ddof=1) / math.sqrt(samples.size))


@dataclass(frozen=True)
class RatioEstimate:
    algorithm: str
    trials: int
    mean_W: float
    mean_Wf: float
    opt: int
    opt_kind: str
    ratio: float  # mean real money / opt
    ratio_with_fake: float  # mean (W + Wf) / opt
    se: float
    ci_lo: float
    ci_hi: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "trials": self.trials,
            "mean_W": self.mean_W,
            "mean_Wf": self.mean_Wf,
            "opt": self.opt,
            "opt_kind": self.opt_kind,
            "ratio": self.ratio,
            "ratio_with_fake": self.ratio_with_fake,
            "se": self.se,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "seed": self.seed,
        }


def estimate_ratio(
    instance: Instance,
    algorithm: str,
    trials: int,
    seed: int,
    opt: Optional[OfflineOptimum] = None,
    allow_bound: bool = False,
) -> RatioEstimate:
    """Monte-Carlo mean of W / OPT over independent rank draws.

    The ratio uses real money; the fake-augmented ratio is reported
    alongside for the general engine.  Deterministic baselines collapse
    to a single run.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if opt is None:
        opt = offline_optimum(instance, allow_bound=allow_bound)
    if opt.kind is OptKind.UPPER_BOUND and not allow_bound:
        raise ValueError("upper-bound optimum requires allow_bound=True")

    if algorithm in DETERMINISTIC_ALGORITHMS:
        out = run_algorithm(instance, algorithm)
        ratio = out.W / opt.value
        return RatioEstimate(
            algorithm, trials, float(out.W), float(out.Wf), opt.value, opt.kind.value,
            ratio, (out.W + out.Wf) / opt.value, 0.0, ratio, ratio, seed,
        )
    if algorithm not in RANDOMIZED_ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    _require_class_for(instance, algorithm)

    batch = run_batch(instance, trials, seed)
    ratios = batch.W / opt.value
    mean, se = _mean_se(ratios)
    return RatioEstimate(
        algorithm,
        trials,
        float(batch.W.mean()),
        float(batch.Wf.mean()),
        opt.value,
        opt.kind.value,
        mean,
        float((batch.W + batch.Wf).mean() / opt.value),
        se,
        mean - 1.96 * se,
        mean + 1.96 * se,
        seed,
    )


def _require_class_for(instance: Instance, algorithm: str) -> None:
    wanted = {
        "ranking": ProblemClass.OBM,
        "single_valued": ProblemClass.SINGLE_VALUED,
        "general": ProblemClass.GENERAL,
    }[algorithm]
    if instance.problem_class is not wanted:
        raise ValueError(
            f"algorithm {algorithm!r} needs a {wanted.value} instance, "
            f"got {instance.problem_class.value}"
        )


@dataclass(frozen=True)
class ContributionEstimate:
    target: tuple  # ("edge", i, j) or ("star", j, (queries...))
    mean: float
    se: float
    bound: float
    trials: int
    conditional: bool  # True for general-class stars

    @property
    def margin(self) -> float:
        return self.mean - self.bound

    def meets_bound(self, sigmas: float = 3.0) -> bool:
        return self.mean >= self.bound - sigmas * self.se


def estimate_edge_contributions(
    instance: Instance,
    trials: int,
    seed: int,
    edges: Optional[Sequence[tuple[int, int]]] = None,
    batch: Optional[BatchResult] = None,
) -> list[ContributionEstimate]:
    """Per-edge Monte-Carlo mean of u_i + r_j against 1 - 1/e (OBM)."""
    if instance.problem_class is not ProblemClass.OBM:
        raise ValueError("edge contributions are defined for OBM instances")
    if batch is None:
        batch = run_batch(instance, trials, seed)
    if edges is None:
        edges = [(i, j) for i, j, _ in instance.edge_list()]
    out = []
    for i, j in edges:
        samples = batch.U[:, i] + batch.r_column(j)
        mean, se = _mean_se(samples)
        out.append(
            ContributionEstimate(("edge", i, j), mean, se, ONE_MINUS_1_OVER_E, trials, False)
        )
    return out


def validate_star(instance: Instance, j: int, queries: Sequence[int]) -> None:
    bidder = instance.bidder_by_id(j)
    if len(set(queries)) != len(queries):
        raise ValueError(f"star for bidder {j} repeats a query")
    for q in queries:
        if j not in instance.neighbors(q):
            raise ValueError(f"star for bidder {j} uses non-edge ({q}, {j})")
    if instance.problem_class is ProblemClass.SINGLE_VALUED:
        if len(queries) != bidder.k:
            raise ValueError(
                f"star for bidder {j} has {len(queries)} queries, needs k = {bidder.k}"
            )
    elif instance.problem_class is ProblemClass.GENERAL:
        total = sum(instance.bid(q, j) for q in queries)
        if total != bidder.budget:
            raise ValueError(
                f"star for bidder {j} covers {total}, needs exactly B = {bidder.budget}"
            )


def star_bound(instance: Instance, j: int) -> float:
    bidder = instance.bidder_by_id(j)
    if instance.problem_class is ProblemClass.SINGLE_VALUED:
        return bidder.k * bidder.b * ONE_MINUS_1_OVER_E
    return bidder.budget * ONE_MINUS_1_OVER_E


def estimate_star_contributions(
    instance: Instance,
    stars: Sequence[tuple[int, Sequence[int]]],
    trials: int,
    seed: int,
    batch: Optional[BatchResult] = None,
) -> list[ContributionEstimate]:
    """Monte-Carlo mean of r_j + sum of the star queries' utilities vs
    the star bound.  General-class estimates are tagged conditional:
    their bound relies on the no-surpassing assumption."""
    if instance.problem_class is ProblemClass.OBM:
        raise ValueError("star contributions are for budgeted classes")
    conditional = instance.problem_class is ProblemClass.GENERAL
    for j, queries in stars:
        validate_star(instance, j, queries)
    if batch is None:
        batch = run_batch(instance, trials, seed)
    out = []
    for j, queries in stars:
        samples = batch.r_column(j) + sum(batch.U[:, q] for q in queries)
        mean, se = _mean_se(np.asarray(samples))
        out.append(
            ContributionEstimate(
                ("star", j, tuple(queries)), mean, se, star_bound(instance, j), trials, conditional
            )
        )
    return out


def planted_stars(instance: Instance) -> list[tuple[int, list[int]]]:
    """Star decomposition along the planted solution."""
    if instance.planted_opt is None:
        raise ValueError("instance has no planted solution")
    by_bidder: dict[int, list[int]] = {}
    for q, j in instance.planted_opt.assignment:
        by_bidder.setdefault(j, []).append(q)
    return sorted(by_bidder.items())


class FakeMoneyBoundViolation(AssertionError):
    """A run spent more fake money than the worst-case bound; this
    indicates an engine bug, not a statistical event."""


@dataclass(frozen=True)
class FakeMoneyReport:
    trials: int
    worst_case_bound: int  # sum over bidders of (max incident bid - 1)
    max_Wf: int
    mean_Wf: float
    mean_wf_over_budget: float
    mu_value: Fraction
    wf_fraction_bounded_by_mu: Optional[bool]  # None without a planted opt
    seed: int


def fake_money_report(instance: Instance, trials: int, seed: int) -> FakeMoneyReport:
    """Per-trial fake-money audit for the general engine.

    Enforces the exact per-run bound Wf <= sum_j max(bid - 1); for
    planted (budget-exhausting) instances also checks Wf / w(P) <= mu.
    """
    if instance.problem_class is not ProblemClass.GENERAL:
        raise ValueError("fake_money_report requires a general instance")
    batch = run_batch(instance, trials, seed)
    max_bid: dict[int, int] = {}
    for _, j, b in instance.edge_list():
        max_bid[j] = max(max_bid.get(j, 0), b)
    bound = sum(b - 1 for b in max_bid.values())
    max_wf = int(batch.Wf.max())
    if max_wf > bound:
        raise FakeMoneyBoundViolation(
            f"run spent Wf = {max_wf} > worst-case bound {bound}"
        )
    mu_val = mu(instance)
    bounded = None
    planted_value = instance.planted_value()
    if planted_value is not None and planted_value == instance.total_budget():
        bounded = Fraction(max_wf, planted_value) <= mu_val
    return FakeMoneyReport(
        trials,
        bound,
        max_wf,
        float(batch.Wf.mean()),
        float(batch.Wf.mean() / instance.total_budget()),
        mu_val,
        bounded,
        seed,
    )


@dataclass(frozen=True)
class SweepCell:
    mu_target: float
    mu_actual: Fraction
    n: int
    m: int
    trials: int
    ratio_real: float  # mean W / w(P)
    ratio_with_fake: float  # mean (W + Wf) / w(P)
    se_with_fake: float
    wf_fraction: float  # mean Wf / w(P)
    max_wf_fraction: float
    violations_sampled: int  # no-surpassing violations over audited seeds
    audit_seeds: int

    def to_dict(self) -> dict:
        return {
            "mu_target": self.mu_target,
            "mu_actual": float(self.mu_actual),
            "n": self.n,
            "m": self.m,
            "trials": self.trials,
            "ratio_real": self.ratio_real,
            "ratio_with_fake": self.ratio_with_fake,
            "se_with_fake": self.se_with_fake,
            "wf_fraction": self.wf_fraction,
            "max_wf_fraction": self.max_wf_fraction,
            "violations_sampled": self.violations_sampled,
            "audit_seeds": self.audit_seeds,
        }


def sweep_mu(
    mu_targets: Sequence[float],
    m: int = 4,
    trials: int = 200,
    seed: int = 0,
    audit_seeds: int = 3,
    queries_per_unit_mu: float = 2.0,
) -> list[SweepCell]:
    """Planted-instance sweep of the smallness parameter.

    For each target, generates a planted general instance large enough
    that bids of the intended size exist (per-bidder query count scales
    like 1/mu), runs the fake-money engine, and audits a few seeds for
    no-surpassing violations.  The fake fraction is exactly bounded by
    mu cell by cell; the ratio column tracks 1 - 1/e as mu shrinks.
    """
    cells = []
    for t_idx, target in enumerate(mu_targets):
        per_bidder = max(2, math.ceil(queries_per_unit_mu / target))
        n = m * per_bidder
        inst = gen_planted(ProblemClass.GENERAL, n, m, target, seed=seed + t_idx)
        w_p = inst.planted_value()
        assert w_p == inst.total_budget()
        batch = run_batch(inst, trials, seed)
        fake_report = fake_money_report(inst, trials, seed)  # enforces hard bounds
        ratios_fake = (batch.W + batch.Wf) / w_p
        mean_fake, se_fake = _mean_se(ratios_fake)
        violations = 0
        for a in range(audit_seeds):
            ranks = draw_ranks(inst, [seed, a])
            stats = check_no_surpassing(inst, ranks)
            violations += stats.violation_count
        cells.append(
            SweepCell(
                target,
                mu(inst),
                n,
                m,
                trials,
                float(batch.W.mean() / w_p),
                mean_fake,
                se_fake,
                float(batch.Wf.mean() / w_p),
                float(batch.Wf.max() / w_p),
                violations,
                audit_seeds,
            )
        )
    return cells
