"""Monte-Carlo harness: ratio estimates, contribution bounds, fake-money
reports and the smallness sweep."""

import math
from fractions import Fraction

import pytest

from obmatch import (
    Bidder,
    FakeMoneyBoundViolation,
    Instance,
    ProblemClass,
    estimate_edge_contributions,
    estimate_ratio,
    estimate_star_contributions,
    fake_money_report,
    gen_planted,
    gen_random,
    gen_upper_triangular,
    mu,
    planted_stars,
    sweep_mu,
)
from obmatch.harness import star_bound, validate_star

E_BOUND = 1.0 - 1.0 / math.e


def test_deterministic_algorithm_zero_variance():
    inst = gen_random(ProblemClass.GENERAL, 10, 3, 0.5,
                      bid_range=(1, 4), budget_policy=(2, 8), seed=0)
    est = estimate_ratio(inst, "greedy", 500, 0)
    assert est.se == 0.0
    assert est.ci_lo == est.ci_hi == est.ratio


def test_single_query_ratio_is_one():
    inst = gen_upper_triangular(1)
    est = estimate_ratio(inst, "ranking", 50, 0)
    assert est.ratio == 1.0 and est.se == 0.0


def test_estimate_ratio_deterministic_in_seed():
    inst = gen_upper_triangular(12)
    a = estimate_ratio(inst, "ranking", 400, 9)
    b = estimate_ratio(inst, "ranking", 400, 9)
    assert a.to_dict() == b.to_dict()


def test_single_edge_contribution_is_exactly_one():
    # one query, one good: u + r = (1 - p) + p = 1 on every trial
    inst = gen_upper_triangular(1)
    (est,) = estimate_edge_contributions(inst, 200, 3)
    assert est.mean == pytest.approx(1.0, abs=1e-12)
    assert est.se == pytest.approx(0.0, abs=1e-12)
    assert est.meets_bound()


def test_edge_contributions_reject_budgeted_classes():
    inst = gen_random(ProblemClass.GENERAL, 5, 2, 0.5,
                      bid_range=(1, 3), budget_policy=(2, 5), seed=0)
    with pytest.raises(ValueError):
        estimate_edge_contributions(inst, 10, 0)


class TestStars:
    def test_validate_star_single_valued(self):
        inst = gen_planted(ProblemClass.SINGLE_VALUED, 12, 3, seed=1)
        for j, queries in planted_stars(inst):
            validate_star(inst, j, queries)  # no raise
            assert len(queries) == inst.bidder_by_id(j).k

    def test_validate_star_rejects_wrong_size(self):
        inst = gen_planted(ProblemClass.SINGLE_VALUED, 12, 3, seed=1)
        j, queries = planted_stars(inst)[0]
        with pytest.raises(ValueError):
            validate_star(inst, j, list(queries) + [queries[0]])

    def test_validate_star_general_budget_coverage(self):
        inst = gen_planted(ProblemClass.GENERAL, 16, 3, 0.5, seed=2)
        for j, queries in planted_stars(inst):
            validate_star(inst, j, queries)
            assert sum(inst.bid(q, j) for q in queries) == inst.bidder_by_id(j).budget

    def test_star_bounds(self):
        inst = gen_planted(ProblemClass.SINGLE_VALUED, 12, 3, seed=1)
        for j, _ in planted_stars(inst):
            b = inst.bidder_by_id(j)
            assert star_bound(inst, j) == pytest.approx(b.k * b.b * E_BOUND)
        gen = gen_planted(ProblemClass.GENERAL, 16, 3, 0.5, seed=2)
        for j, _ in planted_stars(gen):
            assert star_bound(gen, j) == pytest.approx(
                gen.bidder_by_id(j).budget * E_BOUND
            )

    def test_general_stars_are_conditional(self):
        inst = gen_planted(ProblemClass.GENERAL, 16, 3, 0.5, seed=2)
        ests = estimate_star_contributions(inst, planted_stars(inst), 100, 5)
        assert all(c.conditional for c in ests)
        sv = gen_planted(ProblemClass.SINGLE_VALUED, 12, 3, seed=1)
        assert not any(
            c.conditional
            for c in estimate_star_contributions(sv, planted_stars(sv), 100, 5)
        )

    def test_star_aggregation_identity(self):
        """When the planted stars cover every query, summing the star
        means reproduces mean(W + Wf) exactly."""
        inst = gen_planted(ProblemClass.GENERAL, 16, 3, 0.5, seed=2)
        stars = planted_stars(inst)
        assert sorted(q for _, qs in stars for q in qs) == list(range(16))
        ests = estimate_star_contributions(inst, stars, 300, 8)
        est = estimate_ratio(inst, "general", 300, 8)
        total = sum(c.mean for c in ests)
        assert total == pytest.approx(est.ratio_with_fake * est.opt, rel=1e-9)


class TestFakeMoney:
    def test_zero_on_unit_bids(self):
        inst = gen_upper_triangular(8)
        general = Instance(
            ProblemClass.GENERAL, 8, inst.bidders, inst.edges, None
        )
        rep = fake_money_report(general, 200, 1)
        assert rep.max_Wf == 0

    def test_planted_mu_relation(self):
        for seed in range(4):
            inst = gen_planted(ProblemClass.GENERAL, 30, 3, 0.25, seed=seed)
            rep = fake_money_report(inst, 150, seed)
            assert rep.wf_fraction_bounded_by_mu is True
            assert Fraction(rep.max_Wf, inst.planted_value()) <= mu(inst)

    def test_hard_bound_never_trips_on_valid_runs(self):
        inst = gen_random(ProblemClass.GENERAL, 15, 4, 0.5,
                          bid_range=(1, 6), budget_policy=(3, 12), seed=3)
        rep = fake_money_report(inst, 200, 3)  # would raise FakeMoneyBoundViolation
        assert rep.wf_fraction_bounded_by_mu is None  # no planted opt

    def test_requires_general_class(self):
        with pytest.raises(ValueError):
            fake_money_report(gen_upper_triangular(3), 10, 0)


def test_sweep_shrinks_fake_fraction():
    cells = sweep_mu([0.3, 0.05], m=3, trials=60, seed=5)
    assert len(cells) == 2
    assert cells[0].mu_actual <= Fraction(3, 10)
    assert cells[1].mu_actual <= Fraction(1, 20)
    assert cells[1].wf_fraction <= cells[0].wf_fraction
    for c in cells:
        assert c.max_wf_fraction <= float(c.mu_actual) + 1e-12
        d = c.to_dict()
        assert d["mu_target"] == c.mu_target


def test_algorithm_class_guard():
    inst = gen_upper_triangular(5)
    with pytest.raises(ValueError):
        estimate_ratio(inst, "single_valued", 10, 0)
