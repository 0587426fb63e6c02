"""Offline optima checked against exhaustive enumeration."""

import pytest

from obmatch import (
    Bidder,
    Instance,
    NodeLimitExceeded,
    OptKind,
    ProblemClass,
    gen_example_three,
    gen_planted,
    gen_random,
    gen_upper_triangular,
    offline_optimum,
    opt_general_bound,
    opt_general_exact,
    opt_obm,
    opt_single_valued,
    planted_certificate,
)
from obmatch.verify import brute_force_opt


def test_opt_obm_triangular_is_perfect():
    for n in (1, 4, 9):
        opt = opt_obm(gen_upper_triangular(n))
        assert opt.value == n
        assert opt.kind is OptKind.EXACT
        assert len(opt.witness) == n


def test_opt_obm_against_enumeration():
    for seed in range(30):
        inst = gen_random(ProblemClass.OBM, 7, 4, 0.5, seed=seed)
        assert opt_obm(inst).value == brute_force_opt(inst)


def test_opt_single_valued_hand_example():
    # bidder 0: one slot at 5; bidder 1: two slots at 3
    inst = Instance(
        ProblemClass.SINGLE_VALUED,
        3,
        (Bidder(id=0, budget=5, b=5, k=1), Bidder(id=1, budget=6, b=3, k=2)),
        (((0, 5), (1, 3)), ((0, 5), (1, 3)), ((1, 3),)),
        None,
    )
    opt = opt_single_valued(inst)
    assert opt.value == 11  # 5 + 3 + 3


def test_opt_single_valued_against_enumeration():
    for seed in range(30):
        inst = gen_random(
            ProblemClass.SINGLE_VALUED, 7, 3, 0.5,
            bid_range=(1, 4), budget_policy=(1, 3), seed=seed,
        )
        assert opt_single_valued(inst).value == brute_force_opt(inst)


def test_opt_general_exact_against_enumeration():
    for seed in range(30):
        inst = gen_random(
            ProblemClass.GENERAL, 7, 3, 0.5,
            bid_range=(1, 5), budget_policy=(2, 8), seed=seed,
        )
        opt = opt_general_exact(inst)
        assert opt.value == brute_force_opt(inst)
        assert opt.kind is OptKind.EXACT


def test_opt_general_bound_dominates_exact():
    for seed in range(20):
        inst = gen_random(
            ProblemClass.GENERAL, 8, 3, 0.5,
            bid_range=(1, 5), budget_policy=(2, 8), seed=seed,
        )
        assert opt_general_bound(inst).value >= opt_general_exact(inst).value


def test_node_limit_aborts():
    inst = gen_random(
        ProblemClass.GENERAL, 14, 5, 0.8,
        bid_range=(1, 5), budget_policy=(5, 20), seed=0,
    )
    with pytest.raises(NodeLimitExceeded):
        opt_general_exact(inst, node_limit=5)


def test_example_three_optima():
    for W in range(1, 7):
        for inst in gen_example_three(W):
            assert opt_general_exact(inst).value == 2 * W


def test_planted_certificate_tight():
    inst = gen_planted(ProblemClass.GENERAL, 16, 3, 0.5, seed=8)
    cert = planted_certificate(inst)
    assert cert is not None
    assert cert.kind is OptKind.PLANTED_CERTIFICATE
    assert cert.value == inst.total_budget()
    # the certificate matches what the solver finds
    assert cert.value == opt_general_exact(inst).value


def test_planted_certificate_absent_without_planted_opt():
    inst = gen_random(ProblemClass.OBM, 5, 3, 0.5, seed=0)
    assert planted_certificate(inst) is None


def test_offline_optimum_dispatch():
    obm = gen_random(ProblemClass.OBM, 6, 3, 0.5, seed=1)
    assert offline_optimum(obm).value == opt_obm(obm).value
    hard = gen_random(
        ProblemClass.GENERAL, 14, 5, 0.8,
        bid_range=(1, 5), budget_policy=(5, 20), seed=0,
    )
    fallback = offline_optimum(hard, node_limit=5, allow_bound=True)
    assert fallback.kind is OptKind.UPPER_BOUND
    with pytest.raises(NodeLimitExceeded):
        offline_optimum(hard, node_limit=5)


def test_witness_values_add_up():
    for seed in range(10):
        inst = gen_random(
            ProblemClass.SINGLE_VALUED, 8, 3, 0.5,
            bid_range=(1, 4), budget_policy=(1, 3), seed=seed,
        )
        opt = opt_single_valued(inst)
        assert sum(inst.bid(q, j) for q, j in opt.witness) == opt.value
