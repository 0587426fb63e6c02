"""Full-scale acceptance gate.

Runs every named check from obmatch.verify at full scale once and
asserts each as its own test, so the report shows one pass/fail line
per criterion.
"""

import pytest

from obmatch.verify import CRITERIA, run_all

CRITERION_NAMES = [
    "ranking_tightness_trend",
    "obm_edge_contribution_bound",
    "single_valued_guarantee",
    "no_surpassing_suite",
    "multiset_lemmas",
    "threshold_dominance",
    "fake_money_accounting",
    "small_conditional_convergence",
    "reduction_equivalences",
    "offline_oracles",
]


@pytest.fixture(scope="module")
def results():
    lines = []
    out = {r.name: r for r in run_all("full", report=lines.append)}
    print()
    for line in lines:
        print(line)
    return out


def test_every_criterion_has_a_check(results):
    assert set(results) == set(CRITERION_NAMES)
    assert len(CRITERIA) == len(CRITERION_NAMES)


@pytest.mark.parametrize("name", CRITERION_NAMES)
def test_criterion(results, name):
    res = results[name]
    print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
    assert res.passed, f"{res.name}: {res.detail}"
