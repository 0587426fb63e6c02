"""Instance model, generators, validation and serialization."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obmatch import (
    Bidder,
    Instance,
    InstanceParseError,
    PlantedSolution,
    ProblemClass,
    gen_example_no_surpass,
    gen_example_three,
    gen_planted,
    gen_random,
    gen_upper_triangular,
    mu,
    read_instance,
    validate,
    write_instance,
)
from obmatch.instance import instance_from_dict, instance_to_dict


def obm(n, edges):
    m = 1 + max(j for adj in edges for j, _ in adj)
    bidders = tuple(Bidder(id=j, budget=1) for j in range(m))
    return Instance(ProblemClass.OBM, n, bidders, tuple(tuple(a) for a in edges), None)


class TestValidate:
    def test_clean_instance(self):
        assert validate(obm(2, [[(0, 1)], [(0, 1), (1, 1)]])) == []

    def test_duplicate_bidder_ids(self):
        inst = Instance(
            ProblemClass.OBM,
            1,
            (Bidder(id=0, budget=1), Bidder(id=0, budget=1)),
            (((0, 1),),),
            None,
        )
        assert any("duplicate" in v for v in validate(inst))

    def test_edge_to_unknown_bidder(self):
        inst = Instance(
            ProblemClass.OBM, 1, (Bidder(id=0, budget=1),), (((7, 1),),), None
        )
        assert validate(inst)

    def test_obm_requires_unit_bids(self):
        inst = Instance(
            ProblemClass.OBM, 1, (Bidder(id=0, budget=1),), (((0, 2),),), None
        )
        assert validate(inst)

    def test_single_valued_budget_identity(self):
        # budget must equal k * b
        inst = Instance(
            ProblemClass.SINGLE_VALUED,
            1,
            (Bidder(id=0, budget=5, b=2, k=2),),
            (((0, 2),),),
            None,
        )
        assert validate(inst)

    def test_infeasible_planted_rejected(self):
        inst = Instance(
            ProblemClass.GENERAL,
            2,
            (Bidder(id=0, budget=3),),
            (((0, 2),), ((0, 2),)),
            PlantedSolution(((0, 0), (1, 0))),
        )
        assert any("planted" in v for v in validate(inst))


class TestGenerators:
    def test_upper_triangular_shape(self):
        inst = gen_upper_triangular(4)
        assert inst.edges == (
            ((0, 1), (1, 1), (2, 1), (3, 1)),
            ((1, 1), (2, 1), (3, 1)),
            ((2, 1), (3, 1)),
            ((3, 1),),
        )
        assert validate(inst) == []

    def test_upper_triangular_bad_n(self):
        with pytest.raises(ValueError):
            gen_upper_triangular(0)

    def test_example_three_shapes(self):
        i1, i2, i3 = gen_example_three(3)
        for inst in (i1, i2, i3):
            assert validate(inst) == []
            assert [b.budget for b in inst.bidders] == [3, 3]
            assert inst.planted_value() == 6
        # the first three queries are identical unit queries liked by both
        assert i1.edges[3] == ((0, 3),)
        assert i2.edges[3] == ((1, 3),)
        assert i3.num_queries == 6

    def test_example_no_surpass_structure(self):
        inst = gen_example_no_surpass(2, 3)
        assert [b.budget for b in inst.bidders] == [6, 2]
        assert inst.num_queries == 3
        assert validate(inst) == []

    @pytest.mark.parametrize(
        "alpha,k,expected",
        [(2, 3, Fraction(1, 2)), (2, 5, Fraction(3, 4)), (3, 4, Fraction(5, 6))],
    )
    def test_example_no_surpass_mu(self, alpha, k, expected):
        assert mu(gen_example_no_surpass(alpha, k)) == expected

    @pytest.mark.parametrize("cls", list(ProblemClass))
    def test_random_every_query_has_an_edge(self, cls):
        inst = gen_random(cls, 15, 5, 0.3, bid_range=(1, 4), budget_policy=(1, 3), seed=9)
        assert validate(inst) == []
        assert all(len(adj) >= 1 for adj in inst.edges)

    def test_random_obm_unit_bids(self):
        inst = gen_random(ProblemClass.OBM, 10, 4, 0.5, bid_range=(1, 9), seed=0)
        assert all(b == 1 for _, _, b in inst.edge_list())

    @pytest.mark.parametrize("cls", list(ProblemClass))
    def test_planted_exhausts_budgets(self, cls):
        inst = gen_planted(cls, 12, 3, 0.5, seed=4)
        assert validate(inst) == []
        spend = {b.id: 0 for b in inst.bidders}
        for q, j in inst.planted_opt.assignment:
            spend[j] += inst.bid(q, j)
        assert spend == {b.id: b.budget for b in inst.bidders}

    def test_planted_general_respects_mu_target(self):
        for seed in range(5):
            inst = gen_planted(ProblemClass.GENERAL, 30, 3, 0.2, seed=seed)
            assert mu(inst) <= Fraction(1, 5)

    def test_planted_covers_every_query(self):
        inst = gen_planted(ProblemClass.GENERAL, 24, 3, 0.3, seed=5)
        qs = sorted(q for q, _ in inst.planted_opt.assignment)
        assert qs == list(range(24))


class TestMu:
    def test_exact_fraction(self):
        inst = Instance(
            ProblemClass.GENERAL, 1, (Bidder(id=0, budget=3),), (((0, 7),),), None
        )
        assert mu(inst) == Fraction(2, 1)
        assert isinstance(mu(inst), Fraction)

    def test_unit_bids_give_zero(self):
        inst = Instance(
            ProblemClass.GENERAL, 1, (Bidder(id=0, budget=5),), (((0, 1),),), None
        )
        assert mu(inst) == 0


class TestSerialization:
    @pytest.mark.parametrize("cls", list(ProblemClass))
    def test_round_trip_dict(self, cls):
        inst = gen_planted(cls, 10, 3, 0.5, seed=2)
        assert instance_from_dict(instance_to_dict(inst)) == inst

    def test_round_trip_file(self, tmp_path):
        inst = gen_random(ProblemClass.SINGLE_VALUED, 8, 3, 0.5,
                          bid_range=(1, 4), budget_policy=(1, 3), seed=1)
        path = tmp_path / "inst.json"
        write_instance(inst, path)
        assert read_instance(path) == inst

    def test_parse_error_on_junk(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"class": "nonsense"}')
        with pytest.raises(InstanceParseError):
            read_instance(path)

    @settings(max_examples=30, deadline=None)
    @given(
        cls=st.sampled_from(list(ProblemClass)),
        n=st.integers(2, 12),
        m=st.integers(1, 5),
        seed=st.integers(0, 10_000),
    )
    def test_round_trip_property(self, cls, n, m, seed):
        inst = gen_random(cls, n, m, 0.5, bid_range=(1, 5), budget_policy=(1, 3), seed=seed)
        assert instance_from_dict(instance_to_dict(inst)) == inst


def test_without_bidder_keeps_query_count():
    inst = gen_random(ProblemClass.OBM, 10, 4, 0.5, seed=3)
    sub = inst.without_bidder(2)
    assert sub.num_queries == inst.num_queries
    assert all(b.id != 2 for b in sub.bidders)
    assert all(j != 2 for _, j, _ in sub.edge_list())
