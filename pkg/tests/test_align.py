import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lexaccess.align import (
    Alignment,
    ConfusionModel,
    CostModel,
    InsertionCountDist,
    OpKind,
    align,
    costs_from_confusions,
    estimate_confusions,
    estimate_costs,
    estimate_insertion_dist,
)
from lexaccess.errors import InsufficientData, MissingProbability, UnknownPhoneme
from lexaccess.phonemes import GAP

from oracles import SMALL, brute_force_cost, dyadic_costs

seq4 = st.lists(st.sampled_from("abcd"), max_size=5).map(tuple)


def script_cost(a: Alignment, costs: CostModel):
    return sum(costs.matrix[costs.table.idx(op.intended), costs.table.idx(op.observed)]
               for op in a.ops)


class TestAlign:
    def test_paper_alignment(self, inventory, groups):
        costs = CostModel.phonetic(inventory, groups)
        a = align("ax n ah dh er".split(), "ax n dx q er".split(), costs)
        assert [(op.intended, op.observed) for op in a.ops] == [
            ("ax", "ax"), ("n", "n"), ("ah", GAP), ("dh", "dx"), (GAP, "q"), ("er", "er")]
        assert (a.L, a.N) == (6, 1)
        assert a.cost == pytest.approx(2.3, abs=1e-9)
        assert a.pretty().splitlines() == ["intended  ax n ah dh - er",
                                           "observed  ax n -  dx q er"]

    def test_identical_sequences_are_all_matches(self, inventory, groups):
        costs = CostModel.phonetic(inventory, groups)
        a = align(("dh", "ax"), ("dh", "ax"), costs)
        assert a.cost == 0.0
        assert a.count(OpKind.MATCH) == 2 and a.errors == 0

    def test_empty_sides(self):
        costs = CostModel.unit(SMALL)
        assert align((), ("a", "b"), costs).N == 2
        assert align(("a",), (), costs).count(OpKind.DELETE) == 1
        assert align((), (), costs).ops == ()

    def test_tie_prefers_diagonal(self):
        m = np.full((5, 5), 2.0)
        m[:, 4] = m[4, :] = 1.0
        a = align(("a",), ("b",), CostModel(SMALL, m))
        assert [op.kind for op in a.ops] == [OpKind.SUBSTITUTE]

    def test_tie_prefers_deletion_over_insertion(self):
        # "ab" -> "ba" at unit cost: several optimal scripts of cost 2
        a = align(("a", "b"), ("b", "a"), CostModel.unit(SMALL))
        assert a.cost == 2.0
        assert [op.kind for op in a.ops] == [OpKind.SUBSTITUTE, OpKind.SUBSTITUTE]

    def test_unknown_symbol(self):
        with pytest.raises(UnknownPhoneme):
            align(("a",), ("z",), CostModel.unit(SMALL))

    @settings(max_examples=300, deadline=None)
    @given(seq4, seq4, st.integers(0, 50))
    def test_matches_brute_force(self, a, b, seed):
        costs = dyadic_costs(seed)
        got = align(a, b, costs)
        assert got.cost == brute_force_cost(a, b, costs)
        assert script_cost(got, costs) == got.cost
        assert got.intended() == a and got.observed() == b


class TestCostModel:
    def test_phonetic_tiers(self, inventory, groups):
        c = CostModel.phonetic(inventory, groups)
        assert c.sub_cost("dh", "dx") == 0.3
        assert c.sub_cost("ax", "ah") == 0.3
        assert c.sub_cost("p", "t") == 0.4
        assert c.sub_cost("ax", "t") == 2.5
        assert c.ins_cost("q") == c.del_cost("ah") == 1.0
        assert c.sub_cost("ax", "ax") == 0.0

    def test_negative_rejected(self):
        m = np.ones((5, 5))
        m[0, 1] = -1
        with pytest.raises(ValueError):
            CostModel(SMALL, m)

    def test_save_load(self, tmp_path, inventory, groups):
        c = CostModel.phonetic(inventory, groups)
        c.save(tmp_path / "c.json")
        assert np.array_equal(CostModel.load(tmp_path / "c.json").matrix, c.matrix)


PAIRS = [(("a", "b", "c"), ("a", "b", "c")), (("a", "b", "c"), ("a", "d", "c")),
         (("a", "b"), ("a", "b", "b")), (("c", "d"), ("d",)), (("a",), ("a",))] * 3


class TestConfusion:
    def test_rows_normalize(self):
        conf = estimate_confusions(PAIRS, CostModel.unit(SMALL))
        assert np.allclose(conf.row_sums(), 1.0, atol=1e-12)

    def test_observed_substitution_is_more_likely(self):
        conf = estimate_confusions(PAIRS, CostModel.unit(SMALL))
        assert conf.p("d", "b") > conf.p("c", "b")
        assert conf.p("a", "a") > conf.p("b", "a")

    def test_gap_gap_has_no_probability(self):
        conf = ConfusionModel.from_costs(CostModel.unit(SMALL))
        with pytest.raises(MissingProbability):
            conf.p(GAP, GAP)

    def test_from_costs_normalizes(self, inventory, groups):
        conf = ConfusionModel.from_costs(CostModel.phonetic(inventory, groups))
        assert np.allclose(conf.row_sums(), 1.0, atol=1e-12)

    def test_costs_relative_to_match(self):
        conf = estimate_confusions(PAIRS, CostModel.unit(SMALL))
        c = costs_from_confusions(conf)
        assert (np.diag(c.matrix) == 0).all() and (c.matrix >= 0).all()

    def test_estimate_costs_reports_iterations(self):
        c = estimate_costs(PAIRS, SMALL)
        assert 1 <= c.iterations <= 10
        assert isinstance(c.converged, bool)

    def test_save_load(self, tmp_path):
        conf = estimate_confusions(PAIRS, CostModel.unit(SMALL))
        conf.save(tmp_path / "x.json")
        assert np.array_equal(ConfusionModel.load(tmp_path / "x.json").prob, conf.prob)


class TestInsertionDist:
    def test_normalizes(self):
        d = InsertionCountDist({0: 10, 1: 4, 2: 1})
        assert d.total_mass() == pytest.approx(1.0, abs=1e-12)
        tail = math.fsum(d.p(n) for n in range(200))
        assert tail == pytest.approx(1.0, abs=1e-12)

    def test_hand_values(self):
        d = InsertionCountDist({0: 3, 1: 1}, max_n=1, eps=0.5)
        # head 3.5, 1.5 plus one tail pseudo-count: total 5.5
        assert d.p(0) == pytest.approx(3.5 / 5.5)
        assert d.p(2) == pytest.approx(0.5 / 5.5 / 2)
        assert d.p(-1) == 0.0

    def test_mean_matches_series(self):
        d = InsertionCountDist({0: 5, 2: 2})
        assert d.mean() == pytest.approx(math.fsum(n * d.p(n) for n in range(400)), abs=1e-9)

    def test_holdout_counts_insertions(self):
        # the lone "v" token has nothing left to align against and is skipped
        db = [("w", ("a", "b"))] * 6 + [("w", ("a", "b", "b")), ("v", ("c",))]
        d = estimate_insertion_dist(db, CostModel.unit(SMALL), folds=4)
        assert d.tallies == {0: 6, 1: 1}

    def test_holdout_needs_repeats(self):
        with pytest.raises(InsufficientData):
            estimate_insertion_dist([("w", ("a",)), ("v", ("b",))], CostModel.unit(SMALL))

    def test_save_load(self, tmp_path):
        d = InsertionCountDist({0: 3, 1: 1})
        d.save(tmp_path / "i.json")
        assert InsertionCountDist.load(tmp_path / "i.json").p(1) == d.p(1)
