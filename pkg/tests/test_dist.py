import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from menuforge.dist import (
    Marginal,
    TruncationMode,
    enumerate_support,
    iid,
    make_marginal,
    make_product,
    point_mass,
    sample,
    sample_many,
    top_k_sum,
    truncate,
    val_expectation,
    value_of_set,
)
from menuforge.errors import InvalidDistribution, InvalidK, LengthMismatch, ModeClassMismatch

U12 = make_marginal([1, 2], [0.5, 0.5])


class TestConstruction:
    def test_point_mass_unit_demand(self):
        D = make_product([([1.0], [1.0])], 1)
        assert D.n == 1 and D.is_unit_demand and D.is_additive

    def test_probs_short_of_one_cite_marginal(self):
        with pytest.raises(InvalidDistribution, match="marginal 1"):
            make_product([([1], [1]), ([1, 2], [0.5, 0.4])], 2)

    def test_duplicates_merge(self):
        m = make_marginal([1, 1, 2], [0.3, 0.2, 0.5])
        assert m.values.tolist() == [1.0, 2.0]
        assert m.probs.tolist() == [0.5, 0.5]

    def test_zero_mass_atoms_dropped(self):
        assert make_marginal([0, 1, 2], [0.0, 0.5, 0.5]).values.tolist() == [1.0, 2.0]

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            make_marginal([1, 2], [1.0])

    def test_negative_value_rejected(self):
        with pytest.raises(InvalidDistribution):
            Marginal(np.array([-1.0]), np.array([1.0]))

    @pytest.mark.parametrize("k", [0, 3])
    def test_k_range(self, k):
        with pytest.raises(InvalidK):
            make_product([([1], [1]), ([1], [1])], k)


class TestValueOfSet:
    def test_additive_full_sum(self):
        assert value_of_set([1, 2], [0, 1], 2) == 3

    def test_unit_demand_max(self):
        assert value_of_set([1, 2], [0, 1], 1) == 2

    def test_top_two(self):
        assert value_of_set([3, 2, 1], [0, 1, 2], 2) == 5

    def test_rowwise_matches_scalar(self):
        V = np.array([[3.0, 2.0, 1.0], [0.0, 5.0, 4.0]])
        assert top_k_sum(V, 2).tolist() == [5.0, 9.0]


class TestTruncation:
    def test_cap_without_point_mass(self):
        D = make_product([([0.5, 10], [0.5, 0.5])] * 2, 2)
        out = truncate(D, 1.0)
        assert out.marginals[0].values.tolist() == [0.5, 1.0]
        assert out.marginals[0].probs.tolist() == [0.5, 0.5]

    def test_point_mass_arithmetic(self):
        D = make_product([([0.5, 1.0], [0.5, 0.5])] * 2, 2)
        out = truncate(D, 2.0, [0.64, 0.0])
        m = out.marginals[0]
        # W = n^2 max(1, T)^3 = 4 * 8
        assert m.values[-1] == 32.0
        assert m.probs[-1] == pytest.approx(0.02)
        assert m.probs[:-1].tolist() == pytest.approx([0.49, 0.49])
        assert out.marginals[1] is D.marginals[1]

    def test_identity_when_bounded(self):
        D = make_product([([0, 1, 3], [0.2, 0.3, 0.5]), ([2], [1])], 2)
        assert truncate(D, 3.0, None, TruncationMode.ADDITIVE) == D

    def test_mode_must_match_class(self):
        D = make_product([([1], [1]), ([2], [1])], 1)
        with pytest.raises(ModeClassMismatch):
            truncate(D, 1.0, mode=TruncationMode.ADDITIVE)
        D2 = make_product([([1], [1]), ([2], [1])], 2)
        with pytest.raises(ModeClassMismatch):
            truncate(D2, 1.0, mode=TruncationMode.MAX)

    def test_nonpositive_threshold(self):
        with pytest.raises(InvalidDistribution):
            truncate(iid(U12, 2, 2), 0.0)


class TestSupport:
    def test_two_by_two(self):
        V, P = enumerate_support(iid(U12, 2, 2))
        assert V.shape == (4, 2) and math.fsum(P) == 1.0

    def test_point_mass(self):
        V, P = enumerate_support(make_product([point_mass(3)], 1))
        assert V.tolist() == [[3.0]] and P.tolist() == [1.0]

    def test_product_count(self):
        D = make_product([([1, 2], [0.5, 0.5]), ([1, 2, 3], [0.2, 0.3, 0.5]), ([0, 1], [0.5, 0.5])], 3)
        assert D.support_size() == 12 and enumerate_support(D)[0].shape[0] == 12


class TestSampling:
    def test_point_masses_deterministic(self):
        D = make_product([point_mass(1), point_mass(2)], 2)
        assert np.all(sample_many(D, 100, 3) == [1.0, 2.0])

    def test_seed_determinism(self):
        D = iid(U12, 3, 3)
        assert np.array_equal(sample(D, 9, 17), sample(D, 9, 17))
        assert np.array_equal(sample_many(D, 10_000, 4), sample_many(D, 10_000, 4))

    def test_row_matches_bulk(self):
        D = iid(U12, 2, 2)
        assert np.array_equal(sample(D, 5, 9000), sample_many(D, 9001, 5)[9000])

    def test_frequencies_within_four_sigma(self):
        m = make_marginal([0, 1, 5], [0.2, 0.5, 0.3])
        V = sample_many(make_product([m], 1), 100_000, 11)[:, 0]
        for v, p in zip(m.values, m.probs):
            freq = np.mean(V == v)
            assert abs(freq - p) <= 4 * math.sqrt(p * (1 - p) / 100_000)


class TestValExpectation:
    def test_additive_linearity(self):
        D = make_product([([0, 2], [0.5, 0.5]), ([1], [1])], 2)
        assert val_expectation(D).value == 2

    def test_unit_demand_expected_max(self):
        # outcomes (1,1),(1,2),(2,1),(2,2): max is 1 once and 2 three times
        assert val_expectation(iid(U12, 2, 1)).value == pytest.approx(1.75)

    def test_k_demand_enumeration_matches_mc(self):
        D = iid(make_marginal([0, 1, 3], [0.3, 0.3, 0.4]), 4, 2)
        ex = val_expectation(D, mode="exact")
        mc = val_expectation(D, mode="mc", samples=50_000, seed=2)
        assert abs(ex.value - mc.value) <= 4 * mc.stderr


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(1, 10)), min_size=1, max_size=5))
def test_marginal_probs_normalised(atoms):
    values = [a for a, _ in atoms]
    weights = np.array([b for _, b in atoms], dtype=float)
    m = make_marginal(values, weights / weights.sum())
    assert abs(m.probs.sum() - 1) <= 1e-12
    assert np.all(np.diff(m.values) > 0)
