"""Utilities, search spaces, thresholds, and training weights."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfbo import (
    Dataset,
    DomainError,
    EmptyDatasetError,
    InvalidArgumentError,
    Observation,
    SearchSpace,
    ThresholdPolicy,
    Utility,
    UtilityKind,
    build_weights,
    eval_utility,
    select_threshold,
    utility_values,
)


def make_dataset(ys, lo=-1.0, hi=1.0):
    space = SearchSpace.continuous([(lo, hi)])
    xs = np.linspace(lo, hi, len(ys))
    obs = tuple(Observation(np.array([x]), float(y)) for x, y in zip(xs, ys))
    return Dataset(space, obs)


class TestUtility:
    def test_pi_is_strict_indicator(self):
        u = Utility.pi()
        assert eval_utility(u, 2.0, 1.0) == 1.0
        assert eval_utility(u, 1.0, 1.0) == 0.0  # exactly at threshold
        assert eval_utility(u, 0.5, 1.0) == 0.0

    def test_ei_is_hinge(self):
        u = Utility.ei()
        assert eval_utility(u, 3.5, 1.0) == 2.5
        assert eval_utility(u, 1.0, 1.0) == 0.0
        assert eval_utility(u, -4.0, 1.0) == 0.0

    def test_power_interpolates(self):
        y, tau = 3.0, 1.0
        assert eval_utility(Utility.power(0.0), y, tau) == 1.0
        assert eval_utility(Utility.power(1.0), y, tau) == 2.0
        assert eval_utility(Utility.power(0.5), y, tau) == pytest.approx(math.sqrt(2))
        assert eval_utility(Utility.power(2.0), y, tau) == 4.0

    def test_power_zero_exactly_at_threshold(self):
        # even the exponent-0 case must not turn 0**0 into 1
        assert eval_utility(Utility.power(0.0), 1.0, 1.0) == 0.0

    def test_power_requires_exponent(self):
        with pytest.raises(InvalidArgumentError):
            Utility(UtilityKind.POWER)
        with pytest.raises(InvalidArgumentError):
            Utility.power(-0.5)
        with pytest.raises(InvalidArgumentError):
            Utility.power(float("nan"))

    def test_non_power_rejects_exponent(self):
        with pytest.raises(InvalidArgumentError):
            Utility(UtilityKind.EXPECTED_IMPROVEMENT, exponent=1.0)

    def test_non_finite_inputs_rejected(self):
        with pytest.raises(InvalidArgumentError):
            eval_utility(Utility.ei(), float("nan"), 0.0)
        with pytest.raises(InvalidArgumentError):
            eval_utility(Utility.ei(), 0.0, float("inf"))

    def test_vectorized_matches_scalar(self):
        ys = np.array([-2.0, 0.0, 0.5, 1.0, 3.0])
        for u in (Utility.pi(), Utility.ei(), Utility.power(1.7)):
            vec = utility_values(u, ys, 0.5)
            scalar = [eval_utility(u, float(y), 0.5) for y in ys]
            np.testing.assert_allclose(vec, scalar)

    @given(
        y=st.floats(-1e6, 1e6),
        tau=st.floats(-1e6, 1e6),
        lam=st.floats(0.0, 4.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_power_nonnegative_and_zero_below(self, y, tau, lam):
        val = eval_utility(Utility.power(lam), y, tau)
        assert val >= 0.0
        if y <= tau:
            assert val == 0.0

    @given(
        y1=st.floats(-100.0, 100.0),
        y2=st.floats(-100.0, 100.0),
        tau=st.floats(-100.0, 100.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_ei_monotone_in_y(self, y1, y2, tau):
        lo, hi = min(y1, y2), max(y1, y2)
        assert eval_utility(Utility.ei(), lo, tau) <= eval_utility(
            Utility.ei(), hi, tau
        )


class TestSearchSpace:
    def test_continuous_factory(self):
        space = SearchSpace.continuous([(0.0, 1.0), (-2.0, 3.0)])
        assert space.dims == 2
        assert space.categorical_dims == ()
        assert space.is_valid(np.array([0.5, 0.0]))
        assert not space.is_valid(np.array([1.5, 0.0]))

    def test_bounds_must_ascend(self):
        with pytest.raises(InvalidArgumentError):
            SearchSpace.continuous([(1.0, 0.0)])

    def test_categorical_dims(self):
        space = SearchSpace(
            dims=2, bounds=((0.0, 1.0),), categorical_dims=((1, 3),)
        )
        assert space.category_counts == {1: 3}
        assert space.is_valid(np.array([0.5, 2.0]))
        assert not space.is_valid(np.array([0.5, 3.0]))  # code out of range
        assert not space.is_valid(np.array([0.5, 0.5]))  # non-integer code

    def test_validate_raises_domain_error(self):
        space = SearchSpace.continuous([(0.0, 1.0)])
        with pytest.raises(DomainError):
            space.validate(np.array([2.0]))

    def test_sampling_respects_space(self):
        space = SearchSpace(
            dims=3, bounds=((0.0, 1.0), (-5.0, 5.0)), categorical_dims=((1, 4),)
        )
        rng = np.random.default_rng(0)
        batch = space.sample_batch(rng, 200)
        assert batch.shape == (200, 3)
        for row in batch:
            assert space.is_valid(row)
        codes = set(batch[:, 1].astype(int))
        assert codes == {0, 1, 2, 3}

    def test_sampling_deterministic(self):
        space = SearchSpace.continuous([(0.0, 1.0), (2.0, 3.0)])
        a = space.sample_batch(np.random.default_rng(7), 5)
        b = space.sample_batch(np.random.default_rng(7), 5)
        np.testing.assert_array_equal(a, b)


class TestThreshold:
    def test_linear_interpolation_quantile(self):
        # ten evenly ranked outcomes: the 0.67 quantile interpolates to 7.03
        ds = make_dataset(np.arange(1.0, 11.0))
        tau = select_threshold(ds, ThresholdPolicy(gamma=0.33))
        assert tau == pytest.approx(7.03, abs=1e-12)

    def test_empty_dataset_rejected(self):
        ds = Dataset(SearchSpace.continuous([(0.0, 1.0)]))
        with pytest.raises(EmptyDatasetError):
            select_threshold(ds, ThresholdPolicy())

    def test_gamma_bounds_enforced(self):
        with pytest.raises(InvalidArgumentError):
            ThresholdPolicy(gamma=0.0)
        with pytest.raises(InvalidArgumentError):
            ThresholdPolicy(gamma=1.0)

    @given(
        ys=st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40),
        gamma=st.floats(0.01, 0.99),
    )
    @settings(max_examples=200, deadline=None)
    def test_threshold_within_observed_range(self, ys, gamma):
        ds = make_dataset(np.asarray(ys))
        tau = select_threshold(ds, ThresholdPolicy(gamma=gamma))
        assert min(ys) <= tau <= max(ys)

    @given(
        ys=st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40, unique=True),
        g1=st.floats(0.05, 0.45),
        g2=st.floats(0.5, 0.95),
    )
    @settings(max_examples=100, deadline=None)
    def test_threshold_monotone_in_gamma(self, ys, g1, g2):
        # larger gamma labels more points positive, so the cut moves down
        ds = make_dataset(np.asarray(ys))
        t_small = select_threshold(ds, ThresholdPolicy(gamma=g1))
        t_large = select_threshold(ds, ThresholdPolicy(gamma=g2))
        assert t_large <= t_small


class TestWeights:
    def test_ei_weights_normalized(self):
        # hinge utilities 0, 1, 4 rescale so positives average exactly one
        ds = make_dataset([5.0, 8.03, 11.03])
        w = build_weights(ds, Utility.ei(), 7.03)
        np.testing.assert_allclose(w, [0.0, 0.4, 1.6], atol=1e-12)

    def test_pi_weights_are_binary(self):
        ds = make_dataset([1.0, 2.0, 3.0, 4.0])
        w = build_weights(ds, Utility.pi(), 2.5)
        np.testing.assert_array_equal(w, [0.0, 0.0, 1.0, 1.0])

    def test_unnormalized_keeps_raw_scale(self):
        ds = make_dataset([5.0, 8.03, 11.03])
        w = build_weights(ds, Utility.ei(), 7.03, normalize=False)
        np.testing.assert_allclose(w, [0.0, 1.0, 4.0], atol=1e-12)

    def test_all_zero_weights_pass_through(self):
        ds = make_dataset([1.0, 2.0])
        w = build_weights(ds, Utility.ei(), 5.0)
        np.testing.assert_array_equal(w, [0.0, 0.0])

    @given(
        ys=st.lists(st.floats(-100.0, 100.0), min_size=2, max_size=30),
        gamma=st.floats(0.05, 0.95),
        lam=st.floats(0.0, 3.0),
    )
    @settings(max_examples=150, deadline=None)
    def test_normalized_positives_average_one(self, ys, gamma, lam):
        ds = make_dataset(np.asarray(ys))
        tau = select_threshold(ds, ThresholdPolicy(gamma=gamma))
        w = build_weights(ds, Utility.power(lam), tau)
        assert np.all(w >= 0)
        pos = w[w > 0]
        if pos.size:
            assert np.mean(pos) == pytest.approx(1.0, abs=1e-9)


class TestObservationDataset:
    def test_observation_immutable_copy(self):
        x = np.array([0.5])
        obs = Observation(x, 1.0)
        x[0] = 99.0
        assert obs.x[0] == 0.5
        with pytest.raises(ValueError):
            obs.x[0] = 3.0  # read-only view

    def test_observation_requires_finite(self):
        with pytest.raises(InvalidArgumentError):
            Observation(np.array([float("nan")]), 1.0)
        with pytest.raises(InvalidArgumentError):
            Observation(np.array([0.0]), float("inf"))

    def test_append_is_persistent(self):
        space = SearchSpace.continuous([(0.0, 1.0)])
        d0 = Dataset(space)
        d1 = d0.append(Observation(np.array([0.3]), 1.0))
        assert d0.n == 0 and d1.n == 1
        np.testing.assert_array_equal(d1.xs, [[0.3]])
        np.testing.assert_array_equal(d1.ys, [1.0])
