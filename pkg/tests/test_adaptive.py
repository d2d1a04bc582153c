import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conformalts.adaptive import (
    AciState,
    SlidingScoreWindow,
    aci_update,
    init_gamma,
    sample_without_replacement,
)


class TestAciUpdate:
    def test_cover_raises_level(self):
        state = AciState.fresh(0.1, 0.005, 1)
        aci_update(state, 1, covered=True)
        assert state.alphas[0] == pytest.approx(0.1005, abs=1e-15)

    def test_miss_lowers_level(self):
        state = AciState.fresh(0.1, 0.005, 1)
        aci_update(state, 1, covered=False)
        assert state.alphas[0] == pytest.approx(0.0955, abs=1e-15)

    def test_clamps_at_zero(self):
        state = AciState.fresh(0.1, 0.005, 1)
        state.alphas[0] = 0.002
        aci_update(state, 1, covered=False)
        assert state.alphas[0] == 0.0

    def test_clamps_at_one(self):
        state = AciState.fresh(0.9, 0.5, 1)
        state.alphas[0] = 0.95
        aci_update(state, 1, covered=True)
        assert state.alphas[0] == 1.0

    def test_updates_only_requested_step(self):
        state = AciState.fresh(0.1, 0.01, 4)
        aci_update(state, 3, covered=False)
        np.testing.assert_array_equal(state.alphas[[0, 1, 3]], 0.1)
        assert state.alphas[2] != 0.1

    def test_step_out_of_range(self):
        state = AciState.fresh(0.1, 0.01, 2)
        with pytest.raises(ValueError):
            aci_update(state, 0, covered=True)
        with pytest.raises(ValueError):
            aci_update(state, 3, covered=True)

    def test_all_covered_telescopes(self):
        # k straight covers move the level to alpha * (1 + k * gamma)
        alpha, gamma, k = 0.1, 0.002, 7
        state = AciState.fresh(alpha, gamma, 1)
        for _ in range(k):
            aci_update(state, 1, covered=True)
        assert state.alphas[0] == pytest.approx(alpha * (1 + k * gamma), rel=1e-12)

    @given(
        outcomes=st.lists(st.booleans(), min_size=1, max_size=60),
        gamma=st.floats(1e-5, 2e-3),
    )
    def test_matches_closed_form_without_clamping(self, outcomes, gamma):
        alpha = 0.5
        state = AciState.fresh(alpha, gamma, 1)
        for covered in outcomes:
            aci_update(state, 1, covered)
        n_cov = sum(outcomes)
        n_miss = len(outcomes) - n_cov
        expected = alpha + gamma * (n_cov * alpha - n_miss * (1 - alpha))
        assert state.alphas[0] == pytest.approx(expected, rel=1e-9)

    def test_fresh_validates(self):
        with pytest.raises(ValueError):
            AciState.fresh(0.0, 0.01, 1)
        with pytest.raises(ValueError):
            AciState.fresh(0.1, -0.01, 1)
        with pytest.raises(ValueError):
            AciState.fresh(0.1, 0.01, 0)

    def test_fresh_levels_start_at_target(self):
        state = AciState.fresh(0.2, 0.01, 5)
        np.testing.assert_array_equal(state.alphas, np.full(5, 0.2))


class TestInitGamma:
    def test_scores_dominate(self):
        assert init_gamma(100, 543) == 1.0 / 543

    def test_window_dominates(self):
        assert init_gamma(100, 50) == 1.0 / 100

    def test_tie(self):
        assert init_gamma(100, 100) == 0.01

    def test_validates(self):
        with pytest.raises(ValueError):
            init_gamma(0, 5)
        with pytest.raises(ValueError):
            init_gamma(5, 0)


class TestSlidingScoreWindow:
    def test_fifo_eviction(self):
        w = SlidingScoreWindow(capacity=3)
        for v in (1.0, 2.0, 3.0, 4.0, 5.0):
            w.push(v)
        np.testing.assert_array_equal(w.values(), [3.0, 4.0, 5.0])

    def test_len_grows_to_capacity(self):
        w = SlidingScoreWindow(capacity=3)
        assert len(w) == 0
        w.push(1.0)
        assert len(w) == 1
        for v in range(10):
            w.push(float(v))
        assert len(w) == 3

    def test_values_keep_insertion_order(self):
        w = SlidingScoreWindow(capacity=4)
        for v in (4.0, 1.0, 3.0):
            w.push(v)
        np.testing.assert_array_equal(w.values(), [4.0, 1.0, 3.0])

    def test_rejects_nonfinite(self):
        w = SlidingScoreWindow(capacity=2)
        with pytest.raises(ValueError):
            w.push(np.nan)
        with pytest.raises(ValueError):
            w.push(np.inf)

    def test_rejects_bad_capacity(self):
        with pytest.raises(ValueError):
            SlidingScoreWindow(capacity=0)

    @given(st.lists(st.floats(-100, 100, allow_nan=False), max_size=30), st.integers(1, 8))
    def test_contents_are_last_capacity_pushes(self, values, capacity):
        w = SlidingScoreWindow(capacity=capacity)
        for v in values:
            w.push(v)
        np.testing.assert_array_equal(w.values(), values[-capacity:])


class TestSampleWithoutReplacement:
    def test_small_set_kept_whole(self):
        w = sample_without_replacement([3.0, 1.0, 2.0], 10, seed=0)
        np.testing.assert_array_equal(w.values(), [3.0, 1.0, 2.0])

    def test_small_set_capacity_shrinks_to_fit(self):
        # the window must stay at its starting size: one push, one eviction
        w = sample_without_replacement([3.0, 1.0, 2.0], 10, seed=0)
        w.push(9.0)
        np.testing.assert_array_equal(w.values(), [1.0, 2.0, 9.0])
        assert len(w) == 3

    def test_large_set_thinned_to_capacity(self):
        scores = np.arange(100.0)
        w = sample_without_replacement(scores, 10, seed=1)
        vals = w.values()
        assert vals.size == 10
        assert set(vals) <= set(scores)

    def test_kept_scores_preserve_relative_order(self):
        scores = np.arange(50.0)
        w = sample_without_replacement(scores, 20, seed=3)
        vals = w.values()
        assert np.all(np.diff(vals) > 0)

    def test_deterministic_per_seed(self):
        scores = np.random.default_rng(8).normal(size=200)
        a = sample_without_replacement(scores, 30, seed=11).values()
        b = sample_without_replacement(scores, 30, seed=11).values()
        c = sample_without_replacement(scores, 30, seed=12).values()
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_no_duplicates_drawn(self):
        scores = np.arange(1000.0)
        vals = sample_without_replacement(scores, 500, seed=2).values()
        assert np.unique(vals).size == 500

    def test_inclusion_frequency_uniform(self, rng):
        # every score should be kept with probability capacity / n
        n, capacity, trials = 40, 10, 3000
        scores = np.arange(float(n))
        counts = np.zeros(n)
        for t in range(trials):
            kept = sample_without_replacement(scores, capacity, seed=t).values()
            counts[kept.astype(int)] += 1
        freq = counts / trials
        expected = capacity / n
        assert np.all(np.abs(freq - expected) < 0.035)
