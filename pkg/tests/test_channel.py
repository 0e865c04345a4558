import math

import numpy as np
import pytest

from multinomial_caid.channel import (
    AlphabetTooLarge,
    ChannelSpec,
    apply_noise,
    enumerate_outcomes,
    log_pmf,
    transition_matrix,
)
from multinomial_caid.simplex import expand

from .reference_caids import reference_locations_weights


class TestChannelSpec:
    @pytest.mark.parametrize("n,k,eps", [(0, 4, 0.0), (1, 1, 0.0), (2, 3, 1.0), (2, 3, -0.1), (1.5, 2, 0.0)])
    def test_rejects_invalid(self, n, k, eps):
        with pytest.raises(ValueError):
            ChannelSpec(n, k, eps)

    def test_num_outcomes(self):
        assert ChannelSpec(2, 4).num_outcomes == 10


class TestEnumerateOutcomes:
    def test_single_read_gives_unit_vectors(self):
        out = enumerate_outcomes(ChannelSpec(1, 4))
        np.testing.assert_array_equal(out, np.eye(4, dtype=int))

    def test_two_reads_four_letters(self):
        assert len(enumerate_outcomes(ChannelSpec(2, 4))) == math.comb(5, 3) == 10

    def test_binary_order_is_descending(self):
        out = enumerate_outcomes(ChannelSpec(3, 2))
        assert out.tolist() == [[3, 0], [2, 1], [1, 2], [0, 3]]

    @pytest.mark.parametrize("n", range(1, 13))
    @pytest.mark.parametrize("k", range(2, 6))
    def test_cardinality_and_sums(self, n, k):
        out = enumerate_outcomes(ChannelSpec(n, k))
        assert len(out) == math.comb(n + k - 1, k - 1)
        assert np.all(out.sum(axis=1) == n)
        assert len({tuple(r) for r in out.tolist()}) == len(out)
        # lexicographically descending
        rows = [tuple(r) for r in out.tolist()]
        assert rows == sorted(rows, reverse=True)

    def test_cap(self):
        with pytest.raises(AlphabetTooLarge, match="alphabet too large"):
            enumerate_outcomes(ChannelSpec(10, 4), cap=100)


class TestLogPmf:
    def test_deterministic_input(self):
        assert log_pmf([1.0, 0.0], [3, 0], 3) == 0.0

    def test_fair_coin(self):
        assert log_pmf([0.5, 0.5], [1, 1], 2) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_uniform_four_letters(self):
        # 4! * 0.25**4 = 24 / 256
        assert log_pmf([0.25] * 4, [1, 1, 1, 1], 4) == pytest.approx(math.log(0.09375), abs=1e-14)

    def test_impossible_outcome(self):
        assert log_pmf([1.0, 0.0], [2, 1], 3) == -math.inf

    def test_counts_must_sum_to_n(self):
        with pytest.raises(ValueError):
            log_pmf([0.5, 0.5], [1, 1], 3)

    def test_permutation_equivariance_exact(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            x = rng.dirichlet(np.ones(5))
            y = rng.multinomial(7, x)
            perm = rng.permutation(5)
            assert log_pmf(x[perm], y[perm], 7) == log_pmf(x, y, 7)


class TestApplyNoise:
    def test_zero_noise_is_identity(self):
        x = np.array([0.2, 0.3, 0.5])
        np.testing.assert_array_equal(apply_noise(x, 0.0), x)

    def test_binary_full_mixing(self):
        np.testing.assert_allclose(apply_noise([1.0, 0.0], 0.5, 2), [0.5, 0.5], atol=1e-15)

    def test_four_letters(self):
        out = apply_noise([1.0, 0.0, 0.0, 0.0], 0.3, 4)
        np.testing.assert_allclose(out, [0.7, 0.1, 0.1, 0.1], atol=1e-15)
        assert out.sum() == pytest.approx(1.0, abs=1e-15)


class TestTransitionMatrix:
    def test_binary_vertices_single_read(self):
        np.testing.assert_array_equal(transition_matrix([[1, 0], [0, 1]], ChannelSpec(1, 2)), np.eye(2))

    def test_binomial_rows(self):
        W = transition_matrix([[1, 0], [0.5, 0.5]], ChannelSpec(2, 2))
        np.testing.assert_allclose(W, [[1, 0, 0], [0.25, 0.5, 0.25]], atol=1e-15)

    def test_reference_n2_matrix(self):
        locs, weights = reference_locations_weights(2)
        dist = expand(locs, weights)
        W = transition_matrix(dist.locations, ChannelSpec(2, 4))
        assert W.shape == (10, 10)
        np.testing.assert_allclose(W.sum(axis=1), 1.0, atol=1e-10)
        assert np.all(W >= 0)

    def test_noisy_rows_still_stochastic(self):
        W = transition_matrix([[1, 0, 0], [0.2, 0.3, 0.5]], ChannelSpec(4, 3, 0.2))
        np.testing.assert_allclose(W.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(W > 0)
