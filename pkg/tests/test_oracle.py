import math

import numpy as np
import pytest

from multinomial_caid.channel import AlphabetTooLarge, ChannelSpec
from multinomial_caid.mdab import solve_sequence
from multinomial_caid.oracle import (
    DegenerateFit,
    ScalingRecord,
    asymptotic_capacity,
    grid_capacity,
    scaling_fit,
    simplex_lattice,
)

BA_TOL = 1e-10


class TestLattice:
    def test_size(self):
        assert simplex_lattice(3, 0.25).shape == (15, 3)
        np.testing.assert_allclose(simplex_lattice(4, 0.1).sum(axis=1), 1.0)

    @pytest.mark.parametrize("res", [0.0, 0.6, 0.3])
    def test_bad_resolution(self, res):
        with pytest.raises(ValueError):
            simplex_lattice(2, res)

    def test_cap(self):
        with pytest.raises(AlphabetTooLarge):
            simplex_lattice(5, 0.001)


class TestGridCapacity:
    def test_binary_single_read(self):
        assert grid_capacity(ChannelSpec(1, 2), 0.5) == pytest.approx(math.log(2), abs=BA_TOL)

    def test_quaternary_single_read(self):
        assert grid_capacity(ChannelSpec(1, 4), 0.25) == pytest.approx(math.log(4), abs=BA_TOL)

    def test_dyadic_refinement_is_monotone(self):
        for spec in [ChannelSpec(3, 2), ChannelSpec(2, 3)]:
            values = [grid_capacity(spec, r) for r in (0.5, 0.25, 0.125, 0.0625)]
            # nested lattices; each value is only within BA_TOL of its own optimum
            assert np.all(np.diff(values) >= -BA_TOL)

    def test_below_mdab(self):
        for res in solve_sequence(3, 3):
            for r in (0.5, 0.25, 0.1):
                assert grid_capacity(res.spec, r) <= res.capacity_nats + 1e-9

    def test_binary_two_reads_reference(self):
        # exact CAID lies on the 0.5 lattice; finer lattices reproduce it
        assert grid_capacity(ChannelSpec(2, 2), 0.05) == pytest.approx(0.7537718023763801, abs=1e-9)


class TestAsymptotic:
    def test_binary_formula(self):
        for n in (1, 5, 100):
            expected = 0.5 * math.log(n / (2 * math.pi * math.e)) + math.log(math.pi)
            assert asymptotic_capacity(ChannelSpec(n, 2)) == pytest.approx(expected, abs=1e-12)

    def test_negative_for_tiny_n(self):
        assert asymptotic_capacity(ChannelSpec(1, 3)) < 0

    def test_residual_shrinks(self, sequences):
        for k in (2, 3):
            seq = sequences(k)
            resid = [abs(r.capacity_nats - asymptotic_capacity(r.spec)) for r in seq[3:]]
            assert resid[-1] < resid[0]


class TestScalingFit:
    def test_exact_line(self):
        recs = [ScalingRecord(n, 2, 0.75 * math.log2(m), m) for n, m in enumerate([2, 4, 9, 30], 1)]
        fit = scaling_fit(recs)
        assert fit.slope == pytest.approx(0.75, abs=1e-12)
        assert fit.intercept == pytest.approx(0.0, abs=1e-12)
        assert fit.rmse == pytest.approx(0.0, abs=1e-12)

    def test_constant_capacity(self):
        recs = [ScalingRecord(n, 3, 1.5, m) for n, m in enumerate([3, 6, 7, 10], 1)]
        fit = scaling_fit(recs)
        assert fit.slope == pytest.approx(0.0, abs=1e-12)
        assert fit.intercept == pytest.approx(1.5)

    def test_degenerate(self):
        with pytest.raises(DegenerateFit):
            scaling_fit([ScalingRecord(1, 2, 1.0, 2)])
        with pytest.raises(DegenerateFit):
            scaling_fit([ScalingRecord(n, 2, float(n), 3) for n in range(1, 5)])

    def test_flagged_records(self):
        assert ScalingRecord(1, 4, 1.0, 3).flagged
        assert not ScalingRecord(1, 4, 2.0, 4).flagged
