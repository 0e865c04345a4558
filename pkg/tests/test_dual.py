import math

import numpy as np
import pytest

from multinomial_caid.ba import blahut_arimoto, mutual_information
from multinomial_caid.channel import ChannelSpec, transition_matrix
from multinomial_caid.dual import (
    DegenerateObjective,
    DualConfig,
    divergence_objective,
    maximize_divergence,
)
from multinomial_caid.mdab import solve_sequence
from multinomial_caid.simplex import expand, ordered_vertices


def induced_output(locs, spec, weights=None):
    dist = expand(locs, np.ones(len(locs)) if weights is None else weights)
    W = transition_matrix(dist.locations, spec)
    if weights is None:
        return blahut_arimoto(W)
    return dist.weights @ W


class TestDivergenceObjective:
    def test_single_atom_gives_zero(self):
        spec = ChannelSpec(3, 3)
        x = np.array([0.5, 0.3, 0.2])
        py = transition_matrix(x, spec)[0]
        assert divergence_objective(x, py, spec) == pytest.approx(0.0, abs=1e-15)

    def test_vertex_against_uniform(self):
        assert divergence_objective([1, 0], [0.5, 0.5], ChannelSpec(1, 2)) == pytest.approx(math.log(2))

    def test_infinite_when_outcome_unreachable(self):
        spec = ChannelSpec(2, 2)
        assert divergence_objective([0.5, 0.5], [0.5, 0.0, 0.5], spec) == math.inf
        assert divergence_objective([1.0, 0.0], [0.5, 0.0, 0.5], spec) == pytest.approx(math.log(2))

    def test_noise_is_applied(self):
        spec = ChannelSpec(1, 2, 0.5)
        assert divergence_objective([1, 0], [0.5, 0.5], spec) == pytest.approx(0.0, abs=1e-15)


class TestMaximizeDivergence:
    def test_binary_single_read(self):
        rep = maximize_divergence([0.5, 0.5], ChannelSpec(1, 2))
        assert rep.max_divergence_nats == pytest.approx(math.log(2), abs=1e-12)
        np.testing.assert_allclose(rep.maximizer, [1.0, 0.0], atol=1e-9)

    def test_maximizer_is_ordered(self):
        rng = np.random.default_rng(0)
        spec = ChannelSpec(4, 4)
        locs = -np.sort(-rng.dirichlet(np.ones(4), size=3), axis=1)
        ba = induced_output(locs, spec)
        rep = maximize_divergence(ba.output_dist, spec, DualConfig(starts=32))
        x = rep.maximizer
        assert np.all(np.diff(x) <= 0)
        assert x.sum() == pytest.approx(1.0, abs=1e-12)
        assert rep.max_divergence_nats == pytest.approx(divergence_objective(x, ba.output_dist, spec), abs=1e-10)

    def test_weak_duality(self):
        rng = np.random.default_rng(1)
        for k, n in [(2, 5), (3, 4), (4, 3)]:
            spec = ChannelSpec(n, k)
            locs = -np.sort(-rng.dirichlet(np.ones(k), size=3), axis=1)
            weights = rng.dirichlet(np.ones(3))
            dist = expand(locs, weights)
            W = transition_matrix(dist.locations, spec)
            py = dist.weights @ W
            mi = mutual_information(dist.weights, W)
            rep = maximize_divergence(py, spec, DualConfig(starts=16))
            assert rep.max_divergence_nats >= mi - 1e-10

    def test_more_starts_never_worse(self):
        spec = ChannelSpec(6, 3)
        ba = induced_output(np.array([[1, 0, 0], [0.5, 0.3, 0.2]]), spec)
        values = [maximize_divergence(ba.output_dist, spec, DualConfig(starts=s)).max_divergence_nats
                  for s in (4, 16, 64)]
        assert values[0] <= values[1] <= values[2]

    def test_deterministic(self):
        spec = ChannelSpec(5, 4)
        ba = induced_output(ordered_vertices(4), spec)
        a = maximize_divergence(ba.output_dist, spec, DualConfig(starts=24, seed=3))
        b = maximize_divergence(ba.output_dist, spec, DualConfig(starts=24, seed=3))
        assert a.max_divergence_nats == b.max_divergence_nats
        np.testing.assert_array_equal(a.maximizer, b.maximizer)

    def test_degenerate_objective(self):
        with pytest.raises(DegenerateObjective):
            maximize_divergence([0.5, 0.0, 0.5], ChannelSpec(2, 2))


@pytest.fixture(scope="module")
def setup():
    prev = solve_sequence(6, 3)[-1]
    spec = ChannelSpec(7, 3)
    ba = induced_output(prev.ordered_atoms, spec)
    return prev, spec, ba


class TestFirstMoveFromThreeAtoms:
    """First M-DAB iteration for n = 7, k = 3, warm-started from the n = 6 atoms."""

    def test_three_ordered_atoms(self, setup):
        prev, _, _ = setup
        assert len(prev.ordered_atoms) == 3
        # the atom the first move starts from
        assert np.any(np.max(np.abs(prev.ordered_atoms - [0.682, 0.318, 0.0]), axis=1) < 0.005)

    def test_maximizer_location(self, setup):
        prev, spec, ba = setup
        rep = maximize_divergence(ba.output_dist, spec, atoms=prev.ordered_atoms)
        assert np.max(np.abs(rep.maximizer - [0.616, 0.192, 0.192])) <= 0.02

    def test_reference_point_beats_atoms(self, setup):
        prev, spec, ba = setup
        at_max = divergence_objective([0.616, 0.192, 0.192], ba.output_dist, spec)
        for atom in prev.ordered_atoms:
            assert at_max > divergence_objective(atom, ba.output_dist, spec)


def test_equalization_binomial_two_reads():
    res = solve_sequence(2, 2)[-1]
    rep = maximize_divergence(res.caid.weights @ transition_matrix(res.caid.locations, res.spec), res.spec)
    # grid oracle (resolution 0.5 contains the CAID support exactly): 0.7537718023763801 nats
    assert res.capacity_nats == pytest.approx(0.7537718023763801, abs=1e-9)
    assert rep.max_divergence_nats == pytest.approx(res.capacity_nats, abs=1e-6)
