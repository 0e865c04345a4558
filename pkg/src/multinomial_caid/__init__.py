"""Capacity and capacity-achieving input distributions of the multinomial channel."""
from .ba import BaResult, blahut_arimoto, mutual_information
from .channel import AlphabetTooLarge, ChannelSpec, apply_noise, enumerate_outcomes, log_pmf, transition_matrix
from .dual import DegenerateObjective, DualConfig, DualReport, divergence_objective, maximize_divergence
from .mdab import MdabConfig, MdabError, MdabResult, create_direction_vector, mdab, solve_sequence
from .oracle import DegenerateFit, ScalingRecord, asymptotic_capacity, grid_capacity, scaling_fit
from .simplex import (
    AtomicDistribution,
    expand,
    kl_point,
    ordered_vertices,
    reduce_to_ordered,
    sample_ordered,
)

__version__ = "0.1.0"
