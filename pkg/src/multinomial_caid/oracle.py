"""Independent checks: brute-force lattice capacity, large-n asymptotics, scaling fit.

``grid_capacity`` shares only the channel model and Blahut-Arimoto with the
solver; it knows nothing about atoms, duals or ordered simplices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .ba import blahut_arimoto
from .channel import ChannelSpec, compositions, transition_matrix

MAX_GRID_POINTS = 10**6


class DegenerateFit(ValueError):
    """Raised when the support sizes do not vary, so no slope can be fitted."""


@dataclass(frozen=True)
class ScalingRecord:
    n: int
    k: int
    capacity_bits: float
    support_m: int

    @property
    def flagged(self) -> bool:
        # observed CAIDs always keep the k vertices
        return self.support_m < self.k


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    rmse: float


def simplex_lattice(k: int, resolution: float, cap: int = MAX_GRID_POINTS) -> np.ndarray:
    """Points of the simplex whose coordinates are multiples of ``resolution``."""
    if not 0 < resolution <= 0.5:
        raise ValueError("resolution must lie in (0, 0.5]")
    steps = round(1.0 / resolution)
    if abs(steps * resolution - 1.0) > 1e-9:
        raise ValueError(f"1/resolution must be an integer, got resolution={resolution}")
    return compositions(steps, k, cap) / steps


def grid_capacity(spec: ChannelSpec, resolution: float, tol: float = 1e-10,
                  max_iter: int = 100_000) -> float:
    """Mutual information (nats) of the best input supported on a uniform lattice.

    A lower bound on the capacity that tightens as ``resolution`` shrinks.
    """
    points = simplex_lattice(spec.k, resolution)
    W = transition_matrix(points, spec)
    return blahut_arimoto(W, tol=tol, max_iter=max_iter).mutual_info_nats


def asymptotic_capacity(spec: ChannelSpec) -> float:
    """Large-``n`` approximation of the capacity in nats.

    ``(k-1)/2 * log(n / (2 pi e)) + log(Gamma(1/2)**k / Gamma(k/2))``.
    Not a bound; it can be negative for small ``n``.
    """
    n, k = spec.n, spec.k
    return 0.5 * (k - 1) * math.log(n / (2.0 * math.pi * math.e)) + k * gammaln(0.5) - gammaln(0.5 * k)


def scaling_fit(records) -> ScalingFit:
    """Least-squares line of capacity (bits) against ``log2`` of the support size."""
    records = list(records)
    m = np.array([r.support_m for r in records], dtype=float)
    if len(records) < 2 or np.unique(m).size < 2:
        raise DegenerateFit("degenerate fit: support sizes do not vary")
    x = np.log2(m)
    y = np.array([r.capacity_bits for r in records])
    slope, intercept = np.polyfit(x, y, 1)
    rmse = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return ScalingFit(float(slope), float(intercept), rmse)
