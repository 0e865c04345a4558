"""Geometry of the probability simplex and of its ordered (sorted) subset.

Symmetric input distributions are stored as atoms on the ordered simplex, where
coordinates are nonincreasing. ``expand`` turns them back into distributions on
the full simplex by spreading each atom's weight over its distinct coordinate
permutations.
"""
from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.stats import qmc

DEDUP_TOL = 1e-9
SNAP_TOL = 1e-6


@dataclass(frozen=True)
class AtomicDistribution:
    """Finitely supported distribution on the simplex.

    ``orbit[i]`` is the index of the ordered atom that expanded atom ``i`` came
    from, when the distribution was produced by ``expand``.
    """

    locations: NDArray[np.float64]
    weights: NDArray[np.float64]
    orbit: NDArray[np.int64] | None = None

    def __len__(self):
        return len(self.weights)


def ordered_vertices(k: int) -> NDArray[np.float64]:
    """Vertices of the ordered simplex: row ``j`` is uniform over the first ``j + 1`` letters."""
    if k < 2:
        raise ValueError("k must be >= 2")
    v = np.zeros((k, k))
    for j in range(k):
        v[j, : j + 1] = 1.0 / (j + 1)
    return v


def canonicalize(point) -> NDArray[np.float64]:
    """Sort coordinates in descending order, clip tiny negatives and renormalize.

    Points already normalized to within 1e-12 are only sorted, so the map is idempotent.
    """
    p = -np.sort(-np.asarray(point, dtype=float), axis=-1)
    p = np.clip(p, 0.0, None)
    total = p.sum(axis=-1, keepdims=True)
    return np.where(np.abs(total - 1.0) > 1e-12, p / total, p)


def snap_ties(point, tol: float = SNAP_TOL) -> NDArray[np.float64]:
    """Replace runs of coordinates that agree within ``tol`` by their mean.

    The point is returned in descending order. Numerical optimizers only find
    symmetric optima up to their tolerance; snapping restores exact ties so
    ``expand`` counts the permutations of the symmetric point.
    """
    p = canonicalize(point)
    out = p.copy()
    start = 0
    for i in range(1, len(p) + 1):
        if i == len(p) or p[i - 1] - p[i] > tol:
            out[start:i] = p[start:i].mean()
            start = i
    return out


def reduce_to_ordered(points, tol: float = DEDUP_TOL) -> NDArray[np.float64]:
    """Canonical orbit representatives of ``points``, duplicates removed.

    Order of first appearance is kept.
    """
    pts = canonicalize(np.atleast_2d(points))
    kept: list[NDArray[np.float64]] = []
    for p in pts:
        if not any(np.max(np.abs(p - q)) <= tol for q in kept):
            kept.append(p)
    return np.array(kept).reshape(-1, pts.shape[1])


def _value_labels(point, tol: float) -> tuple[list[int], NDArray[np.float64]]:
    # equal coordinates (within tol) share a label; label 0 is the largest value
    reps: list[float] = []
    for v in sorted(point, reverse=True):
        if not reps or reps[-1] - v > tol:
            reps.append(v)
    labels = [min(range(len(reps)), key=lambda i: abs(v - reps[i])) for v in point]
    return labels, np.array(reps)


def _multiset_permutations(labels: list[int]):
    seq = sorted(labels)
    while True:
        yield tuple(seq)
        i = len(seq) - 2
        while i >= 0 and seq[i] >= seq[i + 1]:
            i -= 1
        if i < 0:
            return
        j = len(seq) - 1
        while seq[j] <= seq[i]:
            j -= 1
        seq[i], seq[j] = seq[j], seq[i]
        seq[i + 1 :] = reversed(seq[i + 1 :])


def num_distinct_permutations(point, tol: float = 1e-12) -> int:
    counts = Counter(_value_labels(np.asarray(point, dtype=float), tol)[0])
    out = math.factorial(sum(counts.values()))
    for c in counts.values():
        out //= math.factorial(c)
    return out


def distinct_permutations(point, tol: float = 1e-12) -> NDArray[np.float64]:
    """Every distinct rearrangement of ``point``'s coordinates, descending lexicographic order."""
    point = np.asarray(point, dtype=float)
    labels, values = _value_labels(point, tol)
    # ascending label order is descending value order
    perms = np.array(list(_multiset_permutations(labels)))
    return values[perms]


def expand(locations, weights) -> AtomicDistribution:
    """Symmetrize ordered atoms over all coordinate permutations.

    Each ordered atom's weight is split evenly among its distinct permutations.
    """
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    weights = np.asarray(weights, dtype=float)
    locs, ws, orbit = [], [], []
    for idx, (loc, w) in enumerate(zip(locations, weights)):
        perms = distinct_permutations(loc)
        locs.append(perms)
        ws.append(np.full(len(perms), w / len(perms)))
        orbit.append(np.full(len(perms), idx, dtype=np.int64))
    return AtomicDistribution(np.concatenate(locs), np.concatenate(ws), np.concatenate(orbit))


def kl_point(p, q) -> float:
    """KL divergence ``D(p || q)`` in nats between two points of the simplex."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def spacings_to_simplex(u: NDArray[np.float64]) -> NDArray[np.float64]:
    """Map cube points of dimension ``d`` to the simplex over ``d + 1`` letters.

    Sorted-spacings transform: uniform cube points give uniform simplex points.
    """
    u = np.sort(np.atleast_2d(u), axis=1)
    edges = np.concatenate([np.zeros((u.shape[0], 1)), u, np.ones((u.shape[0], 1))], axis=1)
    return np.diff(edges, axis=1)


def sobol_points(count: int, dim: int, seed: int) -> NDArray[np.float64]:
    """First ``count`` points of a scrambled Sobol sequence; prefixes are stable in ``count``."""
    sampler = qmc.Sobol(d=dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # balance properties need powers of two; the prefix property is what matters here
        warnings.simplefilter("ignore", UserWarning)
        return sampler.random(count)


def sample_ordered(count: int, k: int, seed: int = 0) -> NDArray[np.float64]:
    """Deterministic low-discrepancy points on the ordered simplex."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return canonicalize(spacings_to_simplex(sobol_points(count, k - 1, seed)))


def to_vertex_coords(x) -> NDArray[np.float64]:
    """Barycentric coordinates of ordered points with respect to ``ordered_vertices``.

    The ordered simplex is the convex hull of its vertices, and
    ``c_j = (j + 1) * (x_j - x_{j+1})``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    nxt = np.concatenate([x[:, 1:], np.zeros((x.shape[0], 1))], axis=1)
    return (x - nxt) * np.arange(1, x.shape[1] + 1)


def from_vertex_coords(c) -> NDArray[np.float64]:
    c = np.atleast_2d(np.asarray(c, dtype=float))
    return c @ ordered_vertices(c.shape[1])
