"""Blahut-Arimoto weight optimization for a fixed set of input atoms."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.special import xlogy


@dataclass
class BaResult:
    weights: NDArray[np.float64]
    mutual_info_nats: float
    output_dist: NDArray[np.float64]
    iterations: int
    converged: bool
    upper_bound_nats: float
    divergences: NDArray[np.float64]
    history: list[float] = field(default_factory=list)


def row_divergences(W: NDArray[np.float64], output_dist: NDArray[np.float64], neg_entropy=None):
    """``D(W_i || output_dist)`` for every row ``i`` (nats).

    Rows that put mass on an outcome where ``output_dist`` is zero get ``inf``.
    """
    if neg_entropy is None:
        neg_entropy = xlogy(W, W).sum(axis=1)
    positive = output_dist > 0
    if positive.all():
        return neg_entropy - W @ np.log(output_dist)
    d = neg_entropy - W[:, positive] @ np.log(output_dist[positive])
    return np.where((W[:, ~positive] > 0).any(axis=1), np.inf, d)


def mutual_information(weights, W) -> float:
    """``I(X;Y)`` in nats for input weights over the rows of ``W``."""
    weights = np.asarray(weights, dtype=float)
    W = np.asarray(W, dtype=float)
    py = weights @ W
    used = weights > 0
    return float(weights[used] @ row_divergences(W[used], py))


def blahut_arimoto(
    W,
    tol: float = 1e-9,
    max_iter: int = 100_000,
    init=None,
    record: bool = False,
) -> BaResult:
    """Capacity-achieving weights for the rows of the transition matrix ``W``.

    Stops when ``max_i D(W_i || P_Y) - I`` falls below ``tol``; both sides of
    that gap bound the capacity of the discrete channel ``W``. ``init`` gives
    starting weights (strictly positive); uniform by default.
    """
    W = np.asarray(W, dtype=float)
    m = W.shape[0]
    if init is None:
        w = np.full(m, 1.0 / m)
    else:
        w = np.asarray(init, dtype=float).copy()
        if w.shape != (m,) or np.any(w <= 0):
            raise ValueError("init must be a strictly positive vector with one entry per row")
        w /= w.sum()
    neg_entropy = xlogy(W, W).sum(axis=1)
    history: list[float] = []
    converged = False
    it = 0
    while True:
        py = w @ W
        d = row_divergences(W, py, neg_entropy)
        mi = float(w @ d)
        upper = float(d.max())
        if record:
            history.append(mi)
        if upper - mi < tol:
            converged = True
            break
        if it >= max_iter:
            break
        it += 1
        w = w * np.exp(d - upper)
        w /= w.sum()
    return BaResult(w, mi, py, it, converged, upper, d, history)
