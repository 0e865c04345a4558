"""The multinomial channel: output alphabet, transition probabilities, flip noise.

An input symbol is a point ``x`` of the probability simplex over ``k`` letters.
The output is the vector of letter counts observed in ``n`` independent reads
drawn from ``x``. All probabilities are computed in the log domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.special import gammaln, xlogy

MAX_OUTCOMES = 10**7


class AlphabetTooLarge(ValueError):
    """Raised when an enumeration would exceed its configured size cap."""


@dataclass(frozen=True)
class ChannelSpec:
    n: int
    k: int
    flip_eps: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"k must be an integer >= 2, got {self.k!r}")
        if not 0.0 <= self.flip_eps < 1.0:
            raise ValueError(f"flip_eps must lie in [0, 1), got {self.flip_eps!r}")

    @property
    def num_outcomes(self) -> int:
        return math.comb(self.n + self.k - 1, self.k - 1)


def compositions(total: int, parts: int, cap: int = MAX_OUTCOMES) -> NDArray[np.int64]:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``.

    Rows come in lexicographically descending order, so ``(total, 0, ..., 0)``
    is first and ``(0, ..., 0, total)`` is last.
    """
    count = math.comb(total + parts - 1, parts - 1)
    if count > cap:
        raise AlphabetTooLarge(
            f"alphabet too large: {count} compositions of {total} into {parts} parts (cap {cap})"
        )
    return _compositions(total, parts)


@lru_cache(maxsize=64)
def _compositions(total: int, parts: int) -> NDArray[np.int64]:
    if parts == 1:
        out = np.array([[total]], dtype=np.int64)
    else:
        blocks = []
        for head in range(total, -1, -1):
            tail = _compositions(total - head, parts - 1)
            block = np.empty((tail.shape[0], parts), dtype=np.int64)
            block[:, 0] = head
            block[:, 1:] = tail
            blocks.append(block)
        out = np.concatenate(blocks)
    out.setflags(write=False)
    return out


def enumerate_outcomes(spec: ChannelSpec, cap: int = MAX_OUTCOMES) -> NDArray[np.int64]:
    """Output alphabet of the channel, one count vector per row, in canonical order."""
    return compositions(spec.n, spec.k, cap)


def log_pmf(x, y, n: int) -> float:
    """Log-probability (nats) of observing counts ``y`` from ``n`` reads of ``x``.

    Uses ``0 ** 0 == 1``; returns ``-inf`` when a letter with zero probability
    has a positive count. Terms are summed with ``math.fsum`` so the value does
    not depend on the order of the letters.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if y.sum() != n:
        raise ValueError(f"counts {y.tolist()} do not sum to n={n}")
    logs = xlogy(y, x)
    if np.isneginf(logs).any():
        return -math.inf
    terms = [float(gammaln(n + 1))]
    terms.extend((-gammaln(y + 1.0)).tolist())
    terms.extend(logs.tolist())
    return math.fsum(terms)


def apply_noise(x, flip_eps: float, k: int | None = None) -> NDArray[np.float64]:
    """Effective input after a symmetric flip channel with total flip probability ``flip_eps``.

    Each letter keeps its identity with probability ``1 - flip_eps`` and moves
    to each of the other ``k - 1`` letters with probability ``flip_eps / (k - 1)``.
    Works row-wise on a 2-D array of points.
    """
    x = np.asarray(x, dtype=float)
    if k is None:
        k = x.shape[-1]
    if flip_eps == 0.0:
        return x.copy()
    return x * (1.0 - flip_eps) + flip_eps * (1.0 - x) / (k - 1)


def log_coefficients(outcomes: NDArray[np.int64]) -> NDArray[np.float64]:
    """``log(n! / prod(y_j!))`` for each outcome row."""
    n = int(outcomes[0].sum())
    return gammaln(n + 1) - gammaln(outcomes + 1.0).sum(axis=1)


def log_pmf_rows(points, outcomes: NDArray[np.int64], log_coef=None) -> NDArray[np.float64]:
    """Matrix of log-probabilities, one row per point and one column per outcome.

    The count-times-log-probability sum is accumulated one letter at a time,
    which keeps every entry independent of how many points are in the batch.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if log_coef is None:
        log_coef = log_coefficients(outcomes)
    with np.errstate(divide="ignore"):
        logx = np.log(points)
    out = np.broadcast_to(log_coef, (points.shape[0], outcomes.shape[0])).copy()
    for j in range(outcomes.shape[1]):
        counts = outcomes[:, j]
        hit = counts > 0
        col = logx[:, j : j + 1]
        out[:, hit] += col * counts[hit]
    return out


def transition_matrix(locations, spec: ChannelSpec) -> NDArray[np.float64]:
    """Row-stochastic matrix ``W[i, j] = P(outcome_j | locations[i])`` for the (noisy) channel."""
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    outcomes = enumerate_outcomes(spec)
    effective = apply_noise(locations, spec.flip_eps, spec.k)
    return np.exp(log_pmf_rows(effective, outcomes))
