"""Multidimensional dynamic-assignment Blahut-Arimoto (M-DAB).

Atoms live on the ordered simplex. Each outer iteration optimizes the weights
of the symmetrized atoms with Blahut-Arimoto, finds the input that maximizes
the divergence from the induced output distribution, and then either adds the
ordered-simplex vertex nearest that maximizer or slides the nearest atom toward
it by a line search on the mutual information. It stops once the primal value
(mutual information) and the dual value (maximal divergence) are within
``eps_gap`` nats.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .ba import BaResult, blahut_arimoto
from .channel import ChannelSpec, transition_matrix
from .dual import DualConfig, DualReport, maximize_divergence
from .simplex import (
    AtomicDistribution,
    DEDUP_TOL,
    canonicalize,
    expand,
    kl_point,
    ordered_vertices,
    snap_ties,
)

log = logging.getLogger(__name__)

ADD_GUARD = 1e-6
STALL_IMPROVEMENT = 1e-13
STALL_LIMIT = 3
UNSEEN_MASS = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class MdabConfig:
    eps_gap: float = 1e-4
    max_outer_iter: int = 500
    grid_points: int = 32
    refine_tol: float = 1e-6
    dual: DualConfig = field(default_factory=DualConfig)
    prune_weight: float = 1e-7
    ba_tol: float = 1e-9
    ba_max_iter: int = 100_000

    def __post_init__(self):
        if self.eps_gap <= 0:
            raise ValueError("eps_gap must be positive")

    def as_dict(self) -> dict:
        return {
            "eps_gap": self.eps_gap,
            "max_outer_iter": self.max_outer_iter,
            "grid_points": self.grid_points,
            "refine_tol": self.refine_tol,
            "dual": {
                "starts": self.dual.starts,
                "seed": self.dual.seed,
                "local_tol": self.dual.local_tol,
                "max_local_iter": self.dual.max_local_iter,
            },
            "prune_weight": self.prune_weight,
            "ba_tol": self.ba_tol,
            "ba_max_iter": self.ba_max_iter,
        }


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    mutual_info_nats: float
    dual_nats: float
    action: str  # "add_vertex", "move_atom", "prune" or "converged"
    point: tuple[float, ...] | None = None
    step: float | None = None


@dataclass(frozen=True)
class MdabResult:
    spec: ChannelSpec
    caid: AtomicDistribution
    ordered_atoms: NDArray[np.float64]
    ordered_weights: NDArray[np.float64]
    capacity_nats: float
    dual_bound_nats: float
    gap_nats: float
    support_size_m: int
    trace: tuple[TraceRecord, ...]
    status: str  # "converged", "iteration_limit" or "stalled"
    atom_divergences: NDArray[np.float64]

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def capacity_bits(self) -> float:
        return self.capacity_nats / math.log(2.0)


class MdabError(RuntimeError):
    """Raised by ``solve_sequence`` when the solve for some ``n`` does not converge."""

    def __init__(self, n: int, result: MdabResult, partial: list[MdabResult]):
        super().__init__(f"M-DAB did not converge for n={n}: {result.status}")
        self.n = n
        self.result = result
        self.partial = partial


def create_direction_vector(atoms, closest_index: int, x_max) -> NDArray[np.float64]:
    """Per-atom displacement: zero except ``x_max - atoms[closest_index]`` at that atom."""
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    g = np.zeros_like(atoms)
    g[closest_index] = np.asarray(x_max, dtype=float) - atoms[closest_index]
    return g


class _State:
    """Ordered atoms with their Blahut-Arimoto orbit weights."""

    def __init__(self, spec: ChannelSpec, cfg: MdabConfig):
        self.spec = spec
        self.cfg = cfg

    def evaluate(self, locs, orbit_weights=None, exact=False):
        dist = expand(locs, np.ones(len(locs)))
        mult = np.bincount(dist.orbit, minlength=len(locs))
        if orbit_weights is None:
            init = np.full(len(dist), 1.0 / len(dist))
        else:
            ow = np.asarray(orbit_weights, dtype=float)
            if not exact:
                ow = np.maximum(ow, 1e-10)
            init = ow[dist.orbit] / mult[dist.orbit]
        W = transition_matrix(dist.locations, self.spec)
        ba = blahut_arimoto(W, self.cfg.ba_tol, self.cfg.ba_max_iter, init=init)
        orbit_w = np.bincount(dist.orbit, weights=ba.weights, minlength=len(locs))
        return ba, orbit_w, dist


def _moved(locs, idx, g, delta):
    out = locs.copy()
    out[idx] = canonicalize(locs[idx] + delta * g[idx])
    return out


def _line_search(state: _State, locs, weights, idx, g, current_mi):
    cfg = state.cfg
    cache: dict[float, tuple[float, BaResult, NDArray[np.float64]]] = {}

    def value(delta):
        if delta not in cache:
            if delta == 0.0:
                ba, ow, _ = state.evaluate(locs, weights, exact=True)
            else:
                ba, ow, _ = state.evaluate(_moved(locs, idx, g, delta), weights)
            cache[delta] = (ba.mutual_info_nats, ba, ow)
        return cache[delta][0]

    grid = np.linspace(0.0, 1.0, cfg.grid_points)
    vals = [value(float(d)) for d in grid]
    b = int(np.argmax(vals))
    lo = float(grid[max(b - 1, 0)])
    hi = float(grid[min(b + 1, len(grid) - 1)])
    # golden-section refinement inside the bracket around the best grid point
    a, c = lo, hi
    x1 = c - GOLDEN * (c - a)
    x2 = a + GOLDEN * (c - a)
    f1, f2 = value(x1), value(x2)
    while c - a > cfg.refine_tol:
        if f1 >= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - GOLDEN * (c - a)
            f1 = value(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (c - a)
            f2 = value(x2)
    # ties go to the smallest step
    best = max(sorted(cache), key=lambda d: cache[d][0])
    return best, cache[best]


def _merge(locs, weights):
    """Merge atoms that landed on the same orbit representative."""
    out_l: list[NDArray[np.float64]] = []
    out_w: list[float] = []
    for loc, w in zip(locs, weights):
        for i, other in enumerate(out_l):
            if np.max(np.abs(loc - other)) <= DEDUP_TOL:
                out_w[i] += w
                break
        else:
            out_l.append(loc)
            out_w.append(float(w))
    return np.array(out_l), np.array(out_w)


def mdab(init, spec: ChannelSpec, cfg: MdabConfig | None = None) -> MdabResult:
    """Capacity and a symmetric CAID of the multinomial channel ``spec``.

    ``init`` holds starting atom locations (any points of the simplex; they
    are reduced to the ordered simplex first).
    """
    cfg = cfg or MdabConfig()
    state = _State(spec, cfg)
    locs, _ = _merge(canonicalize(np.atleast_2d(init)), np.ones(len(np.atleast_2d(init))))
    weights = None
    exact = False
    trace: list[TraceRecord] = []
    status = "iteration_limit"
    stalls = 0
    report: DualReport | None = None

    for it in range(cfg.max_outer_iter):
        ba, weights, dist = state.evaluate(locs, weights, exact=exact)
        mi = ba.mutual_info_nats
        report = _dual(ba, spec, cfg, locs)
        dual_val = report.max_divergence_nats
        x_max = snap_ties(report.maximizer)

        if dual_val - mi <= cfg.eps_gap:
            keep = _survivors(ba, weights, dist, cfg)
            if keep.all():
                trace.append(TraceRecord(it, mi, dual_val, "converged"))
                status = "converged"
                break
            trace.append(TraceRecord(it, mi, dual_val, "prune"))
            locs, weights, exact = locs[keep], weights[keep], False
            continue

        d_atoms = [kl_point(a, x_max) for a in locs]
        ranking = np.argsort(d_atoms, kind="stable")
        closest = int(ranking[0])
        vertices = ordered_vertices(spec.k)
        d_verts = [kl_point(v, x_max) for v in vertices]
        v_idx = int(np.argmin(d_verts))
        v_new = vertices[v_idx]
        present = any(np.max(np.abs(a - v_new)) <= ADD_GUARD for a in locs)

        if d_atoms[closest] > d_verts[v_idx] and not present:
            trace.append(TraceRecord(it, mi, dual_val, "add_vertex", tuple(v_new.tolist())))
            share = len(expand(v_new[None], [1.0])) / (len(dist) + 1.0)
            locs = np.vstack([locs, v_new])
            weights = np.append(weights * (1.0 - share), share)
            exact = False
            stalls = 0
            continue

        # after a move that did not help, try the next-closest atom instead
        target = int(ranking[min(stalls, len(ranking) - 1)])
        g = create_direction_vector(locs, target, x_max)
        delta, (best_mi, _, best_w) = _line_search(state, locs, weights, target, g, mi)
        trace.append(TraceRecord(it, mi, dual_val, "move_atom", tuple(x_max.tolist()), delta))
        stalls = stalls + 1 if best_mi - mi < STALL_IMPROVEMENT else 0
        if stalls >= STALL_LIMIT:
            status = "stalled"
            break
        if delta > 0.0:
            locs, weights = _merge(_moved(locs, target, g, delta), best_w)
        exact = True

    if status != "converged" or report is None:
        ba, weights, dist = state.evaluate(locs, weights, exact=exact)
        report = _dual(ba, spec, cfg, locs)

    order = sorted(range(len(locs)), key=lambda i: tuple((-locs[i]).tolist()))
    locs, weights = locs[order], weights[order]
    caid = expand(locs, weights)
    mi = ba.mutual_info_nats
    dual_val = max(report.max_divergence_nats, float(ba.divergences.max()))
    atom_div = np.bincount(dist.orbit, weights=ba.divergences, minlength=len(order)) / np.bincount(
        dist.orbit, minlength=len(order)
    )
    log.debug("n=%d k=%d status=%s I=%.9f D=%.9f m=%d", spec.n, spec.k, status, mi, dual_val, len(caid))
    return MdabResult(
        spec=spec,
        caid=caid,
        ordered_atoms=locs,
        ordered_weights=weights,
        capacity_nats=mi,
        dual_bound_nats=dual_val,
        gap_nats=dual_val - mi,
        support_size_m=len(caid),
        trace=tuple(trace),
        status=status,
        atom_divergences=atom_div[order],
    )


def _dual(ba: BaResult, spec: ChannelSpec, cfg: MdabConfig, locs) -> DualReport:
    """Dual value and maximizer for the current output distribution.

    When the atoms leave some outcomes unreachable the dual value is infinite.
    The maximizer is then taken from a minimally smoothed output distribution,
    which in the limit favors inputs that put the most mass on unseen outcomes.
    """
    py = ba.output_dist
    if np.all(py > 0):
        return maximize_divergence(py, spec, cfg.dual, atoms=locs)
    smoothed = (1.0 - UNSEEN_MASS) * py + UNSEEN_MASS / len(py)
    report = maximize_divergence(smoothed, spec, cfg.dual, atoms=locs)
    return DualReport(math.inf, report.maximizer, report.starts_used, report.local_optima)


def _survivors(ba: BaResult, orbit_weights, dist: AtomicDistribution, cfg: MdabConfig):
    """Ordered atoms that carry weight and meet the equalization condition."""
    mult = np.bincount(dist.orbit, minlength=len(orbit_weights))
    per_atom = orbit_weights / mult
    div = np.bincount(dist.orbit, weights=ba.divergences, minlength=len(orbit_weights)) / mult
    keep = per_atom >= cfg.prune_weight
    keep &= div >= ba.mutual_info_nats - cfg.eps_gap
    return keep


def solve_sequence(n_max: int, k: int, cfg: MdabConfig | None = None, flip_eps: float = 0.0,
                   raise_on_failure: bool = True) -> list[MdabResult]:
    """Solve ``n = 1..n_max`` in order, warm-starting each ``n`` from the previous atoms."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    cfg = cfg or MdabConfig()
    results: list[MdabResult] = []
    init = ordered_vertices(k)
    for n in range(1, n_max + 1):
        res = mdab(init, ChannelSpec(n, k, flip_eps), cfg)
        results.append(res)
        if not res.converged and raise_on_failure:
            raise MdabError(n, res, results)
        init = res.ordered_atoms
    return results
