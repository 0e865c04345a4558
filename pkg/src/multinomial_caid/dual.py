"""Maximizing ``D(P_{Y|X=x} || P_Y)`` over the ordered simplex.

For a fixed output distribution ``P_Y`` the maximum over ``x`` upper-bounds the
capacity, and the maximizer shows where the input distribution is missing
mass. The search is a deterministic multistart: quasi-random starts, the
ordered-simplex vertices and the current atoms, each refined by a batched
Nelder-Mead run in unconstrained coordinates. Optima that end up on a face of
the ordered simplex trigger a lower-dimensional search restricted to that face.

Coordinates: a point of the ordered simplex is ``x = c @ V`` where ``V`` holds
the ordered vertices and ``c`` lies on the probability simplex. ``c`` comes from
``d`` reals by stick-breaking with logistic fractions, which is smooth and maps
onto the open face spanned by the chosen vertices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit, logit

from .channel import ChannelSpec, apply_noise, enumerate_outcomes, log_coefficients, log_pmf_rows
from .simplex import (
    canonicalize,
    ordered_vertices,
    sample_ordered,
    sobol_points,
    spacings_to_simplex,
    to_vertex_coords,
)

FACE_TOL = 1e-6
TIE_TOL = 1e-12


class DegenerateObjective(ValueError):
    """The divergence is infinite at a start point: ``P_Y`` misses a reachable outcome."""


@dataclass
class DualConfig:
    starts: int | None = None  # default 64 * (k - 1)
    seed: int = 0
    local_tol: float = 1e-10
    max_local_iter: int = 2000

    def num_starts(self, k: int) -> int:
        return self.starts if self.starts is not None else 64 * (k - 1)


@dataclass
class DualReport:
    max_divergence_nats: float
    maximizer: NDArray[np.float64]
    starts_used: int
    local_optima: list[tuple[NDArray[np.float64], float]] = field(default_factory=list)


class DivergenceObjective:
    """Batched evaluator of ``x -> D(P_{Y|X=x} || P_Y)`` for one output distribution."""

    def __init__(self, output_dist, spec: ChannelSpec):
        self.spec = spec
        self.outcomes = enumerate_outcomes(spec)
        self.log_coef = log_coefficients(self.outcomes)
        py = np.asarray(output_dist, dtype=float)
        if py.shape != (self.outcomes.shape[0],):
            raise ValueError("output distribution does not match the outcome alphabet")
        self.zero = py <= 0
        with np.errstate(divide="ignore"):
            self.log_py = np.log(py)

    def __call__(self, points) -> NDArray[np.float64]:
        points = np.atleast_2d(points)
        effective = apply_noise(points, self.spec.flip_eps, self.spec.k)
        logw = log_pmf_rows(effective, self.outcomes, self.log_coef)
        w = np.exp(logw)
        live = w > 0
        with np.errstate(invalid="ignore"):
            terms = np.where(live, w * (logw - self.log_py), 0.0)
        vals = terms.sum(axis=1)
        if self.zero.any():
            vals = np.where((live & self.zero).any(axis=1), np.inf, vals)
        return vals


def divergence_objective(x, output_dist, spec: ChannelSpec) -> float:
    """``D(P_{Y|X=x} || P_Y)`` in nats for a single input point."""
    return float(DivergenceObjective(output_dist, spec)(np.asarray(x, dtype=float))[0])


def _stick_break(u: NDArray[np.float64]) -> NDArray[np.float64]:
    """Map ``(..., d)`` reals to ``(..., d + 1)`` barycentric coordinates."""
    frac = expit(u)
    c = np.empty(u.shape[:-1] + (u.shape[-1] + 1,))
    rest = np.ones(u.shape[:-1])
    for j in range(u.shape[-1]):
        c[..., j] = rest * frac[..., j]
        rest = rest * (1.0 - frac[..., j])
    c[..., -1] = rest
    return c


def _stick_unbreak(c: NDArray[np.float64], floor: float = 1e-9) -> NDArray[np.float64]:
    c = np.clip(c, floor, None)
    c = c / c.sum(axis=-1, keepdims=True)
    u = np.empty(c.shape[:-1] + (c.shape[-1] - 1,))
    rest = np.ones(c.shape[:-1])
    for j in range(c.shape[-1] - 1):
        u[..., j] = logit(np.clip(c[..., j] / rest, 1e-15, 1 - 1e-15))
        rest = rest - c[..., j]
    return u


class _Face:
    """A face of the ordered simplex spanned by a subset of its vertices."""

    def __init__(self, k: int, members: tuple[int, ...]):
        self.members = members
        self.basis = ordered_vertices(k)[list(members)]
        self.dim = len(members) - 1

    def to_points(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        pts = _stick_break(u) @ self.basis
        return pts / pts.sum(axis=-1, keepdims=True)

    def coords(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return to_vertex_coords(x)[:, list(self.members)]


def _nelder_mead(fun, u0: NDArray[np.float64], tol: float, max_iter: int, step: float = 1.0):
    """Batched Nelder-Mead minimization of ``fun`` from every row of ``u0``.

    ``fun`` maps ``(B, d)`` to a pair ``(values, points)``; ``points`` are the
    simplex-space images used for the convergence test. Each start evolves
    independently of the others.
    """
    B, d = u0.shape
    simplex = np.repeat(u0[:, None, :], d + 1, axis=1)
    for i in range(d):
        simplex[:, i + 1, i] += step
    fv, pts = fun(simplex.reshape(-1, d))
    fv = fv.reshape(B, d + 1)
    pts = pts.reshape(B, d + 1, -1)
    active = np.ones(B, dtype=bool)
    rows = np.arange(B)
    for _ in range(max_iter):
        order = np.argsort(fv, axis=1, kind="stable")
        simplex = simplex[rows[:, None], order]
        fv = fv[rows[:, None], order]
        pts = pts[rows[:, None], order]
        spread_f = fv[:, -1] - fv[:, 0]
        spread_x = np.abs(pts - pts[:, :1]).max(axis=(1, 2))
        active &= ~((spread_f <= tol) & (spread_x <= 1e-9)) & np.isfinite(fv[:, 0])
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        s = simplex[idx]
        f = fv[idx]
        centroid = s[:, :-1].mean(axis=1)
        worst = s[:, -1]
        xr = centroid + (centroid - worst)
        fr, pr = fun(xr)

        new_u = xr.copy()
        new_f = fr.copy()
        new_p = pr.copy()
        shrink = np.zeros(idx.size, dtype=bool)

        exp_mask = fr < f[:, 0]
        if exp_mask.any():
            xe = centroid[exp_mask] + 2.0 * (centroid[exp_mask] - worst[exp_mask])
            fe, pe = fun(xe)
            better = fe < fr[exp_mask]
            sel = np.flatnonzero(exp_mask)[better]
            new_u[sel], new_f[sel], new_p[sel] = xe[better], fe[better], pe[better]

        out_mask = (fr >= f[:, -2]) & (fr < f[:, -1])
        if out_mask.any():
            xc = centroid[out_mask] + 0.5 * (xr[out_mask] - centroid[out_mask])
            fc, pc = fun(xc)
            ok = fc <= fr[out_mask]
            sel = np.flatnonzero(out_mask)
            new_u[sel[ok]], new_f[sel[ok]], new_p[sel[ok]] = xc[ok], fc[ok], pc[ok]
            shrink[sel[~ok]] = True

        in_mask = fr >= f[:, -1]
        if in_mask.any():
            xc = centroid[in_mask] + 0.5 * (worst[in_mask] - centroid[in_mask])
            fc, pc = fun(xc)
            ok = fc < f[in_mask, -1]
            sel = np.flatnonzero(in_mask)
            new_u[sel[ok]], new_f[sel[ok]], new_p[sel[ok]] = xc[ok], fc[ok], pc[ok]
            shrink[sel[~ok]] = True

        keep = ~shrink
        simplex[idx[keep], -1] = new_u[keep]
        fv[idx[keep], -1] = new_f[keep]
        pts[idx[keep], -1] = new_p[keep]

        if shrink.any():
            sidx = idx[shrink]
            best = simplex[sidx, :1]
            moved = best + 0.5 * (simplex[sidx, 1:] - best)
            fm, pm = fun(moved.reshape(-1, d))
            simplex[sidx, 1:] = moved
            fv[sidx, 1:] = fm.reshape(sidx.size, d)
            pts[sidx, 1:] = pm.reshape(sidx.size, d, -1)

    best = np.argmin(fv, axis=1)
    return simplex[rows, best], fv[rows, best], pts[rows, best]


def maximize_divergence(output_dist, spec: ChannelSpec, config: DualConfig | None = None, atoms=None) -> DualReport:
    """Global maximum of the divergence objective over the ordered simplex.

    Deterministic for a given ``config``: ties between equal optima go to the
    lexicographically largest point.
    """
    config = config or DualConfig()
    k = spec.k
    objective = DivergenceObjective(output_dist, spec)
    n_starts = config.num_starts(k)

    starts = [sample_ordered(n_starts, k, config.seed), ordered_vertices(k)]
    if atoms is not None and len(atoms):
        starts.append(canonicalize(np.atleast_2d(atoms)))
    starts = np.concatenate(starts)
    start_vals = objective(starts)
    if np.isinf(start_vals).any():
        raise DegenerateObjective("divergence objective is infinite at a start point")

    # every start point is itself a candidate, so vertices are covered exactly
    candidates: list[tuple[NDArray[np.float64], float]] = list(zip(starts, start_vals.tolist()))

    full = _Face(k, tuple(range(k)))
    pending = [(full, starts)]
    seen = {full.members}
    used = len(starts)
    while pending:
        face, face_starts = pending.pop(0)
        optima = _search_face(objective, face, face_starts, config)
        candidates.extend(optima)
        for x, _ in optima:
            c = face.coords(x[None])[0]
            inner = tuple(m for m, cj in zip(face.members, c) if cj >= FACE_TOL)
            if len(inner) < len(face.members) and inner not in seen:
                seen.add(inner)
                sub = _Face(k, inner)
                sub_starts = _face_starts(sub, k, n_starts, config.seed, atoms)
                used += len(sub_starts)
                pending.append((sub, sub_starts))

    best_val = max(v for _, v in candidates)
    tied = [x for x, v in candidates if v >= best_val - TIE_TOL]
    maximizer = max(tied, key=lambda x: tuple(x.tolist()))
    value = float(objective(maximizer)[0])
    return DualReport(value, maximizer, used, candidates)


def _face_starts(face: _Face, k: int, n_starts: int, seed: int, atoms) -> NDArray[np.float64]:
    count = max(8, (n_starts * face.dim) // (k - 1)) if face.dim > 0 else 1
    pts = []
    if face.dim > 0:
        c = spacings_to_simplex(sobol_points(count, face.dim, seed))
        pts.append(c @ face.basis)
    pts.append(face.basis)
    if atoms is not None and len(atoms):
        a = canonicalize(np.atleast_2d(atoms))
        c = to_vertex_coords(a)
        outside = [j for j in range(k) if j not in face.members]
        on_face = np.all(c[:, outside] < FACE_TOL, axis=1) if outside else np.ones(len(a), bool)
        pts.append(a[on_face])
    return np.concatenate(pts)


def _search_face(objective, face: _Face, starts, config: DualConfig):
    """Local maxima of the objective on the open face, one per start."""
    if face.dim == 0:
        x = face.basis[:1]
        return [(x[0], float(objective(x)[0]))]

    def neg(u):
        pts = face.to_points(u)
        return -objective(pts), pts

    u0 = _stick_unbreak(face.coords(np.atleast_2d(starts)))
    _, fvals, pts = _nelder_mead(neg, u0, config.local_tol, config.max_local_iter)
    return [(canonicalize(p), -float(f)) for p, f in zip(pts, fvals) if math.isfinite(f)]
