"""Affine diameters of smooth strictly convex bodies.

For a smooth strictly convex body the affine diameter in a given
direction is the unique chord with parallel supporting hyperplanes at its
endpoints, i.e. ``[p(u), p(-u)]`` for the right normal ``u``.  Everything
here is parametrized by that normal, a point of RP^(d-1).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq, least_squares

from .body import SupportBody, membership_margin
from .errors import AmbiguityWarning, ConvergenceFailure, NotInteriorError
from .sphere import canonical, chart, chart_jacobian, geodesic_rp, normalize, projective_net, tangent_basis


@dataclass(frozen=True)
class Chord:
    u: np.ndarray
    a: np.ndarray
    b: np.ndarray
    direction: np.ndarray
    length: float
    residual: float = 0.0

    def midpoint(self):
        return 0.5 * (self.a + self.b)

    def distance_to(self, x) -> float:
        return float(segment_distance(x, self.a, self.b))

    def to_dict(self) -> dict:
        return {
            "u": self.u.tolist(),
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "direction": self.direction.tolist(),
            "length": self.length,
        }


@dataclass
class DirectionParams:
    tol: float = 1e-10
    n_starts: Optional[int] = None  # default 4 d
    ambiguity_delta: float = 1e-6
    seed: int = 0


@dataclass
class PointParams:
    tol: float = 1e-8
    n_starts: Optional[int] = None  # default 64 d
    cluster_delta: float = 1e-4
    max_results: int = 64
    seed: int = 0


class MultiplicityResult(NamedTuple):
    count: int
    chords: list
    saturated: bool


class SweepResult(NamedTuple):
    chords: list
    identically_zero: bool


def segment_distance(x, a, b) -> float:
    e = a - b
    w = x - b
    t = min(1.0, max(0.0, float(w @ e) / float(e @ e)))
    r = w - t * e
    return float(np.sqrt(r @ r))


def _endpoints(body: SupportBody, u, order=1):
    """Contact points at u and -u and, with order 2, their u-derivatives."""
    _, g, H = body.evaluate(np.vstack([u, -u]), order)
    if order < 2:
        return g[0], g[1], None, None
    # d/du p(-u) = -Hess h(-u)
    return g[0], g[1], H[0], -H[1]


def chord_of_normal(body: SupportBody, u, residual: float = 0.0) -> Chord:
    u = canonical(normalize(u))
    a, b, _, _ = _endpoints(body, u)
    e = a - b
    length = float(np.linalg.norm(e))
    return Chord(u=u, a=a, b=b, direction=canonical(e / length), length=length, residual=float(residual))


def point_residual(x, a, b, Da, Db):
    """Residual x - (closest point of [a, b]) and its derivative in u."""
    e = a - b
    w = x - b
    ee = float(e @ e)
    we = float(w @ e)
    t = we / ee
    if t <= 0.0:
        return w, -Db
    if t >= 1.0:
        return x - a, -Da
    R = w - t * e
    De = Da - Db
    # dt = (dw.e + w.de)/ee - 2 (w.e)(e.de)/ee^2 with dw = -Db
    dt = (e @ (-Db) + w @ De) / ee - 2.0 * we * (e @ De) / ee**2
    J = -Db - np.outer(e, dt) - t * De
    return R, J


def line_residual_x(a, b):
    """Derivative of the unclamped residual with respect to x."""
    e = (a - b) / np.linalg.norm(a - b)
    return np.eye(len(a)) - np.outer(e, e)


def solve_on_sphere(fun, u0, max_rounds: int = 6, recenter: float = 0.5):
    """Least squares over unit vectors via a recentered retraction chart.

    ``fun(u)`` returns ``(R, dR/du)``.  Returns ``(u, |R|)``.
    """
    c = normalize(u0)
    best_u, best_r = c, float(np.linalg.norm(fun(c)[0]))
    for _ in range(max_rounds):
        T = tangent_basis(c)
        cache = {}

        def ev(y):
            key = y.tobytes()
            if key not in cache:
                cache.clear()
                cache[key] = fun(chart(c, T, y))
            return cache[key]

        res = least_squares(
            lambda y: ev(y)[0],
            np.zeros(len(c) - 1),
            jac=lambda y: ev(y)[1] @ chart_jacobian(c, T, y),
            method="lm",
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
            max_nfev=200,
        )
        u = chart(c, T, res.x)
        r = float(np.linalg.norm(fun(u)[0]))
        if r < best_r:
            best_u, best_r = u, r
        if np.linalg.norm(res.x) < recenter:
            break
        c = u
    return best_u, best_r


def cluster_rp(vectors, residuals, delta):
    """Greedy clustering of projective classes; returns representative indices.

    Members are visited in order of increasing residual, so each cluster is
    represented by its best member.  Ties keep input order.
    """
    order = np.argsort(np.asarray(residuals), kind="stable")
    reps = []
    for i in order:
        if all(geodesic_rp(vectors[i], vectors[j]) > delta for j in reps):
            reps.append(int(i))
    return reps


def _sort_by_direction(chords):
    return sorted(chords, key=lambda c: tuple(np.round(c.direction, 12)))


def diameter_in_direction(body: SupportBody, v, params: Optional[DirectionParams] = None) -> Chord:
    """The affine diameter parallel to ``v``."""
    params = params or DirectionParams()
    v = canonical(normalize(v))
    P = np.eye(body.d) - np.outer(v, v)

    def fun(u):
        a, b, Da, Db = _endpoints(body, u, 2)
        e = a - b
        n = np.linalg.norm(e)
        De = Da - Db
        R = P @ e / n
        J = P @ (De / n - np.outer(e, e @ De) / n**3)
        return R, J

    n_starts = params.n_starts or 4 * body.d
    starts = np.vstack([v, projective_net(body.d, n_starts - 1, params.seed)]) if n_starts > 1 else v[None]
    hits, res = [], []
    best = (np.inf, None)
    for s in starts:
        u, r = solve_on_sphere(fun, s)
        if r < best[0]:
            best = (r, u)
        if r < params.tol:
            hits.append(canonical(u))
            res.append(r)
    if not hits:
        raise ConvergenceFailure(
            f"no start reached tol {params.tol:g}; best residual {best[0]:.3e}", best_residual=best[0]
        )
    reps = cluster_rp(hits, res, params.ambiguity_delta)
    if len(reps) > 1:
        warnings.warn(
            f"{len(reps)} non-equivalent normals solve direction {v}; body may be close to non-strictly convex",
            AmbiguityWarning,
            stacklevel=2,
        )
    i = reps[0]
    return chord_of_normal(body, hits[i], residual=res[i])


def _require_interior(body, x):
    m = membership_margin(body, x)
    if not m > 0:
        raise NotInteriorError(f"point {np.asarray(x).tolist()} is not interior (margin {m:.3e})")


def _through_point_all(body, x, params):
    x = np.asarray(x, dtype=float)

    def fun(u):
        a, b, Da, Db = _endpoints(body, u, 2)
        return point_residual(x, a, b, Da, Db)

    n_starts = params.n_starts or 64 * body.d
    hits, res = [], []
    for s in projective_net(body.d, n_starts, params.seed):
        r0 = np.linalg.norm(fun(s)[0])
        if r0 < 0.1 * params.tol:
            u, r = s, float(r0)
        else:
            u, r = solve_on_sphere(fun, s)
        if r < params.tol:
            hits.append(canonical(u))
            res.append(r)
    reps = cluster_rp(hits, res, params.cluster_delta)
    return [chord_of_normal(body, hits[i], residual=res[i]) for i in reps]


def diameters_through_point(body: SupportBody, x, params: Optional[PointParams] = None) -> list:
    """Affine diameters whose open segment contains the interior point ``x``.

    Heuristic for d >= 3: multistart can miss zeros.  At most
    ``params.max_results`` chords are returned, sorted by direction.
    """
    return multiplicity_at(body, x, params).chords


def multiplicity_at(body: SupportBody, x, params: Optional[PointParams] = None) -> MultiplicityResult:
    params = params or PointParams()
    _require_interior(body, x)
    chords = _through_point_all(body, x, params)
    saturated = len(chords) >= params.max_results
    chords = _sort_by_direction(chords[: params.max_results])
    return MultiplicityResult(len(chords), chords, saturated)


def oracle_sweep_2d(body: SupportBody, x, n: int = 100_000) -> SweepResult:
    """Brute-force root finder for planar bodies.

    Samples the signed distance from x to the line of chord(u) at ``n``
    equispaced normals on the half circle, brackets sign changes and refines
    each one by Brent's method to 1e-12 in angle.
    """
    if body.d != 2:
        raise ValueError("oracle_sweep_2d is only defined for d = 2")
    if n < 1000:
        raise ValueError("oracle sweep needs n >= 1000")
    x = np.asarray(x, dtype=float)

    def g_batch(theta):
        U = np.column_stack([np.cos(theta), np.sin(theta)])
        _, A, _ = body.evaluate(U, 1)
        _, Bm, _ = body.evaluate(-U, 1)
        E = A - Bm
        W = x - Bm
        return (E[:, 0] * W[:, 1] - E[:, 1] * W[:, 0]) / np.linalg.norm(E, axis=1)

    def g(t):
        return float(g_batch(np.array([t]))[0])

    theta = np.pi * np.arange(n) / n
    vals = g_batch(theta)
    scale = float(np.max(body.width(np.column_stack([np.cos(theta[:64]), np.sin(theta[:64])]))))
    if np.max(np.abs(vals)) <= 1e-12 * scale:
        return SweepResult([], True)
    # g(theta + pi) = -g(theta) closes the half circle
    nxt = np.append(vals[1:], -vals[0])
    roots = list(theta[vals == 0.0])
    for i in np.nonzero(vals * nxt < 0)[0]:
        lo = theta[i]
        hi = theta[i + 1] if i + 1 < n else np.pi
        roots.append(brentq(g, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200))
    chords = []
    for t in roots:
        u = np.array([np.cos(t), np.sin(t)])
        c = chord_of_normal(body, u)
        chords.append(
            Chord(u=c.u, a=c.a, b=c.b, direction=c.direction, length=c.length, residual=abs(g(t)))
        )
    return SweepResult(_sort_by_direction(chords), False)
