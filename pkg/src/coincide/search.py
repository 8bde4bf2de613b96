"""Search for points lying on k distinct affine diameters at once."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from .body import SupportBody, membership_margin
from .diameters import Chord, _endpoints, chord_of_normal, point_residual, segment_distance
from .errors import InvalidK
from .sphere import canonical, chart, chart_jacobian, geodesic_rp, normalize, tangent_basis


@dataclass
class SearchParams:
    tol_accept: float = 1e-6
    polish_target: float = 1e-12
    delta_sep: float = 1e-2
    lam: Optional[float] = None  # repulsion weight; default 1e-2 * mean_width**2
    n_starts: Optional[int] = None  # default 200 (d <= 3) or 1000
    stop_after: int = 1
    margin_restarts: int = 8
    max_nfev: int = 300
    seed: int = 0


@dataclass
class CoincidenceCertificate:
    x: np.ndarray
    items: list
    residual: float
    min_separation: float
    interior_margin: float
    k: int
    accepted: bool
    kind: str = "diameters"
    meta: dict = field(default_factory=dict)

    def sort_key(self):
        return (not self.accepted, self.residual, tuple(self.x))

    def to_dict(self) -> dict:
        return {
            "x": self.x.tolist(),
            "items": [it.to_dict() for it in self.items],
            "residual": self.residual,
            "min_separation": self.min_separation,
            "interior_margin": self.interior_margin,
            "k": self.k,
            "accepted": self.accepted,
        }


def default_starts(d: int) -> int:
    return 200 if d <= 3 else 1000


def min_pairwise_separation(directions) -> float:
    if len(directions) < 2:
        return float("inf")
    return float(min(geodesic_rp(a, b) for a, b in combinations(directions, 2)))


def _certify(body, x, us, params, margin=True) -> CoincidenceCertificate:
    chords = [chord_of_normal(body, u) for u in us]
    dist = np.array([segment_distance(x, c.a, c.b) for c in chords])
    residual = float(np.sqrt(np.mean(dist**2)))
    sep = min_pairwise_separation([c.direction for c in chords])
    ok = residual < params.tol_accept and sep > params.delta_sep
    im = float("nan")
    if ok or margin:
        im = membership_margin(body, x, params.margin_restarts, params.seed)
    return CoincidenceCertificate(
        x=np.asarray(x, dtype=float).copy(),
        items=chords,
        residual=residual,
        min_separation=sep,
        interior_margin=im,
        k=len(us),
        accepted=bool(ok and im > 0),
    )


def _rp_angle_grad(u, v):
    """Angle between lines <u>, <v> and its gradient in u (unit inputs)."""
    c = float(u @ v)
    s = 1.0 if c >= 0 else -1.0
    ang = float(geodesic_rp(u, v))
    sin = max(np.sqrt(max(0.0, 1.0 - c * c)), 1e-12)
    return ang, -s * v / sin


def _local_solve(body, x0, us0, lam, params, max_rounds=4, xtol=1e-15):
    """Joint least squares over the point and k unit normals."""
    d = body.d
    k = len(us0)
    x = np.asarray(x0, dtype=float).copy()
    centers = [normalize(u) for u in us0]
    sl = np.sqrt(lam) if lam > 0 else 0.0
    pairs = list(combinations(range(k), 2)) if sl > 0 else []
    nres = k * d + len(pairs)
    nvar = d + k * (d - 1)

    for _ in range(max_rounds):
        bases = [tangent_basis(c) for c in centers]

        def unpack(z):
            xs = z[:d]
            ys = [z[d + i * (d - 1): d + (i + 1) * (d - 1)] for i in range(k)]
            return xs, ys

        def both(z):
            xs, ys = unpack(z)
            R = np.zeros(nres)
            J = np.zeros((nres, nvar))
            us = []
            for i in range(k):
                u = chart(centers[i], bases[i], ys[i])
                us.append(u)
                Cj = chart_jacobian(centers[i], bases[i], ys[i])
                a, b, Da, Db = _endpoints(body, u, 2)
                Ri, Ju = point_residual(xs, a, b, Da, Db)
                e = a - b
                t = float((xs - b) @ e) / float(e @ e)
                if 0.0 < t < 1.0:
                    eh = e / np.linalg.norm(e)
                    Jx = np.eye(d) - np.outer(eh, eh)
                else:
                    Jx = np.eye(d)
                rows = slice(i * d, (i + 1) * d)
                R[rows] = Ri
                J[rows, :d] = Jx
                J[rows, d + i * (d - 1): d + (i + 1) * (d - 1)] = Ju @ Cj
            for r, (i, j) in enumerate(pairs):
                ang, gi = _rp_angle_grad(us[i], us[j])
                if ang < params.delta_sep:
                    row = k * d + r
                    R[row] = sl * (params.delta_sep - ang)
                    _, gj = _rp_angle_grad(us[j], us[i])
                    Ci = chart_jacobian(centers[i], bases[i], ys[i])
                    Cjj = chart_jacobian(centers[j], bases[j], ys[j])
                    J[row, d + i * (d - 1): d + (i + 1) * (d - 1)] = -sl * gi @ Ci
                    J[row, d + j * (d - 1): d + (j + 1) * (d - 1)] = -sl * gj @ Cjj
            return R, J

        cache = {}

        def ev(z):
            key = z.tobytes()
            if key not in cache:
                cache.clear()
                cache[key] = both(z)
            return cache[key]

        z0 = np.concatenate([x, np.zeros(k * (d - 1))])
        res = least_squares(
            lambda z: ev(z)[0],
            z0,
            jac=lambda z: ev(z)[1],
            method="lm" if nres >= nvar else "trf",
            xtol=xtol,
            ftol=xtol,
            gtol=xtol,
            max_nfev=params.max_nfev,
        )
        xs, ys = unpack(res.x)
        x = xs.copy()
        moved = max(np.linalg.norm(y) for y in ys)
        centers = [chart(centers[i], bases[i], ys[i]) for i in range(k)]
        if moved < 0.5:
            break
    return x, centers


def _initial_normals(d, k, rng):
    if d == 2:
        t0 = rng.uniform(0, np.pi)
        theta = t0 + np.pi * (np.arange(k) + rng.uniform(-0.25, 0.25, k)) / k
        return [np.array([np.cos(t), np.sin(t)]) for t in theta]
    pool = normalize(rng.standard_normal((max(8 * k, 32), d)))
    chosen = [0]
    while len(chosen) < k:
        dist = np.array([min(geodesic_rp(pool[i], pool[j]) for j in chosen) for i in range(len(pool))])
        chosen.append(int(np.argmax(dist)))
    return [pool[i] for i in chosen]


def _repulsion_weight(body, params):
    if params.lam is not None:
        return params.lam
    return 1e-2 * body.mean_width() ** 2


def _start_rng(seed, j):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(j)])))


def search_concurrent_diameters(body: SupportBody, k: int, params: Optional[SearchParams] = None,
                                starts=None) -> CoincidenceCertificate:
    """Multistart search for x and k distinct affine diameters through x.

    ``starts`` may supply explicit ``(x0, normals)`` pairs (used for warm
    starts and for translated-net equivariance checks); otherwise seeded
    spread normals are drawn per start.  The best certificate is returned
    whether or not it is accepted.
    """
    if k < 2:
        raise InvalidK(f"k must be >= 2, got {k}")
    params = params or SearchParams()
    lam = _repulsion_weight(body, params)
    n_starts = params.n_starts or default_starts(body.d)
    best = None
    n_acc = 0
    if starts is None:
        starts = (_default_start(body, k, params.seed, j) for j in range(n_starts))
    for x0, us0 in starts:
        x, us = _local_solve(body, x0, us0, lam, params)
        x, us = _local_solve(body, x, us, 0.0, params, max_rounds=2)
        cert = _certify(body, x, us, params, margin=False)
        if best is None or cert.sort_key() < best.sort_key():
            best = cert
        if cert.accepted:
            n_acc += 1
            if n_acc >= params.stop_after:
                break
    if np.isnan(best.interior_margin):
        best.interior_margin = membership_margin(body, best.x, params.margin_restarts, params.seed)
    return best


def _default_start(body, k, seed, j):
    rng = _start_rng(seed, j)
    us = _initial_normals(body.d, k, rng)
    x0 = np.mean([chord_of_normal(body, u).midpoint() for u in us], axis=0)
    return x0, us


def refine_certificate(body: SupportBody, cert: CoincidenceCertificate,
                       params: Optional[SearchParams] = None) -> CoincidenceCertificate:
    """Polish a certificate without repulsion; the residual never increases."""
    if cert.k < 2:
        raise InvalidK(f"k must be >= 2, got {cert.k}")
    params = params or SearchParams()
    x, us = _local_solve(body, cert.x, [c.u for c in cert.items], 0.0, params, max_rounds=3)
    new = _certify(body, x, us, params)
    if new.residual <= cert.residual and new.min_separation > params.delta_sep:
        return new
    return _certify(body, cert.x, [c.u for c in cert.items], params)


def _fresh_normal(d, existing, seed):
    from .sphere import projective_net

    net = projective_net(d, 64 * d, seed)
    dist = [min(geodesic_rp(v, u) for u in existing) for v in net]
    return net[int(np.argmax(dist))]


def scan_multiplicity(body: SupportBody, k_max: int, params: Optional[SearchParams] = None):
    """Scan k = 2, 3, ... and return ``(largest accepted k, its certificate)``.

    Each k + 1 is first warm-started from the accepted k certificate plus
    one fresh normal, falling back to a full multistart search.  Returns
    ``(1, None)`` when even k = 2 fails.
    """
    if k_max < 2:
        raise InvalidK(f"k_max must be >= 2, got {k_max}")
    params = params or SearchParams()
    cert = search_concurrent_diameters(body, 2, params)
    if not cert.accepted:
        return 1, None
    best_k, best = 2, refine_certificate(body, cert, params)
    for k in range(3, k_max + 1):
        us = [c.u for c in best.items] + [_fresh_normal(body.d, [c.u for c in best.items], params.seed + k)]
        cand = search_concurrent_diameters(body, k, replace(params, n_starts=1), starts=[(best.x, us)])
        if not cand.accepted:
            cand = search_concurrent_diameters(body, k, params)
        if not cand.accepted:
            break
        best_k, best = k, refine_certificate(body, cand, params)
    return best_k, best


def max_multiplicity_estimate(body: SupportBody, k_max: int, params: Optional[SearchParams] = None) -> int:
    return scan_multiplicity(body, k_max, params)[0]
