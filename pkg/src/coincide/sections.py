"""Hyperplane sections, their centers, and the continuous point selection.

``selection_map`` assigns to every affine hyperplane H a point of H: the
chosen center of ``K ∩ H`` when H cuts the interior, the point of H
nearest to K when H misses K, and the contact point in the tangency band.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import least_squares

from .body import SupportBody, membership_margin
from .errors import DegenerateSection, InvalidK, NoIntersection, NotInteriorError, TangencyDegenerate
from .search import CoincidenceCertificate, _start_rng, min_pairwise_separation
from .sphere import canonical, chart, geodesic_rp, normalize, projective_net, tangent_basis

TANGENCY_BAND = 1e-9
CENTER_KINDS = ("centroid", "steiner")


@dataclass(frozen=True)
class Hyperplane:
    """The hyperplane ``{x : x.n = t}`` stored with canonical orientation."""

    n: np.ndarray
    t: float

    @classmethod
    def make(cls, n, t) -> "Hyperplane":
        n = np.asarray(n, dtype=float)
        r = np.linalg.norm(n)
        n, t = n / r, float(t) / r
        c = canonical(n)
        if not np.array_equal(c, n):
            t = -t
        return cls(c, t)

    def canonical(self) -> "Hyperplane":
        return Hyperplane.make(self.n, self.t)

    def translate(self, c) -> "Hyperplane":
        return Hyperplane(self.n, self.t + float(self.n @ np.asarray(c, dtype=float)))

    def contains(self, x, tol=1e-9) -> bool:
        return abs(float(np.asarray(x) @ self.n) - self.t) <= tol

    def to_dict(self) -> dict:
        return {"n": self.n.tolist(), "t": self.t}


@dataclass
class PlanarSection:
    """``K ∩ H`` described in an orthonormal frame of H.

    ``boundary`` holds in-plane coordinates relative to ``origin``.  Traced
    d = 3 sections also carry the outer normal angle of every vertex and the
    derivative of the boundary with respect to that angle.
    """

    hyperplane: Hyperplane
    origin: np.ndarray
    frame: np.ndarray
    boundary: np.ndarray
    closed: bool
    normal_angles: Optional[np.ndarray] = None
    tangents: Optional[np.ndarray] = None

    @property
    def d(self) -> int:
        return len(self.origin)

    def to_world(self, q):
        return self.origin + np.asarray(q) @ self.frame.T

    def points(self):
        return self.to_world(self.boundary)


class SelectionPoint(NamedTuple):
    value: np.ndarray
    branch: str


def _meridian_points(body, n, W, phi):
    U = W * np.cos(phi)[:, None] + n[None, :] * np.sin(phi)[:, None]
    return U


def _solve_meridians(body, n, t, W, hp, hm):
    """For each in-plane direction w find u = w cos(phi) + n sin(phi) with p(u).n = t.

    Predictor: the ball model p(u).n ~ sin(phi) rescaled to the width of K
    along n.  Corrector: Newton in phi, safeguarded by the bracket
    (-pi/2, pi/2) on which p(u(phi)).n is strictly increasing.
    """
    m = len(W)
    s = np.clip(2.0 * (t + hm) / (hp + hm) - 1.0, -1.0, 1.0)
    phi = np.full(m, np.arcsin(s))
    lo = np.full(m, -0.5 * np.pi)
    hi = np.full(m, 0.5 * np.pi)
    scale = max(1.0, hp + hm)
    for _ in range(100):
        U = _meridian_points(body, n, W, phi)
        _, G, H = body.evaluate(U, 2)
        g = G @ n - t
        tau = -W * np.sin(phi)[:, None] + n[None, :] * np.cos(phi)[:, None]
        dg = np.einsum("i,nij,nj->n", n, H, tau)
        lo = np.where(g < 0, phi, lo)
        hi = np.where(g > 0, phi, hi)
        if np.all(np.abs(g) <= 1e-15 * scale):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            step = phi - g / dg
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        new = np.where(bad, 0.5 * (lo + hi), step)
        if np.all(np.abs(new - phi) <= 1e-16):
            break
        phi = new
    U = _meridian_points(body, n, W, phi)
    _, G, H = body.evaluate(U, 2)
    return phi, U, G, H


def _interior_check(body, H: Hyperplane):
    hp = float(body.h(H.n))
    hm = float(body.h(-H.n))
    t = H.t
    if t > hp + TANGENCY_BAND or t < -hm - TANGENCY_BAND:
        raise NoIntersection(f"hyperplane (n={H.n.tolist()}, t={t:.6g}) misses the body")
    if hp - t <= TANGENCY_BAND or t + hm <= TANGENCY_BAND:
        raise TangencyDegenerate(f"hyperplane (n={H.n.tolist()}, t={t:.6g}) is tangent to the body")
    return hp, hm


def trace_section(body: SupportBody, H: Hyperplane, resolution: int = 128) -> PlanarSection:
    """Boundary of ``K ∩ H`` from the level set ``{u : p(u).n = t}`` of normals.

    d = 2 gives the two chord endpoints; d = 3 gives ``resolution`` boundary
    points at equispaced in-plane outer normal angles.
    """
    if body.d not in (2, 3):
        raise ValueError("sections are implemented for d in {2, 3}")
    H = H.canonical()
    hp, hm = _interior_check(body, H)
    n, t = H.n, H.t
    E = tangent_basis(n)
    origin = t * n
    if body.d == 2:
        W = np.vstack([E[:, 0], -E[:, 0]])
        _, _, ends, _ = _solve_meridians(body, n, t, W, hp, hm)
        q = (ends - origin) @ E
        return PlanarSection(H, origin, E, q, closed=False)

    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    alpha = 2.0 * np.pi * np.arange(resolution) / resolution
    Cw = np.column_stack([np.cos(alpha), np.sin(alpha)])
    W = Cw @ E.T
    Wp = np.column_stack([-np.sin(alpha), np.cos(alpha)]) @ E.T
    phi, U, G, Hs = _solve_meridians(body, n, t, W, hp, hm)
    cphi = np.cos(phi)
    tau = -W * np.sin(phi)[:, None] + n[None, :] * cphi[:, None]
    # implicit derivative of phi(alpha) from p(u(alpha, phi)).n = t
    g_alpha = np.einsum("i,nij,nj->n", n, Hs, Wp * cphi[:, None])
    g_phi = np.einsum("i,nij,nj->n", n, Hs, tau)
    dphi = -g_alpha / g_phi
    dU = Wp * cphi[:, None] + tau * dphi[:, None]
    dP = np.einsum("nij,nj->ni", Hs, dU)
    q = (G - origin) @ E
    dq = dP @ E
    return PlanarSection(H, origin, E, q, closed=True, normal_angles=alpha, tangents=dq)


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def section_area(section: PlanarSection) -> float:
    if section.d == 2:
        return float(abs(section.boundary[0, 0] - section.boundary[1, 0]))
    q = section.boundary
    if section.tangents is not None:
        m = len(q)
        return float(0.5 * np.sum(_cross2(q, section.tangents)) * 2 * np.pi / m)
    return float(0.5 * np.sum(_cross2(q, np.roll(q, -1, axis=0))))


def section_centroid(section: PlanarSection):
    """Mass center of the section.

    Traced sections integrate Green's theorem over the smooth boundary
    parametrization with the trapezoid rule (spectrally accurate for smooth
    periodic integrands); plain polygons use the shoelace formulas.
    """
    if section.d == 2:
        return section.to_world(section.boundary.mean(axis=0))
    q = section.boundary
    if section.tangents is not None:
        m = len(q)
        w = _cross2(q, section.tangents) * (2 * np.pi / m)
        A = 0.5 * w.sum()
        if abs(A) < 1e-12:
            raise DegenerateSection(f"section area {A:.3e} is too small")
        c = (q * w[:, None]).sum(axis=0) / (3.0 * A)
    else:
        q1 = np.roll(q, -1, axis=0)
        cr = _cross2(q, q1)
        A = 0.5 * cr.sum()
        if abs(A) < 1e-12:
            raise DegenerateSection(f"polygon area {A:.3e} is too small")
        c = ((q + q1) * cr[:, None]).sum(axis=0) / (6.0 * A)
    return section.to_world(c)


def section_steiner_point(section: PlanarSection, resolution: Optional[int] = None):
    """Steiner point ``(1/pi) * integral of h_L(w) w`` over the unit circle of H.

    The support function of L is the maximum of ``w.v`` over boundary
    vertices; on a traced section's own normal grid it is exact.
    """
    if section.d == 2:
        return section_centroid(section)
    q = section.boundary
    if section_area(section) < 1e-12:
        raise DegenerateSection("section area is too small")
    if section.normal_angles is not None and resolution is None:
        alpha = section.normal_angles
    else:
        m = resolution or max(1024, 8 * len(q))
        alpha = 2.0 * np.pi * np.arange(m) / m
    Wc = np.column_stack([np.cos(alpha), np.sin(alpha)])
    hL = np.max(Wc @ q.T, axis=1)
    s = (hL[:, None] * Wc).sum(axis=0) * (2 * np.pi / len(alpha)) / np.pi
    return section.to_world(s)


def section_center(section: PlanarSection, center_kind: str = "centroid"):
    if center_kind == "centroid":
        return section_centroid(section)
    if center_kind == "steiner":
        return section_steiner_point(section)
    raise ValueError(f"unknown center kind {center_kind!r}; expected one of {CENTER_KINDS}")


def selection_map(body: SupportBody, H: Hyperplane, center_kind: str = "centroid",
                  resolution: int = 128) -> SelectionPoint:
    """A point of H depending continuously on H, defined for every hyperplane."""
    if body.d not in (2, 3):
        raise ValueError("selection_map is implemented for d in {2, 3}")
    if center_kind not in CENTER_KINDS:
        raise ValueError(f"unknown center kind {center_kind!r}")
    n, t = H.n, H.t
    hp = float(body.h(n))
    hm = float(body.h(-n))
    if t > hp + TANGENCY_BAND:
        return SelectionPoint(body.contact(n) + (t - hp) * n, "nearest_point")
    if t < -hm - TANGENCY_BAND:
        return SelectionPoint(body.contact(-n) + (-t - hm) * (-n), "nearest_point")
    if abs(t - hp) <= TANGENCY_BAND:
        return SelectionPoint(body.contact(n), "tangency")
    if abs(t + hm) <= TANGENCY_BAND:
        return SelectionPoint(body.contact(-n), "tangency")
    sec = trace_section(body, H, resolution)
    return SelectionPoint(section_center(sec, center_kind), "section_center")


@dataclass
class SelectionParams:
    tol_accept: float = 1e-6
    delta_sep: float = 1e-2
    lam: Optional[float] = None
    n_starts: Optional[int] = None  # default 200 (d = 2) or 60
    stop_after: int = 1
    resolution: int = 64
    interior_margin: float = 1e-6
    margin_restarts: int = 8
    max_nfev: int = 400
    solve_tol: float = 1e-8
    cluster_delta: float = 1e-4
    seed: int = 0


def _offset(body, n, s, margin):
    hp = float(body.h(n))
    hm = float(body.h(-n))
    mid = 0.5 * (hp - hm)
    half = 0.5 * (hp + hm) - margin
    return mid + half * np.tanh(s)


def _selection_problem(body, k, center_kind, params, x0, ns0, s0, lam):
    d = body.d
    centers = [normalize(n) for n in ns0]
    bases = [tangent_basis(c) for c in centers]
    sl = np.sqrt(lam) if lam > 0 else 0.0
    pairs = list(combinations(range(k), 2)) if sl > 0 else []
    per = d  # d - 1 chart coordinates + 1 offset coordinate

    def plane(z, i):
        blk = z[d + i * per: d + (i + 1) * per]
        n = chart(centers[i], bases[i], blk[: d - 1])
        return Hyperplane(n, _offset(body, n, blk[-1], params.interior_margin))

    def decode(z):
        return z[:d], [plane(z, i) for i in range(k)]

    def select(h):
        return selection_map(body, h, center_kind, params.resolution).value

    def repulsion(hs):
        return [sl * max(0.0, params.delta_sep - float(geodesic_rp(hs[i].n, hs[j].n))) for i, j in pairs]

    def fun(z):
        x, hs = decode(z)
        R = [select(h) - x for h in hs]
        R.append(np.array(repulsion(hs)))
        return np.concatenate(R)

    def jac(z):
        # block i of the residual sees only x and hyperplane i, so forward
        # differences need one selection per coordinate of that block
        x, hs = decode(z)
        J = np.zeros((k * d + len(pairs), len(z)))
        rep0 = np.array(repulsion(hs))
        for i in range(k):
            rows = slice(i * d, (i + 1) * d)
            J[rows, :d] = -np.eye(d)
            v0 = select(hs[i])
            for c in range(d + i * per, d + (i + 1) * per):
                step = 1.49e-8 * max(1.0, abs(z[c]))
                z1 = z.copy()
                z1[c] += step
                h1 = plane(z1, i)
                J[rows, c] = (select(h1) - v0) / step
                if pairs:
                    J[k * d:, c] = (np.array(repulsion(hs[:i] + [h1] + hs[i + 1:])) - rep0) / step
        return J

    z0 = np.concatenate([x0] + [np.concatenate([np.zeros(d - 1), [s]]) for s in s0])
    return fun, jac, decode, z0


def _selection_certificate(body, x, hyperplanes, center_kind, params, margin=True):
    vals = [selection_map(body, h, center_kind, params.resolution).value for h in hyperplanes]
    dist = np.array([np.linalg.norm(v - x) for v in vals])
    residual = float(np.sqrt(np.mean(dist**2)))
    sep = min_pairwise_separation([h.n for h in hyperplanes])
    ok = residual < params.tol_accept and sep > params.delta_sep
    im = float("nan")
    if ok or margin:
        im = membership_margin(body, x, params.margin_restarts, params.seed)
    return CoincidenceCertificate(
        x=np.asarray(x, dtype=float).copy(),
        items=[h.canonical() for h in hyperplanes],
        residual=residual,
        min_separation=sep,
        interior_margin=im,
        k=len(hyperplanes),
        accepted=bool(ok and im > 0),
        kind="selections",
        meta={"center_kind": center_kind},
    )


def _spread_normals(d, k, rng):
    if d == 2:
        t0 = rng.uniform(0, np.pi)
        theta = t0 + np.pi * (np.arange(k) + rng.uniform(-0.25, 0.25, k)) / k
        return [np.array([np.cos(a), np.sin(a)]) for a in theta]
    pool = normalize(rng.standard_normal((max(8 * k, 32), d)))
    chosen = [0]
    while len(chosen) < k:
        dist = [min(geodesic_rp(pool[i], pool[j]) for j in chosen) for i in range(len(pool))]
        chosen.append(int(np.argmax(dist)))
    return [pool[i] for i in chosen]


def search_coincident_selections(body: SupportBody, k: int, center_kind: str = "centroid",
                                 params: Optional[SelectionParams] = None) -> CoincidenceCertificate:
    """Find k distinct hyperplanes cutting the interior whose centers coincide.

    Only hyperplanes through the interior (margin ``params.interior_margin``)
    are searched: for a point outside K or on its boundary the selection has
    a single preimage, so coincidences of two or more live inside.
    """
    if k < 2:
        raise InvalidK(f"k must be >= 2, got {k}")
    if body.d not in (2, 3):
        raise ValueError("selection coincidences are implemented for d in {2, 3}")
    params = params or SelectionParams()
    lam = params.lam if params.lam is not None else 1e-2 * body.mean_width() ** 2
    n_starts = params.n_starts or (200 if body.d == 2 else 60)
    best = None
    n_acc = 0
    for j in range(n_starts):
        rng = _start_rng(params.seed, j)
        ns = _spread_normals(body.d, k, rng)
        s0 = rng.uniform(-0.5, 0.5, k)
        hs0 = [Hyperplane(n, _offset(body, n, s, params.interior_margin)) for n, s in zip(ns, s0)]
        x0 = np.mean([selection_map(body, h, center_kind, params.resolution).value for h in hs0], axis=0)
        z = None
        for weight in (lam, 0.0):
            fun, jac, decode, z0 = _selection_problem(
                body, k, center_kind, params, x0, ns, s0, weight
            )
            res = least_squares(fun, z0, jac=jac, method="trf", x_scale=1.0, xtol=1e-15, ftol=1e-15,
                                gtol=1e-15, max_nfev=params.max_nfev)
            x0, hs = decode(res.x)
            ns = [h.n for h in hs]
            s0 = [res.x[body.d + i * body.d + body.d - 1] for i in range(k)]
        cert = _selection_certificate(body, x0, hs, center_kind, params, margin=False)
        if best is None or cert.sort_key() < best.sort_key():
            best = cert
        if cert.accepted:
            n_acc += 1
            if n_acc >= params.stop_after:
                break
    if np.isnan(best.interior_margin):
        best.interior_margin = membership_margin(body, best.x, params.margin_restarts, params.seed)
    return best


def selection_preimages(body: SupportBody, x, center_kind: str = "centroid",
                        params: Optional[SelectionParams] = None, tol: Optional[float] = None) -> list:
    """Hyperplane classes H found with ``selection_map(H) = x``, clustered."""
    params = params or SelectionParams()
    tol = params.solve_tol if tol is None else tol
    x = np.asarray(x, dtype=float)
    d = body.d
    n_starts = params.n_starts or 8 * d
    found, res_list = [], []
    for n0 in projective_net(d, n_starts, params.seed):
        c = normalize(n0)
        T = tangent_basis(c)

        def fun(z, c=c, T=T):
            n = chart(c, T, z[: d - 1])
            return selection_map(body, Hyperplane(n, z[-1]), center_kind, params.resolution).value - x

        z0 = np.concatenate([np.zeros(d - 1), [float(x @ c)]])
        res = least_squares(fun, z0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=params.max_nfev)
        r = float(np.linalg.norm(res.fun))
        if r < tol:
            n = chart(c, T, res.x[: d - 1])
            found.append(Hyperplane.make(n, res.x[-1]))
            res_list.append(r)
    order = np.argsort(res_list, kind="stable")
    reps = []
    for i in order:
        h = found[i]
        if all(geodesic_rp(h.n, found[j].n) > params.cluster_delta
               or abs(h.t - found[j].t) > params.cluster_delta for j in reps):
            reps.append(int(i))
    return [found[i] for i in reps]


def count_selections_hitting_exterior_point(body: SupportBody, x, params: Optional[SelectionParams] = None,
                                            center_kind: str = "centroid") -> int:
    """Number of hyperplane classes whose selected point is the exterior point x."""
    params = params or SelectionParams()
    m = membership_margin(body, x, params.margin_restarts, params.seed)
    if not m < 0:
        raise NotInteriorError(f"point {np.asarray(x).tolist()} is not exterior (margin {m:.3e})")
    return len(selection_preimages(body, x, center_kind, params))
