"""Smooth strictly convex bodies represented by their support functions.

A body is exposed only through evaluators of the support function ``h``,
its gradient ``p = grad h`` (the boundary point with outer normal ``u``)
and its Hessian.  Two parametric families carry a JSON descriptor:
ellipsoids and perturbed balls ``h(u) = sqrt(u'Bu) + eps |u| P(u/|u|)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .errors import ConvexityError
from .sphere import normalize, tangent_basis

MARGIN_FLOOR = 1e-3


def _monomials(d: int, degree: int, include_linear: bool) -> np.ndarray:
    rows = []
    lo = 1 if include_linear else 2
    for k in range(lo, degree + 1):
        for combo in combinations_with_replacement(range(d), k):
            e = np.zeros(d, dtype=np.int64)
            for i in combo:
                e[i] += 1
            rows.append(e)
    if not rows:
        return np.zeros((0, d), dtype=np.int64)
    return np.array(rows, dtype=np.int64)


@dataclass
class SupportBody:
    """Evaluators for a convex body K in R^d.

    For the parametric kinds the support function is
    ``sqrt(u'Bu) + sum_j coeffs[j] u**exps[j] |u|**(1-deg_j) + shift.u``;
    ``custom`` bodies supply their own ``(U, order) -> (h, grad, hess)``.
    """

    d: int
    kind: str
    params: dict
    B: Optional[np.ndarray] = None
    exps: Optional[np.ndarray] = None
    coeffs: Optional[np.ndarray] = None
    shift: Optional[np.ndarray] = None
    centrally_symmetric: bool = False
    center: Optional[np.ndarray] = None
    custom: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if self.shift is None:
            self.shift = np.zeros(self.d)
        if self.custom is None:
            if self.exps is None:
                self.exps = np.zeros((0, self.d), dtype=np.int64)
                self.coeffs = np.zeros(0)
            self._degs = self.exps.sum(axis=1).astype(np.int64)

    def evaluate(self, u, order: int = 1):
        """Return ``(h, grad, hess)`` at u (a vector or an (N, d) array)."""
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        U = u.reshape(1, -1) if single else u
        if self.custom is not None:
            h, g, H = self.custom(U, order)
        else:
            h, g, H = kernels.support_eval(U, self.exps, self._degs, self.coeffs, self.B, order)
        h = h + U @ self.shift
        if g is not None:
            g = g + self.shift
        if single:
            return h[0], (None if g is None else g[0]), (None if H is None else H[0])
        return h, g, H

    def h(self, u):
        return self.evaluate(u, 0)[0]

    def contact(self, u):
        return self.evaluate(u, 1)[1]

    def hess(self, u):
        return self.evaluate(u, 2)[2]

    def width(self, u):
        u = np.asarray(u, dtype=float)
        return self.h(u) + self.h(-u)

    def mean_width(self, n: int = 256, seed: int = 0) -> float:
        rng = np.random.Generator(np.random.Philox(seed))
        U = normalize(rng.standard_normal((n, self.d)))
        return float(np.mean(self.width(U)))

    def descriptor(self) -> dict:
        if self.kind == "custom":
            raise ValueError("custom bodies have no JSON descriptor")
        out = {"kind": self.kind, "d": self.d}
        out.update(self.params)
        out["shift"] = self.shift.tolist()
        return out


def make_ellipsoid(B, center=None) -> SupportBody:
    """Ellipsoid ``{c + B^(1/2) y : |y| <= 1}``, so ``h(u) = sqrt(u'Bu) + c.u``."""
    B = np.array(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1] or B.shape[0] < 2:
        raise ValueError(f"B must be a square matrix of size >= 2, got shape {B.shape}")
    d = B.shape[0]
    if not np.allclose(B, B.T, rtol=0, atol=1e-12 * max(1.0, np.abs(B).max())):
        raise ValueError(f"B is not symmetric (max asymmetry {np.abs(B - B.T).max():.3e})")
    B = 0.5 * (B + B.T)
    lam = np.linalg.eigvalsh(B)
    if lam[0] <= 0:
        raise ValueError(f"B is not positive definite: smallest eigenvalue {lam[0]:.6g}")
    c = np.zeros(d) if center is None else np.array(center, dtype=float)
    if c.shape != (d,):
        raise ValueError(f"center must have length {d}")
    return SupportBody(
        d=d,
        kind="ellipsoid",
        params={"matrix": B.tolist(), "center": c.tolist()},
        B=B,
        shift=c,
        centrally_symmetric=True,
        center=c.copy(),
    )


def _perturbed(d, degree, eps, seed, base, include_linear, coeffs=None):
    exps = _monomials(d, degree, include_linear)
    if coeffs is None:
        rng = np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))
        raw = rng.standard_normal(len(exps))
        nonlin = exps.sum(axis=1) >= 2
        total = np.abs(raw[nonlin]).sum()
        coeffs = raw / total if total > 0 else raw
    coeffs = np.asarray(coeffs, dtype=float)
    B = np.eye(d) if base is None else np.array(base, dtype=float)
    degs = exps.sum(axis=1)
    odd = (degs >= 3) & (degs % 2 == 1) & (coeffs != 0)
    symmetric = bool(eps == 0 or not np.any(odd))
    lin = np.zeros(d)
    for e, c in zip(exps[degs == 1], coeffs[degs == 1]):
        lin += eps * c * e
    params = {
        "degree": int(degree),
        "eps": float(eps),
        "seed": int(seed),
        "include_linear": bool(include_linear),
        "monomials": exps.tolist(),
        "coeffs": coeffs.tolist(),
    }
    if base is not None:
        params["base"] = B.tolist()
    return SupportBody(
        d=d,
        kind="perturbed_ball",
        params=params,
        B=B,
        exps=exps,
        coeffs=eps * coeffs,
        centrally_symmetric=symmetric,
        center=lin if symmetric else None,
    )


def make_perturbed_ball(
    d: int,
    degree: int,
    eps: float,
    seed: int,
    base=None,
    include_linear: bool = False,
    margin_floor: float = MARGIN_FLOOR,
    n_samples: int = 2000,
) -> SupportBody:
    """Random smooth perturbation of the unit ball (or of an ellipsoid ``base``).

    Coefficients come from a Philox stream keyed by ``seed`` and are scaled
    so that their nonlinear part has unit l1 norm.  Raises ConvexityError
    with the largest admissible ``eps`` (by bisection) when the margin check
    fails.
    """
    if d < 2:
        raise ValueError("dimension must be >= 2")
    if not 1 <= degree <= 4:
        raise ValueError("degree must be in 1..4")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    body = _perturbed(d, degree, eps, seed, base, include_linear)
    margin = strict_convexity_margin(body, n_samples, seed=0)
    if margin > margin_floor:
        return body

    def ok(e):
        return strict_convexity_margin(
            _perturbed(d, degree, e, seed, base, include_linear), n_samples, seed=0, refine=False
        ) > margin_floor

    lo, hi = 0.0, float(eps)
    if not ok(lo):
        raise ConvexityError(
            f"base body fails the convexity margin ({margin:.3e})", margin=margin, admissible_eps=None
        )
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    raise ConvexityError(
        f"strict convexity margin {margin:.3e} <= floor {margin_floor:g} at eps={eps:g}; "
        f"largest admissible eps is about {lo:.6g}",
        margin=margin,
        admissible_eps=lo,
    )


def body_from_descriptor(desc: dict) -> SupportBody:
    kind = desc["kind"]
    if kind == "ellipsoid":
        body = make_ellipsoid(desc["matrix"], desc.get("center"))
        # make_ellipsoid folds the center into the shift already
        extra = np.array(desc.get("shift", body.shift), dtype=float) - body.shift
    elif kind == "perturbed_ball":
        d = int(desc["d"])
        exps = _monomials(d, int(desc["degree"]), bool(desc.get("include_linear", False)))
        if "monomials" in desc and np.array(desc["monomials"]).reshape(-1, d).tolist() != exps.tolist():
            raise ValueError("descriptor monomial list does not match its degree")
        body = _perturbed(
            d,
            int(desc["degree"]),
            float(desc["eps"]),
            int(desc["seed"]),
            desc.get("base"),
            bool(desc.get("include_linear", False)),
            coeffs=desc.get("coeffs"),
        )
        extra = np.array(desc.get("shift", np.zeros(d)), dtype=float)
    else:
        raise ValueError(f"unknown body kind {kind!r}")
    return translate(body, extra) if np.any(extra) else body


def translate(body: SupportBody, c) -> SupportBody:
    c = np.asarray(c, dtype=float)
    if c.shape != (body.d,):
        raise ValueError(f"translation must have length {body.d}")
    return SupportBody(
        d=body.d,
        kind=body.kind,
        params=dict(body.params),
        B=body.B,
        exps=body.exps,
        coeffs=body.coeffs,
        shift=body.shift + c,
        centrally_symmetric=body.centrally_symmetric,
        center=None if body.center is None else body.center + c,
        custom=body.custom,
    )


def custom_body(d: int, evaluate: Callable, centrally_symmetric=False, center=None) -> SupportBody:
    """Wrap an arbitrary ``(U, order) -> (h, grad, hess)`` evaluator."""
    return SupportBody(
        d=d, kind="custom", params={}, custom=evaluate,
        centrally_symmetric=centrally_symmetric, center=center,
    )


def contact_point(body: SupportBody, u):
    return body.contact(u)


def sphere_samples(d: int, n: int, seed: int = 0) -> np.ndarray:
    """Seeded points covering the whole sphere (jittered equispaced for d = 2)."""
    rng = np.random.Generator(np.random.Philox(seed))
    if d == 2:
        theta = 2 * np.pi * (np.arange(n) + rng.uniform(0.0, 1.0, n)) / n
        return np.column_stack([np.cos(theta), np.sin(theta)])
    return normalize(rng.standard_normal((n, d)))


def _restricted_min_eig(body, U):
    H = body.evaluate(U, 2)[2]
    # H u = 0 by degree-1 homogeneity; lifting u out of the spectrum leaves
    # the eigenvalues of H on the tangent space u^perp.
    lift = 1.0 + 2.0 * np.abs(H).sum(axis=(1, 2))
    M = H + lift[:, None, None] * np.einsum("ni,nj->nij", U, U)
    return np.linalg.eigvalsh(M)[:, 0]


def strict_convexity_margin(body: SupportBody, n_samples: int = 2000, seed: int = 0, refine: bool = True) -> float:
    """Smallest tangential Hessian eigenvalue of h over sampled unit normals.

    Positive means the sampled boundary has strictly positive radii of
    curvature.  With ``refine`` the best sample is polished by a local
    Nelder-Mead search, which can only lower the result.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    U = sphere_samples(body.d, n_samples, seed)
    lam = _restricted_min_eig(body, U)
    j = int(np.argmin(lam))
    best = float(lam[j])
    if refine:
        u0 = U[j]
        T = tangent_basis(u0)

        def f(y):
            return float(_restricted_min_eig(body, normalize(u0 + T @ y)[None])[0])

        res = minimize(f, np.zeros(body.d - 1), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400 * body.d})
        best = min(best, float(res.fun))
    return best


def membership_margin(body: SupportBody, x, restarts: int = 8, seed: int = 0) -> float:
    """Estimate ``min_u h(u) - x.u`` over unit u by multistart local search.

    Positive means x is interior.  The value returned is attained at an
    explicit unit vector, so it never undercuts the true minimum; callers
    treat it as an upper estimate of the margin.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    x = np.asarray(x, dtype=float)
    d = body.d

    def f(v):
        r = np.linalg.norm(v)
        u = v / r
        h, g, _ = body.evaluate(u, 1)
        val = h - x @ u
        grad = ((g - x) - val * u) / r
        return val, grad

    cand = sphere_samples(d, max(32 * d, 4 * restarts), seed)
    if np.linalg.norm(x) > 0:
        cand = np.vstack([cand, x / np.linalg.norm(x)])
    vals = body.h(cand) - cand @ x
    order = np.argsort(vals, kind="stable")[:restarts]
    best = float(vals[order[0]])
    for j in order:
        res = minimize(f, cand[j], jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 200})
        u = normalize(res.x)
        best = min(best, float(body.h(u) - x @ u))
    return best
