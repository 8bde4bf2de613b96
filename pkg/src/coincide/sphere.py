"""Unit directions, projective representatives, nets and charts on S^(d-1)."""
from __future__ import annotations

import numpy as np

UNIT_TOL = 1e-12
_ZERO = 1e-15


def normalize(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ValueError("cannot normalize the zero vector")
    return v / n


def canonical(v):
    """Projective representative whose first nonzero coordinate is positive.

    Works on a single vector or row-wise on an (N, d) array.
    """
    v = np.asarray(v, dtype=float)
    flat = v.reshape(-1, v.shape[-1])
    nz = np.abs(flat) > _ZERO
    first = np.argmax(nz, axis=1)
    signs = np.sign(flat[np.arange(len(flat)), first])
    signs[signs == 0] = 1.0
    return (flat * signs[:, None]).reshape(v.shape)


def unit(v):
    """Normalize and canonicalize; the usual way to build a projective direction."""
    return canonical(normalize(v))


def geodesic_rp(u, v):
    """Angle between the lines spanned by u and v, in [0, pi/2].

    Uses the half-chord arctan form, which stays accurate for nearly equal
    arguments where arccos(|u.v|) loses half the digits.
    """
    u = normalize(u)
    v = normalize(v)
    s = np.where(np.sum(u * v, axis=-1) < 0, -1.0, 1.0)[..., None]
    a = np.linalg.norm(u - s * v, axis=-1)
    b = np.linalg.norm(u + s * v, axis=-1)
    return 2.0 * np.arctan2(a, b)


def tangent_basis(u):
    """Orthonormal basis of u^perp as the columns of a (d, d-1) matrix."""
    u = np.asarray(u, dtype=float)
    d = u.shape[0]
    # Householder reflection mapping e_k to +-u, with k the largest coordinate
    # of u to keep the reflection well conditioned.
    k = int(np.argmax(np.abs(u)))
    e = np.zeros(d)
    e[k] = 1.0
    s = 1.0 if u[k] >= 0 else -1.0
    w = s * u + e
    Q = np.eye(d) - 2.0 * np.outer(w, w) / (w @ w)
    cols = [j for j in range(d) if j != k]
    return Q[:, cols]


def chart(center, basis, y):
    """Retraction u(y) = normalize(center + basis @ y)."""
    return normalize(center + basis @ y)


def chart_jacobian(center, basis, y):
    """Derivative of :func:`chart` with respect to y, shape (d, d-1)."""
    v = center + basis @ y
    r = np.linalg.norm(v)
    u = v / r
    return (basis - np.outer(u, u @ basis)) / r


def projective_net(d: int, n: int, seed: int = 0) -> np.ndarray:
    """Seeded net of ``n`` canonical representatives of RP^(d-1).

    d = 2: jittered equispaced angles on the half circle.  d = 3: a
    Fibonacci net of the upper hemisphere for the first half of the points.
    All remaining points are seeded Gaussian directions.
    """
    if n < 1:
        raise ValueError("net size must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    if d == 2:
        theta = np.pi * (np.arange(n) + rng.uniform(0.0, 1.0, n)) / n
        return canonical(np.column_stack([np.cos(theta), np.sin(theta)]))
    pts = []
    if d == 3:
        nf = (n + 1) // 2
        golden = np.pi * (3.0 - np.sqrt(5.0))
        i = np.arange(nf)
        z = 1.0 - (i + 0.5) / nf
        r = np.sqrt(1.0 - z * z)
        phi = golden * i
        pts.append(np.column_stack([r * np.cos(phi), r * np.sin(phi), z]))
    m = n - sum(len(p) for p in pts)
    if m > 0:
        pts.append(normalize(rng.standard_normal((m, d))))
    return canonical(np.vstack(pts))


def random_directions(d: int, n: int, rng) -> np.ndarray:
    return normalize(rng.standard_normal((n, d)))
