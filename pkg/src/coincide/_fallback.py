"""Pure numpy implementations of the hot kernels.

Selected by :mod:`coincide.kernels` when the compiled extension is missing
or ``COINCIDE_PURE_PYTHON`` is set.  Signatures match ``_kernels.pyx``.
"""
import numpy as np


def support_eval(U, exps, degs, coeffs, B, order):
    """Support function of ``sqrt(u'Bu) + |u| P(u/|u|)`` and its derivatives.

    ``P`` is the sum of ``coeffs[j] * u**exps[j]``; each monomial of degree k
    is made 1-homogeneous as ``u**a * |u|**(1 - k)``.  Returns ``(h, grad,
    hess)`` for the rows of ``U``; derivatives beyond ``order`` are None.
    """
    U = np.ascontiguousarray(U, dtype=float)
    N, d = U.shape
    Bu = U @ B
    s = np.sqrt(np.einsum("ni,ni->n", U, Bu))
    h = s.copy()
    g = H = None
    if order >= 1:
        g = Bu / s[:, None]
    if order >= 2:
        H = B[None, :, :] / s[:, None, None] - np.einsum("ni,nj->nij", Bu, Bu) / (s**3)[:, None, None]
    if len(coeffs) == 0:
        return h, g, H

    r = np.sqrt(np.einsum("ni,ni->n", U, U))
    maxe = int(exps.max()) if exps.size else 0
    # pw[e][n, j] = U[n, j] ** e
    pw = [np.ones_like(U)]
    for _ in range(maxe):
        pw.append(pw[-1] * U)
    pw = np.stack(pw)  # (maxe+1, N, d)
    cols = np.arange(d)

    def mono(shift):
        # Product over coordinates of U**(exps - shift) times the falling
        # factorial coefficients; shift is an (M, d) nonnegative array.
        e = exps - shift
        valid = np.all(e >= 0, axis=1)
        ec = np.clip(e, 0, None)
        fac = np.ones(len(exps))
        for j in range(d):
            for t in range(int(shift[:, j].max()) if shift.size else 0):
                fac = fac * np.where(shift[:, j] > t, exps[:, j] - t, 1)
        vals = np.prod(pw[ec, :, cols], axis=1)  # (M, N)
        return vals * (fac * valid)[:, None]

    zero = np.zeros_like(exps)
    m = mono(zero)  # (M, N)
    degset = sorted(set(int(k) for k in degs))
    for k in degset:
        sel = degs == k
        c = coeffs[sel]
        Q = c @ m[sel]  # (N,)
        rk = r ** (1 - k)
        h = h + Q * rk
        if order >= 1:
            G = np.empty((N, d))
            for i in range(d):
                sh = zero.copy()
                sh[:, i] = 1
                G[:, i] = c @ mono(sh)[sel]
            a = (1 - k) * r ** (-1 - k)
            g = g + G * rk[:, None] + (Q * a)[:, None] * U
            if order >= 2:
                W = np.empty((N, d, d))
                for i in range(d):
                    for l in range(i, d):
                        sh = zero.copy()
                        sh[:, i] += 1
                        sh[:, l] += 1
                        W[:, i, l] = c @ mono(sh)[sel]
                        W[:, l, i] = W[:, i, l]
                GU = np.einsum("ni,nj->nij", G, U)
                UU = np.einsum("ni,nj->nij", U, U)
                b = (1 - k) * (-1 - k) * r ** (-3 - k)
                H = (
                    H
                    + W * rk[:, None, None]
                    + a[:, None, None] * (GU + GU.transpose(0, 2, 1))
                    + (Q * a)[:, None, None] * np.eye(d)[None]
                    + (Q * b)[:, None, None] * UU
                )
    return h, g, H


def segment_distances(x, A, B):
    """Euclidean distance from point x to each closed segment [A_i, B_i]."""
    x = np.asarray(x, dtype=float)
    E = A - B
    W = x - B
    ee = np.einsum("ni,ni->n", E, E)
    t = np.clip(np.einsum("ni,ni->n", W, E) / ee, 0.0, 1.0)
    R = W - t[:, None] * E
    return np.sqrt(np.einsum("ni,ni->n", R, R))
