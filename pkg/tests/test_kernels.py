import os
import subprocess
import sys

import numpy as np
import pytest

from coincide import _fallback, kernels
from coincide.body import _monomials

compiled = pytest.importorskip("coincide._kernels")


@pytest.mark.parametrize("d,degree,linear", [(2, 3, False), (3, 4, True), (6, 3, False)])
def test_compiled_matches_fallback(d, degree, linear):
    r = np.random.default_rng(d)
    exps = _monomials(d, degree, linear)
    degs = exps.sum(axis=1)
    coeffs = 0.05 * r.standard_normal(len(exps))
    B = np.eye(d) + 0.2 * np.diag(r.random(d))
    U = r.standard_normal((40, d))
    for order in (0, 1, 2):
        a = _fallback.support_eval(U, exps, degs, coeffs, B, order)
        b = compiled.support_eval(U, exps, degs, coeffs, B, order)
        for x, y in zip(a, b):
            if x is None:
                assert y is None
            else:
                np.testing.assert_allclose(x, y, rtol=1e-12, atol=1e-13)


def test_no_monomials():
    B = np.diag([4.0, 1.0])
    U = np.array([[1.0, 0.0], [0.6, 0.8]])
    empty = np.zeros((0, 2), dtype=np.int64)
    for impl in (_fallback, compiled):
        h, g, H = impl.support_eval(U, empty, np.zeros(0, dtype=np.int64), np.zeros(0), B, 2)
        np.testing.assert_allclose(h, np.sqrt(np.einsum("ni,ij,nj->n", U, B, U)))


def test_segment_distances_agree():
    r = np.random.default_rng(1)
    A = r.standard_normal((50, 3))
    B = r.standard_normal((50, 3))
    x = r.standard_normal(3)
    np.testing.assert_allclose(_fallback.segment_distances(x, A, B), compiled.segment_distances(x, A, B),
                               rtol=1e-13, atol=1e-15)
    # endpoint clamp
    d = _fallback.segment_distances(np.array([3.0, 0, 0]), np.array([[1.0, 0, 0]]), np.array([[-1.0, 0, 0]]))
    assert d[0] == pytest.approx(2.0)


def test_backend_selected_at_import():
    assert kernels.BACKEND == ("python" if os.environ.get("COINCIDE_PURE_PYTHON") else "cython")
    env = dict(os.environ, COINCIDE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import coincide; print(coincide.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
