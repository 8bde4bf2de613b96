import warnings

import numpy as np
import pytest

from coincide import (
    DirectionParams,
    PointParams,
    chord_of_normal,
    diameter_in_direction,
    diameters_through_point,
    make_ellipsoid,
    make_perturbed_ball,
    membership_margin,
    multiplicity_at,
    oracle_sweep_2d,
    translate,
)
from coincide.body import custom_body
from coincide.diameters import point_residual, _endpoints
from coincide.errors import AmbiguityWarning, ConvergenceFailure, NotInteriorError
from coincide.sphere import geodesic_rp, normalize


def sweep_best_aligned(body, v, n=100_000):
    """Oracle: normal on a dense half-circle grid whose chord is best aligned with v."""
    th = np.pi * np.arange(n) / n
    U = np.column_stack([np.cos(th), np.sin(th)])
    E = body.contact(U) - body.contact(-U)
    E /= np.linalg.norm(E, axis=1)[:, None]
    j = np.argmax(np.abs(E @ v))
    return U[j]


def test_chord_of_normal_examples(unit_disc, ellipse41):
    c = chord_of_normal(unit_disc, [1.0, 0.0])
    np.testing.assert_array_equal(c.a, [1.0, 0.0])
    np.testing.assert_array_equal(c.b, [-1.0, 0.0])
    assert c.length == 2.0
    c = chord_of_normal(ellipse41, [0.0, 1.0])
    np.testing.assert_array_equal(c.a, [0.0, 1.0])
    assert c.length == 2.0
    sym = make_ellipsoid(np.diag([3.0, 1.0, 2.0]), [1.0, -1.0, 0.5])
    for u in normalize(np.random.default_rng(0).standard_normal((20, 3))):
        assert chord_of_normal(sym, u).distance_to(sym.center) < 1e-12


def test_chord_invariants(corpus):
    r = np.random.default_rng(1)
    for body in corpus:
        for u in normalize(r.standard_normal((10, body.d))):
            c = chord_of_normal(body, u)
            assert abs(c.a @ c.u - body.h(c.u)) <= 1e-9 * max(1, abs(body.h(c.u)))
            assert abs(c.b @ (-c.u) - body.h(-c.u)) <= 1e-9 * max(1, abs(body.h(-c.u)))
            assert c.length > 0
            assert geodesic_rp(c.direction, c.a - c.b) < 1e-12
            first = c.direction[np.abs(c.direction) > 1e-15][0]
            assert first > 0


def test_point_residual_jacobian():
    body = make_perturbed_ball(3, 3, 0.05, 3)
    x = np.array([0.1, -0.05, 0.2])
    u = normalize([0.4, 0.2, 0.9])

    def R(v):
        a, b, Da, Db = _endpoints(body, v, 2)
        return point_residual(x, a, b, Da, Db)

    _, J = R(u)
    h = 1e-7
    fd = np.column_stack([(R(u + h * e)[0] - R(u - h * e)[0]) / (2 * h) for e in np.eye(3)])
    np.testing.assert_allclose(J, fd, atol=1e-6)


def test_diameter_in_direction_ball(unit_disc):
    v = normalize([0.3, -0.7])
    c = diameter_in_direction(unit_disc, v)
    assert c.distance_to(np.zeros(2)) < 1e-12
    assert geodesic_rp(c.direction, v) < 1e-10


def test_diameter_in_direction_ellipse():
    a, b = 3.0, 0.5
    e = make_ellipsoid(np.diag([a * a, b * b]))
    c = diameter_in_direction(e, [1.0, 0.0])
    np.testing.assert_allclose(sorted([c.a[0], c.b[0]]), [-a, a], atol=1e-10)
    np.testing.assert_allclose([c.a[1], c.b[1]], 0, atol=1e-10)
    # closed form: u parallel to B^-1 e1, and the sweep oracle agrees
    assert geodesic_rp(c.u, [1.0, 0.0]) < 1e-10
    v = normalize([1.0, 2.0])
    c2 = diameter_in_direction(e, v)
    u_closed = normalize(np.linalg.solve(np.diag([a * a, b * b]), v))
    assert geodesic_rp(c2.u, u_closed) < 1e-9
    assert geodesic_rp(c2.u, sweep_best_aligned(e, v)) < 1e-4


def test_diameter_in_direction_perturbed():
    body = make_perturbed_ball(2, 3, 0.05, 7)
    v = np.array([1.0, 0.0])
    c = diameter_in_direction(body, v)
    assert c.residual < 1e-10
    assert geodesic_rp(c.direction, v) < 1e-8
    assert geodesic_rp(c.u, sweep_best_aligned(body, v)) < 1e-4


def test_direction_round_trip(corpus):
    r = np.random.default_rng(2)
    for body in corpus[::3]:
        u = normalize(r.standard_normal(body.d))
        c = chord_of_normal(body, u)
        back = diameter_in_direction(body, c.direction)
        assert geodesic_rp(back.u, c.u) < 1e-8


def test_direction_failure_and_ambiguity():
    def square(U, order):
        # h of the square [-1, 1]^2: chords join opposite vertices only
        h = np.abs(U).sum(axis=1)
        return h, np.sign(U), np.zeros((len(U), 2, 2))

    body = custom_body(2, square)
    with pytest.raises(ConvergenceFailure) as info:
        diameter_in_direction(body, normalize([1.0, 0.3]))
    assert info.value.best_residual > 0.1
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        c = diameter_in_direction(body, normalize([1.0, 1.0]), DirectionParams(n_starts=16))
    assert any(issubclass(w.category, AmbiguityWarning) for w in rec)
    assert c.length == pytest.approx(2 * np.sqrt(2))


def test_through_point_examples(unit_disc, ellipse41):
    res = multiplicity_at(unit_disc, [0.0, 0.0])
    assert res.saturated and res.count == 64
    res = multiplicity_at(unit_disc, [0.5, 0.0])
    assert res.count == 1 and not res.saturated
    assert geodesic_rp(res.chords[0].direction, [1.0, 0.0]) < 1e-8
    found = diameters_through_point(ellipse41, [0.5, 0.0])
    oracle = oracle_sweep_2d(ellipse41, [0.5, 0.0]).chords
    assert len(found) == len(oracle) == 1
    assert geodesic_rp(found[0].direction, oracle[0].direction) < 1e-6


def test_through_point_rejects_exterior(unit_disc):
    with pytest.raises(NotInteriorError):
        diameters_through_point(unit_disc, [1.5, 0.0])


def test_oracle_rejects_bad_input(unit_ball3, unit_disc):
    with pytest.raises(ValueError):
        oracle_sweep_2d(unit_ball3, [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        oracle_sweep_2d(unit_disc, [0.0, 0.0], n=10)
    assert oracle_sweep_2d(unit_disc, [0.0, 0.0]).identically_zero


@pytest.mark.parametrize("seed", range(5))
def test_newton_matches_oracle_perturbed(seed):
    body = make_perturbed_ball(2, 3, 0.08, 40 + seed)
    r = np.random.default_rng(seed)
    for x in (r.uniform(-0.05, 0.05, 2), r.uniform(-0.5, 0.5, 2)):
        found = diameters_through_point(body, x)
        oracle = oracle_sweep_2d(body, x, 100_000).chords
        assert len(found) == len(oracle)
        for f, o in zip(found, oracle):
            assert geodesic_rp(f.direction, o.direction) < 1e-6


def test_translation_equivariance_through_point():
    body = make_perturbed_ball(2, 3, 0.08, 3)
    c = np.array([0.7, -1.1])
    x = np.array([0.01, 0.02])
    a = diameters_through_point(body, x)
    b = diameters_through_point(translate(body, c), x + c)
    assert len(a) == len(b)
    for p, q in zip(a, b):
        assert geodesic_rp(p.direction, q.direction) < 1e-8
        np.testing.assert_allclose(q.a, p.a + c, atol=1e-8)


def test_symmetric_saturation_residual(corpus):
    r = np.random.default_rng(4)
    for body in [b for b in corpus if b.centrally_symmetric]:
        for u in normalize(r.standard_normal((100, body.d))):
            assert chord_of_normal(body, u).distance_to(body.center) <= 1e-10


def _chord_length_through(body, x, v):
    """Parallel chord through x: bisection on the membership margin along +-v."""
    ends = []
    for s in (1.0, -1.0):
        # x + r v stays in K only while r <= h(v) - x.v
        lo, hi = 0.0, float(body.h(s * v) - s * (x @ v))
        for _ in range(32):
            mid = 0.5 * (lo + hi)
            if membership_margin(body, x + s * mid * v, restarts=1) > 0:
                lo = mid
            else:
                hi = mid
        ends.append(lo)
    return sum(ends)


def test_longest_chord_property():
    r = np.random.default_rng(8)
    bodies = [make_perturbed_ball(2, 3, 0.08, 70 + i) for i in range(4)]
    for i in range(100):
        body = bodies[i % 4]
        x = r.uniform(-0.5, 0.5, 2)
        v = normalize(r.standard_normal(2))
        diam = diameter_in_direction(body, v)
        assert _chord_length_through(body, x, v) <= diam.length + 1e-8


def test_multiplicity_cap(unit_disc):
    res = multiplicity_at(unit_disc, [0.0, 0.0], PointParams(max_results=7))
    assert res.count == 7 and res.saturated
