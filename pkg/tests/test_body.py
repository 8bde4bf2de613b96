import json

import numpy as np
import pytest

from coincide import (
    body_from_descriptor,
    contact_point,
    make_ellipsoid,
    make_perturbed_ball,
    membership_margin,
    strict_convexity_margin,
    translate,
)
from coincide.body import custom_body
from coincide.errors import ConvexityError
from coincide.sphere import normalize


def test_ellipsoid_examples():
    ball = make_ellipsoid(np.eye(2))
    assert ball.h([1.0, 0.0]) == 1.0
    np.testing.assert_array_equal(ball.contact([1.0, 0.0]), [1.0, 0.0])
    e = make_ellipsoid(np.diag([4.0, 1.0]))
    assert e.h([1.0, 0.0]) == 2.0
    np.testing.assert_array_equal(e.contact([1.0, 0.0]), [2.0, 0.0])
    t = make_ellipsoid(np.eye(2), [1.0, 0.0])
    assert t.h([1.0, 0.0]) == 2.0
    np.testing.assert_array_equal(t.contact([1.0, 0.0]), [2.0, 0.0])
    assert e.centrally_symmetric


def test_ellipsoid_rejections_report_eigenvalue():
    with pytest.raises(ValueError, match="symmetric"):
        make_ellipsoid([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError, match="-2"):
        make_ellipsoid(np.diag([1.0, -2.0]))


def test_contact_point_examples():
    assert np.allclose(contact_point(make_ellipsoid(np.eye(2)), [0.0, 1.0]), [0.0, 1.0])
    e = make_ellipsoid(np.diag([4.0, 1.0]))
    assert np.allclose(contact_point(e, [0.0, 1.0]), [0.0, 1.0])
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    p = contact_point(e, u)
    np.testing.assert_allclose(p, [4 / np.sqrt(5), 1 / np.sqrt(5)], atol=1e-15)
    assert abs(p @ u - e.h(u)) < 1e-15
    h = 1e-6
    fd = np.array([(e.h(u + h * v) - e.h(u - h * v)) / (2 * h) for v in np.eye(2)])
    np.testing.assert_allclose(fd, p, atol=1e-8)


def test_perturbed_ball_examples():
    b0 = make_perturbed_ball(3, 3, 0.0, 11)
    U = normalize(np.random.default_rng(0).standard_normal((50, 3)))
    np.testing.assert_allclose(b0.h(U), 1.0, atol=1e-15)
    b = make_perturbed_ball(2, 3, 0.05, 7)
    assert strict_convexity_margin(b) > 1e-3
    assert not b.centrally_symmetric
    u = normalize([0.3, 0.8])
    assert abs(b.h(u) - b.h(-u)) > 1e-6


def test_perturbed_ball_rejection_reports_admissible_eps():
    with pytest.raises(ConvexityError) as info:
        make_perturbed_ball(2, 3, 10.0, 7)
    err = info.value
    assert err.margin <= 1e-3
    assert 0 < err.admissible_eps < 10
    # bisection oracle: just below the reported eps passes, just above fails
    make_perturbed_ball(2, 3, 0.99 * err.admissible_eps, 7)
    with pytest.raises(ConvexityError):
        make_perturbed_ball(2, 3, 1.02 * err.admissible_eps, 7)


def test_perturbed_parameters_validated():
    with pytest.raises(ValueError):
        make_perturbed_ball(1, 3, 0.1, 0)
    with pytest.raises(ValueError):
        make_perturbed_ball(2, 5, 0.1, 0)
    with pytest.raises(ValueError):
        make_perturbed_ball(2, 3, -0.1, 0)


def test_seed_determinism_bitwise():
    a = make_perturbed_ball(3, 4, 0.05, 123)
    b = make_perturbed_ball(3, 4, 0.05, 123)
    assert a.params["coeffs"] == b.params["coeffs"]
    assert make_perturbed_ball(3, 4, 0.05, 124).params["coeffs"] != a.params["coeffs"]


def test_even_perturbation_is_symmetric():
    b = make_perturbed_ball(3, 2, 0.1, 5)
    assert b.centrally_symmetric
    U = normalize(np.random.default_rng(2).standard_normal((200, 3)))
    np.testing.assert_allclose(b.contact(U) + b.contact(-U), 0, atol=1e-12)


def test_linear_terms_translate():
    b = make_perturbed_ball(2, 2, 0.1, 5, include_linear=True)
    assert b.centrally_symmetric
    c = b.center
    U = normalize(np.random.default_rng(3).standard_normal((100, 2)))
    np.testing.assert_allclose((b.contact(U) - c) + (b.contact(-U) - c), 0, atol=1e-12)


def test_margin_examples():
    assert strict_convexity_margin(make_ellipsoid(np.eye(3))) == pytest.approx(1.0, abs=1e-12)
    e = make_ellipsoid(np.diag([4.0, 1.0]))
    # oracle: closed-form radius of curvature a^2 b^2 / h^3 on 10^4 angles
    th = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
    rho = 4.0 / (4 * np.cos(th) ** 2 + np.sin(th) ** 2) ** 1.5
    assert abs(strict_convexity_margin(e, 10_000) - rho.min()) < 1e-6


def test_margin_detects_flat_faces():
    def l1(U, order):
        h = np.abs(U).sum(axis=1)
        g = np.sign(U)
        H = np.zeros(U.shape + (U.shape[1],))
        return h, g, H

    assert strict_convexity_margin(custom_body(2, l1), 500) <= 0


def test_membership_examples():
    ball = make_ellipsoid(np.eye(2))
    assert membership_margin(ball, [0.0, 0.0]) == pytest.approx(1.0, abs=1e-12)
    assert membership_margin(ball, [2.0, 0.0]) == pytest.approx(-1.0, abs=1e-12)
    e = make_ellipsoid(np.diag([4.0, 1.0]))
    th = np.linspace(0, 2 * np.pi, 100_000, endpoint=False)
    sweep = np.min(np.sqrt(4 * np.cos(th) ** 2 + np.sin(th) ** 2) - 0.5 * np.sin(th))
    assert abs(membership_margin(e, [0.0, 0.5]) - sweep) < 1e-9
    assert abs(membership_margin(e, [0.0, 0.5]) - 0.5) < 1e-12


def test_membership_is_upper_estimate(corpus):
    r = np.random.default_rng(9)
    for body in corpus[:10]:
        x = r.uniform(-0.5, 0.5, body.d)
        m = membership_margin(body, x)
        U = normalize(r.standard_normal((20_000, body.d)))
        # any sampled value bounds the true minimum from above
        assert m <= np.min(body.h(U) - U @ x) + 1e-9


def test_translate_examples():
    ball = make_ellipsoid(np.eye(2))
    assert translate(ball, [1.0, 0.0]).h([1.0, 0.0]) == 2.0
    U = normalize(np.random.default_rng(4).standard_normal((30, 2)))
    same = translate(ball, [0.0, 0.0])
    np.testing.assert_array_equal(same.contact(U), ball.contact(U))
    back = translate(translate(ball, [0.3, -1.2]), [-0.3, 1.2])
    np.testing.assert_allclose(back.contact(U), ball.contact(U), atol=1e-12)


def test_translation_equivariance(corpus):
    r = np.random.default_rng(5)
    for body in corpus:
        c = r.uniform(-2, 2, body.d)
        U = normalize(r.standard_normal((50, body.d)))
        t = translate(body, c)
        np.testing.assert_allclose(t.contact(U), body.contact(U) + c, atol=1e-12)
        assert t.centrally_symmetric == body.centrally_symmetric


def test_properties_on_corpus(corpus):
    r = np.random.default_rng(6)
    for body in corpus:
        U = normalize(r.standard_normal((1000, body.d)))
        V = normalize(r.standard_normal((1000, body.d)))
        assert np.all(body.h(U + V) <= body.h(U) + body.h(V) + 1e-9)
        if body.centrally_symmetric:
            c = body.center
            np.testing.assert_allclose((body.contact(U) - c) + (body.contact(-U) - c), 0, atol=1e-9)


@pytest.mark.parametrize("kind", ["ellipsoid", "perturbed"])
def test_descriptor_round_trip(kind):
    if kind == "ellipsoid":
        body = translate(make_ellipsoid(np.diag([2.0, 3.0, 1.0]), [0.1, 0.2, 0.3]), [1.0, 0.0, 0.0])
    else:
        body = translate(make_perturbed_ball(3, 3, 0.05, 17, base=np.diag([1.0, 1.2, 0.9])), [0.5, 0.0, -1.0])
    desc = json.loads(json.dumps(body.descriptor()))
    again = body_from_descriptor(desc)
    U = normalize(np.random.default_rng(7).standard_normal((40, 3)))
    np.testing.assert_array_equal(again.h(U), body.h(U))
    assert again.descriptor() == body.descriptor()
