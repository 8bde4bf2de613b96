import numpy as np
import pytest

from coincide import make_ellipsoid, make_perturbed_ball

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def rng(seed=0):
    return np.random.default_rng(seed)


def random_spd(d, seed):
    r = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(r.standard_normal((d, d)))
    return Q @ np.diag(r.uniform(0.4, 2.5, d)) @ Q.T


def body_corpus():
    """30 bodies: ellipsoids and perturbed balls in d = 2, 3, 6."""
    bodies = []
    for d in (2, 3, 6):
        for s in range(5):
            bodies.append(make_ellipsoid(random_spd(d, 10 * d + s), np.random.default_rng(s).uniform(-1, 1, d)))
        for s in range(5):
            eps = {2: 0.08, 3: 0.05, 6: 0.01}[d]
            bodies.append(make_perturbed_ball(d, 3 + (s % 2), eps, 1000 * d + s))
    return bodies


@pytest.fixture(scope="session")
def corpus():
    return body_corpus()


@pytest.fixture(scope="session")
def planar_bodies():
    return [make_perturbed_ball(2, 3, 0.05 + 0.005 * s, 500 + s) for s in range(20)]


@pytest.fixture
def unit_disc():
    return make_ellipsoid(np.eye(2))


@pytest.fixture
def unit_ball3():
    return make_ellipsoid(np.eye(3))


@pytest.fixture
def ellipse41():
    return make_ellipsoid(np.diag([4.0, 1.0]))
