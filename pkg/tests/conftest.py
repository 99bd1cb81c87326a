import numpy as np
import pytest

import grazemap as gm


# The worked example surfaces: F = 1 - G with G listed by its monomials,
# paired with the source that makes the apex graze.
def quartic_vsq():
    return gm.polynomial_obstacle(2, {(0, 0): 1.0, (4, 0): -1.0, (0, 2): -1.0})


def quartic_mixed_vsq():
    return gm.polynomial_obstacle(2, {(0, 0): 1.0, (4, 0): -1.0, (2, 2): -1.0, (0, 2): -1.0})


def quartic_quartic():
    return gm.polynomial_obstacle(2, {(0, 0): 1.0, (4, 0): -1.0, (0, 4): -1.0})


def planar_cusp_obstacle():
    return gm.polynomial_obstacle(
        2, {(0, 0): 1.0, (4, 0): -1.0, (2, 2): -2.0, (1, 2): -1.0, (0, 2): -1.0})


def planar_c1_obstacle():
    return gm.polynomial_obstacle(
        2, {(0, 0): 1.0, (4, 0): -1.0, (1, 4): -1.0, (2, 4): -1.0, (0, 2): -1.0})


def rounded_quartic():
    return gm.polynomial_obstacle(2, {(0, 0): 1.0, (4, 0): -1.0, (2, 2): -1.0, (0, 4): -1.0})


@pytest.fixture
def sphere():
    return gm.sphere_obstacle(2, radius=0.5)


@pytest.fixture
def side_source():
    return gm.SphericalPhase(source=[1.0, -1.0, 0.0])


@pytest.fixture
def plane_u():
    return gm.PlanePhase(theta=[0.0, 1.0, 0.0])


def sample_disk(rng, radius, n):
    pts = []
    while len(pts) < n:
        x = rng.uniform(-radius, radius, 2)
        if np.linalg.norm(x) <= radius:
            pts.append(x)
    return np.array(pts)


def illuminated_samples(obstacle, phase, rng, n, radius=None, margin_floor=1e-3):
    r = obstacle.radius * 0.9 if radius is None else radius
    out = []
    while len(out) < n:
        x = rng.uniform(-r, r, 2)
        if np.linalg.norm(x) > r:
            continue
        mu = gm.tangency_margin(obstacle, phase, x)
        if mu >= margin_floor:
            out.append((x, mu))
    return out
