import math

import numpy as np
import pytest

import grazemap as gm
from grazemap.diffgeo import MultiPoly

from conftest import quartic_quartic, quartic_vsq, rounded_quartic, sample_disk


def fd_gradient(f, x, h=1e-5):
    out = np.zeros(len(x))
    for i in range(len(x)):
        e = np.zeros(len(x))
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def test_eval_examples():
    obs = quartic_vsq()
    assert obs.value([0.0, 0.0]) == 1.0
    assert abs(obs.value([-0.1, 0.06]) - 0.9963) < 1e-15
    sym = gm.Obstacle(gm.SymmetricH.from_hcoeffs(2, [1.0]), radius=0.6)
    assert abs(sym.value([0.2, 0.0]) - 0.96) < 1e-15


def test_grad_examples():
    obs = quartic_vsq()
    assert np.allclose(obs.gradient([0.0, 0.0]), 0.0)
    assert np.allclose(obs.gradient([-0.1, 0.06]), [0.004, -0.12], atol=1e-15)
    sym = gm.Obstacle(gm.SymmetricH.from_hcoeffs(2, [0.0, 1.0]), radius=0.8)
    assert np.allclose(sym.gradient([0.5, 0.0]), [-0.5, 0.0], atol=1e-15)


def test_grad_matches_central_differences():
    rng = np.random.default_rng(3)
    for obs in (quartic_vsq(), rounded_quartic(), gm.sphere_obstacle(2, radius=0.5)):
        for x in sample_disk(rng, obs.radius * 0.8, 1000):
            fd = fd_gradient(obs.value, x)
            assert np.max(np.abs(obs.gradient(x) - fd)) < 1e-7


def test_hess_examples():
    sph = gm.sphere_obstacle(2, radius=0.5)
    assert np.allclose(sph.hessian([0.1, -0.2]), -2.0 * np.eye(2), atol=1e-15)
    obs = quartic_quartic()
    assert np.allclose(obs.hessian([1.0, 0.0]), np.diag([-12.0, 0.0]), atol=1e-15)
    flat = gm.GenericSmooth(2, func=lambda x: 1.0 - math.exp(-1.0 / max(float(x @ x), 1e-300) ** 2)
                            if (x @ x) > 0 else 1.0)
    h = gm.Obstacle(flat, radius=0.5).hessian([0.0, 0.0])
    assert np.max(np.abs(h)) < 1e-6


def test_hess_symmetric_and_fd():
    rng = np.random.default_rng(4)
    obs = rounded_quartic()
    for x in sample_disk(rng, 0.8, 50):
        h = obs.hessian(x)
        assert np.array_equal(h, h.T)
        fd = np.column_stack([fd_gradient(lambda y, i=i: obs.gradient(y)[i], x)
                              for i in range(2)]).T
        assert np.max(np.abs(h - fd)) < 1e-6


def test_directional_taylor_examples():
    obs = quartic_vsq()
    assert obs.directional_taylor([1.0, 0.0], 4) == [0.0, 0.0, 0.0, -1.0]
    assert obs.directional_taylor([0.0, 1.0], 2) == [0.0, -1.0]
    sph = gm.sphere_obstacle(2, radius=0.5)
    d = np.array([0.6, 0.8])
    assert np.allclose(sph.directional_taylor(d, 2), [0.0, -1.0], atol=1e-15)


def test_directional_taylor_against_polyfit_oracle():
    # Oracle: interpolate F(s d) on distinct nodes; exact for polynomials.
    rng = np.random.default_rng(5)
    obs = gm.polynomial_obstacle(2, {(0, 0): 1.0, (4, 0): -1.0, (2, 2): -2.0,
                                     (1, 2): -1.0, (0, 2): -1.0, (6, 2): -0.5})
    for _ in range(20):
        d = rng.normal(size=2)
        d /= np.linalg.norm(d)
        order = 8
        s = np.linspace(-0.5, 0.5, order + 1)
        vals = [obs.value(si * d) for si in s]
        coeffs = np.polynomial.polynomial.polyfit(s, vals, order)
        got = obs.directional_taylor(d, order)
        assert abs(coeffs[0] - 1.0) < 1e-12
        assert np.max(np.abs(np.array(got) - coeffs[1:])) < 1e-9


def test_directional_taylor_symmetric_and_flat():
    lam = np.array([[2.0, 0.0], [1.0, 1.0]])
    sym = gm.Obstacle(gm.SymmetricH.from_hcoeffs(2, [1.0, -0.25], lam=lam), radius=0.3)
    d = np.array([0.8, -0.6])
    q = float((lam @ d) @ (lam @ d))
    got = sym.directional_taylor(d, 4)
    assert np.allclose(got, [0.0, -q, 0.0, 0.25 * q**2], atol=1e-14)
    flat = gm.Obstacle(gm.SymmetricH.exp_flat(2), radius=0.5)
    assert flat.directional_taylor(d, 16) == [0.0] * 16


def test_order_too_high_and_domain():
    obs = quartic_vsq()
    with pytest.raises(gm.OrderTooHigh):
        obs.directional_taylor([1.0, 0.0], 17)
    with pytest.raises(gm.DomainExceeded):
        obs.value([2.0, 0.0])


def test_normalization_rejected():
    with pytest.raises(gm.NotNormalized):
        gm.polynomial_obstacle(2, {(0, 0): 0.5, (0, 2): -1.0})
    with pytest.raises(gm.NotNormalized):
        gm.polynomial_obstacle(2, {(0, 0): 1.0, (1, 0): 0.3, (0, 2): -1.0})
    with pytest.raises(gm.NotNormalized):
        gm.SymmetricH.from_hcoeffs(2, [-1.0])


def test_concavity_verdicts():
    strict = gm.polynomial_obstacle(2, {(0, 0): 1.0, (4, 0): -1.0, (2, 2): -1.0, (0, 4): -1.0})
    assert gm.check_strict_concavity(strict, radius=0.8).verdict == "strictly-concave-on-grid"
    degen = quartic_quartic()
    rep = gm.check_strict_concavity(degen, radius=0.8)
    assert rep.verdict == "degenerate-at"
    # every reported degeneracy sits on a coordinate axis
    assert all(min(abs(p[0]), abs(p[1])) < 1e-12 for p in rep.points)
    cylinder = gm.polynomial_obstacle(2, {(0, 0): 1.0, (0, 2): -1.0})
    assert gm.check_strict_concavity(cylinder, radius=0.8).verdict == "fails-at"
    convex_bump = gm.polynomial_obstacle(2, {(0, 0): 1.0, (2, 0): 1.0, (0, 2): -1.0})
    assert gm.check_strict_concavity(convex_bump, radius=0.8).verdict == "fails-at"


def test_concavity_negated_hessian_psd_where_certified():
    obs = rounded_quartic()
    rep = gm.check_strict_concavity(obs, radius=0.8)
    assert rep.passed
    rng = np.random.default_rng(6)
    for x in sample_disk(rng, 0.8, 200):
        w = np.linalg.eigvalsh(obs.hessian(x))
        assert w[-1] <= 1e-12


def test_rotation_examples():
    obs = quartic_vsq()
    _, q = gm.rotate_coordinates(obs, [-1.0, 0.0])
    assert np.allclose(q, np.eye(2), atol=1e-15)
    _, q = gm.rotate_coordinates(obs, [3.0, 4.0])
    assert np.allclose(q @ [3.0, 4.0], [-5.0, 0.0], atol=1e-12)
    rot, q = gm.rotate_coordinates(obs, [0.0, -1.0])
    # u^4 + v^2 swaps into v'^4 + u'^2
    assert abs(rot.value([0.3, 0.1]) - (1.0 - (0.1**4 + 0.3**2))) < 1e-12


def test_rotation_preserves_values():
    rng = np.random.default_rng(7)
    for obs in (quartic_vsq(), rounded_quartic(),
                gm.Obstacle(gm.SymmetricH.from_hcoeffs(
                    2, [1.0, 0.5], lam=np.array([[1.5, 0.2], [0.0, 1.0]])), radius=0.5)):
        b = rng.normal(size=2)
        rot, q = gm.rotate_coordinates(obs, b)
        assert abs(np.linalg.det(q) - 1.0) < 1e-12
        assert np.allclose(q @ q.T, np.eye(2), atol=1e-13)
        for x in sample_disk(rng, obs.radius * 0.7, 100):
            assert abs(rot.value(q @ x) - obs.value(x)) < 1e-12
    with pytest.raises(gm.ZeroVector):
        gm.rotate_coordinates(quartic_vsq(), [0.0, 0.0])


def test_multipoly_compose_and_parts():
    p = MultiPoly(2, {(4, 0): 1.0, (2, 2): 2.0, (0, 2): 1.0})
    assert p.degree() == 4
    assert not p.is_homogeneous()
    assert p.homogeneous_part(2).terms == {(0, 2): 1.0}
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    q = p.compose_linear(m)
    rng = np.random.default_rng(8)
    for _ in range(50):
        x = rng.normal(size=2)
        assert abs(q.value(x) - p.value(m @ x)) < 1e-12
