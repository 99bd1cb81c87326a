"""Reflected rays, the reflected flow map, and its Jacobian factorization.

A boundary covector xi splits into a reflected covector xi_r by subtracting
twice its conormal component; the reflected flow map sends (s, xbar, t) to the
point at parameter s on the reflected ray leaving (F(xbar), xbar, t).  The
Jacobian of that map factors through small dense matrices (here named B, C,
K, L after their roles: boundary shear, cone metric, curvature of the
incoming field, curvature of the obstacle), giving the lower bound
j >= 2 * margin on the illuminated region.  Everything here is checked two
ways: closed forms against central differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffgeo import EPS, Obstacle
from .phases import (BoundaryCovector, Phase, SphericalPhase, boundary_trace,
                     xi_incoming, xi_jacobian)

GRAZING_TOL = 1e-10
FD_STEP = 1e-5


class ShadowPoint(ValueError):
    """Operation requires a grazing or illuminated boundary point."""


class GrazingSingular(ValueError):
    """Operation requires a margin bounded away from zero."""


class StepInvalid(ValueError):
    """Finite-difference step must be positive."""


class NoConvergence(RuntimeError):
    """Newton inversion failed to reach the residual target."""

    def __init__(self, iterations: int, residual: float):
        super().__init__(f"no convergence after {iterations} iterations, residual {residual:.3e}")
        self.iterations = iterations
        self.residual = residual


class OutsideRange(ValueError):
    """Target point cannot lie on any reflected ray."""


# ---------------------------------------------------------------------------
# Rank-one update identities (tested internal helpers)
# ---------------------------------------------------------------------------

def rank_one_det(a, b) -> float:
    """det(I + a (x) b) = 1 + <a, b>."""
    return 1.0 + float(np.dot(a, b))


def rank_one_inv(a, b) -> np.ndarray:
    """(I + a (x) b)^-1 = I - a (x) b / (1 + <a, b>)."""
    denom = 1.0 + float(np.dot(a, b))
    if denom == 0.0:
        raise ZeroDivisionError("rank-one update is singular")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.eye(a.size) - np.outer(a, b) / denom


# ---------------------------------------------------------------------------
# Reflection of covectors
# ---------------------------------------------------------------------------

def tangency_margin(obstacle: Obstacle, phase: Phase, xbar) -> float:
    """<grad F, xibar> - xi1: zero at grazing, positive where rays reflect."""
    xi = xi_incoming(phase, obstacle, xbar)
    return float(obstacle.gradient(xi.xbar) @ xi.xibar - xi.xi1)


def reflect_direction(obstacle: Obstacle, xbar, xi: BoundaryCovector) -> BoundaryCovector:
    """Reflected unit covector; total function of the incoming covector.

    The reflected covector differs from the incoming one by a multiple of the
    conormal (1, -grad F) and has unit length, which pins it down uniquely.
    """
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    grad_f = obstacle.gradient(xbar)
    factor = 2.0 * (xi.xi1 - float(grad_f @ xi.xibar)) / (1.0 + float(grad_f @ grad_f))
    return BoundaryCovector(xbar=xbar,
                            xi1=xi.xi1 - factor,
                            xibar=xi.xibar + factor * grad_f)


def xi_reflected(obstacle: Obstacle, phase: Phase, xbar) -> BoundaryCovector:
    return reflect_direction(obstacle, xbar, xi_incoming(phase, obstacle, xbar))


@dataclass(frozen=True)
class BoundaryClassification:
    xbar: np.ndarray
    margin: float
    label: str  # 'illuminated' | 'grazing' | 'shadow'


def classify_boundary_point(obstacle: Obstacle, phase: Phase, xbar,
                            tol: float = GRAZING_TOL) -> BoundaryClassification:
    """Label a boundary point by the sign of its tangency margin."""
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    mu = tangency_margin(obstacle, phase, xbar)
    if mu > tol:
        label = "illuminated"
    elif mu < -tol:
        label = "shadow"
    else:
        label = "grazing"
    return BoundaryClassification(xbar=xbar, margin=mu, label=label)


# ---------------------------------------------------------------------------
# Reflected flow map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowSample:
    s: float
    xbar: np.ndarray
    t: float
    y: np.ndarray  # (y1, ybar..., t') in R^{n+1}


def _flow_point(obstacle: Obstacle, phase: Phase, s: float, xbar) -> np.ndarray:
    """Spatial part of the flow map, without the domain classification guard."""
    xr = xi_reflected(obstacle, phase, xbar)
    base = obstacle.boundary_point(xr.xbar)
    return base + 2.0 * s * xr.vector


def flow_map(obstacle: Obstacle, phase: Phase, s: float, xbar, t: float = 0.0,
             tol: float = GRAZING_TOL) -> FlowSample:
    """Point at parameter s on the reflected ray from the boundary point over xbar.

    Defined on grazing and illuminated points only; the time coordinate is
    carried along unchanged apart from the t + 2s advance.
    """
    cls = classify_boundary_point(obstacle, phase, xbar, tol=tol)
    if cls.label == "shadow":
        raise ShadowPoint(f"margin {cls.margin} < -{tol} at xbar={xbar}")
    if s < 0.0:
        raise ValueError("ray parameter s must be nonnegative")
    space = _flow_point(obstacle, phase, s, cls.xbar)
    y = np.concatenate((space, [t + 2.0 * s]))
    return FlowSample(s=float(s), xbar=cls.xbar, t=float(t), y=y)


# ---------------------------------------------------------------------------
# Jacobian: factorization and finite differences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JacobianReport:
    j_analytic: float
    lower_bound: float  # 2 * margin
    margin: float
    B: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    L: np.ndarray = field(repr=False)
    A: np.ndarray = field(repr=False)
    d_xir: np.ndarray = field(repr=False)  # FD derivative of the reflected field
    j_fd: float | None = None


def _reflected_field_jacobian_fd(obstacle: Obstacle, phase: Phase, xbar,
                                 step: float = FD_STEP) -> tuple[np.ndarray, np.ndarray]:
    """(grad xi1_r, d xibar_r / d xbar) by central differences of reflect_direction."""
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    d = obstacle.dim_tangential
    d_xi1 = np.zeros(d)
    d_xibar = np.zeros((d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = step
        hi = xi_reflected(obstacle, phase, xbar + e)
        lo = xi_reflected(obstacle, phase, xbar - e)
        d_xi1[k] = (hi.xi1 - lo.xi1) / (2.0 * step)
        d_xibar[:, k] = (hi.xibar - lo.xibar) / (2.0 * step)
    return d_xi1, d_xibar


def factor_matrices(obstacle: Obstacle, phase: Phase, xbar):
    """Closed-form B, C, K, L at an illuminated boundary point.

    K carries the curvature of the incoming covector field, L the curvature
    of the obstacle; their sum is the tangential derivative of the reflected
    field.  The K formula is written so that no division by xi1 occurs (the
    unit-length identity removes it), so plane waves (xi1 = 0) are fine.
    """
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    d = obstacle.dim_tangential
    grad_f = obstacle.gradient(xbar)
    hess_f = obstacle.hessian(xbar)
    xi = xi_incoming(phase, obstacle, xbar)
    xr = reflect_direction(obstacle, xbar, xi)
    one_plus = 1.0 + float(grad_f @ grad_f)
    mu = float(grad_f @ xi.xibar - xi.xi1)

    if abs(xr.xi1) < 1e-13:
        raise GrazingSingular("reflected covector has vanishing normal-axis component")

    b_mat = np.eye(d) - np.outer(xr.xibar, grad_f) / xr.xi1
    c_mat = np.eye(d) + np.outer(xr.xibar, xr.xibar) / xr.xi1**2

    if isinstance(phase, SphericalPhase):
        point = obstacle.boundary_point(xbar)
        rel = point - phase.source
        rho = float(np.linalg.norm(rel))
        a1 = rel[0] / rho
        abar = rel[1:] / rho
        w = a1 * grad_f + abar
        k_mat = (np.eye(d) - np.outer(xr.xibar, w)) / rho
    else:
        d_xi1, d_xibar = xi_jacobian(phase, obstacle, xbar)
        # (xibar + xi1 grad F)^T d_xibar = xi1 (grad F^T d_xibar - d_xi1)
        row = grad_f @ d_xibar - d_xi1
        k_mat = d_xibar - (2.0 / one_plus) * np.outer(grad_f, row)

    l_mat = -(2.0 / one_plus) * (mu * hess_f + np.outer(grad_f, hess_f @ xr.xibar))
    return b_mat, c_mat, k_mat, l_mat


def jacobian_analytic(obstacle: Obstacle, phase: Phase, s: float, xbar,
                      tol: float = GRAZING_TOL, step: float = FD_STEP) -> JacobianReport:
    """Flow-map Jacobian from the spatial block determinant.

    The determinant of d(y1, ybar)/d(s, xbar) is assembled from the boundary
    geometry and the tangential derivative of the reflected field (central
    differences of reflect_direction); this form stays regular even where
    xi1_r crosses zero inside the illuminated region, where the Schur
    factorization j = 2 xi1_r det(B + 2s C d_xir) degenerates numerically.
    The closed-form B, C, K, L are computed independently and returned for
    the factorization identities (A ~ B + 2s C (K + L), the B^T K closed
    forms, the 2*margin lower bound); at s = 0 the determinant reduces to
    2*margin exactly.  Requires an illuminated point.
    """
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    mu = tangency_margin(obstacle, phase, xbar)
    if abs(mu) <= tol:
        raise GrazingSingular(f"margin {mu} within tolerance {tol} of grazing")
    if mu < 0.0:
        raise ShadowPoint(f"margin {mu} < 0: point is in shadow")

    d = obstacle.dim_tangential
    b_mat, c_mat, k_mat, l_mat = factor_matrices(obstacle, phase, xbar)
    d_xi1r, d_xir = _reflected_field_jacobian_fd(obstacle, phase, xbar, step=step)
    xr = xi_reflected(obstacle, phase, xbar)
    grad_f = obstacle.gradient(xbar)

    m = np.zeros((d + 1, d + 1))
    m[0, 0] = 2.0 * xr.xi1
    m[0, 1:] = grad_f + 2.0 * s * d_xi1r
    m[1:, 0] = 2.0 * xr.xibar
    m[1:, 1:] = np.eye(d) + 2.0 * s * d_xir
    j = float(np.linalg.det(m))

    a_mat = b_mat + 2.0 * s * (c_mat @ d_xir)
    return JacobianReport(j_analytic=j, lower_bound=2.0 * mu, margin=mu,
                          B=b_mat, C=c_mat, K=k_mat, L=l_mat, A=a_mat, d_xir=d_xir)


def jacobian_fd(obstacle: Obstacle, phase: Phase, s: float, xbar, t: float = 0.0,
                step: float = FD_STEP) -> float:
    """Determinant of the central-difference Jacobian of (s, xbar, t) -> Z_r.

    This is the validation oracle for ``jacobian_analytic``; it never uses
    the factorization.
    """
    if step <= 0.0:
        raise StepInvalid("finite-difference step must be positive")
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    mu = tangency_margin(obstacle, phase, xbar)
    if mu < 0.0:
        raise ShadowPoint(f"margin {mu} < 0: point is in shadow")
    d = obstacle.dim_tangential
    n_vars = d + 2

    def z_full(v):
        space = _flow_point(obstacle, phase, v[0], v[1:1 + d])
        return np.concatenate((space, [v[-1] + 2.0 * v[0]]))

    v0 = np.concatenate(([s], xbar, [t]))
    jac = np.zeros((n_vars, n_vars))
    for k in range(n_vars):
        e = np.zeros(n_vars)
        e[k] = step
        jac[:, k] = (z_full(v0 + e) - z_full(v0 - e)) / (2.0 * step)
    return float(np.linalg.det(jac))


# ---------------------------------------------------------------------------
# Inversion and the reflected phase
# ---------------------------------------------------------------------------

def _spatial_map(obstacle: Obstacle, phase: Phase, v) -> np.ndarray:
    return _flow_point(obstacle, phase, v[0], v[1:])


def invert_flow(obstacle: Obstacle, phase: Phase, y, seed=None,
                s_range: tuple[float, float] = (0.0, 2.0),
                residual_tol: float = 1e-10, max_iter: int = 50,
                grazing_floor: float = 1e-4) -> tuple[float, np.ndarray, float]:
    """Invert the reflected flow map at a spacetime point y = (y1, ybar, t').

    Damped Newton on the spatial part with a finite-difference Jacobian,
    seeded by a coarse grid search over (s, xbar) when no seed is given.
    Near-grazing seeds are refused: the inverse is merely continuous there
    and the Newton system degenerates.
    """
    y = np.asarray(y, dtype=float)
    d = obstacle.dim_tangential
    if y.size != d + 2:
        raise ValueError(f"y has size {y.size}, expected {d + 2}")
    y_space, t_prime = y[:-1], float(y[-1])

    ybar = y_space[1:]
    if np.linalg.norm(ybar) <= obstacle.radius:
        if y_space[0] < obstacle.value(ybar) - 1e-12:
            raise OutsideRange("point lies strictly inside the obstacle")

    if seed is None:
        seed = _grid_seed(obstacle, phase, y_space, s_range)
        if seed is None:
            raise OutsideRange("grid search found no admissible seed")
    v = np.concatenate(([float(seed[0])], np.atleast_1d(np.asarray(seed[1], dtype=float))))

    mu = tangency_margin(obstacle, phase, v[1:])
    if mu < grazing_floor:
        raise GrazingSingular(f"seed margin {mu} below floor {grazing_floor}")

    def residual(v):
        return _spatial_map(obstacle, phase, v) - y_space

    r = residual(v)
    rn = float(np.linalg.norm(r))
    h = EPS ** (1.0 / 3.0)
    for it in range(max_iter):
        if rn <= 1e-14:
            break
        jac = np.zeros((d + 1, d + 1))
        for k in range(d + 1):
            e = np.zeros(d + 1)
            e[k] = h
            jac[:, k] = (residual(v + e) - residual(v - e)) / (2.0 * h)
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise NoConvergence(it, rn)
        # Damping: halve until the residual decreases.
        lam = 1.0
        for _ in range(40):
            v_new = v + lam * delta
            v_new[0] = max(v_new[0], 0.0)
            if np.linalg.norm(v_new[1:]) > obstacle.radius:
                lam *= 0.5
                continue
            if tangency_margin(obstacle, phase, v_new[1:]) < 1e-8:
                lam *= 0.5
                continue
            r_new = residual(v_new)
            rn_new = float(np.linalg.norm(r_new))
            if rn_new < rn:
                v, r, rn = v_new, r_new, rn_new
                break
            lam *= 0.5
        else:
            break
    if rn > residual_tol:
        raise NoConvergence(max_iter, rn)
    s = float(v[0])
    if s < -1e-12:
        raise OutsideRange(f"converged to negative ray parameter s = {s}")
    return max(s, 0.0), v[1:].copy(), t_prime - 2.0 * max(s, 0.0)


def _grid_seed(obstacle: Obstacle, phase: Phase, y_space, s_range,
               n_x: int = 24, n_s: int = 24):
    d = obstacle.dim_tangential
    axes = [np.linspace(-obstacle.radius, obstacle.radius, n_x)] * d
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    mesh = mesh[np.linalg.norm(mesh, axis=1) <= obstacle.radius]
    best = None
    best_err = np.inf
    s_grid = np.linspace(s_range[0], s_range[1], n_s)
    for xb in mesh:
        if tangency_margin(obstacle, phase, xb) < 1e-4:
            continue
        xr = xi_reflected(obstacle, phase, xb)
        base = obstacle.boundary_point(xb)
        for s in s_grid:
            err = float(np.linalg.norm(base + 2.0 * s * xr.vector - y_space))
            if err < best_err:
                best_err = err
                best = (s, xb)
    return best


def reflected_phase_at(obstacle: Obstacle, phase: Phase, y, seed=None,
                       s_range: tuple[float, float] = (0.0, 2.0)):
    """Value and spacetime gradient of the reflected phase at y.

    The phase carries the boundary value of the incoming phase along the
    reflected ray; its gradient is the constant (xi_r, -1) of that ray.
    """
    s, xbar, t = invert_flow(obstacle, phase, y, seed=seed, s_range=s_range)
    value = -t + boundary_trace(phase, obstacle, xbar)
    xr = xi_reflected(obstacle, phase, xbar)
    gradient = np.concatenate((xr.vector, [-1.0]))
    return value, gradient


# ---------------------------------------------------------------------------
# Flow-map verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RfmVerdict:
    passed: bool
    n_samples: int
    n_illuminated: int
    worst_bound_gap: float       # min over samples of j_analytic - 2*margin
    worst_fd_rel_error: float    # max relative |j_analytic - j_fd|
    injectivity_failures: list
    bound_failures: list
    fd_failures: list
    rows: list                   # per-sample CSV rows

    def summary(self) -> str:
        return ("PASS" if self.passed else "FAIL")


def verify_rfm(obstacle: Obstacle, phase: Phase, s0: float = 1.0,
               radius: float | None = None, budget: int = 1000, seed: int = 42,
               fd_margin_floor: float = 1e-3, fd_rel_tol: float = 1e-6,
               bound_slack: float = 1e-9) -> RfmVerdict:
    """Sampled evidence that the reflected flow map is an injective local
    diffeomorphism off the grazing face.

    Checks, on ``budget`` samples of [0, s0] x (grazing U illuminated):
    (i) image separation stays bounded below by domain separation on random
    near pairs, (ii) the analytic Jacobian respects its 2*margin lower bound,
    (iii) analytic and finite-difference Jacobians agree (only on samples
    whose margin clears ``fd_margin_floor``: below that the FD determinant
    is dominated by differencing noise).
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    rng = np.random.default_rng(seed)
    d = obstacle.dim_tangential
    r = obstacle.radius if radius is None else min(radius, obstacle.radius)

    samples = []
    tries = 0
    while len(samples) < budget and tries < 200 * budget:
        tries += 1
        xb = rng.uniform(-r, r, size=d)
        if np.linalg.norm(xb) > r:
            continue
        mu = tangency_margin(obstacle, phase, xb)
        if mu < -GRAZING_TOL:
            continue
        s = rng.uniform(0.0, s0)
        t = rng.uniform(-1.0, 1.0)
        samples.append((s, xb, t, mu))

    rows = []
    bound_failures = []
    fd_failures = []
    worst_gap = np.inf
    worst_rel = 0.0
    n_illum = 0
    for s, xb, t, mu in samples:
        j_a = np.nan
        j_f = np.nan
        ok = True
        if mu > GRAZING_TOL:
            n_illum += 1
            rep = jacobian_analytic(obstacle, phase, s, xb)
            j_a = rep.j_analytic
            gap = j_a - rep.lower_bound
            worst_gap = min(worst_gap, gap)
            if gap < -bound_slack:
                bound_failures.append((s, xb, t, mu, j_a))
                ok = False
            if mu >= fd_margin_floor:
                j_f = jacobian_fd(obstacle, phase, s, xb, t)
                rel = abs(j_a - j_f) / max(abs(j_a), abs(j_f))
                worst_rel = max(worst_rel, rel)
                if rel > fd_rel_tol:
                    fd_failures.append((s, xb, t, mu, j_a, j_f))
                    ok = False
        rows.append((s, xb, t, mu, j_a, j_f, 2.0 * mu, ok))

    injectivity_failures = []
    if len(samples) >= 2:
        n_pairs = min(10000, 5 * len(samples))
        idx = rng.integers(0, len(samples), size=(n_pairs, 2))
        for i, j in idx:
            if i == j:
                continue
            s1, x1, t1, _ = samples[i]
            s2, x2, t2, _ = samples[j]
            p1 = np.concatenate((_flow_point(obstacle, phase, s1, x1), [t1 + 2 * s1]))
            p2 = np.concatenate((_flow_point(obstacle, phase, s2, x2), [t2 + 2 * s2]))
            dom = np.sqrt((s1 - s2) ** 2 + np.sum((x1 - x2) ** 2) + (t1 - t2) ** 2)
            img = float(np.linalg.norm(p1 - p2))
            if img < 1e-9 and dom > 1e-6:
                injectivity_failures.append(((s1, x1, t1), (s2, x2, t2), dom, img))

    passed = not (bound_failures or fd_failures or injectivity_failures)
    return RfmVerdict(passed=passed, n_samples=len(samples), n_illuminated=n_illum,
                      worst_bound_gap=float(worst_gap), worst_fd_rel_error=float(worst_rel),
                      injectivity_failures=injectivity_failures,
                      bound_failures=bound_failures, fd_failures=fd_failures, rows=rows)
