"""Incoming phase families -t + psi(x) and the boundary covector field.

psi solves the eikonal equation (d_x1 psi)^2 + |grad psi|^2 = 1 and is convex;
plane waves take psi = theta . x, spherical waves psi = |x - b|, and general
convex waves are supplied as value+gradient providers (the built-in example is
the signed distance to a sphere).  The incoming covector at a boundary point
(F(xbar), xbar) is the full spatial gradient of psi there.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffgeo import Obstacle


class SourceOnBoundary(ValueError):
    """Spherical source coincides with the evaluation point."""


class PhaseValidationError(ValueError):
    """Opt-in construction validation (eikonal / convexity) failed."""


@dataclass(frozen=True)
class BoundaryCovector:
    """Unit covector (xi1, xibar) attached to the boundary point over xbar."""

    xbar: np.ndarray
    xi1: float
    xibar: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate(([self.xi1], self.xibar))

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.xi1**2 + self.xibar @ self.xibar))


@dataclass(frozen=True)
class PlanePhase:
    """psi(x) = theta . x for a unit direction theta."""

    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        n = np.linalg.norm(self.theta)
        if abs(n - 1.0) > 1e-12:
            raise PhaseValidationError(f"|theta| = {n}, expected a unit vector")

    def psi(self, x) -> float:
        return float(self.theta @ np.asarray(x, dtype=float))

    def grad_psi(self, x) -> np.ndarray:
        return self.theta.copy()


@dataclass(frozen=True)
class SphericalPhase:
    """psi(x) = |x - source| for a point source off the obstacle."""

    source: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "source", np.asarray(self.source, dtype=float))

    def psi(self, x) -> float:
        r = float(np.linalg.norm(np.asarray(x, dtype=float) - self.source))
        if r == 0.0:
            raise SourceOnBoundary("evaluation point coincides with the source")
        return r

    def grad_psi(self, x) -> np.ndarray:
        d = np.asarray(x, dtype=float) - self.source
        r = float(np.linalg.norm(d))
        if r == 0.0:
            raise SourceOnBoundary("evaluation point coincides with the source")
        return d / r


@dataclass(frozen=True)
class ConvexPhase:
    """General convex eikonal phase from a value+gradient provider.

    Providers must be safe for concurrent evaluation; this is a requirement
    on plugins, not enforced here.
    """

    value_fn: object = field(compare=False)
    grad_fn: object = field(compare=False)
    name: str = "convex"

    def psi(self, x) -> float:
        return float(self.value_fn(np.asarray(x, dtype=float)))

    def grad_psi(self, x) -> np.ndarray:
        return np.asarray(self.grad_fn(np.asarray(x, dtype=float)), dtype=float)

    @classmethod
    def distance_to_sphere(cls, center, radius: float) -> "ConvexPhase":
        """Signed distance below the sphere |x-center| = radius (negative inside)."""
        center = np.asarray(center, dtype=float)

        def value(x):
            return float(np.linalg.norm(x - center)) - radius

        def grad(x):
            d = x - center
            r = float(np.linalg.norm(d))
            if r == 0.0:
                raise SourceOnBoundary("evaluation point at the sphere center")
            return d / r

        return cls(value_fn=value, grad_fn=grad, name=f"dist-sphere(r={radius})")


Phase = PlanePhase | SphericalPhase | ConvexPhase


# ---------------------------------------------------------------------------
# Boundary covector field
# ---------------------------------------------------------------------------

def xi_incoming(phase: Phase, obstacle: Obstacle, xbar) -> BoundaryCovector:
    """Incoming unit covector at the boundary point over xbar."""
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    point = obstacle.boundary_point(xbar)
    g = phase.grad_psi(point)
    return BoundaryCovector(xbar=xbar, xi1=float(g[0]), xibar=np.asarray(g[1:], dtype=float))


def _richardson_step(obstacle: Obstacle, xbar) -> float:
    """Step for 4th-order differencing: rounding-optimal, clipped to the domain."""
    h = 3e-4 * max(1.0, float(np.max(np.abs(xbar))))
    room = obstacle.radius - float(np.linalg.norm(xbar))
    return min(h, max(1e-6, 0.5 * room))


def xi_jacobian(phase: Phase, obstacle: Obstacle, xbar) -> tuple[np.ndarray, np.ndarray]:
    """Tangential derivatives of the incoming covector field.

    Returns (grad xi1, d xibar / d xbar).  Closed forms for plane and
    spherical phases; central differences otherwise.
    """
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    d = obstacle.dim_tangential
    if isinstance(phase, PlanePhase):
        return np.zeros(d), np.zeros((d, d))
    if isinstance(phase, SphericalPhase):
        point = obstacle.boundary_point(xbar)
        rel = point - phase.source
        rho = float(np.linalg.norm(rel))
        if rho == 0.0:
            raise SourceOnBoundary("boundary point coincides with the source")
        a1 = rel[0] / rho
        abar = rel[1:] / rho
        grad_f = obstacle.gradient(xbar)
        grad_rho = a1 * grad_f + abar
        d_abar = (np.eye(d) - np.outer(abar, grad_rho)) / rho
        d_a1 = (grad_f - a1 * grad_rho) / rho
        return d_a1, d_abar
    h = _richardson_step(obstacle, xbar)
    d_xi1 = np.zeros(d)
    d_xibar = np.zeros((d, d))

    def column(k, step):
        e = np.zeros(d)
        e[k] = step
        hi = xi_incoming(phase, obstacle, xbar + e)
        lo = xi_incoming(phase, obstacle, xbar - e)
        return (hi.xi1 - lo.xi1) / (2.0 * step), (hi.xibar - lo.xibar) / (2.0 * step)

    # Richardson-extrapolated central differences (O(h^4) truncation).
    for k in range(d):
        c1_h, cb_h = column(k, h)
        c1_2, cb_2 = column(k, 0.5 * h)
        d_xi1[k] = (4.0 * c1_2 - c1_h) / 3.0
        d_xibar[:, k] = (4.0 * cb_2 - cb_h) / 3.0
    return d_xi1, d_xibar


def boundary_trace(phase: Phase, obstacle: Obstacle, xbar) -> float:
    """psi restricted to the boundary: Psi(xbar) = psi(F(xbar), xbar)."""
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    return phase.psi(obstacle.boundary_point(xbar))


def boundary_trace_gradient(phase: Phase, obstacle: Obstacle, xbar) -> np.ndarray:
    """grad Psi = xi1 grad F + xibar, evaluated from the covector field."""
    xi = xi_incoming(phase, obstacle, xbar)
    return xi.xi1 * obstacle.gradient(xi.xbar) + xi.xibar


def boundary_trace_hessian(phase: Phase, obstacle: Obstacle, xbar) -> np.ndarray:
    """hess Psi by Richardson-extrapolated differences of the exact gradient."""
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    d = obstacle.dim_tangential
    h = _richardson_step(obstacle, xbar)
    out = np.zeros((d, d))

    def column(k, step):
        e = np.zeros(d)
        e[k] = step
        hi = boundary_trace_gradient(phase, obstacle, xbar + e)
        lo = boundary_trace_gradient(phase, obstacle, xbar - e)
        return (hi - lo) / (2.0 * step)

    for k in range(d):
        out[:, k] = (4.0 * column(k, 0.5 * h) - column(k, h)) / 3.0
    return 0.5 * (out + out.T)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def eikonal_residual(phase: Phase, points) -> float:
    """max | |grad psi|^2 - 1 | over the given full-space points."""
    worst = 0.0
    for p in np.atleast_2d(np.asarray(points, dtype=float)):
        g = phase.grad_psi(p)
        worst = max(worst, abs(float(g @ g) - 1.0))
    return worst


@dataclass(frozen=True)
class ConvexityVerdict:
    passed: bool
    min_margin: float
    worst_pair: tuple[np.ndarray, np.ndarray] | None


def convexity_check(phase: Phase, sample_pairs, tol: float = 1e-10) -> ConvexityVerdict:
    """Check psi(z2) - psi(z1) >= <grad psi(z1), z2 - z1> on all ordered pairs."""
    min_margin = np.inf
    worst = None
    for z1, z2 in sample_pairs:
        z1 = np.asarray(z1, dtype=float)
        z2 = np.asarray(z2, dtype=float)
        margin = phase.psi(z2) - phase.psi(z1) - float(phase.grad_psi(z1) @ (z2 - z1))
        if margin < min_margin:
            min_margin = margin
            worst = (z1, z2)
    return ConvexityVerdict(passed=bool(min_margin >= -tol),
                            min_margin=float(min_margin), worst_pair=worst)


def validate_phase(phase: Phase, obstacle: Obstacle, n_points: int = 1000,
                   n_pairs: int = 10000, seed: int = 0, tol: float = 1e-9) -> None:
    """Opt-in sampled eikonal + convexity validation; raises on failure."""
    rng = np.random.default_rng(seed)
    d = obstacle.dim_tangential
    xb = rng.uniform(-obstacle.radius, obstacle.radius, size=(n_points, d))
    xb = xb[np.linalg.norm(xb, axis=1) <= obstacle.radius]
    pts = np.array([obstacle.boundary_point(x) for x in xb])
    res = eikonal_residual(phase, pts)
    if res > tol:
        raise PhaseValidationError(f"eikonal residual {res} exceeds {tol}")
    idx = rng.integers(0, len(pts), size=(min(n_pairs, 4 * len(pts) ** 2), 2))
    verdict = convexity_check(phase, [(pts[i], pts[j]) for i, j in idx])
    if not verdict.passed:
        raise PhaseValidationError(f"convexity violated: margin {verdict.min_margin}")
