"""Obstacle geometry: boundary graphs x1 = F(xbar) and their calculus.

The obstacle boundary is the graph of a concave function F of the tangential
variables xbar = (x2, ..., xn), normalized so F(0) = 1 and grad F(0) = 0
(apex at height 1, horizontal tangent plane).  Normalization is validated at
construction, never performed silently; the one sanctioned coordinate change
is ``rotate_coordinates``.

Three surface families:

* ``PolynomialSurface``  -- multi-index polynomials, every derivative exact;
* ``SymmetricH``         -- radial profiles F = 1 - h(|L xbar|^2) with h given
                            by Taylor coefficients or the built-in flat bump
                            exp(-1/s^2);
* ``GenericSmooth``      -- plain callables, differentiated by central
                            differences with order-dependent steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EPS = np.finfo(float).eps


class DomainExceeded(ValueError):
    """Query point lies outside the obstacle's declared tangential radius."""


class OrderTooHigh(ValueError):
    """Derivative order above the supported maximum (default 16)."""


class ZeroVector(ValueError):
    """A direction argument was (numerically) zero."""


class NotNormalized(ValueError):
    """Surface violates the apex normalization F(0)=1, grad F(0)=0."""


class UnsupportedSurface(TypeError):
    """Operation not available for this surface family."""


J_MAX_DEFAULT = 16


# ---------------------------------------------------------------------------
# Multivariate polynomials over the tangential variables
# ---------------------------------------------------------------------------

class MultiPoly:
    """Polynomial in ``dim`` variables stored as {exponent tuple: coefficient}.

    All evaluations are plain floating point combinations of the stored
    coefficients; no approximation enters anywhere.
    """

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms):
        self.dim = int(dim)
        clean: dict[tuple[int, ...], float] = {}
        for expo, coeff in dict(terms).items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != self.dim:
                raise ValueError(f"exponent {expo} has wrong length for dim {self.dim}")
            if any(e < 0 for e in expo):
                raise ValueError(f"negative exponent in {expo}")
            if coeff != 0.0:
                clean[expo] = clean.get(expo, 0.0) + float(coeff)
        self.terms = {e: c for e, c in clean.items() if c != 0.0}

    def value(self, x) -> float:
        total = 0.0
        for expo, coeff in self.terms.items():
            prod = coeff
            for i, e in enumerate(expo):
                if e:
                    prod *= x[i] ** e
            total += prod
        return total

    def derivative(self, var: int) -> "MultiPoly":
        out: dict[tuple[int, ...], float] = {}
        for expo, coeff in self.terms.items():
            e = expo[var]
            if e == 0:
                continue
            new = list(expo)
            new[var] = e - 1
            key = tuple(new)
            out[key] = out.get(key, 0.0) + coeff * e
        return MultiPoly(self.dim, out)

    def gradient(self, x) -> np.ndarray:
        return np.array([self.derivative(i).value(x) for i in range(self.dim)])

    def hessian(self, x) -> np.ndarray:
        h = np.zeros((self.dim, self.dim))
        for i in range(self.dim):
            di = self.derivative(i)
            for j in range(i, self.dim):
                h[i, j] = di.derivative(j).value(x)
                h[j, i] = h[i, j]
        return h

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_homogeneous(self) -> bool:
        degs = {sum(e) for e in self.terms}
        return len(degs) <= 1

    def homogeneous_part(self, j: int) -> "MultiPoly":
        return MultiPoly(self.dim, {e: c for e, c in self.terms.items() if sum(e) == j})

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return MultiPoly(self.dim, out)

    def __mul__(self, other: "MultiPoly") -> "MultiPoly":
        out: dict[tuple[int, ...], float] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                key = tuple(a + b for a, b in zip(e1, e2))
                out[key] = out.get(key, 0.0) + c1 * c2
        return MultiPoly(self.dim, out)

    def scale(self, s: float) -> "MultiPoly":
        return MultiPoly(self.dim, {e: s * c for e, c in self.terms.items()})

    def compose_linear(self, mat: np.ndarray) -> "MultiPoly":
        """Return q(x) = p(M x), expanded exactly over the new variables."""
        mat = np.asarray(mat, dtype=float)
        if mat.shape != (self.dim, self.dim):
            raise ValueError("matrix shape does not match polynomial dimension")
        rows = [MultiPoly(self.dim, {tuple(int(k == j) for k in range(self.dim)): mat[i, j]
                                     for j in range(self.dim)})
                for i in range(self.dim)]
        result = MultiPoly(self.dim, {})
        one = MultiPoly(self.dim, {(0,) * self.dim: 1.0})
        for expo, coeff in self.terms.items():
            term = one.scale(coeff)
            for i, e in enumerate(expo):
                for _ in range(e):
                    term = term * rows[i]
            result = result + term
        return result


# ---------------------------------------------------------------------------
# Surface families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolynomialSurface:
    """F given exactly by a multi-index polynomial over xbar."""

    dim: int
    poly: MultiPoly = field(compare=False)

    @classmethod
    def from_terms(cls, dim: int, terms) -> "PolynomialSurface":
        poly = MultiPoly(dim, terms)
        surf = cls(dim=dim, poly=poly)
        surf._validate()
        return surf

    def _validate(self) -> None:
        zero = (0,) * self.dim
        const = self.poly.terms.get(zero, 0.0)
        if const != 1.0:
            raise NotNormalized(f"constant term is {const!r}, expected exactly 1")
        for expo, coeff in self.poly.terms.items():
            if sum(expo) == 1 and coeff != 0.0:
                raise NotNormalized(f"degree-1 term {expo} present: gradient at 0 is nonzero")

    def value(self, x) -> float:
        return self.poly.value(x)

    def gradient(self, x) -> np.ndarray:
        return self.poly.gradient(x)

    def hessian(self, x) -> np.ndarray:
        return self.poly.hessian(x)

    def directional_taylor(self, direction, order: int) -> list[float]:
        coeffs = [0.0] * order
        for expo, coeff in self.poly.terms.items():
            deg = sum(expo)
            if deg == 0 or deg > order:
                continue
            prod = coeff
            for i, e in enumerate(expo):
                if e:
                    prod *= direction[i] ** e
            coeffs[deg - 1] += prod
        return coeffs


def _h_poly_eval(coeffs, s: float, deriv: int = 0) -> float:
    """Evaluate the k-th derivative of h(s) = sum_j coeffs[j-1] s^j."""
    total = 0.0
    for j, a in enumerate(coeffs, start=1):
        if j < deriv:
            continue
        fac = 1.0
        for m in range(deriv):
            fac *= j - m
        total += a * fac * s ** (j - deriv)
    return total


@dataclass(frozen=True)
class SymmetricH:
    """F(xbar) = 1 - h(|L xbar|^2) with nonsingular L.

    ``hcoeffs`` are the Taylor coefficients (a1, a2, ...) of h at 0, in which
    case h is taken to be exactly that polynomial; ``flat=True`` selects the
    built-in h(s) = exp(-1/s^2), flat to infinite order at 0.
    """

    dim: int
    lam: np.ndarray = field(compare=False)
    hcoeffs: tuple[float, ...] | None = None
    flat: bool = False
    sdomain: float = math.inf

    @classmethod
    def from_hcoeffs(cls, dim: int, hcoeffs, lam=None, sdomain=math.inf) -> "SymmetricH":
        lam = np.eye(dim) if lam is None else np.asarray(lam, dtype=float)
        surf = cls(dim=dim, lam=lam, hcoeffs=tuple(float(c) for c in hcoeffs),
                   flat=False, sdomain=sdomain)
        surf._validate()
        return surf

    @classmethod
    def exp_flat(cls, dim: int, lam=None, sdomain=math.inf) -> "SymmetricH":
        lam = np.eye(dim) if lam is None else np.asarray(lam, dtype=float)
        surf = cls(dim=dim, lam=lam, hcoeffs=None, flat=True, sdomain=sdomain)
        surf._validate()
        return surf

    def _validate(self) -> None:
        if self.lam.shape != (self.dim, self.dim):
            raise ValueError("lambda matrix shape does not match dim")
        if abs(np.linalg.det(self.lam)) < 1e-12:
            raise ValueError("lambda matrix is singular")
        if not self.flat:
            nonzero = [c for c in self.hcoeffs if c != 0.0]
            if nonzero and nonzero[0] <= 0.0:
                raise NotNormalized("first nonzero Taylor coefficient of h must be positive")
            # h' > 0 is a sampled certificate on (0, s_max).
            s_max = self.sdomain if math.isfinite(self.sdomain) else 1.0
            for s in np.linspace(s_max / 64.0, s_max, 64):
                if self.h(s, deriv=1) <= 0.0:
                    raise NotNormalized(f"h'({s}) <= 0: profile not increasing")

    def h(self, s: float, deriv: int = 0) -> float:
        if self.flat:
            if s <= 0.0:
                return 0.0
            e = math.exp(-1.0 / s**2)
            if deriv == 0:
                return e
            if deriv == 1:
                return 2.0 * e / s**3
            if deriv == 2:
                return (4.0 / s**6 - 6.0 / s**4) * e
            raise OrderTooHigh("flat profile derivatives supported up to order 2")
        return _h_poly_eval(self.hcoeffs, s, deriv)

    def h_ratio(self, s: float) -> float:
        """h(s)/h'(s), with the flat case simplified to s^3/2 to avoid underflow."""
        if self.flat:
            return 0.5 * s**3
        hp = self.h(s, deriv=1)
        if hp == 0.0:
            raise ZeroDivisionError("h'(s) = 0 away from the apex")
        return self.h(s) / hp

    def h_ratio_prime(self, s: float) -> float:
        if self.flat:
            return 1.5 * s**2
        hp = self.h(s, deriv=1)
        return (hp * hp - self.h(s) * self.h(s, deriv=2)) / (hp * hp)

    def _s(self, x) -> float:
        y = self.lam @ np.asarray(x, dtype=float)
        return float(y @ y)

    def value(self, x) -> float:
        return 1.0 - self.h(self._s(x))

    def gradient(self, x) -> np.ndarray:
        ltl_x = self.lam.T @ (self.lam @ np.asarray(x, dtype=float))
        return -2.0 * self.h(self._s(x), deriv=1) * ltl_x

    def hessian(self, x) -> np.ndarray:
        s = self._s(x)
        ltl = self.lam.T @ self.lam
        ltl_x = ltl @ np.asarray(x, dtype=float)
        h = -2.0 * self.h(s, deriv=1) * ltl - 4.0 * self.h(s, deriv=2) * np.outer(ltl_x, ltl_x)
        return 0.5 * (h + h.T)

    def directional_taylor(self, direction, order: int) -> list[float]:
        coeffs = [0.0] * order
        if self.flat:
            return coeffs
        q = float(np.dot(self.lam @ np.asarray(direction, dtype=float),
                         self.lam @ np.asarray(direction, dtype=float)))
        for k, a in enumerate(self.hcoeffs, start=1):
            if 2 * k > order:
                break
            coeffs[2 * k - 1] += -a * q**k
        return coeffs


@dataclass(frozen=True)
class GenericSmooth:
    """F given by a plain callable; derivatives by central differences.

    The step for a k-th derivative is eps^(1/(k+2)), balancing truncation
    against rounding for smooth inputs.
    """

    dim: int
    func: object = field(compare=False)
    grad: object | None = field(default=None, compare=False)
    name: str = ""

    def value(self, x) -> float:
        return float(self.func(np.asarray(x, dtype=float)))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        h = EPS ** (1.0 / 3.0) * max(1.0, float(np.max(np.abs(x))))
        out = np.zeros(self.dim)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            out[i] = (self.value(x + e) - self.value(x - e)) / (2.0 * h)
        return out

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = EPS ** 0.25 * max(1.0, float(np.max(np.abs(x))))
        out = np.zeros((self.dim, self.dim))
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = h
            out[:, i] = (self.gradient(x + e) - self.gradient(x - e)) / (2.0 * h)
        return 0.5 * (out + out.T)

    def directional_taylor(self, direction, order: int) -> list[float]:
        d = np.asarray(direction, dtype=float)
        coeffs = []
        for j in range(1, order + 1):
            h = EPS ** (1.0 / (j + 2))
            acc = 0.0
            for i in range(j + 1):
                acc += (-1.0) ** i * math.comb(j, i) * self.value((j / 2.0 - i) * h * d)
            coeffs.append(acc / (h**j * math.factorial(j)))
        return coeffs


# ---------------------------------------------------------------------------
# Obstacle wrapper
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Obstacle:
    """Convex obstacle {x1 < F(xbar)} restricted to |xbar| <= radius."""

    surface: PolynomialSurface | SymmetricH | GenericSmooth
    radius: float = 1.0

    @property
    def dim(self) -> int:
        """Ambient spatial dimension n."""
        return self.surface.dim + 1

    @property
    def dim_tangential(self) -> int:
        return self.surface.dim

    def _check_domain(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.surface.dim,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.surface.dim},)")
        r = float(np.linalg.norm(x))
        if r > self.radius * (1.0 + 1e-12):
            raise DomainExceeded(f"|xbar| = {r} exceeds declared radius {self.radius}")
        return x

    def value(self, x) -> float:
        return self.surface.value(self._check_domain(x))

    def gradient(self, x) -> np.ndarray:
        return self.surface.gradient(self._check_domain(x))

    def hessian(self, x) -> np.ndarray:
        return self.surface.hessian(self._check_domain(x))

    def boundary_point(self, x) -> np.ndarray:
        """Full spatial point (F(xbar), xbar)."""
        x = self._check_domain(x)
        return np.concatenate(([self.value(x)], x))

    def directional_taylor(self, direction, order: int, j_max: int = J_MAX_DEFAULT) -> list[float]:
        """Coefficients c_1..c_order of F(s*direction) = 1 + sum_j c_j s^j."""
        if order > j_max:
            raise OrderTooHigh(f"order {order} exceeds maximum {j_max}")
        d = np.asarray(direction, dtype=float)
        if np.linalg.norm(d) == 0.0:
            raise ZeroVector("direction must be nonzero")
        return self.surface.directional_taylor(d, order)


def sphere_obstacle(dim_tangential: int = 2, radius: float = 0.5) -> Obstacle:
    """F = 1 - |xbar|^2, the standard round cap used throughout the tests."""
    terms = {(0,) * dim_tangential: 1.0}
    for i in range(dim_tangential):
        e = [0] * dim_tangential
        e[i] = 2
        terms[tuple(e)] = -1.0
    return Obstacle(PolynomialSurface.from_terms(dim_tangential, terms), radius=radius)


def polynomial_obstacle(dim_tangential: int, terms, radius: float = 1.0) -> Obstacle:
    return Obstacle(PolynomialSurface.from_terms(dim_tangential, terms), radius=radius)


# ---------------------------------------------------------------------------
# Concavity certificate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConcavityReport:
    """Sampled certificate of strict concavity; never a proof.

    ``min_eigs[i]`` is the smallest eigenvalue of -hess F at ``grid[i]``.
    Verdicts: 'strictly-concave-on-grid' when every sampled eigenvalue is
    positive; 'degenerate-at' when some directions degenerate but others do
    not (isolated flat directions, e.g. the axes of a quartic); 'fails-at'
    when a negative eigenvalue appears or every sampled direction carries a
    degeneracy (the surface is ruled, so the curvature zero is not isolated).
    """

    grid: np.ndarray
    min_eigs: np.ndarray
    verdict: str
    points: np.ndarray

    @property
    def passed(self) -> bool:
        return self.verdict == "strictly-concave-on-grid"


def check_strict_concavity(obstacle: Obstacle, radius: float | None = None,
                           n_angles: int = 64, n_radii: int = 32,
                           tol: float = 1e-9) -> ConcavityReport:
    """Evaluate -hess F eigenvalues on a polar grid excluding the origin."""
    d = obstacle.dim_tangential
    r_max = obstacle.radius if radius is None else radius
    if r_max > obstacle.radius:
        raise DomainExceeded("certificate radius exceeds obstacle domain")
    radii = np.linspace(r_max / n_radii, r_max, n_radii)
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif d == 2:
        ang = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        rng = np.random.default_rng(0)
        dirs = rng.normal(size=(n_angles, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    grid = []
    min_eigs = []
    degenerate_angle = np.zeros(len(dirs), dtype=bool)
    for k, u in enumerate(dirs):
        for r in radii:
            p = r * u
            w = np.linalg.eigvalsh(-obstacle.hessian(p))
            grid.append(p)
            min_eigs.append(w[0])
            if w[0] <= tol:
                degenerate_angle[k] = True
    grid = np.array(grid)
    min_eigs = np.array(min_eigs)

    bad = grid[min_eigs < -tol]
    deg = grid[np.abs(min_eigs) <= tol]
    if len(bad):
        return ConcavityReport(grid, min_eigs, "fails-at", bad)
    if degenerate_angle.all():
        return ConcavityReport(grid, min_eigs, "fails-at", deg)
    if len(deg):
        return ConcavityReport(grid, min_eigs, "degenerate-at", deg)
    return ConcavityReport(grid, min_eigs, "strictly-concave-on-grid", grid[:0])


# ---------------------------------------------------------------------------
# Coordinate rotation
# ---------------------------------------------------------------------------

def rotation_to_negative_axis(b) -> np.ndarray:
    """Proper rotation Q with Q b = (-|b|, 0, ..., 0)."""
    b = np.asarray(b, dtype=float)
    d = b.size
    nb = np.linalg.norm(b)
    if nb == 0.0:
        raise ZeroVector("cannot rotate the zero vector")
    u = b / nb
    t = np.zeros(d)
    t[0] = -1.0
    c = float(u @ t)
    if c > 1.0 - 1e-14:
        return np.eye(d)
    if c < -1.0 + 1e-14:
        # u = +e1: rotate by pi in the (e1, e2) plane.
        p = np.zeros(d)
        p[1 % d] = 1.0
        q = np.eye(d) - 2.0 * (np.outer(u, u) + np.outer(p, p))
        return q
    p = t - c * u
    p /= np.linalg.norm(p)
    s = math.sqrt(max(0.0, 1.0 - c * c))
    return (np.eye(d)
            + s * (np.outer(p, u) - np.outer(u, p))
            + (c - 1.0) * (np.outer(u, u) + np.outer(p, p)))


def rotate_coordinates(obstacle: Obstacle, bbar) -> tuple[Obstacle, np.ndarray]:
    """Re-express the obstacle in coordinates where bbar maps to (-|bbar|, 0, ...).

    Returns (rotated obstacle, Q); the identity F_rot(Q x) = F(x) holds for
    the returned rotation.  Exact (up to rounding) for polynomial and
    symmetric surfaces.
    """
    q = rotation_to_negative_axis(bbar)
    surf = obstacle.surface
    if isinstance(surf, PolynomialSurface):
        # F_rot(y) = F(Q^T y): compose with Q^T.
        new_poly = surf.poly.compose_linear(q.T)
        new_surf = PolynomialSurface.from_terms(surf.dim, new_poly.terms)
        return Obstacle(new_surf, radius=obstacle.radius), q
    if isinstance(surf, SymmetricH):
        new_surf = SymmetricH(dim=surf.dim, lam=surf.lam @ q.T, hcoeffs=surf.hcoeffs,
                              flat=surf.flat, sdomain=surf.sdomain)
        return Obstacle(new_surf, radius=obstacle.radius), q
    raise UnsupportedSurface("rotation requires a polynomial or symmetric surface")
