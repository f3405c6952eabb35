"""Contours, quadrature rules on them, and shared-pole rational approximation.

A function f holomorphic inside a closed contour G is reproduced by the
Cauchy integral

    f(z) = -1/(2 pi i) * int_G f(t)/(z - t) dt,

and a quadrature rule with nodes s_k and weights w_k on G turns this into
the rational function r(z) = sum_k a_k/(z - s_k), a_k = om_k f(s_k), where
the stored weights om_k already include the -1/(2 pi i) factor and the
derivative of the parametrization.
"""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import EvaluationFailure, InvalidContour, InvalidNodeCount, RegionNotInterior
from .functions import as_scalar_function

TWO_PI_I = 2j * np.pi


def gauss_legendre(m, tol=1e-15, maxiter=100):
    """Gauss-Legendre nodes and weights on [-1, 1] by Newton's method.

    Nodes are returned in increasing order.
    """
    if m < 1:
        raise InvalidNodeCount("need at least one Gauss-Legendre node")
    i = np.arange(1, m + 1)
    x = np.cos(np.pi * (i - 0.25) / (m + 0.5))
    for _ in range(maxiter):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for k in range(2, m + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        dp = m * (x * p1 - p0) / (x * x - 1)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    # derivative at the converged nodes
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, m + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = m * (x * p1 - p0) / (x * x - 1)
    w = 2.0 / ((1 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


def _as_complex(z):
    if isinstance(z, (list, tuple)) and len(z) == 2:
        return complex(float(z[0]), float(z[1]))
    return complex(z)


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise InvalidContour(f"radius must be positive, got {self.radius}")

    shape = "circle"

    @property
    def diameter(self):
        return 2.0 * self.radius

    @property
    def centroid(self):
        return self.center

    def is_inside(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius

    def scaled(self, factor):
        return Circle(self.center, self.radius * factor)

    def parametrize(self, t):
        e = np.exp(1j * t)
        return self.center + self.radius * e, 1j * self.radius * e

    def boundary(self, k=400):
        t = 2 * np.pi * np.arange(k + 1) / k
        return self.parametrize(t)[0]

    def distance_to_boundary(self, z):
        return np.abs(np.abs(np.asarray(z) - self.center) - self.radius)

    def bounding_box(self):
        r = self.radius
        return self.center - r - 1j * r, self.center + r + 1j * r

    def to_dict(self):
        return {"shape": "circle", "center": [self.center.real, self.center.imag],
                "radius": self.radius}


@dataclass(frozen=True)
class Ellipse:
    center: complex
    semi_x: float
    semi_y: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_complex(self.center))
        object.__setattr__(self, "semi_x", float(self.semi_x))
        object.__setattr__(self, "semi_y", float(self.semi_y))
        if not (self.semi_x > 0 and self.semi_y > 0):
            raise InvalidContour("ellipse semi-axes must be positive")

    shape = "ellipse"

    @property
    def diameter(self):
        return 2.0 * max(self.semi_x, self.semi_y)

    @property
    def centroid(self):
        return self.center

    def is_inside(self, z):
        d = np.asarray(z) - self.center
        return (d.real / self.semi_x) ** 2 + (d.imag / self.semi_y) ** 2 < 1.0

    def scaled(self, factor):
        return Ellipse(self.center, self.semi_x * factor, self.semi_y * factor)

    def parametrize(self, t):
        z = self.center + self.semi_x * np.cos(t) + 1j * self.semi_y * np.sin(t)
        dz = -self.semi_x * np.sin(t) + 1j * self.semi_y * np.cos(t)
        return z, dz

    def boundary(self, k=400):
        t = 2 * np.pi * np.arange(k + 1) / k
        return self.parametrize(t)[0]

    def distance_to_boundary(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        pts = self.boundary(4096)[:-1]
        # coarse sample, then a few Newton-free refinements on the angle
        t = 2 * np.pi * np.arange(4096) / 4096
        idx = np.argmin(np.abs(z[:, None] - pts[None, :]), axis=1)
        best_t = t[idx]
        h = 2 * np.pi / 4096
        for _ in range(30):
            cand = best_t[:, None] + h * np.array([-1.0, 0.0, 1.0])
            pz = self.parametrize(cand)[0]
            k = np.argmin(np.abs(z[:, None] - pz), axis=1)
            best_t = cand[np.arange(len(z)), k]
            h *= 0.5
        d = np.abs(z - self.parametrize(best_t)[0])
        return d if d.size > 1 else d[0]

    def bounding_box(self):
        return (self.center - self.semi_x - 1j * self.semi_y,
                self.center + self.semi_x + 1j * self.semi_y)

    def to_dict(self):
        return {"shape": "ellipse", "center": [self.center.real, self.center.imag],
                "semi_x": self.semi_x, "semi_y": self.semi_y}


@dataclass(frozen=True)
class Rectangle:
    bottom_left: complex
    top_right: complex

    def __post_init__(self):
        object.__setattr__(self, "bottom_left", _as_complex(self.bottom_left))
        object.__setattr__(self, "top_right", _as_complex(self.top_right))
        bl, tr = self.bottom_left, self.top_right
        if not (bl.real < tr.real and bl.imag < tr.imag):
            raise InvalidContour(f"rectangle corners {bl}, {tr} are not bottom-left/top-right")

    shape = "rectangle"

    @property
    def width(self):
        return self.top_right.real - self.bottom_left.real

    @property
    def height(self):
        return self.top_right.imag - self.bottom_left.imag

    @property
    def diameter(self):
        return float(np.hypot(self.width, self.height))

    @property
    def centroid(self):
        return 0.5 * (self.bottom_left + self.top_right)

    def corners(self):
        """Corners c1..c4 counterclockwise, starting at the top-left."""
        bl, tr = self.bottom_left, self.top_right
        return (complex(bl.real, tr.imag), bl, complex(tr.real, bl.imag), tr)

    def sides(self):
        c = self.corners()
        return [(c[i], c[(i + 1) % 4]) for i in range(4)]

    def is_inside(self, z):
        z = np.asarray(z)
        bl, tr = self.bottom_left, self.top_right
        return ((z.real > bl.real) & (z.real < tr.real)
                & (z.imag > bl.imag) & (z.imag < tr.imag))

    def scaled(self, factor):
        c = self.centroid
        return Rectangle(c + factor * (self.bottom_left - c), c + factor * (self.top_right - c))

    def boundary(self, k=400):
        pts = []
        for a, b in self.sides():
            pts.append(a + (b - a) * np.arange(k // 4) / (k // 4))
        pts.append(np.array([self.corners()[0]]))
        return np.concatenate(pts)

    def distance_to_boundary(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, np.inf)
        for a, b in self.sides():
            d = b - a
            t = np.clip(((z - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
            out = np.minimum(out, np.abs(z - (a + t * d)))
        return out

    def bounding_box(self):
        return self.bottom_left, self.top_right

    def to_dict(self):
        bl, tr = self.bottom_left, self.top_right
        return {"shape": "rectangle", "bottom_left": [bl.real, bl.imag],
                "top_right": [tr.real, tr.imag]}


def contour_from_dict(d):
    """Build a contour from its config form."""
    shape = d.get("shape")
    if shape == "circle":
        return Circle(d["center"], d["radius"])
    if shape == "ellipse":
        return Ellipse(d["center"], d["semi_x"], d["semi_y"])
    if shape == "rectangle":
        return Rectangle(d["bottom_left"], d["top_right"])
    raise InvalidContour(f"unknown contour shape {shape!r}")


def is_inside(contour, z):
    return contour.is_inside(z)


def apportion(lengths, m):
    """Largest-remainder split of ``m`` nodes over sides, at least one each."""
    lengths = np.asarray(lengths, dtype=float)
    k = len(lengths)
    if m < k:
        raise InvalidNodeCount(f"need at least {k} nodes, got {m}")
    quota = m * lengths / lengths.sum()
    counts = np.maximum(np.floor(quota).astype(int), 1)
    rem = quota - np.floor(quota)
    while counts.sum() < m:
        # stable: ties go to the earlier side
        i = max(range(k), key=lambda j: (rem[j], -j))
        counts[i] += 1
        rem[i] = -1.0
    while counts.sum() > m:
        i = max((j for j in range(k) if counts[j] > 1), key=lambda j: counts[j] - quota[j])
        counts[i] -= 1
    return counts


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    contour: object = field(compare=False)
    scheme: str = "gauss-legendre"
    side_counts: Tuple[int, ...] = ()

    @property
    def m(self):
        return len(self.nodes)


def quadrature_rule(contour, m, per_side=False):
    """Nodes and Cauchy weights for ``m`` points on ``contour``.

    Circles and ellipses use one Gauss-Legendre rule mapped to the angle
    range [0, 2 pi). Rectangles get Gauss-Legendre on each side, with
    node counts proportional to side length, traversed counterclockwise
    from the top-left corner. With ``per_side`` a rectangle instead gets
    ``m`` nodes on every side (4m in total).
    """
    m = int(m)
    if isinstance(contour, Rectangle):
        if per_side:
            if m < 1:
                raise InvalidNodeCount(f"need m >= 1 nodes per side, got {m}")
            counts = [m] * 4
        elif m < 4:
            raise InvalidNodeCount(f"rectangle needs m >= 4, got {m}")
        else:
            counts = apportion([abs(b - a) for a, b in contour.sides()], m)
        nodes, weights = [], []
        for (a, b), c in zip(contour.sides(), counts):
            x, w = gauss_legendre(int(c))
            half = 0.5 * (b - a)
            nodes.append(0.5 * (a + b) + half * x)
            weights.append(-w * half / TWO_PI_I)
        return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), contour,
                              "gauss-legendre-per-side", tuple(int(c) for c in counts))
    if m < 2:
        raise InvalidNodeCount(f"need m >= 2, got {m}")
    x, w = gauss_legendre(m)
    t = np.pi * (x + 1.0)
    z, dz = contour.parametrize(t)
    return QuadratureRule(z, -np.pi * w * dz / TWO_PI_I, contour, "gauss-legendre-global")


def trapezoid_rule(contour, m):
    """Equispaced trapezoidal rule on a circle or ellipse (same weight convention)."""
    if isinstance(contour, Rectangle):
        raise InvalidContour("trapezoidal rule is only defined for circles and ellipses")
    if m < 2:
        raise InvalidNodeCount(f"need m >= 2, got {m}")
    t = 2 * np.pi * np.arange(m) / m
    z, dz = contour.parametrize(t)
    return QuadratureRule(z, -(2 * np.pi / m) * dz / TWO_PI_I, contour, "trapezoid")


@dataclass(frozen=True)
class RationalApprox:
    """Shared-pole rational approximations r_j(z) = sum_i coeffs[i, j]/(z - poles[i]).

    The first ``n_quad`` poles are quadrature nodes; any further poles are
    exact interior poles of the f_j carried over with their residues.
    """

    poles: np.ndarray
    coeffs: np.ndarray
    functions: tuple = field(compare=False, default=())
    n_quad: int = 0
    scheme: str = ""

    @property
    def m(self):
        return len(self.poles)

    @property
    def p(self):
        return self.coeffs.shape[1]

    def evaluate(self, z, j=0):
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        r = (self.coeffs[:, j][None, :] / (z[:, None] - self.poles[None, :])).sum(axis=1)
        return r[0] if scalar else r

    def evaluator(self, j=0):
        return lambda z: self.evaluate(z, j)


def build_rational_approx(rule, functions, principal_parts=True):
    """Rational approximations of ``functions`` with the rule's nodes as poles.

    With ``principal_parts`` (default), simple poles of a function that lie
    strictly inside the contour are removed before quadrature and added
    back exactly as extra shared poles; the plain Cauchy integral would
    otherwise reproduce the wrong function there.
    """
    funcs = tuple(as_scalar_function(f) for f in functions)
    nodes = np.asarray(rule.nodes, dtype=complex)
    m = len(nodes)
    extra = []
    if principal_parts:
        for f in funcs:
            for loc, _ in f.poles:
                if rule.contour.is_inside(loc) and not any(abs(loc - e) < 1e-14 for e in extra):
                    extra.append(complex(loc))
    coeffs = np.zeros((m + len(extra), len(funcs)), dtype=complex)
    for j, f in enumerate(funcs):
        vals = np.broadcast_to(np.asarray(f(nodes), dtype=complex), (m,))
        if not np.all(np.isfinite(vals)):
            k = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise EvaluationFailure(f"function {j} ({f.descriptor or 'callable'}) is not finite "
                                    f"at node {nodes[k]}; move the contour", term=j, z=nodes[k])
        if principal_parts:
            for loc, res in f.poles:
                if complex(loc) in extra:
                    vals = vals - res / (nodes - loc)
                    coeffs[m + extra.index(complex(loc)), j] += res
        coeffs[:m, j] = rule.weights * vals
    poles = np.concatenate([nodes, np.asarray(extra, dtype=complex)])
    return RationalApprox(poles, coeffs, funcs, m, rule.scheme)


def _grid_in(region, density):
    lo, hi = region.bounding_box()
    xs = np.linspace(lo.real, hi.real, density)
    ys = np.linspace(lo.imag, hi.imag, density)
    Z = (xs[:, None] + 1j * ys[None, :]).ravel()
    return Z[region.is_inside(Z)]


def approx_error(ra, f, inner_region, grid_density=200, term=None):
    """Max of |f - r| over a tensor grid filtered to ``inner_region``.

    ``term`` selects the column of ``ra``; by default it is looked up from
    ``f`` (or 0 for a single-function approximation).
    """
    if term is None:
        term = 0
        for j, g in enumerate(ra.functions):
            if g is f or (getattr(f, "descriptor", "") and g == f):
                term = j
                break
    Z = _grid_in(inner_region, grid_density)
    if Z.size == 0:
        raise RegionNotInterior("inner region contains no grid points")
    dist = np.min(np.abs(Z[:, None] - ra.poles[None, :]), axis=1)
    if np.any(dist <= 1e-12 * max(1.0, np.max(np.abs(ra.poles)))):
        raise RegionNotInterior("a grid point coincides with a pole")
    with np.errstate(all="ignore"):
        err = np.abs(np.asarray(f(Z), dtype=complex) - ra.evaluate(Z, term))
    return float(np.max(err))
