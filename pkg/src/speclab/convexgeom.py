"""
Geometry of convex bodies: planar polygons and the analytic domains of `spectra`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import ConvexHull

from . import spectra
from .spectra import Ball, Box, DisjointUnion, Disk, Interval, Product

__all__ = [
    "Polygon2", "BodyMetrics", "Ellipse2", "metrics", "metrics_analytic",
    "john_inner_ellipse", "hausdorff_distance", "scale_to_unit_volume",
    "random_polygon", "regular_polygon", "rectangle", "read_polygon",
    "write_polygon", "metrics_json", "JohnCheck", "check_john",
]


# ---------------------------------------------------------------- types

class Polygon2:
    """Strictly convex polygon with counterclockwise vertices."""

    def __init__(self, vertices):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("a polygon needs at least three 2D vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        if not np.all(cross > 0):
            raise ValueError("vertices must be strictly convex and counterclockwise")
        self.vertices = v
        self.vertices.setflags(write=False)

    def __len__(self):
        return self.vertices.shape[0]

    def __repr__(self):
        return f"Polygon2({self.vertices.tolist()!r})"

    @property
    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def halfplanes(self):
        """Unit outward normals n_i and offsets c_i with the body = {x : n_i.x <= c_i}."""
        e = self.edges
        n = np.stack([e[:, 1], -e[:, 0]], axis=1)
        n /= np.linalg.norm(n, axis=1)[:, None]
        c = np.einsum("ij,ij->i", n, self.vertices)
        return n, c

    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def perimeter(self) -> float:
        return float(np.sum(np.linalg.norm(self.edges, axis=1)))

    def support(self, u: np.ndarray) -> np.ndarray:
        """Support function h(u) = max over vertices of u.v for the rows of u."""
        return np.max(np.asarray(u) @ self.vertices.T, axis=-1)

    def contains(self, p, tol: float = 0.0) -> np.ndarray:
        n, c = self.halfplanes()
        p = np.atleast_2d(p)
        return np.all(p @ n.T <= c + tol, axis=1)


@dataclass(frozen=True)
class BodyMetrics:
    volume: float
    surface: float
    inradius: float
    width: float
    diameter: float
    dim: int = 2


@dataclass(frozen=True)
class Ellipse2:
    center: tuple
    semiaxes: tuple  # (a, b) with a >= b
    angle: float  # direction of the a-axis

    def shape_matrix(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        r = np.array([[c, -s], [s, c]])
        return r @ np.diag(self.semiaxes) @ r.T

    @property
    def area(self) -> float:
        return math.pi * self.semiaxes[0] * self.semiaxes[1]


# ---------------------------------------------------------------- constructors

def regular_polygon(n: int, circumradius: float = 1.0, phase: float = 0.0) -> Polygon2:
    t = phase + 2 * np.pi * np.arange(n) / n
    return Polygon2(np.stack([circumradius * np.cos(t), circumradius * np.sin(t)], axis=1))


def rectangle(x0: float, y0: float, x1: float, y1: float) -> Polygon2:
    return Polygon2([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def random_polygon(rng: np.random.Generator, n_points: int = 12, min_vertices: int = 5) -> Polygon2:
    """Convex hull of uniform points in the unit disk; hulls below min_vertices are redrawn."""
    while True:
        r = np.sqrt(rng.random(n_points))
        t = 2 * np.pi * rng.random(n_points)
        pts = np.stack([r * np.cos(t), r * np.sin(t)], axis=1)
        hull = ConvexHull(pts)
        if len(hull.vertices) >= min_vertices:
            try:
                return Polygon2(pts[hull.vertices])
            except ValueError:
                continue


# ---------------------------------------------------------------- metrics

def _chebyshev(poly: Polygon2):
    """Chebyshev centre and radius: best feasible candidate among all edge triples."""
    n, c = poly.halfplanes()
    tri = np.array(list(itertools.combinations(range(len(c)), 3)))
    a = np.concatenate([n[tri], np.ones(tri.shape + (1,))], axis=2)  # rows: n_i.x + r = c_i
    det = np.linalg.det(a)
    ok = np.abs(det) > 1e-12
    sol = np.linalg.solve(a[ok], c[tri][ok][..., None])[..., 0]
    x, r = sol[:, :2], sol[:, 2]
    slack = c[None, :] - x @ n.T - r[:, None]
    feas = np.all(slack >= -1e-10 * (1 + np.abs(c).max()), axis=1) & (r > 0)
    i = int(np.argmax(np.where(feas, r, -np.inf)))
    return float(r[i]), x[i]


def _inradius(poly: Polygon2) -> float:
    return _chebyshev(poly)[0]


def _width(poly: Polygon2) -> float:
    n, c = poly.halfplanes()
    # for each edge, the farthest vertex from its supporting line
    depth = c[:, None] - n @ poly.vertices.T
    return float(np.min(np.max(depth, axis=1)))


def _diameter(poly: Polygon2) -> float:
    """Rotating calipers over antipodal vertex pairs."""
    v = poly.vertices
    m = len(v)
    best = 0.0
    j = 1
    for i in range(m):
        a, b = v[i], v[(i + 1) % m]
        e = b - a

        def area2(k):
            w = v[k % m] - a
            return abs(e[0] * w[1] - e[1] * w[0])

        while area2(j + 1) > area2(j):
            j += 1
        for k in (j, j + 1):
            best = max(best, float(np.linalg.norm(v[k % m] - a)), float(np.linalg.norm(v[k % m] - b)))
    return best


def metrics(poly: Polygon2) -> BodyMetrics:
    area = poly.area()
    if not area > 0:
        raise ValueError("degenerate polygon")
    return BodyMetrics(area, poly.perimeter(), _inradius(poly), _width(poly), _diameter(poly), 2)


def _surface(dom) -> float:
    if isinstance(dom, Interval):
        return 2.0
    if isinstance(dom, Box):
        ls = dom.lengths
        if len(ls) == 1:
            return 2.0
        return 2.0 * math.fsum(math.prod(ls[:i] + ls[i + 1:]) for i in range(len(ls)))
    if isinstance(dom, Disk):
        return 2 * math.pi * dom.radius
    if isinstance(dom, Ball):
        return 4 * math.pi * dom.radius ** 2
    if isinstance(dom, Product):
        a, b = dom.cross, dom.axis
        return _surface(a) * spectra.volume(b) + spectra.volume(a) * _surface(b)
    if isinstance(dom, DisjointUnion):
        return math.fsum(_surface(p) for p in dom.parts)
    raise TypeError(dom)


def _inr_width_diam(dom):
    if isinstance(dom, Interval):
        return dom.length / 2, dom.length, dom.length
    if isinstance(dom, Box):
        return min(dom.lengths) / 2, min(dom.lengths), math.sqrt(sum(x * x for x in dom.lengths))
    if isinstance(dom, (Disk, Ball)):
        return dom.radius, 2 * dom.radius, 2 * dom.radius
    if isinstance(dom, Product):
        ra, wa, da = _inr_width_diam(dom.cross)
        rb, wb, db = _inr_width_diam(dom.axis)
        return min(ra, rb), min(wa, wb), math.hypot(da, db)
    raise TypeError(dom)


def metrics_analytic(dom):
    """Closed-form metrics; a disjoint union yields a list with one entry per part."""
    if isinstance(dom, DisjointUnion):
        return [metrics_analytic(p) for p in dom.parts]
    r, w, diam = _inr_width_diam(dom)
    return BodyMetrics(spectra.volume(dom), _surface(dom), r, w, diam, spectra.dimension(dom))


def union_metrics(dom) -> BodyMetrics:
    """Volume and surface of a union; inradius, width and diameter of its largest part."""
    parts = dom.parts if isinstance(dom, DisjointUnion) else (dom,)
    ms = [metrics_analytic(p) for p in parts]
    r = max(m.inradius for m in ms)
    return BodyMetrics(math.fsum(m.volume for m in ms), math.fsum(m.surface for m in ms), r,
                       max(m.width for m in ms), max(m.diameter for m in ms), ms[0].dim)


def scale_to_unit_volume(dom):
    """(t * dom, t) with t = volume^(-1/d) so that the dilate has unit volume."""
    vol = spectra.volume(dom)
    if not vol > 0:
        raise ValueError("volume must be positive")
    t = vol ** (-1.0 / spectra.dimension(dom))
    return spectra.scaled(dom, t), t


# ---------------------------------------------------------------- John ellipse

def _ellipse_barrier(theta, n, c, mu, order: int = 2):
    """Value, gradient and Hessian of -log det B - mu * sum log(slack_i)."""
    p, q, s, cx, cy = theta
    det = p * s - q * q
    if p <= 0 or det <= 0:
        return math.inf, None, None
    v = np.stack([p * n[:, 0] + q * n[:, 1], q * n[:, 0] + s * n[:, 1]], axis=1)
    norm = np.linalg.norm(v, axis=1)
    slack = c - n @ np.array([cx, cy]) - norm
    if np.any(slack <= 0):
        return math.inf, None, None
    val = -math.log(det) - mu * float(np.sum(np.log(slack)))
    if order == 0:
        return val, None, None
    # d v / d(p, q, s) for every edge: rows [[n1, n2, 0], [0, n1, n2]]
    amat = np.zeros((len(c), 2, 3))
    amat[:, 0, 0], amat[:, 0, 1] = n[:, 0], n[:, 1]
    amat[:, 1, 1], amat[:, 1, 2] = n[:, 0], n[:, 1]
    dnorm = np.einsum("kij,ki->kj", amat, v) / norm[:, None]
    # gradient of slack with respect to (p, q, s, cx, cy)
    ds = np.concatenate([-dnorm, -n], axis=1)
    dd = np.array([s, -2 * q, p])
    g = np.zeros(5)
    g[:3] = -dd / det
    g -= mu * np.sum(ds / slack[:, None], axis=0)
    h = np.zeros((5, 5))
    d2 = np.array([[0.0, 0.0, 1.0], [0.0, -2.0, 0.0], [1.0, 0.0, 0.0]])
    h[:3, :3] = -d2 / det + np.outer(dd, dd) / det ** 2
    h += mu * np.einsum("ki,kj->ij", ds / slack[:, None], ds / slack[:, None])
    proj = np.eye(2)[None] / norm[:, None, None] - np.einsum("ki,kj->kij", v, v) / norm[:, None, None] ** 3
    hn = np.einsum("kai,kab,kbj->kij", amat, proj, amat)
    h[:3, :3] += mu * np.sum(hn / slack[:, None, None], axis=0)
    return val, g, h


def _ellipse_from_theta(theta) -> Ellipse2:
    p, q, s, cx, cy = theta
    w, vec = np.linalg.eigh(np.array([[p, q], [q, s]]))
    a, b = float(w[1]), float(w[0])
    ang = math.atan2(vec[1, 1], vec[0, 1])
    if ang < 0:
        ang += math.pi
    if ang >= math.pi:
        ang -= math.pi
    return Ellipse2((float(cx), float(cy)), (a, b), float(ang))


def john_inner_ellipse(poly: Polygon2, tol: float = 1e-9) -> Ellipse2:
    """Maximum-area ellipse inside the polygon via a log-barrier Newton method.

    The ellipse is {c + B u : |u| <= 1} with B symmetric positive definite; the
    constraints are |B n_i| + n_i.c <= c_i for every edge.  Starts from the incircle.
    """
    n, c = poly.halfplanes()
    m = len(c)
    r, cen = _chebyshev(poly)
    theta = np.array([0.5 * r, 0.0, 0.5 * r, cen[0], cen[1]])
    mu = 1.0
    while True:
        for _ in range(200):
            val, g, h = _ellipse_barrier(theta, n, c, mu)
            step = -np.linalg.solve(h, g)
            dec = -float(g @ step)
            if dec < 1e-20:
                break
            t = 1.0
            while t > 1e-14:
                if _ellipse_barrier(theta + t * step, n, c, mu, order=0)[0] <= val - 0.25 * t * dec:
                    break
                t *= 0.5
            theta = theta + t * step
            if dec < 1e-16:
                break
        # the barrier optimum is within m * mu of the true optimum in log-area
        if m * mu < tol:
            break
        mu *= 0.1
    return _ellipse_from_theta(theta)


@dataclass(frozen=True)
class JohnCheck:
    inner_ok: bool
    outer_ok: bool
    inner_margin: float  # min over directions of h_poly - h_E (>= 0 expected)
    outer_margin: float  # min over directions of 2 h_E' - h_poly' about the centre


def check_john(poly: Polygon2, ell: Ellipse2, n_angles: int = 720, tol: float = 1e-9) -> JohnCheck:
    """Support-function test of E in poly and poly in 2E (dilation about the centre)."""
    t = 2 * np.pi * np.arange(n_angles) / n_angles
    u = np.stack([np.cos(t), np.sin(t)], axis=1)
    nrm, _ = poly.halfplanes()
    u = np.concatenate([u, nrm])
    b = ell.shape_matrix()
    cen = np.array(ell.center)
    h_e = np.linalg.norm(u @ b, axis=1)  # support of B(unit disk)
    h_p = poly.support(u) - u @ cen
    inner = float(np.min(h_p - h_e))
    # vertices are the extreme points of poly: test them directly as well
    binv = np.linalg.inv(b)
    vert = float(np.max(np.linalg.norm((poly.vertices - cen) @ binv.T, axis=1)))
    outer = min(float(np.min(2 * h_e - h_p)), 2.0 - vert)
    scale = max(1.0, float(np.max(np.abs(poly.vertices))))
    return JohnCheck(inner >= -tol * scale, outer >= -tol * scale, inner, outer)


# ---------------------------------------------------------------- Hausdorff

def _point_to_body(pts: np.ndarray, poly: Polygon2) -> np.ndarray:
    v = poly.vertices
    w = np.roll(v, -1, axis=0)
    e = w - v
    d = pts[:, None, :] - v[None, :, :]
    t = np.clip(np.einsum("pij,ij->pi", d, e) / np.einsum("ij,ij->i", e, e), 0.0, 1.0)
    proj = v[None] + t[..., None] * e[None]
    dist = np.min(np.linalg.norm(pts[:, None, :] - proj, axis=2), axis=1)
    inside = poly.contains(pts)
    return np.where(inside, 0.0, dist)


def hausdorff_distance(p: Polygon2, q: Polygon2) -> float:
    """Hausdorff distance of the closed polygons (vertex-to-body distances both ways)."""
    a = float(np.max(_point_to_body(p.vertices, q)))
    b = float(np.max(_point_to_body(q.vertices, p)))
    return max(a, b)


# ---------------------------------------------------------------- io

def read_polygon(text: str) -> Polygon2:
    pts = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        x, y = line.split()
        pts.append((float(x), float(y)))
    return Polygon2(pts)


def write_polygon(poly: Polygon2) -> str:
    return "".join(f"{x!r} {y!r}\n" for x, y in poly.vertices.tolist())


def metrics_json(m: BodyMetrics) -> str:
    return json.dumps(asdict(m), sort_keys=True)
