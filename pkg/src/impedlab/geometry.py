"""Discretized obstacle boundaries.

A geometry is a quadrature on the boundary of a bounded obstacle containing
the origin: nodes, positive weights summing to the surface measure, unit
normals pointing INTO the obstacle (the convention every boundary condition
in this package uses), and, for curves, the parameterization derivatives the
integral-equation kernels need.

Four families are shipped.  circle2d and sphere3d admit separated-variable
solutions and serve as oracles; kite2d is the standard smooth non-convex
test curve; star_polygon2d is a genuinely Lipschitz curve with corners,
discretized with an algebraically graded mesh so that trapezoid sums still
converge.

The rough-obstacle character (r0, M) is estimated from the samples: around
each node the boundary is written as a graph over the tangent line (plane),
and the largest window radius keeping every graph slope below a fixed cap
is reported together with the observed slope bound.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import special
from scipy.spatial import ConvexHull

from .errors import DomainError, InvalidGeometryError

__all__ = [
    "BoundaryGeometry",
    "BoundaryPatch",
    "build_geometry",
    "boundary_patch",
    "FAMILIES",
]

logger = logging.getLogger(__name__)

FAMILIES = ("circle2d", "kite2d", "star_polygon2d", "sphere3d")

#: Local graph slopes above this cap mark a window as too wide; the largest
#: window radius with all slopes under the cap defines r0.
_SLOPE_CAP = 10.0


# ---------------------------------------------------------------------------
# containers
# ---------------------------------------------------------------------------


@dataclass
class BoundaryGeometry:
    """Quadrature description of an obstacle boundary.

    Attributes
    ----------
    family : str
        One of ``FAMILIES``.
    dim : int
        Ambient dimension, 2 or 3.
    nodes : ndarray, shape (N, dim)
        Quadrature nodes on the boundary.
    normals : ndarray, shape (N, dim)
        Unit normals pointing into the obstacle (away from the exterior
        domain where the field lives).
    weights : ndarray, shape (N,)
        Positive surface-measure weights.
    params : ndarray or None, shape (N,)
        Curve parameter t in [0, 2pi) for 2D families.
    tangent, second : ndarray or None, shape (N, 2)
        x'(t) and x''(t) at the nodes (2D families).
    corner_nodes : ndarray, shape (N,)
        Boolean flags; True on nodes adjacent to a geometric corner.
    r0 : float
        Estimated Lipschitz window radius.
    lipschitz_m : float
        Estimated graph slope bound on windows of radius r0.
    diam : float
        Diameter of the node set.
    meta : dict
        Family parameters needed to rebuild the geometry (radius, arms, ...)
        plus grid layout for sphere3d.
    """

    family: str
    dim: int
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    params: Optional[np.ndarray]
    tangent: Optional[np.ndarray]
    second: Optional[np.ndarray]
    corner_nodes: np.ndarray
    r0: float
    lipschitz_m: float
    diam: float
    meta: Dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def speed(self) -> np.ndarray:
        """|x'(t)| at the nodes (2D families only)."""
        if self.tangent is None:
            raise DomainError("speed is defined for curve families only")
        return np.linalg.norm(self.tangent, axis=1)

    @property
    def outward_normals(self) -> np.ndarray:
        return -self.normals

    @property
    def circumradius(self) -> float:
        return float(np.max(np.linalg.norm(self.nodes, axis=1)))

    def surface_measure(self) -> float:
        return float(np.sum(self.weights))

    def with_resolution(self, n: int) -> "BoundaryGeometry":
        """Rebuild the same shape at a different node count."""
        kw = {k: v for k, v in self.meta.items() if k in _BUILD_KEYS}
        return build_geometry(self.family, n, **kw)

    def validate(self) -> None:
        """Raise InvalidGeometryError on a degenerate description."""
        msgs = []
        if self.nodes.ndim != 2 or self.nodes.shape[1] != self.dim:
            msgs.append(f"nodes shape {self.nodes.shape} != (N, {self.dim})")
        if np.any(self.weights <= 0.0):
            msgs.append("nonpositive quadrature weight")
        nrm = np.linalg.norm(self.normals, axis=1)
        if np.max(np.abs(nrm - 1.0)) > 1e-12:
            msgs.append(f"normals not unit (worst |.|-1 = {np.max(np.abs(nrm-1)):.2e})")
        if self.tangent is not None:
            dots = np.abs(np.sum(self.tangent * self.normals, axis=1))
            rel = dots / np.maximum(np.linalg.norm(self.tangent, axis=1), 1e-300)
            if np.max(rel) > 1e-10:
                msgs.append("tangent not orthogonal to normal")
            if self.params is not None and _winding_number(self.nodes) != 1:
                msgs.append("curve does not wind once counterclockwise about 0")
        if msgs:
            raise InvalidGeometryError("; ".join(msgs))


@dataclass
class BoundaryPatch:
    """Nodes of a geometry inside an open ball around one of its nodes.

    measure is the quadrature mass carried by the member nodes; for r below
    the local node spacing this degenerates to the center's own weight.
    """

    center_index: int
    radius: float
    member_indices: np.ndarray
    measure: float


# ---------------------------------------------------------------------------
# family constructors
# ---------------------------------------------------------------------------

_BUILD_KEYS = ("radius", "arms", "amplitude", "grading")


def build_geometry(family: str, n: int, **params) -> BoundaryGeometry:
    """Construct one of the shipped boundary families at resolution n.

    For curves n is the node count (must be even, nodes are uniform in the
    global parameter); for sphere3d n is the polar count of a
    Gauss-Legendre x uniform-azimuth product grid with 2n azimuths.
    """
    if family == "circle2d":
        geom = _circle2d(n, radius=float(params.pop("radius", 1.0)))
    elif family == "kite2d":
        geom = _kite2d(n)
    elif family == "star_polygon2d":
        geom = _star_polygon2d(
            n,
            arms=int(params.pop("arms", 5)),
            amplitude=float(params.pop("amplitude", 0.5)),
            grading=int(params.pop("grading", 3)),
        )
    elif family == "sphere3d":
        geom = _sphere3d(n, radius=float(params.pop("radius", 1.0)))
    else:
        raise DomainError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if params:
        raise DomainError(f"unused geometry parameters {sorted(params)} for {family}")
    geom.validate()
    return geom


def _check_even(n: int) -> None:
    if n < 8 or n % 2:
        raise DomainError(f"curve node count must be even and >= 8, got {n}")


def _curve_geometry(family, n, t, x, dx, ddx, corner, meta) -> BoundaryGeometry:
    speed = np.linalg.norm(dx, axis=1)
    if np.any(speed <= 0.0):
        raise InvalidGeometryError("vanishing parameterization speed at a node")
    # outward normal of a counterclockwise curve, then flipped inward
    outward = np.column_stack([dx[:, 1], -dx[:, 0]]) / speed[:, None]
    weights = (2.0 * np.pi / n) * speed
    nodes = x
    diam = _diameter(nodes)
    r0, m = _lipschitz_character(nodes, -outward, diam)
    return BoundaryGeometry(
        family=family,
        dim=2,
        nodes=nodes,
        normals=-outward,
        weights=weights,
        params=t,
        tangent=dx,
        second=ddx,
        corner_nodes=corner,
        r0=r0,
        lipschitz_m=m,
        diam=diam,
        meta=meta,
    )


def _circle2d(n: int, radius: float) -> BoundaryGeometry:
    if radius <= 0.0:
        raise DomainError(f"circle radius must be positive, got {radius}")
    _check_even(n)
    t = 2.0 * np.pi * np.arange(n) / n
    c, s = np.cos(t), np.sin(t)
    x = radius * np.column_stack([c, s])
    dx = radius * np.column_stack([-s, c])
    ddx = -x
    corner = np.zeros(n, dtype=bool)
    return _curve_geometry(
        "circle2d", n, t, x, dx, ddx, corner, {"radius": radius, "n": n}
    )


def _kite2d(n: int) -> BoundaryGeometry:
    _check_even(n)
    t = 2.0 * np.pi * np.arange(n) / n
    x = np.column_stack([np.cos(t) + 0.65 * np.cos(2 * t) - 0.65, 1.5 * np.sin(t)])
    dx = np.column_stack([-np.sin(t) - 1.3 * np.sin(2 * t), 1.5 * np.cos(t)])
    ddx = np.column_stack([-np.cos(t) - 2.6 * np.cos(2 * t), -1.5 * np.sin(t)])
    corner = np.zeros(n, dtype=bool)
    return _curve_geometry("kite2d", n, t, x, dx, ddx, corner, {"n": n})


def _star_polygon2d(n: int, arms: int, amplitude: float, grading: int):
    if arms < 2:
        raise InvalidGeometryError(f"star needs at least 2 arms, got {arms}")
    if not 0.0 < amplitude < 1.0:
        raise InvalidGeometryError(
            f"star amplitude must lie in (0, 1) to keep the curve simple, "
            f"got {amplitude}"
        )
    if grading < 2:
        raise DomainError(f"grading exponent must be >= 2, got {grading}")
    _check_even(n)
    n_edges = 2 * arms
    if n % n_edges:
        raise DomainError(
            f"node count {n} must be divisible by the edge count {n_edges}"
        )

    # vertices alternate between the outer and inner radius
    ang = np.pi * np.arange(n_edges) / arms
    rad = np.where(np.arange(n_edges) % 2 == 0, 1.0 + amplitude, 1.0 - amplitude)
    verts = rad[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])

    # nodes sit on a half-step-offset uniform grid so none lands on a corner
    t = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    delta = 2.0 * np.pi / n_edges
    edge = np.minimum((t / delta).astype(int), n_edges - 1)
    s = t / delta - edge  # local edge coordinate in (0, 1)

    sig, dsig, ddsig = _graded_ramp(s, grading)
    a = verts[edge]  # (N, 2)
    b = verts[(edge + 1) % n_edges]
    x = a + sig[:, None] * (b - a)
    dx = (dsig / delta)[:, None] * (b - a)
    ddx = (ddsig / delta**2)[:, None] * (b - a)

    nodes_per_edge = n // n_edges
    local = np.arange(n) % nodes_per_edge
    corner = (local == 0) | (local == nodes_per_edge - 1)
    meta = {"arms": arms, "amplitude": amplitude, "grading": grading, "n": n}
    return _curve_geometry("star_polygon2d", n, t, x, dx, ddx, corner, meta)


def _graded_ramp(s: np.ndarray, p: int):
    """Monotone C^{p-1} map [0,1]->[0,1] with p-fold flat ends.

    sigma(s) = s^p / (s^p + (1-s)^p); its derivative vanishes to order p-1
    at both ends, which clusters uniform parameter nodes at the edge
    endpoints and restores trapezoid accuracy across corners.
    """
    num = s**p
    den = num + (1.0 - s) ** p
    dnum = p * s ** (p - 1)
    dden = dnum - p * (1.0 - s) ** (p - 1)
    ddnum = p * (p - 1) * s ** (p - 2)
    ddden = ddnum - p * (p - 1) * (1.0 - s) ** (p - 2)

    sig = num / den
    dsig = (dnum * den - num * dden) / den**2
    ddsig = ((ddnum * den - num * ddden) * den - 2.0 * dden * (dnum * den - num * dden)) / den**3
    return sig, dsig, ddsig


def _sphere3d(n: int, radius: float) -> BoundaryGeometry:
    if radius <= 0.0:
        raise DomainError(f"sphere radius must be positive, got {radius}")
    if n < 4:
        raise DomainError(f"sphere polar count must be >= 4, got {n}")
    n_phi = 2 * n
    mu, glw = special.roots_legendre(n)  # mu = cos(theta), ascending
    theta = np.arccos(mu)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi

    st = np.sqrt(1.0 - mu**2)
    # layout: node index = i_theta * n_phi + j_phi
    xs = np.outer(st, np.cos(phi))
    ys = np.outer(st, np.sin(phi))
    zs = np.outer(mu, np.ones(n_phi))
    unit = np.column_stack([xs.ravel(), ys.ravel(), zs.ravel()])
    nodes = radius * unit
    weights = (radius**2 * 2.0 * np.pi / n_phi) * np.repeat(glw, n_phi)

    diam = 2.0 * radius
    r0, m = _lipschitz_character(nodes, -unit, diam)
    meta = {"radius": radius, "n": n, "n_theta": n, "n_phi": n_phi,
            "mu": mu, "gl_weights": glw, "phi": phi}
    return BoundaryGeometry(
        family="sphere3d",
        dim=3,
        nodes=nodes,
        normals=-unit,
        weights=weights,
        params=None,
        tangent=None,
        second=None,
        corner_nodes=np.zeros(nodes.shape[0], dtype=bool),
        r0=r0,
        lipschitz_m=m,
        diam=diam,
        meta=meta,
    )


# ---------------------------------------------------------------------------
# rough-obstacle character
# ---------------------------------------------------------------------------


def _diameter(nodes: np.ndarray) -> float:
    """Diameter of the node set via its convex hull."""
    if nodes.shape[0] > 16:
        pts = nodes[ConvexHull(nodes).vertices]
    else:
        pts = nodes
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    return float(np.sqrt(np.max(d2)))


def _lipschitz_character(nodes, inward, diam, n_candidates=24, max_centers=192):
    """Largest graph-window radius and slope bound from node samples.

    Around each sampled center the nearby boundary is projected on the
    tangent line (plane); the window passes if every finite-difference
    slope of the height over the projection stays below _SLOPE_CAP.
    Returns (r0, M) with r0 the largest passing candidate radius and M the
    slope bound actually observed at that radius.
    """
    n = nodes.shape[0]
    stride = max(1, n // max_centers)
    centers = np.arange(0, n, stride)
    radii = np.geomspace(diam * 0.45, diam * 0.02, n_candidates)
    for r in radii:
        m = _window_slope(nodes, inward, centers, r)
        if m <= _SLOPE_CAP:
            return float(r), float(max(m, 1e-12))
    logger.warning("no graph window below slope cap; reporting smallest radius")
    return float(radii[-1]), float(_SLOPE_CAP)


def _window_slope(nodes, inward, centers, r) -> float:
    dim = nodes.shape[1]
    worst = 0.0
    for c in centers:
        x0 = nodes[c]
        nu = inward[c]
        rel = nodes - x0  # (N, dim)
        inside = np.sum(rel * rel, axis=1) < r * r
        rel = rel[inside]
        h = rel @ (-nu)  # height along the outward normal
        if dim == 2:
            tang = np.array([-nu[1], nu[0]])
            s = rel @ tang
            order = np.argsort(s)
            ds = np.diff(s[order])
            dh = np.abs(np.diff(h[order]))
            ok = ds > 1e-14
            if np.any(dh[~ok] > 1e-12):
                return np.inf  # two points share a projection: not a graph
            if np.any(ok):
                worst = max(worst, float(np.max(dh[ok] / ds[ok])))
        else:
            t1 = np.array([-nu[1], nu[0], 0.0])
            if np.linalg.norm(t1) < 1e-8:
                t1 = np.array([1.0, 0.0, 0.0])
            t1 /= np.linalg.norm(t1)
            t2 = np.cross(nu, t1)
            uv = np.column_stack([rel @ t1, rel @ t2])  # (m, 2)
            dp = uv[:, None, :] - uv[None, :, :]
            dist = np.sqrt(np.sum(dp * dp, axis=2))
            dh = np.abs(h[:, None] - h[None, :])
            ok = dist > 1e-14
            if np.any(dh[~ok] > 1e-12):
                return np.inf
            if np.any(ok):
                worst = max(worst, float(np.max(dh[ok] / dist[ok])))
        if worst > _SLOPE_CAP:
            return worst
    return worst


# ---------------------------------------------------------------------------
# patches
# ---------------------------------------------------------------------------


def boundary_patch(geom: BoundaryGeometry, center_index: int, r: float) -> BoundaryPatch:
    """Open-ball boundary patch around node ``center_index``.

    Members are all nodes with |x - x0| < r; the patch measure is their
    quadrature mass.  Monotone nondecreasing in r, equal to the center's own
    weight once r drops below the local node spacing.
    """
    n = geom.n_nodes
    if not 0 <= center_index < n:
        raise DomainError(f"center index {center_index} outside 0..{n - 1}")
    if not 0.0 < r < geom.diam:
        raise DomainError(f"patch radius must lie in (0, diam={geom.diam:.6g}), got {r}")
    rel = geom.nodes - geom.nodes[center_index]
    inside = np.sum(rel * rel, axis=1) < r * r
    members = np.nonzero(inside)[0]
    measure = float(np.sum(geom.weights[members]))
    return BoundaryPatch(center_index, float(r), members, measure)


def _winding_number(nodes: np.ndarray) -> int:
    ang = np.arctan2(nodes[:, 1], nodes[:, 0])
    dang = np.diff(np.concatenate([ang, ang[:1]]))
    dang = (dang + np.pi) % (2.0 * np.pi) - np.pi
    return int(round(float(np.sum(dang) / (2.0 * np.pi))))
