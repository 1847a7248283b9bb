"""Field representations for the exterior impedance scattering problem.

The obstacle D contains the origin; the acoustic field lives outside it.
A time-harmonic incident plane wave exp(i k x . omega) hits D and the total
field u = u_inc + u_s satisfies the Helmholtz equation outside D, the
impedance condition du/dnu + i lambda u = 0 on the boundary (nu pointing
into D) and the outgoing radiation condition for u_s.

Two interchangeable representations of the scattered field are used:

* modal: a truncated separated-variables series (circle / sphere only),
  exact up to truncation everywhere outside the obstacle;
* layer2d: a combined double-minus-i-eta-single layer density on the
  boundary of any 2D family, evaluated by quadrature.

:func:`evaluate_field` hides the difference; everything downstream (far
fields, probes, reconstruction) works on either kind.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import AccuracyWarning, DomainError, ValidationError
from .geometry import BoundaryGeometry
from .wavefunctions import eval_wave_function

__all__ = [
    "IncidentWave",
    "ImpedanceField",
    "BoundaryTrace",
    "ExteriorRepresentation",
    "evaluate_field",
    "flux_through_radius",
]


# ---------------------------------------------------------------------------
# incident wave and impedance coefficient
# ---------------------------------------------------------------------------


@dataclass
class IncidentWave:
    """Plane wave exp(i k x . omega) with unit direction omega."""

    k: float
    omega: np.ndarray

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        if self.k <= 0.0:
            raise ValidationError(f"wave number must be positive, got {self.k}")
        if abs(np.linalg.norm(self.omega) - 1.0) > 1e-8:
            raise ValidationError(
                f"|omega| = {np.linalg.norm(self.omega):.12g} violates |omega| = 1"
            )

    @property
    def dim(self) -> int:
        return self.omega.shape[0]

    @property
    def theta(self) -> float:
        """Direction angle (2D only)."""
        if self.dim != 2:
            raise DomainError("theta is defined for 2D waves only")
        return float(np.arctan2(self.omega[1], self.omega[0]))

    def value(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.exp(1j * self.k * (pts @ self.omega))

    def gradient(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return 1j * self.k * self.omega[None, :] * self.value(pts)[:, None]


@dataclass
class ImpedanceField:
    """Boundary impedance coefficient lambda.

    kind / data combinations:

    * "constant":  data is a scalar.
    * "fourier2d": data = (a, b) with lambda(t) = a[0] + sum a[m] cos(mt)
      + b[m] sin(mt); t is the curve parameter.
    * "axisym3d":  data = c with lambda = sum c[l] P_l(cos gamma), gamma the
      angle from the incident direction (axisymmetric about omega).
    * "samples":   data = values at the geometry nodes.

    lambda0 and c01_bound are the a-priori class constants: lambda >= lambda0
    > 0 pointwise and |lambda|_{C^{0,1}} <= c01_bound.
    """

    kind: str
    data: object
    lambda0: float = 0.1
    c01_bound: float = 10.0

    def values_on(self, geom: BoundaryGeometry, omega: Optional[np.ndarray] = None):
        """Real impedance values at the geometry nodes."""
        if self.kind == "constant":
            return np.full(geom.n_nodes, float(self.data))
        if self.kind == "fourier2d":
            if geom.params is None:
                raise DomainError("fourier2d impedance needs a curve geometry")
            return self.values_at_param(geom.params)
        if self.kind == "axisym3d":
            if omega is None:
                raise DomainError("axisym3d impedance needs the incident direction")
            mu = (geom.nodes @ np.asarray(omega)) / np.linalg.norm(geom.nodes, axis=1)
            return self.values_at_mu(np.clip(mu, -1.0, 1.0))
        if self.kind == "samples":
            vals = np.asarray(self.data, dtype=float)
            if vals.shape != (geom.n_nodes,):
                raise DomainError(
                    f"impedance samples shape {vals.shape} does not match "
                    f"{geom.n_nodes} nodes"
                )
            return vals.copy()
        raise DomainError(f"unknown impedance kind {self.kind!r}")

    def values_at_param(self, t: np.ndarray) -> np.ndarray:
        a, b = self.data
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        out = np.full_like(np.asarray(t, dtype=float), a[0])
        for m in range(1, a.shape[0]):
            out += a[m] * np.cos(m * t)
        for m in range(1, b.shape[0]):
            out += b[m] * np.sin(m * t)
        return out

    def values_at_mu(self, mu: np.ndarray) -> np.ndarray:
        c = np.asarray(self.data, dtype=float)
        out = np.zeros_like(np.asarray(mu, dtype=float))
        for ell in range(c.shape[0]):
            out += c[ell] * eval_wave_function("legendre_P", ell, mu)
        return out

    def check_class(self, geom: BoundaryGeometry, omega=None) -> None:
        """Raise ValidationError when the sampled coefficient leaves the
        admissible class (positive lower bound, Lipschitz bound)."""
        msgs = []
        if self.lambda0 <= 0.0:
            msgs.append(f"lambda0 = {self.lambda0} violates lambda0 > 0")
        vals = self.values_on(geom, omega)
        if np.min(vals) < self.lambda0 - 1e-12:
            msgs.append(
                f"min lambda = {np.min(vals):.6g} violates lambda >= "
                f"lambda0 = {self.lambda0}"
            )
        c01 = sampled_c01_norm(geom, vals)
        if c01 > self.c01_bound * (1.0 + 1e-9):
            msgs.append(
                f"sampled C^{{0,1}} norm {c01:.6g} violates bound {self.c01_bound}"
            )
        if msgs:
            raise ValidationError("\n".join(msgs))


def sampled_c01_norm(geom: BoundaryGeometry, values: np.ndarray) -> float:
    """sup |f| plus the largest finite-difference slope between neighboring
    nodes (chordal distances)."""
    sup = float(np.max(np.abs(values)))
    nxt = np.roll(np.arange(geom.n_nodes), -1) if geom.dim == 2 else None
    if nxt is None:
        # 3D: neighbor pairs along the azimuth rings only; adequate for the
        # axisymmetric coefficients this package ships
        n_phi = geom.meta["n_phi"]
        idx = np.arange(geom.n_nodes)
        nxt = idx + 1
        nxt[(idx + 1) % n_phi == 0] -= n_phi
    gaps = np.linalg.norm(geom.nodes - geom.nodes[nxt], axis=1)
    slopes = np.abs(values - values[nxt]) / np.maximum(gaps, 1e-300)
    return sup + float(np.max(slopes))


# ---------------------------------------------------------------------------
# traces and exterior representations
# ---------------------------------------------------------------------------


@dataclass
class BoundaryTrace:
    """Total field and its inward normal derivative at the geometry nodes.

    Produced by the forward solvers; consumed by norms, probes and the
    impedance-recovery formula.  lambda_values records the coefficient the
    solver actually used, so the impedance residual du/dnu + i lambda u can
    be recomputed at any time.
    """

    geometry: BoundaryGeometry
    k: float
    omega: np.ndarray
    u_values: np.ndarray
    dnu_values: np.ndarray
    lambda_values: np.ndarray
    meta: Dict = field(default_factory=dict)

    def impedance_residual(self) -> np.ndarray:
        return np.abs(self.dnu_values + 1j * self.lambda_values * self.u_values)

    def validate(self) -> None:
        n = self.geometry.n_nodes
        for name in ("u_values", "dnu_values", "lambda_values"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ValidationError(f"{name} shape {arr.shape} != ({n},)")
        if np.max(np.abs(self.u_values)) == 0.0:
            raise ValidationError("trace vanishes identically")


@dataclass
class ExteriorRepresentation:
    """Scattered-field representation valid outside the obstacle.

    kind:
      "modal2d"  coefficients c_n (n = -N..N) of c_n H_n(kr) e^{in(theta -
                 theta_omega)}; boundary_radius is the circle radius.
      "modal3d"  coefficients A_l of A_l h_l(kr) P_l(cos gamma), gamma the
                 angle from omega; axisymmetric about the incident direction.
      "layer2d"  density values phi at the geometry nodes of the combined
                 field (D - i eta S) phi, eta the coupling constant.
    """

    kind: str
    k: float
    omega: np.ndarray
    coefficients: Optional[np.ndarray] = None
    density: Optional[np.ndarray] = None
    geometry: Optional[BoundaryGeometry] = None
    boundary_radius: Optional[float] = None
    eta: Optional[float] = None
    meta: Dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return 2 if self.kind in ("modal2d", "layer2d") else 3

    def max_order(self) -> int:
        if self.kind == "modal2d":
            return (self.coefficients.shape[0] - 1) // 2
        if self.kind == "modal3d":
            return self.coefficients.shape[0] - 1
        raise DomainError("layer representations carry no modal order")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def evaluate_field(
    rep: ExteriorRepresentation,
    points: np.ndarray,
    total: bool = True,
    gradient: bool = False,
) -> Tuple[np.ndarray, ...]:
    """Evaluate the (total or scattered) field at exterior points.

    Parameters
    ----------
    rep : ExteriorRepresentation
    points : ndarray, shape (P, dim)
    total : bool
        Add the incident plane wave when True.
    gradient : bool
        Also return the Cartesian gradient, shape (P, dim).

    Returns
    -------
    values : ndarray (P,) complex
    grads : ndarray (P, dim) complex, only when gradient=True

    Raises
    ------
    DomainError
        A point lies inside the obstacle (inside the modal radius for modal
        kinds, inside the curve for layer2d).

    Warns
    -----
    AccuracyWarning
        layer2d evaluation closer to the boundary than twice the largest
        node spacing; plain quadrature loses accuracy there.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != rep.dim:
        raise DomainError(f"points of dim {pts.shape[1]} for a {rep.dim}D field")

    if rep.kind == "modal2d":
        vals, grads = _eval_modal2d(rep, pts, gradient)
    elif rep.kind == "modal3d":
        vals, grads = _eval_modal3d(rep, pts, gradient)
    elif rep.kind == "layer2d":
        vals, grads = _eval_layer2d(rep, pts, gradient)
    else:
        raise DomainError(f"unknown representation kind {rep.kind!r}")

    if total:
        wave = IncidentWave(rep.k, rep.omega)
        vals = vals + wave.value(pts)
        if gradient:
            grads = grads + wave.gradient(pts)
    return (vals, grads) if gradient else (vals,)


def _signed_orders(n_max: int) -> np.ndarray:
    return np.arange(-n_max, n_max + 1)


def _eval_modal2d(rep, pts, gradient):
    r = np.linalg.norm(pts, axis=1)
    a = rep.boundary_radius
    if np.any(r < a * (1.0 - 1e-12)):
        raise DomainError("evaluation point inside the modal boundary circle")
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    psi = theta - np.arctan2(rep.omega[1], rep.omega[0])
    n_max = rep.max_order()
    vals = np.zeros(pts.shape[0], dtype=complex)
    dr = np.zeros_like(vals)
    dth = np.zeros_like(vals)
    kr = rep.k * r
    for n in _signed_orders(n_max):
        c = rep.coefficients[n + n_max]
        if c == 0.0:
            continue
        sgn = (-1.0) ** n if n < 0 else 1.0
        h = sgn * eval_wave_function("cyl_H1", abs(n), kr)
        e = np.exp(1j * n * psi)
        vals += c * h * e
        if gradient:
            hp = sgn * eval_wave_function("cyl_H1", abs(n), kr, derivative=True)
            dr += c * rep.k * hp * e
            dth += c * h * (1j * n) * e
    grads = None
    if gradient:
        rhat = pts / r[:, None]
        that = np.column_stack([-rhat[:, 1], rhat[:, 0]])
        grads = dr[:, None] * rhat + (dth / r)[:, None] * that
    return vals, grads


def _eval_modal3d(rep, pts, gradient):
    r = np.linalg.norm(pts, axis=1)
    a = rep.boundary_radius
    if np.any(r < a * (1.0 - 1e-12)):
        raise DomainError("evaluation point inside the modal boundary sphere")
    xhat = pts / r[:, None]
    mu = np.clip(xhat @ rep.omega, -1.0, 1.0)
    kr = rep.k * r
    vals = np.zeros(pts.shape[0], dtype=complex)
    dr = np.zeros_like(vals)
    dmu_acc = np.zeros_like(vals)
    for ell in range(rep.coefficients.shape[0]):
        c = rep.coefficients[ell]
        if c == 0.0:
            continue
        h = eval_wave_function("sph_h1", ell, kr)
        p = eval_wave_function("legendre_P", ell, mu)
        vals += c * h * p
        if gradient:
            hp = eval_wave_function("sph_h1", ell, kr, derivative=True)
            pp = eval_wave_function("legendre_P", ell, mu, derivative=True)
            dr += c * rep.k * hp * p
            dmu_acc += c * h * pp
    grads = None
    if gradient:
        # grad[P_l(cos gamma)] = P_l'(mu) (omega - mu xhat) / r
        grads = dr[:, None] * xhat + (dmu_acc / r)[:, None] * (
            rep.omega[None, :] - mu[:, None] * xhat
        )
    return vals, grads


def _eval_layer2d(rep, pts, gradient):
    geom = rep.geometry
    k, eta = rep.k, rep.eta
    nodes = geom.nodes  # (N, 2)
    nu_out = geom.outward_normals
    w = geom.weights

    _reject_interior_points(geom, pts)
    gaps = np.linalg.norm(np.diff(np.vstack([nodes, nodes[:1]]), axis=0), axis=1)
    dmin = np.min(
        np.linalg.norm(pts[:, None, :] - nodes[None, :, :], axis=2), axis=1
    )
    if np.any(dmin < 2.0 * np.max(gaps)):
        warnings.warn(
            "layer-potential evaluation within two node spacings of the "
            "boundary; plain quadrature is inaccurate there",
            AccuracyWarning,
            stacklevel=3,
        )

    diff = pts[:, None, :] - nodes[None, :, :]  # (P, N, 2)
    rho = np.linalg.norm(diff, axis=2)
    h0 = eval_wave_function("cyl_H1", 0, (k * rho).ravel()).reshape(rho.shape)
    h1 = eval_wave_function("cyl_H1", 1, (k * rho).ravel()).reshape(rho.shape)
    nu_dot = np.einsum("pnd,nd->pn", diff, nu_out)
    # kernels: double layer d Phi / d nu(y) and single layer Phi
    kd = (1j * k / 4.0) * h1 * nu_dot / rho
    ks = (1j / 4.0) * h0
    kernel = kd - 1j * eta * ks
    phi_w = rep.density * w
    vals = kernel @ phi_w

    grads = None
    if gradient:
        e = diff / rho[..., None]  # (P, N, 2)
        # grad_z Phi = -(ik/4) H1(k rho) e
        grad_s = -(1j * k / 4.0) * h1[..., None] * e
        # grad_z [dPhi/dnu(y)] with g(rho) = (ik/4) H1(k rho)/rho:
        # g'(rho) (nu.(z-y)) e + g(rho) nu
        gfac = (1j * k / 4.0) * h1 / rho
        gprime = (1j * k / 4.0) * (k * rho * h0 - 2.0 * h1) / rho**2
        grad_d = (gprime * nu_dot)[..., None] * e + gfac[..., None] * nu_out[None, :, :]
        grads = np.einsum("pnd,n->pd", grad_d - 1j * eta * grad_s, phi_w)
    return vals, grads


def _reject_interior_points(geom: BoundaryGeometry, pts: np.ndarray) -> None:
    ang = np.arctan2(
        pts[:, 1][:, None] - geom.nodes[None, :, 1],
        pts[:, 0][:, None] - geom.nodes[None, :, 0],
    )
    dang = np.diff(np.concatenate([ang, ang[:, :1]], axis=1), axis=1)
    dang = (dang + np.pi) % (2.0 * np.pi) - np.pi
    winding = np.abs(np.sum(dang, axis=1)) / (2.0 * np.pi)
    if np.any(winding > 0.5):
        raise DomainError("evaluation point inside the obstacle")


# ---------------------------------------------------------------------------
# energy flux
# ---------------------------------------------------------------------------


def flux_through_radius(
    rep: ExteriorRepresentation,
    radius: Optional[float] = None,
    n_quad: int = 256,
    total: bool = False,
) -> float:
    """Flux Im \\int_{|x|=R} conj(u) du/dr through the origin-centered
    sphere (circle) of the given radius.

    With total=False (the default) u is the scattered field and the flux is
    independent of the radius once the obstacle is enclosed; the default
    radius is twice the circumradius.  With total=True u is the total field
    and the flux equals the boundary absorption int_dD lambda |u|^2 ds, the
    energy identity the solver tests rely on.
    """
    if radius is None:
        base = (
            rep.boundary_radius
            if rep.geometry is None
            else rep.geometry.circumradius
        )
        radius = 2.0 * base
    if rep.dim == 2:
        th = 2.0 * np.pi * np.arange(n_quad) / n_quad
        pts = radius * np.column_stack([np.cos(th), np.sin(th)])
        wq = np.full(n_quad, 2.0 * np.pi * radius / n_quad)
        rhat = pts / radius
    else:
        mu, glw = np.polynomial.legendre.leggauss(n_quad // 4)
        phi = 2.0 * np.pi * np.arange(n_quad) / n_quad
        st = np.sqrt(1.0 - mu**2)
        pts = radius * np.column_stack(
            [
                np.outer(st, np.cos(phi)).ravel(),
                np.outer(st, np.sin(phi)).ravel(),
                np.outer(mu, np.ones(n_quad)).ravel(),
            ]
        )
        wq = (radius**2 * 2.0 * np.pi / n_quad) * np.repeat(glw, n_quad)
        rhat = pts / radius
    vals, grads = evaluate_field(rep, pts, total=total, gradient=True)
    dr = np.einsum("pd,pd->p", grads, rhat)
    return float(np.imag(np.sum(np.conj(vals) * dr * wq)))
