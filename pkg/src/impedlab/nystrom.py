"""Nystrom solver for the exterior impedance problem on 2D curves.

The scattered field is sought as a combined acoustic layer

    u_s = D phi - i eta S phi,      eta = k by default,

with S, D the single and double layer potentials over the boundary curve.
Taking the exterior limits of the impedance condition (inward normal nu, so
du/dnu = -du/dnu_out) gives one second-kind-like equation for the density:

    [T - i eta K' - i lambda K - lambda eta S + i (eta - lambda)/2] phi
        = -(du_inc/dnu_out - i lambda u_inc),

where K, K' are the boundary double-layer operator and its normal-derivative
adjoint and T is the hypersingular operator.  For real eta != 0 and
impedance with positive real part the operator is injective (the interior
Robin energy argument), so the discrete systems stay well conditioned.

Quadrature: all kernels are split as A1(t,tau) ln(4 sin^2((t-tau)/2))
+ A2(t,tau) with smooth periodic A1, A2, and the logarithmic part is
integrated by the trigonometric product quadrature on the uniform grid;
this converges super-algebraically on analytic curves.  T is evaluated
through its tangential form

    T phi = d/ds S0 (dphi/ds) + k^2 nu . S (nu phi),

whose signs are pinned down by the circle-symbol identity
J'_n H'_n + (n/x)^2 J_n H_n = (J_{n-1} H_{n-1} + J_{n+1} H_{n+1}) / 2.
The arclength derivatives use the spectral differentiation matrix.
"""

from __future__ import annotations

import logging
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import special

from .errors import DomainError
from .fields import BoundaryTrace, ExteriorRepresentation, ImpedanceField, IncidentWave
from .geometry import BoundaryGeometry
from .modal import _guarded_solve

__all__ = [
    "solve_nystrom_2d",
    "build_layer_operators",
    "log_quadrature_weights",
    "trig_differentiation_matrix",
]

logger = logging.getLogger(__name__)

_EULER_GAMMA = float(np.euler_gamma)


# ---------------------------------------------------------------------------
# quadrature building blocks
# ---------------------------------------------------------------------------


def log_quadrature_weights(n: int) -> np.ndarray:
    """Weights R(d) of the product quadrature for the periodic log kernel.

    For a uniform grid with n = 2m points and spacing h = pi/m,

      int_0^{2pi} ln(4 sin^2((t - tau)/2)) f(tau) dtau
          ~= sum_j R((t - t_j)) f(t_j),
      R(d) = -(2 pi / m) sum_{p=1}^{m-1} cos(p d)/p - (pi/m^2) cos(m d),

    exact whenever f is a trigonometric polynomial of degree < m.  Returns
    the vector R(h d) for index offsets d = 0..n-1.
    """
    if n % 2:
        raise DomainError(f"log quadrature needs an even node count, got {n}")
    m = n // 2
    d = np.arange(n)
    p = np.arange(1, m)
    args = np.pi * np.outer(d, p) / m  # (n, m-1)
    out = -(2.0 * np.pi / m) * (np.cos(args) @ (1.0 / p))
    out -= (np.pi / m**2) * np.cos(np.pi * d)
    return out


def trig_differentiation_matrix(n: int) -> np.ndarray:
    """Spectral differentiation of a periodic function from its values on a
    uniform n-point grid (n even): D[i,j] = (-1)^(i-j)/2 cot((t_i - t_j)/2).
    """
    if n % 2:
        raise DomainError(f"spectral differentiation needs even n, got {n}")
    idx = np.arange(n)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        mat = 0.5 * (-1.0) ** diff / np.tan(np.pi * diff / n)
    np.fill_diagonal(mat, 0.0)
    return mat


# ---------------------------------------------------------------------------
# kernel assembly
# ---------------------------------------------------------------------------


def build_layer_operators(geom: BoundaryGeometry, k: float) -> Dict[str, np.ndarray]:
    """Dense boundary operator matrices S, K, K', T (and helpers) acting on
    node values of a density.

    All matrices map density values at the nodes to operator values at the
    same nodes; the parameter-space quadrature (including speed factors) is
    folded in.  Keys: "S", "K", "Kp", "T", "S0" (single layer without the
    speed factor, the building block of T).
    """
    if geom.dim != 2 or geom.params is None:
        raise DomainError("layer operators are defined for curve geometries")
    n = geom.n_nodes
    t = geom.params
    x = geom.nodes
    dx = geom.tangent
    ddx = geom.second
    speed = geom.speed
    nu_out = geom.outward_normals

    h = 2.0 * np.pi / n
    rvec = log_quadrature_weights(n)
    idx = np.arange(n)
    rmat = rvec[(idx[:, None] - idx[None, :]) % n]

    diff = x[:, None, :] - x[None, :, :]  # (n, n, 2)
    dist = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(dist, 1.0)  # placeholder, diagonals set explicitly
    kd = k * dist

    j0 = special.j0(kd)
    y0 = special.y0(kd)
    j1 = special.j1(kd)
    y1 = special.y1(kd)
    h0 = j0 + 1j * y0
    h1 = j1 + 1j * y1

    dt = t[:, None] - t[None, :]
    lnterm = np.log(4.0 * np.sin(dt / 2.0) ** 2, where=~np.eye(n, dtype=bool),
                    out=np.zeros((n, n)))

    # curvature-type quantity W = x1'' x2' - x2'' x1'
    w_curv = ddx[:, 0] * dx[:, 1] - ddx[:, 1] * dx[:, 0]
    diag_kk = w_curv / (4.0 * np.pi * speed**2)

    # single layer, kernel (i/4) H0(k r) |x'(tau)|; the placeholder on the
    # dist diagonal must not leak into M1, whose true diagonal is
    # -|x'(t)|/(4 pi) since J0(0) = 1
    m1 = -(1.0 / (4.0 * np.pi)) * j0 * speed[None, :]
    np.fill_diagonal(m1, -speed / (4.0 * np.pi))
    m2 = (1j / 4.0) * h0 * speed[None, :] - m1 * lnterm
    np.fill_diagonal(
        m2,
        speed * (1j / 4.0 - _EULER_GAMMA / (2.0 * np.pi)
                 - np.log(k * speed / 2.0) / (2.0 * np.pi)),
    )
    s_mat = rmat * m1 + h * m2

    # single layer without the speed factor (for the Maue form of T)
    m1_0 = -(1.0 / (4.0 * np.pi)) * j0
    np.fill_diagonal(m1_0, -1.0 / (4.0 * np.pi))
    m2_0 = (1j / 4.0) * h0 - m1_0 * lnterm
    np.fill_diagonal(
        m2_0,
        (1j / 4.0 - _EULER_GAMMA / (2.0 * np.pi)
         - np.log(k * speed / 2.0) / (2.0 * np.pi)),
    )
    s0_mat = rmat * m1_0 + h * m2_0

    # double layer, kernel (ik/4) H1(k r) q / r with
    # q = (x(t) - x(tau)) . (x2'(tau), -x1'(tau))
    q = diff[:, :, 0] * dx[None, :, 1] - diff[:, :, 1] * dx[None, :, 0]
    k1 = -(k / (4.0 * np.pi)) * j1 * q / dist
    k2 = (1j * k / 4.0) * h1 * q / dist - k1 * lnterm
    np.fill_diagonal(k1, 0.0)
    np.fill_diagonal(k2, diag_kk)
    kk_mat = rmat * k1 + h * k2

    # adjoint-type operator, kernel -(ik/4) H1(k r) p |x'(tau)| / (r |x'(t)|)
    # with p = (x(t) - x(tau)) . (x2'(t), -x1'(t))
    p = diff[:, :, 0] * dx[:, None, 1] - diff[:, :, 1] * dx[:, None, 0]
    ratio = speed[None, :] / speed[:, None]
    kp1 = (k / (4.0 * np.pi)) * j1 * p / dist * ratio
    kp2 = -(1j * k / 4.0) * h1 * p / dist * ratio - kp1 * lnterm
    np.fill_diagonal(kp1, 0.0)
    np.fill_diagonal(kp2, diag_kk)
    kp_mat = rmat * kp1 + h * kp2

    # hypersingular operator via the tangential (Maue) form
    dmat = trig_differentiation_matrix(n)
    nu_dot = nu_out @ nu_out.T
    t_mat = (dmat @ s0_mat @ dmat) / speed[:, None] + k**2 * nu_dot * s_mat

    return {"S": s_mat, "K": kk_mat, "Kp": kp_mat, "T": t_mat, "S0": s0_mat}


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


def solve_nystrom_2d(
    geom: BoundaryGeometry,
    wave: IncidentWave,
    impedance: ImpedanceField,
    eta: Optional[float] = None,
) -> Tuple[BoundaryTrace, ExteriorRepresentation]:
    """Solve the exterior impedance problem on a 2D curve.

    Works on any curve family; on the corner family the graded mesh keeps
    the quadrature convergent, at reduced order.  Returns the boundary
    trace and the layer representation (density + coupling constant).
    """
    if wave.dim != 2:
        raise DomainError("2D solver needs a 2D incident wave")
    k = wave.k
    if eta is None:
        eta = k
    if eta == 0.0:
        raise DomainError("coupling constant eta must be nonzero")

    ops = build_layer_operators(geom, k)
    lam = impedance.values_on(geom, wave.omega)
    n = geom.n_nodes

    a_mat = (
        ops["T"]
        - 1j * eta * ops["Kp"]
        - 1j * lam[:, None] * ops["K"]
        - (lam * eta)[:, None] * ops["S"]
        + np.diag(1j * (eta - lam) / 2.0)
    )
    u_inc = wave.value(geom.nodes)
    dout_inc = 1j * k * (geom.outward_normals @ wave.omega) * u_inc
    rhs = -(dout_inc - 1j * lam * u_inc)

    phi = _guarded_solve(a_mat, rhs, "combined-field system")

    u = u_inc + ops["K"] @ phi + 0.5 * phi - 1j * eta * (ops["S"] @ phi)
    dout = dout_inc + ops["T"] @ phi - 1j * eta * (ops["Kp"] @ phi - 0.5 * phi)
    dnu = -dout

    rep = ExteriorRepresentation(
        kind="layer2d",
        k=k,
        omega=wave.omega.copy(),
        density=phi,
        geometry=geom,
        eta=float(eta),
        meta={"n_nodes": n},
    )
    trace = BoundaryTrace(
        geometry=geom,
        k=k,
        omega=wave.omega.copy(),
        u_values=u,
        dnu_values=dnu,
        lambda_values=lam,
        meta={"solver": "nystrom", "eta": float(eta),
              "bc_residual": float(np.max(np.abs(dnu + 1j * lam * u)))},
    )
    trace.validate()
    return trace, rep
