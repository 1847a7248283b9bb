"""Separated-variables forward solvers on the circle and the sphere.

These are the oracle solvers: on a circle or sphere of radius a the
scattering problem decouples (constant impedance) or couples through a
small dense Galerkin system (impedance varying along the boundary), and the
resulting series is exact up to truncation.  The integral-equation solver
is validated against them.

Conventions. The total field is u = u_inc + u_s with u_inc = exp(ik x.omega).
On the circle,

    u_inc = sum_n i^n J_n(kr) e^{in(theta - theta_omega)},
    u_s   = sum_n c_n H^1_n(kr) e^{in(theta - theta_omega)},

and on the sphere,

    u_inc = sum_l (2l+1) i^l j_l(kr) P_l(cos gamma),
    u_s   = sum_l A_l h^1_l(kr) P_l(cos gamma),

with gamma the angle from the incident direction.  The impedance condition
du/dnu + i lambda u = 0 uses the inward normal, so du/dnu = -du/dr on these
boundaries.
"""

from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import special

from .errors import DomainError, IllConditionedError
from .fields import BoundaryTrace, ExteriorRepresentation, ImpedanceField, IncidentWave
from .geometry import BoundaryGeometry
from .wavefunctions import eval_wave_function

__all__ = ["solve_modal", "default_truncation", "ipow"]

logger = logging.getLogger(__name__)

_RESONANCE_FLOOR = 1e-13


def default_truncation(k: float, radius: float) -> int:
    """Series length ceil(k a) + 20; past ka the coefficients decay
    super-exponentially, and 20 guard modes push the tail below 1e-14."""
    return int(np.ceil(k * radius)) + 20


def ipow(n) -> np.ndarray:
    """i**n for (arrays of) signed integers, computed from the period-4
    table instead of complex powers."""
    table = np.array([1.0 + 0j, 1j, -1.0 + 0j, -1j])
    return table[np.mod(np.asarray(n), 4)]


def solve_modal(
    geom: BoundaryGeometry,
    wave: IncidentWave,
    impedance: ImpedanceField,
    n_modes: Optional[int] = None,
) -> Tuple[BoundaryTrace, ExteriorRepresentation]:
    """Solve the exterior impedance problem by separation of variables.

    Supports circle2d with constant or angle-dependent impedance and
    sphere3d with constant impedance or impedance axisymmetric about the
    incident direction.  Returns the boundary trace (total field and inward
    normal derivative at the nodes) and the modal representation of the
    scattered field.

    Raises IllConditionedError when a modal denominator (or the coupled
    Galerkin matrix) is numerically singular; for impedance with positive
    real part this does not happen, and hitting it signals data outside the
    admissible class.
    """
    if geom.family == "circle2d":
        return _solve_circle(geom, wave, impedance, n_modes)
    if geom.family == "sphere3d":
        return _solve_sphere(geom, wave, impedance, n_modes)
    raise DomainError(f"modal solver supports circle2d and sphere3d, not {geom.family}")


# ---------------------------------------------------------------------------
# circle
# ---------------------------------------------------------------------------


def _circle_tables(k: float, a: float, n_max: int):
    """J, J', H, H' at ka for signed orders -n_max..n_max."""
    orders = np.arange(n_max + 1)
    ka = k * a
    j = np.array([eval_wave_function("cyl_J", n, ka) for n in orders])
    jp = np.array([eval_wave_function("cyl_J", n, ka, derivative=True) for n in orders])
    h = np.array([eval_wave_function("cyl_H1", n, ka) for n in orders])
    hp = np.array([eval_wave_function("cyl_H1", n, ka, derivative=True) for n in orders])

    def signed(tab):
        neg = tab[1:][::-1] * (-1.0) ** np.arange(n_max, 0, -1)
        return np.concatenate([neg, tab])

    return signed(j), signed(jp), signed(h.astype(complex)), signed(hp.astype(complex))


def _solve_circle(geom, wave, impedance, n_modes):
    a = geom.meta["radius"]
    k = wave.k
    n_max = n_modes if n_modes is not None else default_truncation(k, a)
    ns = np.arange(-n_max, n_max + 1)
    j, jp, h, hp = _circle_tables(k, a, n_max)
    theta_w = wave.theta

    lam_nodes = impedance.values_on(geom, wave.omega)
    if impedance.kind == "constant":
        lam = float(impedance.data)
        den = -k * hp + 1j * lam * h
        _check_resonance(den, np.abs(k * hp) + np.abs(lam * h))
        # c_n in the incident frame e^{in(theta - theta_omega)}
        c = -ipow(ns) * (-k * jp + 1j * lam * j) / den
        d = c * np.exp(-1j * ns * theta_w)  # absolute frame e^{in theta}
    else:
        lam_hat = _lambda_fourier(geom, impedance, wave, 2 * n_max)
        b = ipow(ns) * np.exp(-1j * ns * theta_w)  # incident e^{in theta} coeffs
        # row m: -k (b_m J'_m + d_m H'_m) + i sum_n lhat_{m-n} (b_n J_n + d_n H_n) = 0
        lmat = _toeplitz_from_hat(lam_hat, ns)
        mat = np.diag(-k * hp) + 1j * lmat * h[None, :]
        rhs = k * b * jp - 1j * lmat @ (b * j)
        d = _guarded_solve(mat, rhs, "circle Galerkin system")
        c = d * np.exp(1j * ns * theta_w)

    t = geom.params
    phase = np.exp(1j * np.outer(t, ns))  # (N_nodes, 2n_max+1)
    b_abs = ipow(ns) * np.exp(-1j * ns * theta_w)
    u = phase @ (b_abs * j + d * h)
    dnu = -k * (phase @ (b_abs * jp + d * hp))

    rep = ExteriorRepresentation(
        kind="modal2d",
        k=k,
        omega=wave.omega.copy(),
        coefficients=c.astype(complex),
        boundary_radius=a,
        meta={"n_modes": n_max},
    )
    trace = BoundaryTrace(
        geometry=geom,
        k=k,
        omega=wave.omega.copy(),
        u_values=u,
        dnu_values=dnu,
        lambda_values=lam_nodes,
        meta={"solver": "modal", "n_modes": n_max,
              "bc_residual": float(np.max(np.abs(dnu + 1j * lam_nodes * u)))},
    )
    trace.validate()
    return trace, rep


def _lambda_fourier(geom, impedance, wave, band):
    """Fourier coefficients lhat_p, |p| <= band, of lambda(t) on the circle."""
    if impedance.kind == "fourier2d":
        a_cos, b_sin = impedance.data
        a_cos = np.asarray(a_cos, dtype=float)
        b_sin = np.asarray(b_sin, dtype=float)
        lam_hat = np.zeros(2 * band + 1, dtype=complex)
        lam_hat[band] = a_cos[0]
        for m in range(1, a_cos.shape[0]):
            lam_hat[band + m] += 0.5 * a_cos[m]
            lam_hat[band - m] += 0.5 * a_cos[m]
        for m in range(1, b_sin.shape[0]):
            lam_hat[band + m] += -0.5j * b_sin[m]
            lam_hat[band - m] += 0.5j * b_sin[m]
        return lam_hat
    vals = impedance.values_on(geom, wave.omega)
    hat = np.fft.fft(vals) / vals.shape[0]
    lam_hat = np.zeros(2 * band + 1, dtype=complex)
    half = vals.shape[0] // 2
    for p in range(-min(band, half - 1), min(band, half - 1) + 1):
        lam_hat[band + p] = hat[p % vals.shape[0]]
    return lam_hat


def _toeplitz_from_hat(lam_hat, ns):
    band = (lam_hat.shape[0] - 1) // 2
    idx = ns[:, None] - ns[None, :]  # m - n in [-2 n_max, 2 n_max]
    idx = np.clip(idx + band, 0, lam_hat.shape[0] - 1)
    out = lam_hat[idx]
    out[np.abs(ns[:, None] - ns[None, :]) > band] = 0.0
    return out


# ---------------------------------------------------------------------------
# sphere
# ---------------------------------------------------------------------------


def _sphere_tables(k: float, a: float, n_max: int):
    ells = np.arange(n_max + 1)
    ka = k * a
    j = special.spherical_jn(ells, ka)
    jp = special.spherical_jn(ells, ka, derivative=True)
    y = special.spherical_yn(ells, ka)
    yp = special.spherical_yn(ells, ka, derivative=True)
    return j, jp, j + 1j * y, jp + 1j * yp


def _solve_sphere(geom, wave, impedance, n_modes):
    a = geom.meta["radius"]
    k = wave.k
    n_max = n_modes if n_modes is not None else default_truncation(k, a)
    ells = np.arange(n_max + 1)
    j, jp, h, hp = _sphere_tables(k, a, n_max)
    alpha = (2 * ells + 1) * ipow(ells)

    if impedance.kind == "constant":
        lam = float(impedance.data)
        den = -k * hp + 1j * lam * h
        _check_resonance(den, np.abs(k * hp) + np.abs(lam * h))
        coeff = -alpha * (-k * jp + 1j * lam * j) / den
    elif impedance.kind == "axisym3d":
        coeff = _sphere_axisym(impedance, k, n_max, j, jp, h, hp, alpha)
    else:
        raise DomainError(
            "sphere modal solver needs constant or axisym3d impedance, "
            f"got {impedance.kind!r}"
        )

    mu = np.clip((geom.nodes @ wave.omega) / a, -1.0, 1.0)
    pl = np.column_stack(
        [eval_wave_function("legendre_P", int(l), mu) for l in ells]
    )  # (N_nodes, n_max+1)
    u = pl @ (alpha * j + coeff * h)
    dnu = -k * (pl @ (alpha * jp + coeff * hp))
    lam_nodes = impedance.values_on(geom, wave.omega)

    rep = ExteriorRepresentation(
        kind="modal3d",
        k=k,
        omega=wave.omega.copy(),
        coefficients=coeff.astype(complex),
        boundary_radius=a,
        meta={"n_modes": n_max},
    )
    trace = BoundaryTrace(
        geometry=geom,
        k=k,
        omega=wave.omega.copy(),
        u_values=u,
        dnu_values=dnu,
        lambda_values=lam_nodes,
        meta={"solver": "modal", "n_modes": n_max,
              "bc_residual": float(np.max(np.abs(dnu + 1j * lam_nodes * u)))},
    )
    trace.validate()
    return trace, rep


def _sphere_axisym(impedance, k, n_max, j, jp, h, hp, alpha):
    """Galerkin system for lambda = lambda(cos gamma).

    Testing the impedance condition against P_m in L^2(d mu) gives

      -k (alpha_m j'_m + A_m h'_m) 2/(2m+1)
          + i sum_l Lam_{ml} (alpha_l j_l + A_l h_l) = 0,

    with Lam_{ml} = int_{-1}^{1} lambda(mu) P_m P_l d mu by Gauss-Legendre.
    """
    c = np.asarray(impedance.data, dtype=float)
    n_gl = 2 * n_max + c.shape[0] + 8
    mu, glw = special.roots_legendre(n_gl)
    lam_mu = impedance.values_at_mu(mu)
    pl = np.column_stack(
        [eval_wave_function("legendre_P", int(l), mu) for l in range(n_max + 1)]
    )  # (n_gl, n_max+1)
    lam_big = (pl * (lam_mu * glw)[:, None]).T @ pl  # Lam_{ml}

    norm = 2.0 / (2.0 * np.arange(n_max + 1) + 1.0)
    mat = np.diag(-k * hp * norm) + 1j * lam_big * h[None, :]
    rhs = k * alpha * jp * norm - 1j * lam_big @ (alpha * j)
    return _guarded_solve(mat, rhs, "sphere Galerkin system")


def _check_resonance(den: np.ndarray, scale: np.ndarray) -> None:
    """Mode-by-mode cancellation check: the denominator -k f' + i lambda f
    may only be small relative to its own two terms, never in absolute
    size, since f' grows with the order."""
    if np.any(np.abs(den) < _RESONANCE_FLOOR * scale):
        raise IllConditionedError(
            "modal impedance denominator vanishes (resonant coefficient)"
        )


def _guarded_solve(mat, rhs, label):
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(f"{label} is singular: {exc}") from exc
    resid = np.linalg.norm(mat @ sol - rhs)
    scale = np.linalg.norm(rhs) + np.linalg.norm(sol)
    if not np.all(np.isfinite(sol)) or resid > 1e-8 * max(scale, 1.0):
        raise IllConditionedError(
            f"{label} lost too many digits (residual {resid:.2e})"
        )
    return sol
