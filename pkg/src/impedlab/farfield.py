"""Far-field patterns, their computation, and continuation back to near
fields.

Normalization. In 3D the scattered field behaves like

    u_s(x) = e^{ikr}/r ( u_inf(xhat) + O(1/r) ),     r = |x|,

and in 2D the same statement holds with e^{ikr}/sqrt(r), i.e. u_inf(xhat)
= lim sqrt(r) e^{-ikr} u_s(r xhat).  Per mode the map from scattered-field
coefficients to far-field coefficients is diagonal:

    2D:  f_n = sqrt(2/(pi k)) e^{-i pi/4} (-i)^n c_n,
    3D:  g_l = (-i)^(l+1) A_l / k.

Continuing a pattern back to a near field inverts these diagonals and then
re-multiplies by H_n(kR) (resp. h_l(kR)), which AMPLIFIES mode n by roughly
(n/(ekR))^n; the truncation rule keeps only modes whose amplification stays
below max(1, eps^(-1/2)) for the given data accuracy eps.  This is where
the logarithmic character of the inverse problem enters the code.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import special

from .errors import DomainError, NoDataError, TruncationCapWarning
from .fields import ExteriorRepresentation, evaluate_field
from .modal import ipow
from .wavefunctions import eval_wave_function

__all__ = [
    "FarFieldPattern",
    "compute_far_field",
    "far_to_near",
    "asymptotic_defect",
    "alpha_of",
    "perturb_pattern",
    "pattern_gap",
]


@dataclass
class FarFieldPattern:
    """Sampled far-field pattern with an L^2(S^{d-1}) quadrature.

    coefficients holds the modal far-field coefficients when the pattern
    came from (or was fitted to) a separated-variables representation:
    f_n (n = -N..N) in 2D, g_l in the Legendre basis P_l(cos gamma) in 3D
    (gamma measured from omega; 3D patterns here are axisymmetric).
    """

    dim: int
    k: float
    omega: np.ndarray
    directions: np.ndarray
    samples: np.ndarray
    weights: np.ndarray
    coefficients: Optional[np.ndarray] = None
    meta: Dict = field(default_factory=dict)

    @property
    def n_dir(self) -> int:
        return self.directions.shape[0]

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(self.samples) ** 2)))

    def validate(self) -> None:
        if self.directions.shape != (self.samples.shape[0], self.dim):
            raise DomainError("directions and samples disagree in shape")
        nrm = np.linalg.norm(self.directions, axis=1)
        if np.max(np.abs(nrm - 1.0)) > 1e-10:
            raise DomainError("far-field directions must be unit vectors")


def _uniform_circle_directions(n_dir: int):
    th = 2.0 * np.pi * np.arange(n_dir) / n_dir
    dirs = np.column_stack([np.cos(th), np.sin(th)])
    return dirs, np.full(n_dir, 2.0 * np.pi / n_dir)


def _gauss_sphere_directions(n_polar: int):
    mu, glw = special.roots_legendre(n_polar)
    n_phi = 2 * n_polar
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - mu**2)
    dirs = np.column_stack(
        [
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.outer(mu, np.ones(n_phi)).ravel(),
        ]
    )
    wq = (2.0 * np.pi / n_phi) * np.repeat(glw, n_phi)
    return dirs, wq


def compute_far_field(
    rep: ExteriorRepresentation,
    n_dir: int = 64,
    directions: Optional[np.ndarray] = None,
) -> FarFieldPattern:
    """Far-field pattern of a scattered-field representation.

    With directions=None a standard grid is used (uniform angles in 2D,
    Gauss-Legendre polar x uniform azimuth with n_dir polar points in 3D)
    and L^2 weights are attached; explicit directions get zero weights and
    serve pointwise evaluation (reciprocity checks and the like).
    """
    custom = directions is not None
    if rep.dim == 2:
        dirs, wq = (directions, np.zeros(len(directions))) if custom else _uniform_circle_directions(n_dir)
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        if rep.kind == "modal2d":
            samples, coeff = _farfield_modal2d(rep, dirs)
        else:
            samples, coeff = _farfield_layer2d(rep, dirs), None
    else:
        dirs, wq = (directions, np.zeros(len(directions))) if custom else _gauss_sphere_directions(n_dir)
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        samples, coeff = _farfield_modal3d(rep, dirs)
    if rep.kind == "layer2d":
        hint = float(np.max(np.linalg.norm(rep.geometry.nodes, axis=1)))
    else:
        hint = float(rep.boundary_radius)
    pattern = FarFieldPattern(
        dim=rep.dim,
        k=rep.k,
        omega=rep.omega.copy(),
        directions=dirs,
        samples=samples,
        weights=wq,
        coefficients=coeff,
        meta={"source": rep.kind, "radius_hint": hint},
    )
    pattern.validate()
    return pattern


def _farfield_modal2d(rep, dirs):
    n_max = rep.max_order()
    ns = np.arange(-n_max, n_max + 1)
    # f_n = sqrt(2/(pi k)) e^{-i pi/4} (-i)^n c_n
    pref = np.sqrt(2.0 / (np.pi * rep.k)) * np.exp(-1j * np.pi / 4.0)
    f = pref * ipow(-ns) * rep.coefficients
    th = np.arctan2(dirs[:, 1], dirs[:, 0])
    psi = th - np.arctan2(rep.omega[1], rep.omega[0])
    samples = np.exp(1j * np.outer(psi, ns)) @ f
    return samples, f


def _farfield_modal3d(rep, dirs):
    if rep.kind != "modal3d":
        raise DomainError("3D far fields require a modal3d representation")
    ells = np.arange(rep.coefficients.shape[0])
    # g_l = (-i)^(l+1) A_l / k
    g = ipow(-(ells + 1)) * rep.coefficients / rep.k
    mu = np.clip(dirs @ rep.omega, -1.0, 1.0)
    pl = np.column_stack(
        [eval_wave_function("legendre_P", int(l), mu) for l in ells]
    )
    return pl @ g, g


def _farfield_layer2d(rep, dirs):
    geom = rep.geometry
    k, eta = rep.k, rep.eta
    # u_inf = (1/4) sqrt(2/(pi k)) e^{-i pi/4}
    #         int [k (nu_out(y) . xhat) + eta] e^{-ik xhat.y} phi(y) ds(y)
    pref = 0.25 * np.sqrt(2.0 / (np.pi * k)) * np.exp(-1j * np.pi / 4.0)
    phase = np.exp(-1j * k * (dirs @ geom.nodes.T))  # (n_dir, N)
    angular = k * (dirs @ geom.outward_normals.T) + eta
    return pref * ((phase * angular) @ (rep.density * geom.weights))


# ---------------------------------------------------------------------------
# near-field continuation
# ---------------------------------------------------------------------------


def mode_amplification(dim: int, order: int, k: float, radius: float) -> float:
    """Growth factor picked up by mode n when a far-field coefficient is
    turned back into the scattered field on |x| = R."""
    kr = k * radius
    if dim == 2:
        return float(
            np.abs(eval_wave_function("cyl_H1", order, kr))
            / np.sqrt(2.0 / (np.pi * kr))
        )
    return float(kr * np.abs(eval_wave_function("sph_h1", order, kr)))


def far_to_near(
    pattern: FarFieldPattern,
    eps: float,
    radius: Optional[float] = None,
) -> ExteriorRepresentation:
    """Continue a far-field pattern to a modal scattered field outside
    |x| = radius, truncating at the noise-dictated order.

    Modes are kept while their amplification factor stays at or below
    max(1, eps^{-1/2}); with eps = 0 every available mode is kept and a
    TruncationCapWarning is emitted when the top coefficients have not
    decayed (the continuation is then limited by the representation cap,
    not by data accuracy).
    """
    if eps < 0.0:
        raise DomainError(f"noise level must be nonnegative, got {eps}")
    if radius is None:
        radius = pattern.meta.get("radius_hint", 2.0)
    coeff = (
        pattern.coefficients
        if pattern.coefficients is not None
        else _fit_coefficients(pattern)
    )
    cap = np.inf if eps == 0.0 else max(1.0, eps ** (-0.5))

    if pattern.dim == 2:
        n_avail = (coeff.shape[0] - 1) // 2
        n_keep = 0
        for n in range(n_avail + 1):
            if mode_amplification(2, n, pattern.k, radius) > cap:
                break
            n_keep = n
        ns = np.arange(-n_keep, n_keep + 1)
        pref = np.sqrt(2.0 / (np.pi * pattern.k)) * np.exp(-1j * np.pi / 4.0)
        c = coeff[n_avail + ns] / (pref * ipow(-ns))
        _warn_if_capped(eps, coeff, (coeff[0], coeff[-1]), n_avail, n_keep)
        return ExteriorRepresentation(
            kind="modal2d",
            k=pattern.k,
            omega=pattern.omega.copy(),
            coefficients=c,
            boundary_radius=radius,
            meta={"from_far_field": True, "eps": eps, "n_modes": n_keep},
        )

    n_avail = coeff.shape[0] - 1
    n_keep = 0
    for ell in range(n_avail + 1):
        if mode_amplification(3, ell, pattern.k, radius) > cap:
            break
        n_keep = ell
    ells = np.arange(n_keep + 1)
    a = coeff[ells] * pattern.k * ipow(ells + 1)
    _warn_if_capped(eps, coeff, (coeff[-1],), n_avail, n_keep)
    return ExteriorRepresentation(
        kind="modal3d",
        k=pattern.k,
        omega=pattern.omega.copy(),
        coefficients=a,
        boundary_radius=radius,
        meta={"from_far_field": True, "eps": eps, "n_modes": n_keep},
    )


def _warn_if_capped(eps, coeff, tail, n_avail, n_keep):
    if eps == 0.0 and n_keep == n_avail:
        top = max(abs(t) for t in tail)
        if top > 1e-12 * max(np.max(np.abs(coeff)), 1e-300):
            warnings.warn(
                "far-field series truncated at the representation cap before "
                "its tail decayed; continuation error is not noise-limited",
                TruncationCapWarning,
                stacklevel=3,
            )


def _fit_coefficients(pattern: FarFieldPattern) -> np.ndarray:
    """Modal far-field coefficients from grid samples (uniform FFT in 2D,
    Legendre projection of the azimuth average in 3D)."""
    if pattern.n_dir == 0:
        raise NoDataError("pattern carries no samples")
    if pattern.dim == 2:
        th = np.arctan2(pattern.directions[:, 1], pattern.directions[:, 0])
        th_w = np.arctan2(pattern.omega[1], pattern.omega[0])
        psi = np.mod(th - th_w, 2.0 * np.pi)
        order = np.argsort(psi)
        psi_s = psi[order]
        n = psi_s.shape[0]
        uniform = psi_s[0] + 2.0 * np.pi * np.arange(n) / n
        if np.max(np.abs(psi_s - uniform)) > 1e-9:
            raise DomainError(
                "coefficient extraction needs a uniform direction grid"
            )
        hat = np.fft.fft(pattern.samples[order]) / n
        n_max = n // 2 - 1
        ms = np.arange(-n_max, n_max + 1)
        # samples sit on an offset grid psi_0 + 2 pi j / n; undo the phase
        return hat[np.mod(ms, n)] * np.exp(-1j * ms * psi_s[0])
    # 3D: project onto P_l(mu), mu = xhat . omega, using the attached weights
    mu = np.clip(pattern.directions @ pattern.omega, -1.0, 1.0)
    total_w = np.sum(pattern.weights)
    if total_w <= 0.0:
        raise NoDataError("3D coefficient extraction needs quadrature weights")
    n_max = int(np.sqrt(pattern.n_dir / 2)) - 1
    g = np.zeros(n_max + 1, dtype=complex)
    for ell in range(n_max + 1):
        pl = eval_wave_function("legendre_P", ell, mu)
        g[ell] = (2 * ell + 1) / (4.0 * np.pi) * np.sum(
            pattern.weights * pattern.samples * pl
        )
    return g


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def asymptotic_defect(
    rep: ExteriorRepresentation, pattern: FarFieldPattern, radius: float
) -> float:
    """Largest deviation over the pattern directions between the rescaled
    scattered field at |x| = radius and the far-field pattern.

    2D: | sqrt(R) e^{-ikR} u_s(R xhat) - u_inf(xhat) |; 3D replaces sqrt(R)
    by R.  Decays like 1/R, which the acceptance suite checks by halving.
    """
    pts = radius * pattern.directions
    (vals,) = evaluate_field(rep, pts, total=False)
    scale = np.sqrt(radius) if rep.dim == 2 else radius
    rescaled = scale * np.exp(-1j * rep.k * radius) * vals
    return float(np.max(np.abs(rescaled - pattern.samples)))


def alpha_of(t) -> np.ndarray:
    """Stability exponent alpha(t) = 1 / (1 + log(log(1/t) + e)) on (0, 1].

    Increasing in t, with alpha(1) = 1/2; tends to 0 as t -> 0+, which is
    how every power-type estimate here degrades into a logarithmic one.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr > 1.0):
        raise DomainError("alpha(t) is defined for t in (0, 1]")
    out = 1.0 / (1.0 + np.log(np.log(1.0 / arr) + np.e))
    return out if out.ndim else out[()]


def perturb_pattern(pattern: FarFieldPattern, eps: float, rng: np.random.Generator):
    """Additive complex Gaussian noise rescaled to an exact weighted-L^2
    size eps; returns (noisy pattern, attained gap)."""
    if eps < 0.0:
        raise DomainError(f"noise level must be nonnegative, got {eps}")
    if eps == 0.0:
        return pattern, 0.0
    g = rng.standard_normal(pattern.n_dir) + 1j * rng.standard_normal(pattern.n_dir)
    size = np.sqrt(np.sum(pattern.weights * np.abs(g) ** 2))
    if size == 0.0:
        raise NoDataError("noise rescaling needs nonzero quadrature weights")
    noise = (eps / size) * g
    noisy = FarFieldPattern(
        dim=pattern.dim,
        k=pattern.k,
        omega=pattern.omega.copy(),
        directions=pattern.directions.copy(),
        samples=pattern.samples + noise,
        weights=pattern.weights.copy(),
        coefficients=None,
        meta=dict(pattern.meta, noise_eps=eps),
    )
    return noisy, pattern_gap(pattern, noisy)


def pattern_gap(a: FarFieldPattern, b: FarFieldPattern) -> float:
    """Weighted L^2 distance between two patterns on the same directions."""
    if a.n_dir != b.n_dir or np.max(np.abs(a.directions - b.directions)) > 1e-12:
        raise DomainError("patterns sampled on different direction grids")
    return float(np.sqrt(np.sum(a.weights * np.abs(a.samples - b.samples) ** 2)))
