"""Radial wave functions and Legendre polynomials with a uniform calling
convention.

All solvers and probes go through :func:`eval_wave_function` instead of
touching scipy.special directly, so domain checks, the finite-order cap and
the derivative convention live in exactly one place.  Identity residuals
(Wronskian, three-term recurrence) are exposed as functions because the
acceptance gate and the property tests both consume them.
"""

from __future__ import annotations

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "KINDS",
    "MAX_ORDER",
    "eval_wave_function",
    "wronskian_residual",
    "recurrence_residual",
]

#: Supported function families.  cyl_* take cylindrical (integer) orders,
#: sph_* take spherical orders, legendre_P evaluates P_n on [-1, 1].
KINDS = ("cyl_J", "cyl_Y", "cyl_H1", "sph_j", "sph_y", "sph_h1", "legendre_P")

#: Orders above this are refused rather than silently returned with unknown
#: accuracy.
MAX_ORDER = 200

# Families that stay finite as the argument tends to zero from above.
_FINITE_AT_ZERO = ("cyl_J", "sph_j")


def _check_order(order: int) -> int:
    if not float(order).is_integer():
        raise DomainError(f"order must be an integer, got {order!r}")
    order = int(order)
    if order < 0 or order > MAX_ORDER:
        raise DomainError(f"order {order} outside supported range 0..{MAX_ORDER}")
    return order


def eval_wave_function(kind: str, order: int, argument, derivative: bool = False):
    """Evaluate one radial wave function (or Legendre polynomial).

    Parameters
    ----------
    kind : str
        One of ``KINDS``.
    order : int
        Nonnegative order, at most ``MAX_ORDER``.
    argument : float or ndarray
        Radial argument; must be positive for the singular kinds (cyl_Y,
        cyl_H1, sph_y, sph_h1), nonnegative for cyl_J and sph_j, and inside
        [-1, 1] for legendre_P.
    derivative : bool
        If True, return the derivative with respect to the argument.

    Returns
    -------
    float, complex or ndarray matching the argument's shape.

    Raises
    ------
    DomainError
        Out-of-range order, argument outside the kind's domain, or a value
        that overflows the float64 range (possible for cyl_Y / cyl_H1 at
        large order and small argument).
    """
    if kind not in KINDS:
        raise DomainError(f"unknown kind {kind!r}; expected one of {KINDS}")
    order = _check_order(order)
    x = np.asarray(argument, dtype=float)

    if kind == "legendre_P":
        if np.any(x < -1.0) or np.any(x > 1.0):
            raise DomainError("legendre_P argument must lie in [-1, 1]")
        out = _legendre(order, x, derivative)
    else:
        if kind in _FINITE_AT_ZERO:
            if np.any(x < 0.0):
                raise DomainError(f"{kind} argument must be nonnegative")
        elif np.any(x <= 0.0):
            raise DomainError(f"{kind} argument must be positive")
        out = _radial(kind, order, x, derivative)

    if not np.all(np.isfinite(np.atleast_1d(out)).ravel()):
        raise DomainError(
            f"{kind} of order {order} overflows float64 on the given argument"
        )
    if np.isscalar(argument) or np.ndim(argument) == 0:
        return out[()] if isinstance(out, np.ndarray) else out
    return out


def _radial(kind: str, order: int, x: np.ndarray, derivative: bool):
    if kind == "cyl_J":
        return special.jvp(order, x, 1) if derivative else special.jv(order, x)
    if kind == "cyl_Y":
        return special.yvp(order, x, 1) if derivative else special.yv(order, x)
    if kind == "cyl_H1":
        return special.h1vp(order, x, 1) if derivative else special.hankel1(order, x)
    if kind == "sph_j":
        return special.spherical_jn(order, x, derivative)
    if kind == "sph_y":
        return special.spherical_yn(order, x, derivative)
    # sph_h1 = j + i y, same derivative convention as the pieces
    return special.spherical_jn(order, x, derivative) + 1j * special.spherical_yn(
        order, x, derivative
    )


def _legendre(order: int, x: np.ndarray, derivative: bool):
    if not derivative:
        return special.eval_legendre(order, x)
    if order == 0:
        return np.zeros_like(x)
    # P_n'(x) = n (x P_n - P_{n-1}) / (x^2 - 1), with the endpoint limit
    # P_n'(+-1) = (+-1)^(n-1) n (n+1) / 2.
    out = np.empty_like(x)
    interior = np.abs(x) < 1.0
    xi = x[interior]
    pn = special.eval_legendre(order, xi)
    pm = special.eval_legendre(order - 1, xi)
    out[interior] = order * (xi * pn - pm) / (xi * xi - 1.0)
    edge = ~interior
    if np.any(edge):
        sgn = np.sign(x[edge]) ** (order - 1)
        out[edge] = sgn * order * (order + 1) / 2.0
    return out


def wronskian_residual(order: int, argument, spherical: bool = False):
    """Absolute defect of the cross-product identity between the two
    standing-wave solutions.

    Cylindrical: J_n(x) Y_n'(x) - J_n'(x) Y_n(x) = 2 / (pi x).
    Spherical:   j_n(x) y_n'(x) - j_n'(x) y_n(x) = 1 / x^2.
    """
    x = np.asarray(argument, dtype=float)
    if spherical:
        j = eval_wave_function("sph_j", order, x)
        jp = eval_wave_function("sph_j", order, x, derivative=True)
        y = eval_wave_function("sph_y", order, x)
        yp = eval_wave_function("sph_y", order, x, derivative=True)
        return np.abs(j * yp - jp * y - 1.0 / (x * x))
    j = eval_wave_function("cyl_J", order, x)
    jp = eval_wave_function("cyl_J", order, x, derivative=True)
    y = eval_wave_function("cyl_Y", order, x)
    yp = eval_wave_function("cyl_Y", order, x, derivative=True)
    return np.abs(j * yp - jp * y - 2.0 / (np.pi * x))


def recurrence_residual(kind: str, order: int, argument):
    """Relative defect of the three-term recurrence: cylindrical kinds
    satisfy f_{n-1} + f_{n+1} = (2n/x) f_n, spherical ones
    f_{n-1} + f_{n+1} = ((2n+1)/x) f_n.

    The residual is scaled by the largest of the three terms so that it is
    meaningful both deep in the decaying regime (tiny J at large order) and
    in the growing one (huge Y at small argument).  Requires order >= 1.
    """
    if order < 1:
        raise DomainError("recurrence needs order >= 1")
    if kind == "legendre_P":
        raise DomainError("legendre_P has no 1/x three-term recurrence")
    coeff = 2.0 * order + 1.0 if kind.startswith("sph") else 2.0 * order
    x = np.asarray(argument, dtype=float)
    fm = eval_wave_function(kind, order - 1, x)
    f0 = eval_wave_function(kind, order, x)
    fp = eval_wave_function(kind, order + 1, x)
    mid = (coeff / x) * f0
    scale = np.maximum(np.maximum(np.abs(fm), np.abs(fp)), np.abs(mid))
    return np.abs(fm + fp - mid) / np.where(scale > 0.0, scale, 1.0)
