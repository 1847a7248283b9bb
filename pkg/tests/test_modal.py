"""Separated-variables solver tests.

The strongest checks here are self-contained physics identities rather than
regression numbers: the boundary condition is re-evaluated after the fact,
the plane-wave expansions are summed against the exponential, and the
radiated energy of the total field is balanced against the boundary
absorption integral int lambda |u|^2 ds.
"""

import numpy as np
import pytest

from impedlab import (
    ImpedanceField,
    IncidentWave,
    build_geometry,
    evaluate_field,
    flux_through_radius,
    solve_modal,
)
from impedlab.modal import default_truncation, ipow
from impedlab.wavefunctions import eval_wave_function


def test_ipow_table():
    assert np.allclose(ipow([-3, -2, -1, 0, 1, 2, 3]), [1j, -1, -1j, 1, 1j, -1, -1j])


def test_jacobi_anger_2d_partial_sums():
    # e^{i z cos phi} = sum_n i^n J_n(z) e^{in phi}
    z, phi = 3.7, 1.1
    total = 0.0 + 0j
    for n in range(-40, 41):
        jn = (-1.0) ** n * eval_wave_function("cyl_J", -n, z) if n < 0 else eval_wave_function("cyl_J", n, z)
        total += ipow([n])[0] * jn * np.exp(1j * n * phi)
    assert total == pytest.approx(np.exp(1j * z * np.cos(phi)), abs=1e-13)


def test_plane_wave_expansion_3d():
    # e^{i z mu} = sum_l (2l+1) i^l j_l(z) P_l(mu)
    z, mu = 2.9, 0.37
    total = 0.0 + 0j
    for ell in range(0, 40):
        total += (
            (2 * ell + 1)
            * ipow([ell])[0]
            * eval_wave_function("sph_j", ell, z)
            * eval_wave_function("legendre_P", ell, mu)
        )
    assert total == pytest.approx(np.exp(1j * z * mu), abs=1e-13)


@pytest.mark.parametrize("k", [1.0, 2.0, 5.0])
@pytest.mark.parametrize("lam", [0.5, 1.0, 5.0])
def test_circle_constant_impedance_residual(k, lam):
    geom = build_geometry("circle2d", 128)
    wave = IncidentWave(k, np.array([1.0, 0.0]))
    trace, rep = solve_modal(geom, wave, ImpedanceField("constant", lam))
    assert np.max(trace.impedance_residual()) < 1e-12
    assert rep.max_order() == default_truncation(k, 1.0)


def test_circle_trace_matches_field_evaluation():
    geom = build_geometry("circle2d", 64)
    wave = IncidentWave(2.0, np.array([0.6, 0.8]))
    trace, rep = solve_modal(geom, wave, ImpedanceField("constant", 1.0))
    (u_b,) = evaluate_field(rep, geom.nodes, total=True)
    assert np.max(np.abs(u_b - trace.u_values)) < 1e-11


def test_circle_normal_derivative_against_radial_difference():
    # independent check of dnu via one-sided differences in r of the series
    geom = build_geometry("circle2d", 64)
    wave = IncidentWave(1.5, np.array([1.0, 0.0]))
    trace, rep = solve_modal(geom, wave, ImpedanceField("constant", 2.0))
    h = 1e-6
    outer = geom.nodes * (1.0 + h)
    inner = geom.nodes
    (uo,) = evaluate_field(rep, outer, total=True)
    (ui,) = evaluate_field(rep, inner, total=True)
    dr = (uo - ui) / h  # forward difference, O(h) accurate
    assert np.max(np.abs(-dr - trace.dnu_values)) < 1e-4


def test_circle_variable_impedance_galerkin():
    geom = build_geometry("circle2d", 128)
    wave = IncidentWave(1.0, np.array([1.0, 0.0]))
    lam = ImpedanceField("fourier2d", (np.array([1.0, 0.5]), np.array([0.0, 0.0])))
    trace, rep = solve_modal(geom, wave, lam)
    # residual of the impedance condition evaluated on the stored nodes
    assert np.max(trace.impedance_residual()) < 1e-10
    # the constant part of the coefficient path agrees with the direct formula
    const_trace, _ = solve_modal(geom, wave, ImpedanceField("constant", 1.0))
    assert np.max(np.abs(trace.u_values - const_trace.u_values)) > 1e-3  # genuinely different


def test_circle_fourier_reduces_to_constant():
    geom = build_geometry("circle2d", 64)
    wave = IncidentWave(2.0, np.array([1.0, 0.0]))
    as_const, rep_c = solve_modal(geom, wave, ImpedanceField("constant", 1.3))
    as_fourier, rep_f = solve_modal(
        geom, wave, ImpedanceField("fourier2d", (np.array([1.3]), np.array([0.0])))
    )
    assert np.max(np.abs(rep_c.coefficients - rep_f.coefficients)) < 1e-12
    assert np.max(np.abs(as_const.u_values - as_fourier.u_values)) < 1e-12


@pytest.mark.parametrize("k", [1.0, 2.0, 5.0])
@pytest.mark.parametrize("lam", [0.5, 1.0, 5.0])
def test_sphere_constant_impedance_residual(k, lam):
    geom = build_geometry("sphere3d", 12)
    wave = IncidentWave(k, np.array([0.0, 0.0, 1.0]))
    trace, rep = solve_modal(geom, wave, ImpedanceField("constant", lam))
    assert np.max(trace.impedance_residual()) < 1e-10


def test_sphere_axisymmetric_impedance():
    geom = build_geometry("sphere3d", 16)
    wave = IncidentWave(1.0, np.array([0.0, 0.0, 1.0]))
    # lambda = 1 + 0.3 cos(gamma) expressed in the Legendre basis
    lam = ImpedanceField("axisym3d", np.array([1.0, 0.3]))
    trace, rep = solve_modal(geom, wave, lam)
    assert np.max(trace.impedance_residual()) < 1e-10
    # truncation stability: N -> N + 10 moves the shared coefficients < 1e-9
    trace2, rep2 = solve_modal(geom, wave, lam, n_modes=rep.max_order() + 10)
    shared = rep.coefficients.shape[0]
    assert np.max(np.abs(rep2.coefficients[:shared] - rep.coefficients)) < 1e-9


def test_energy_balance_total_field():
    # Im int_{|x|=R} conj(u) du/dr = int_dD lambda |u|^2 ds
    geom = build_geometry("circle2d", 128)
    wave = IncidentWave(1.0, np.array([1.0, 0.0]))
    lam = ImpedanceField("fourier2d", (np.array([1.0, 0.4]), np.array([0.0, 0.2])))
    trace, rep = solve_modal(geom, wave, lam)
    absorbed = np.sum(trace.lambda_values * np.abs(trace.u_values) ** 2 * geom.weights)
    radiated = flux_through_radius(rep, radius=3.0, n_quad=512, total=True)
    assert radiated == pytest.approx(absorbed, rel=1e-8)


def test_energy_balance_sphere():
    geom = build_geometry("sphere3d", 16)
    wave = IncidentWave(2.0, np.array([0.0, 0.0, 1.0]))
    trace, rep = solve_modal(geom, wave, ImpedanceField("constant", 0.7))
    absorbed = np.sum(trace.lambda_values * np.abs(trace.u_values) ** 2 * geom.weights)
    radiated = flux_through_radius(rep, radius=3.0, n_quad=256, total=True)
    assert radiated == pytest.approx(absorbed, rel=1e-6)


def test_scattered_flux_radius_independent():
    geom = build_geometry("circle2d", 64)
    wave = IncidentWave(2.0, np.array([1.0, 0.0]))
    _, rep = solve_modal(geom, wave, ImpedanceField("constant", 1.0))
    f3 = flux_through_radius(rep, radius=3.0, n_quad=512)
    f6 = flux_through_radius(rep, radius=6.0, n_quad=512)
    assert f3 == pytest.approx(f6, rel=1e-10)


def test_zero_coefficients_give_incident_only():
    from impedlab import ExteriorRepresentation

    rep = ExteriorRepresentation(
        kind="modal2d",
        k=1.0,
        omega=np.array([1.0, 0.0]),
        coefficients=np.zeros(21, dtype=complex),
        boundary_radius=1.0,
    )
    pts = np.array([[0.0, 2.0], [0.0, -3.5]])  # x . omega = 0
    (scattered,) = evaluate_field(rep, pts, total=False)
    (tot,) = evaluate_field(rep, pts, total=True)
    assert np.max(np.abs(scattered)) == 0.0
    assert np.max(np.abs(tot - 1.0)) < 1e-15


def test_gradient_against_finite_differences():
    geom = build_geometry("circle2d", 64)
    wave = IncidentWave(1.3, np.array([0.0, 1.0]))
    _, rep = solve_modal(geom, wave, ImpedanceField("constant", 1.0))
    pts = np.array([[2.0, 0.3], [-1.1, 2.2]])
    (vals, grads) = evaluate_field(rep, pts, total=True, gradient=True)
    h = 1e-6
    for d in range(2):
        step = np.zeros(2)
        step[d] = h
        (up,) = evaluate_field(rep, pts + step, total=True)
        (um,) = evaluate_field(rep, pts - step, total=True)
        fd = (up - um) / (2 * h)
        assert np.max(np.abs(fd - grads[:, d])) < 1e-6


def test_gradient_3d_against_finite_differences():
    geom = build_geometry("sphere3d", 10)
    wave = IncidentWave(1.0, np.array([0.0, 0.0, 1.0]))
    _, rep = solve_modal(geom, wave, ImpedanceField("constant", 1.0))
    pts = np.array([[1.5, 0.2, 0.4], [-0.3, 1.9, -1.0]])
    (vals, grads) = evaluate_field(rep, pts, total=True, gradient=True)
    h = 1e-6
    for d in range(3):
        step = np.zeros(3)
        step[d] = h
        (up,) = evaluate_field(rep, pts + step, total=True)
        (um,) = evaluate_field(rep, pts - step, total=True)
        fd = (up - um) / (2 * h)
        assert np.max(np.abs(fd - grads[:, d])) < 1e-6


def test_interior_point_rejected():
    from impedlab import DomainError, ExteriorRepresentation

    rep = ExteriorRepresentation(
        kind="modal2d",
        k=1.0,
        omega=np.array([1.0, 0.0]),
        coefficients=np.zeros(3, dtype=complex),
        boundary_radius=1.0,
    )
    with pytest.raises(DomainError):
        evaluate_field(rep, np.array([[0.2, 0.1]]))


def test_impedance_class_validation():
    from impedlab import ValidationError

    geom = build_geometry("circle2d", 64)
    good = ImpedanceField("fourier2d", (np.array([1.0, 0.5]), np.array([0.0])), lambda0=0.4)
    good.check_class(geom)
    # dips to 0.5 - 0.9 < 0: leaves the class when lambda0 = 0.4
    bad = ImpedanceField("fourier2d", (np.array([0.5, 0.9]), np.array([0.0])), lambda0=0.4)
    with pytest.raises(ValidationError):
        bad.check_class(geom)
    steep = ImpedanceField(
        "fourier2d", (np.array([5.0, 4.0]), np.array([0.0])), lambda0=0.4, c01_bound=2.0
    )
    with pytest.raises(ValidationError):
        steep.check_class(geom)
