"""Integral-equation solver tests.

The boundary operators are checked one by one against their closed-form
circle symbols (addition theorem), the quadrature rules against exact
trigonometric integrals, and the assembled solver against the modal oracle
and the energy balance on a non-symmetric curve.
"""

import numpy as np
import pytest

from impedlab import (
    ImpedanceField,
    IncidentWave,
    build_geometry,
    evaluate_field,
    solve_modal,
)
from impedlab.nystrom import (
    build_layer_operators,
    log_quadrature_weights,
    solve_nystrom_2d,
    trig_differentiation_matrix,
)
from impedlab.wavefunctions import eval_wave_function


def test_log_quadrature_integrates_cosines():
    # int_0^{2pi} ln(4 sin^2((t-tau)/2)) cos(p tau) dtau = -(2 pi / p) cos(p t)
    n = 64
    rvec = log_quadrature_weights(n)
    tj = np.pi * np.arange(n) / (n // 2)
    idx = np.arange(n)
    rmat = rvec[(idx[:, None] - idx[None, :]) % n]
    for p in (1, 2, 7):
        approx = rmat @ np.cos(p * tj)
        exact = -(2.0 * np.pi / p) * np.cos(p * tj)
        assert np.max(np.abs(approx - exact)) < 1e-12
    # the mean mode integrates to zero
    assert np.max(np.abs(rmat @ np.ones(n))) < 1e-12


def test_trig_differentiation_exact_on_band():
    n = 32
    d = trig_differentiation_matrix(n)
    t = 2.0 * np.pi * np.arange(n) / n
    for m in (1, 3, 10):
        f = np.exp(1j * m * t)
        assert np.max(np.abs(d @ f - 1j * m * f)) < 1e-11 * m


def _circle_symbols(a, k, n):
    ka = k * a
    j = eval_wave_function("cyl_J", abs(n), ka)
    jp = eval_wave_function("cyl_J", abs(n), ka, derivative=True)
    h = eval_wave_function("cyl_H1", abs(n), ka)
    hp = eval_wave_function("cyl_H1", abs(n), ka, derivative=True)
    if n < 0:
        sgn = (-1.0) ** n
        j, jp, h, hp = sgn * j, sgn * jp, sgn * h, sgn * hp
        # sign factors cancel in every product below
    pref = 1j * np.pi * a / 2.0
    return {
        "S": pref * j * h,
        "K": pref * k * jp * h - 0.5,
        "Kp": pref * k * j * hp + 0.5,
        "T": pref * k**2 * jp * hp,
    }


@pytest.mark.parametrize("mode", [0, 1, 3, -2, 5])
@pytest.mark.parametrize("k", [1.0, 2.3])
def test_circle_operator_symbols(mode, k):
    a = 1.0
    geom = build_geometry("circle2d", 128, radius=a)
    ops = build_layer_operators(geom, k)
    t = geom.params
    phi = np.exp(1j * mode * t)
    sym = _circle_symbols(a, k, mode)
    for name in ("S", "K", "Kp", "T"):
        got = ops[name] @ phi
        want = sym[name] * phi
        assert np.max(np.abs(got - want)) < 1e-10, name


def test_maue_symbol_identity():
    # J'_n H'_n + (n/x)^2 J_n H_n = (J_{n-1} H_{n-1} + J_{n+1} H_{n+1}) / 2
    x = 3.1
    for n in (1, 2, 5):
        j = [eval_wave_function("cyl_J", m, x) for m in (n - 1, n, n + 1)]
        h = [eval_wave_function("cyl_H1", m, x) for m in (n - 1, n, n + 1)]
        jp = eval_wave_function("cyl_J", n, x, derivative=True)
        hp = eval_wave_function("cyl_H1", n, x, derivative=True)
        lhs = jp * hp + (n / x) ** 2 * j[1] * h[1]
        rhs = 0.5 * (j[0] * h[0] + j[2] * h[2])
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_jump_relation_consistency():
    # on the circle K and K' coincide; the assembled matrices must agree on
    # band-limited densities
    geom = build_geometry("circle2d", 96)
    ops = build_layer_operators(geom, 1.7)
    t = geom.params
    for mode in (0, 2, -4):
        phi = np.exp(1j * mode * t)
        assert np.max(np.abs((ops["K"] - ops["Kp"]) @ phi)) < 1e-10


@pytest.mark.parametrize("k", [1.0, 2.0, 5.0])
@pytest.mark.parametrize("lam", [0.5, 1.0, 5.0])
def test_circle_solver_matches_modal(k, lam):
    geom = build_geometry("circle2d", 128)
    wave = IncidentWave(k, np.array([1.0, 0.0]))
    imp = ImpedanceField("constant", lam)
    trace_n, _ = solve_nystrom_2d(geom, wave, imp)
    trace_m, _ = solve_modal(geom, wave, imp)
    scale = np.max(np.abs(trace_m.u_values))
    assert np.max(np.abs(trace_n.u_values - trace_m.u_values)) < 1e-9 * scale
    assert np.max(np.abs(trace_n.dnu_values - trace_m.dnu_values)) < 1e-8 * scale


def test_circle_solver_variable_impedance_matches_galerkin():
    geom = build_geometry("circle2d", 128)
    wave = IncidentWave(1.0, np.array([1.0, 0.0]))
    imp = ImpedanceField("fourier2d", (np.array([1.0, 0.5]), np.array([0.0, 0.3])))
    trace_n, _ = solve_nystrom_2d(geom, wave, imp)
    trace_m, _ = solve_modal(geom, wave, imp)
    scale = np.max(np.abs(trace_m.u_values))
    assert np.max(np.abs(trace_n.u_values - trace_m.u_values)) < 1e-8 * scale


def test_kite_energy_balance():
    # absorbed boundary power equals radiated flux of the total field; the
    # two sides go through entirely different code paths
    from impedlab import flux_through_radius

    geom = build_geometry("kite2d", 192)
    wave = IncidentWave(1.5, np.array([0.8, -0.6]))
    imp = ImpedanceField("fourier2d", (np.array([1.0, 0.4]), np.array([0.0])))
    trace, rep = solve_nystrom_2d(geom, wave, imp)
    absorbed = float(np.sum(trace.lambda_values * np.abs(trace.u_values) ** 2 * geom.weights))
    radiated = flux_through_radius(rep, radius=6.0, n_quad=512, total=True)
    assert radiated == pytest.approx(absorbed, rel=1e-6)


def test_kite_impedance_residual_and_self_convergence():
    wave = IncidentWave(2.0, np.array([1.0, 0.0]))
    imp = ImpedanceField("constant", 1.0)
    traces = {}
    for n in (64, 128, 256):
        geom = build_geometry("kite2d", n)
        trace, _ = solve_nystrom_2d(geom, wave, imp)
        assert np.max(trace.impedance_residual()) < 1e-9
        traces[n] = trace
    # grids nest: node j of the coarse grid is node 2j of the fine grid
    err_coarse = np.max(np.abs(traces[64].u_values - traces[128].u_values[::2]))
    err_fine = np.max(np.abs(traces[128].u_values - traces[256].u_values[::2]))
    assert err_fine < 0.25 * err_coarse
    assert err_fine < 1e-7


def test_layer_field_matches_modal_field_off_boundary():
    geom = build_geometry("circle2d", 128)
    wave = IncidentWave(2.0, np.array([1.0, 0.0]))
    imp = ImpedanceField("constant", 1.0)
    _, rep_n = solve_nystrom_2d(geom, wave, imp)
    _, rep_m = solve_modal(geom, wave, imp)
    pts = np.array([[2.0, 0.5], [-1.5, 1.5], [0.0, -3.0]])
    (vn,) = evaluate_field(rep_n, pts, total=True)
    (vm,) = evaluate_field(rep_m, pts, total=True)
    assert np.max(np.abs(vn - vm)) < 1e-10


def test_layer_gradient_matches_finite_difference():
    geom = build_geometry("kite2d", 128)
    wave = IncidentWave(1.0, np.array([1.0, 0.0]))
    _, rep = solve_nystrom_2d(geom, wave, ImpedanceField("constant", 1.0))
    pts = np.array([[2.5, 1.0], [-2.0, -1.4]])
    (_, grads) = evaluate_field(rep, pts, total=False, gradient=True)
    h = 1e-6
    for d in range(2):
        step = np.zeros(2)
        step[d] = h
        (up,) = evaluate_field(rep, pts + step, total=False)
        (um,) = evaluate_field(rep, pts - step, total=False)
        fd = (up - um) / (2 * h)
        assert np.max(np.abs(fd - grads[:, d])) < 1e-6


def test_near_boundary_evaluation_warns():
    from impedlab import AccuracyWarning

    geom = build_geometry("circle2d", 64)
    wave = IncidentWave(1.0, np.array([1.0, 0.0]))
    _, rep = solve_nystrom_2d(geom, wave, ImpedanceField("constant", 1.0))
    with pytest.warns(AccuracyWarning):
        evaluate_field(rep, np.array([[1.001, 0.0]]))


def test_star_polygon_solver_runs_and_balances_roughly():
    from impedlab import flux_through_radius

    geom = build_geometry("star_polygon2d", 320, arms=5, amplitude=0.5)
    wave = IncidentWave(1.0, np.array([1.0, 0.0]))
    trace, rep = solve_nystrom_2d(geom, wave, ImpedanceField("constant", 1.0))
    absorbed = float(np.sum(trace.lambda_values * np.abs(trace.u_values) ** 2 * geom.weights))
    radiated = flux_through_radius(rep, radius=5.0, n_quad=512, total=True)
    assert radiated == pytest.approx(absorbed, rel=5e-2)
