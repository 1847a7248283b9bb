"""Impedance recovery, the weighted interpolation certificate, and the
logarithmic moduli.

The interpolation invariant is checked at the literal level: random
weight/function pairs whose hypotheses hold by construction (pointwise
weight floor + the chord bound patch_measure >= 2r on the unit circle),
with the brute-force sup compared against the returned bound.
"""

import numpy as np
import pytest

from impedlab.errors import DomainError, NoDataError
from impedlab.farfield import compute_far_field, perturb_pattern
from impedlab.fields import BoundaryTrace, ImpedanceField, IncidentWave
from impedlab.geometry import build_geometry
from impedlab.modal import solve_modal
from impedlab.nystrom import solve_nystrom_2d
from impedlab.reconstruction import (
    bound_at,
    eta,
    eta_eta,
    impedance_from_trace,
    paper_r_choice,
    reconstruct_from_farfield,
    weighted_interpolation_bound,
)


# ---------------------------------------------------------------------------
# pointwise formula
# ---------------------------------------------------------------------------


def test_constant_impedance_recovered_from_modal_trace():
    geom = build_geometry("circle2d", 128, radius=1.0)
    wave = IncidentWave(2.0, np.array([1.0, 0.0]))
    trace, _ = solve_modal(geom, wave, ImpedanceField("constant", 1.5))
    est = impedance_from_trace(trace, threshold=0.1)
    assert est.sup_error(np.full(geom.n_nodes, 1.5)) < 1e-10
    assert est.imag_residue < 1e-10


def test_phase_invariance_of_the_quotient():
    geom = build_geometry("circle2d", 64, radius=1.0)
    wave = IncidentWave(1.0, np.array([1.0, 0.0]))
    trace, _ = solve_modal(geom, wave, ImpedanceField("constant", 0.7))
    rotated = BoundaryTrace(
        geometry=geom,
        k=trace.k,
        omega=trace.omega,
        u_values=np.exp(1.3j) * trace.u_values,
        dnu_values=np.exp(1.3j) * trace.dnu_values,
        lambda_values=trace.lambda_values,
    )
    a = impedance_from_trace(trace)
    b = impedance_from_trace(rotated)
    assert np.array_equal(a.mask, b.mask)
    assert np.max(np.abs(a.values[a.mask] - b.values[b.mask])) < 1e-13


def test_exact_single_mode_trace_is_machine_precision():
    geom = build_geometry("circle2d", 64, radius=1.0)
    lam = 2.2
    u = 3.0 * np.exp(1j * geom.params) + 5.0  # no zeros
    trace = BoundaryTrace(
        geometry=geom,
        k=1.0,
        omega=np.array([1.0, 0.0]),
        u_values=u,
        dnu_values=-1j * lam * u,
        lambda_values=np.full(geom.n_nodes, lam),
    )
    est = impedance_from_trace(trace, threshold=0.1)
    assert np.all(est.mask)
    assert est.sup_error(np.full(geom.n_nodes, lam)) < 1e-14
    assert est.imag_residue < 1e-14


def test_variable_impedance_on_kite_from_nystrom_trace():
    geom = build_geometry("kite2d", 512)
    wave = IncidentWave(1.0, np.array([1.0, 0.0]))
    lam_field = ImpedanceField("fourier2d", (np.array([1.0, 0.5]), np.array([0.0])))
    trace, _ = solve_nystrom_2d(geom, wave, lam_field)
    est = impedance_from_trace(trace, threshold=0.1)
    ref = lam_field.values_on(geom)
    assert est.sup_error(ref) < 1e-3
    assert est.mask_fraction > 0.5


def test_mask_drops_nodes_near_zeros():
    geom = build_geometry("circle2d", 128, radius=1.0)
    u = np.sin(geom.params / 1.0) + 0.05  # near-zeros at t ~ 0, pi
    lam = 1.0
    trace = BoundaryTrace(
        geometry=geom,
        k=1.0,
        omega=np.array([1.0, 0.0]),
        u_values=u.astype(complex),
        dnu_values=-1j * lam * u,
        lambda_values=np.full(geom.n_nodes, lam),
    )
    est = impedance_from_trace(trace, threshold=0.1)
    assert 0.0 < est.mask_fraction < 1.0
    assert est.sup_error(np.full(geom.n_nodes, lam)) < 1e-13


def test_threshold_validation_and_empty_mask():
    geom = build_geometry("circle2d", 64, radius=1.0)
    wave = IncidentWave(1.0, np.array([1.0, 0.0]))
    trace, _ = solve_modal(geom, wave, ImpedanceField("constant", 1.0))
    with pytest.raises(DomainError):
        impedance_from_trace(trace, threshold=0.0)
    with pytest.raises(NoDataError):
        impedance_from_trace(trace, threshold=2.0)


def test_inconsistent_cauchy_pair_reports_imag_residue():
    geom = build_geometry("circle2d", 64, radius=1.0)
    rng = np.random.default_rng(1)
    trace = BoundaryTrace(
        geometry=geom,
        k=1.0,
        omega=np.array([1.0, 0.0]),
        u_values=np.ones(geom.n_nodes, dtype=complex),
        dnu_values=rng.standard_normal(geom.n_nodes)
        + 1j * rng.standard_normal(geom.n_nodes),
        lambda_values=np.ones(geom.n_nodes),
    )
    est = impedance_from_trace(trace)
    assert est.imag_residue > 0.1


# ---------------------------------------------------------------------------
# far-field reconstruction
# ---------------------------------------------------------------------------


def circle_setup(k=2.0, lam=1.0, n=128, n_dir=64):
    geom = build_geometry("circle2d", n, radius=1.0)
    wave = IncidentWave(k, np.array([1.0, 0.0]))
    imp = ImpedanceField("constant", lam)
    _, rep = solve_modal(geom, wave, imp)
    pattern = compute_far_field(rep, n_dir=n_dir)
    return geom, wave, imp, pattern


def test_noiseless_reconstruction_on_circle():
    geom, wave, imp, pattern = circle_setup(lam=1.0)
    est = reconstruct_from_farfield(pattern, geom, wave, eps=0.0, q=0.6)
    ref = imp.values_on(geom)
    assert est.sup_error(ref) < 1e-4
    assert est.flags == ()


def test_noiseless_reconstruction_variable_impedance():
    geom = build_geometry("circle2d", 128, radius=1.0)
    wave = IncidentWave(2.0, np.array([1.0, 0.0]))
    imp = ImpedanceField("fourier2d", (np.array([1.0, 0.3]), np.array([0.0])))
    _, rep = solve_modal(geom, wave, imp)
    pattern = compute_far_field(rep, n_dir=64)
    est = reconstruct_from_farfield(pattern, geom, wave, eps=0.0, q=0.6)
    assert est.sup_error(imp.values_on(geom)) < 1e-4


def test_no_information_fallback():
    geom, wave, _, pattern = circle_setup()
    eps = pattern.l2_norm()  # 1.5 eps certainly exceeds the data norm
    est = reconstruct_from_farfield(pattern, geom, wave, eps=eps)
    assert "no_information" in est.flags
    assert np.all(est.values == 0.5 * (0.1 + 10.0))
    assert est.mask_fraction == 1.0


def test_error_grows_with_noise_on_average():
    geom, wave, imp, pattern = circle_setup()
    ref = imp.values_on(geom)

    def mean_error(eps, seeds):
        errs = []
        for s in seeds:
            noisy, _ = perturb_pattern(pattern, eps, np.random.default_rng(s))
            est = reconstruct_from_farfield(noisy, geom, wave, eps=eps)
            errs.append(est.sup_error(ref))
        return np.mean(errs)

    seeds = range(10)
    assert mean_error(1e-4, seeds) <= 1.5 * mean_error(1e-2, seeds)


def test_reconstruction_parameter_validation():
    geom, wave, _, pattern = circle_setup()
    with pytest.raises(DomainError):
        reconstruct_from_farfield(pattern, geom, wave, eps=-1.0)
    with pytest.raises(DomainError):
        reconstruct_from_farfield(pattern, geom, wave, eps=0.0, q=1.0)


def test_discrepancy_residual_hits_target():
    geom, wave, _, pattern = circle_setup()
    eps = 1e-3
    noisy, _ = perturb_pattern(pattern, eps, np.random.default_rng(5))
    est = reconstruct_from_farfield(noisy, geom, wave, eps=eps)
    assert est.diagnostics["residual"] == pytest.approx(1.5 * eps, rel=1e-3)


# ---------------------------------------------------------------------------
# weighted interpolation bound
# ---------------------------------------------------------------------------


def test_paper_radius_worked_example():
    r = paper_r_choice(1e-6, 1.0, 1.0)
    assert r == pytest.approx(4.0 / abs(np.log(1e-6)), rel=1e-14)
    assert r == pytest.approx(0.289530, abs=1e-6)
    # exp(2/r) = eps^{-1/2} there, so B = sqrt(eps) + r
    b = bound_at(r, 1e-6, 1.0, 1.0, 1.0, 1.0)
    assert b == pytest.approx(1e-3 + r, rel=1e-12)
    assert b == pytest.approx(0.290530, abs=1e-6)


def test_grid_minimum_never_exceeds_paper_choice():
    for eps in (1e-8, 1e-6, 1e-3):
        r = paper_r_choice(eps, 1.0, 1.0)
        b_paper = bound_at(r, eps, 1.0, 1.0, 1.0, 1.0)
        b_grid, r_used = weighted_interpolation_bound(eps, 1.0, 1.0, 1.0, 1.0, 0.5)
        assert b_grid <= b_paper * (1 + 1e-12)
        assert 0.0 < r_used <= 0.5


def test_zero_noise_bound_vanishes_under_refinement():
    b1, r1_used = weighted_interpolation_bound(0.0, 1.0, 1.0, 1.0, 1.0, 0.5, n_grid=50)
    b2, r2_used = weighted_interpolation_bound(0.0, 1.0, 1.0, 1.0, 1.0, 0.5, n_grid=50000)
    assert b1 == pytest.approx(1.0 * r1_used)
    assert b2 < b1
    assert r2_used < r1_used


def test_pure_data_term_minimum_at_right_endpoint():
    # eps = E = 1: B(r) = e^{2/r} + r is decreasing on (0, 0.5], so the
    # minimum sits at r = 0.5 with value e^4 + 0.5
    b, r_used = weighted_interpolation_bound(1.0, 1.0, 1.0, 1.0, 1.0, 0.5)
    assert r_used == pytest.approx(0.5, rel=1e-12)
    assert b == pytest.approx(np.exp(4.0) + 0.5, rel=1e-12)
    assert b == pytest.approx(55.098, abs=1e-3)


def test_bound_parameter_validation():
    with pytest.raises(DomainError):
        weighted_interpolation_bound(-1.0, 1.0, 1.0, 1.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        weighted_interpolation_bound(1e-3, 1.0, 1.0, 1.0, 1.5, 0.5)
    with pytest.raises(DomainError):
        weighted_interpolation_bound(1e-3, 1.0, 1.0, -1.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        bound_at(0.0, 1e-3, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        paper_r_choice(2.0, 1.0, 1.0)


def test_certificate_on_randomized_instances():
    """sup|f| <= bound on 100 random (w, f) pairs whose hypotheses hold by
    construction.

    On the unit circle the patch measure is 4 asin(r/2) >= 2r, so a
    pointwise floor w >= w_min gives patch integrals >= 2 r w_min for
    every r; M_w is then the sup over r <= r1 of exp(-2K/r)/(2 r w_min),
    attained at r = r1 since that ratio is increasing (K = 1).
    """
    geom = build_geometry("circle2d", 256, radius=1.0)
    t = geom.params
    r1 = 0.5
    K = 1.0
    failures = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        w_min = rng.uniform(0.05, 0.5)
        w = w_min + rng.uniform(0.0, 1.0) * (1.0 + np.cos(t - rng.uniform(0, 2 * np.pi)))
        m_w = np.exp(-2.0 * K / r1) / (2.0 * r1 * w_min)

        alpha = rng.uniform(0.3, 1.0)
        coef = rng.standard_normal(4)
        f = coef[0] + coef[1] * np.cos(t) + coef[2] * np.sin(t) + coef[3] * np.cos(3 * t)
        lip = abs(coef[1]) + abs(coef[2]) + 3 * abs(coef[3])
        hoelder = lip * 2.0 ** (1.0 - alpha) + 1e-12

        eps_data = 1.01 * np.sum(np.abs(f) * w * geom.weights)
        bound, _ = weighted_interpolation_bound(eps_data, hoelder, m_w, K, alpha, r1)
        if np.max(np.abs(f)) > bound:
            failures += 1
    assert failures == 0


# ---------------------------------------------------------------------------
# logarithmic moduli
# ---------------------------------------------------------------------------


def test_eta_frozen_values():
    assert eta(np.exp(-1.0)) == pytest.approx(1.0, rel=1e-12)
    assert eta(np.exp(-4.0)) == pytest.approx(0.25, rel=1e-12)
    assert eta_eta(np.exp(-4.0)) == pytest.approx(1.0 / np.log(4.0), rel=1e-12)
    assert eta_eta(np.exp(-4.0)) == pytest.approx(0.7213475, abs=1e-7)


def test_eta_scaling_parameters():
    assert eta(np.exp(-4.0), C=3.0, theta=2.0) == pytest.approx(3.0 / 16.0, rel=1e-12)


def test_moduli_increasing():
    ts = np.geomspace(1e-12, 0.3, 40)
    e1 = eta(ts)
    assert np.all(np.diff(e1) > 0.0)
    e2 = np.array([eta_eta(t) for t in ts])
    assert np.all(np.diff(e2) > 0.0)


def test_double_log_is_slower_for_small_t():
    for t in (1e-4, 1e-8, 1e-12):
        assert eta_eta(t) > eta(t)


def test_eta_domain_errors():
    for bad in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(DomainError):
            eta(bad)
    with pytest.raises(DomainError):
        eta(0.5, C=-1.0)
    with pytest.raises(DomainError):
        eta(0.5, theta=0.0)
    with pytest.raises(DomainError):
        eta_eta(0.5)  # eta(0.5) > 1 leaves the domain of the outer eta
