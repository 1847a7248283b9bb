"""Command-line pipeline: solve, far field, reconstruct, sweep, probes,
and a selftest, all driven by a TOML experiment config.

Exit codes follow the usual convention: 0 success, 1 validation error
(bad config or inconsistent artifacts), 2 numerical failure, 64 usage.
Artifacts land in the --out directory so the subcommands compose:
solve writes the representation that farfield reads, farfield writes
the pattern that reconstruct reads.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from typing import Optional

import numpy as np

from . import io as iolab
from .config import RunConfig, load_config
from .errors import (
    ConsistencyError,
    DomainError,
    IllConditionedError,
    ImpedLabError,
    InvalidGeometryError,
    NoDataError,
    PersistenceError,
    ReconstructionError,
    ValidationError,
)
from .farfield import compute_far_field, pattern_gap, perturb_pattern
from .fields import evaluate_field
from .modal import solve_modal
from .nystrom import solve_nystrom_2d
from .probes import (
    SweepConfig,
    collar_samples,
    far_lower_bound_probe,
    modulus_curve,
    rellich_trace_probes,
    stability_sweep,
    vanishing_rate_probe,
)
from .reconstruction import reconstruct_from_farfield

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="impedlab", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def add(name, help_text, needs_config=True):
        p = sub.add_parser(name, help=help_text)
        if needs_config:
            p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out", default=None, help="artifact directory")
        p.add_argument("--seed", type=int, default=None, help="RNG seed override")
        return p

    add("solve", "solve the forward problem, write trace and representation")
    add("farfield", "far-field pattern of a solved representation")
    p_rec = add("reconstruct", "impedance from the stored far-field pattern")
    p_rec.add_argument("--eps", type=float, default=0.0, help="noise level")
    p_sweep = add("sweep", "stability sweep over noise levels or impedance pairs")
    p_sweep.add_argument("--mode", choices=["noise", "pair"], default=None)
    p_probe = add("probe", "estimate probes on the solved problem")
    p_probe.add_argument(
        "kind", choices=["vanishing", "rellich", "lowerbound"], help="probe family"
    )
    add("selftest", "run the built-in oracle checks", needs_config=False)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _dispatch(args)
    except (
        ValidationError,
        DomainError,
        InvalidGeometryError,
        ConsistencyError,
        PersistenceError,
    ) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IllConditionedError, ReconstructionError, NoDataError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ImpedLabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def _dispatch(args) -> int:
    if args.command == "selftest":
        return _cmd_selftest()
    cfg = load_config(args.config)
    out = args.out or cfg.output.get("directory", ".")
    os.makedirs(out, exist_ok=True)
    seed = args.seed if args.seed is not None else cfg.seed()
    return {
        "solve": _cmd_solve,
        "farfield": _cmd_farfield,
        "reconstruct": _cmd_reconstruct,
        "sweep": _cmd_sweep,
        "probe": _cmd_probe,
    }[args.command](cfg, out, seed, args)


def _solve(cfg: RunConfig):
    geom = cfg.build_geometry()
    wave = cfg.build_wave()
    imp = cfg.build_impedance()
    if geom.family in ("circle2d", "sphere3d"):
        return geom, wave, imp, solve_modal(geom, wave, imp, n_modes=cfg.truncation())
    return geom, wave, imp, solve_nystrom_2d(geom, wave, imp)


def _cmd_solve(cfg, out, seed, args) -> int:
    geom, wave, imp, (trace, rep) = _solve(cfg)
    h = cfg.config_hash()
    iolab.save_geometry(geom, os.path.join(out, "geometry.json"), config_hash=h)
    iolab.save_trace(trace, os.path.join(out, "trace.json"), config_hash=h)
    iolab.save_representation(
        rep, os.path.join(out, "representation.json"), config_hash=h
    )
    print(
        f"solved {geom.family} n={geom.n_nodes} k={wave.k:g}: "
        f"max|u| = {np.max(np.abs(trace.u_values)):.6g}; artifacts in {out}"
    )
    return EXIT_OK


def _cmd_farfield(cfg, out, seed, args) -> int:
    rep = iolab.load_representation(os.path.join(out, "representation.json"))
    n_dir = int(cfg.experiment.get("n_dir", 64))
    pattern = compute_far_field(rep, n_dir=n_dir)
    h = cfg.config_hash()
    iolab.save_pattern(pattern, os.path.join(out, "farfield.json"), config_hash=h)
    if pattern.dim == 2:
        x = np.arctan2(pattern.directions[:, 1], pattern.directions[:, 0])
    else:
        x = np.arccos(np.clip(pattern.directions[:, 2], -1.0, 1.0))
    order = np.argsort(x)
    iolab.write_plot_data(
        os.path.join(out, "farfield_pattern.dat"),
        x[order],
        np.abs(pattern.samples[order]),
        comment="direction angle vs |far field|",
    )
    print(
        f"far field on {pattern.n_dir} directions: "
        f"L2 norm = {pattern.l2_norm():.6g}; artifacts in {out}"
    )
    return EXIT_OK


def _cmd_reconstruct(cfg, out, seed, args) -> int:
    geom = cfg.build_geometry()
    wave = cfg.build_wave()
    pattern = iolab.load_pattern(os.path.join(out, "farfield.json"))
    eps = float(args.eps)
    if eps > 0.0:
        pattern, gap = perturb_pattern(pattern, eps, np.random.default_rng(seed))
        print(f"perturbed pattern: gap = {gap:.6g} (eps = {eps:g}, seed = {seed})")
    est = reconstruct_from_farfield(pattern, geom, wave, eps=eps)
    lam_true = cfg.build_impedance().values_on(geom, wave.omega)
    sup_err = est.sup_error(lam_true)
    h = cfg.config_hash()
    doc = {
        "type": "impedance_estimate",
        "meta": iolab.meta_block(h, eps=eps, seed=seed),
        "values": iolab._enc_real(est.values),
        "mask": [bool(b) for b in est.mask],
        "threshold": est.threshold,
        "imag_residue": est.imag_residue,
        "flags": list(est.flags),
        "sup_error_vs_config": sup_err,
    }
    iolab.save_json(doc, os.path.join(out, "impedance.json"))
    t = geom.params if geom.params is not None else np.arange(geom.n_nodes)
    iolab.write_plot_data(
        os.path.join(out, "impedance_estimate.dat"),
        t[est.mask],
        est.values[est.mask],
        comment="boundary parameter vs recovered impedance (masked)",
    )
    iolab.write_plot_data(
        os.path.join(out, "impedance_true.dat"),
        t,
        lam_true,
        comment="boundary parameter vs configured impedance",
    )
    print(
        f"reconstructed impedance on {est.mask_fraction:.0%} of the boundary: "
        f"sup error = {sup_err:.6g}; artifacts in {out}"
    )
    return EXIT_OK


def _cmd_sweep(cfg, out, seed, args) -> int:
    geom = cfg.build_geometry()
    wave = cfg.build_wave()
    imp = cfg.build_impedance()
    mode = args.mode or cfg.experiment.get("mode", "noise")
    sweep_cfg = SweepConfig(
        geometry=geom,
        wave=wave,
        impedance=imp,
        n_dir=int(cfg.experiment.get("n_dir", 64)),
        base_seed=seed,
    )
    records, fits = stability_sweep(
        sweep_cfg, mode, cfg.eps_grid(), int(cfg.experiment.get("trials", 10))
    )
    h = cfg.config_hash()
    iolab.save_sweep_csv(
        records,
        os.path.join(out, "sweep.csv"),
        config_hash=h,
        extra_meta={"mode": mode, "seed": seed},
    )
    usable = [
        r
        for r in records
        if not r.flag and np.isfinite(r.err_linf) and 0 < r.farfield_gap < 1
    ]
    if usable:
        gaps = np.array([r.farfield_gap for r in usable])
        errs = np.array([r.err_linf for r in usable])
        iolab.write_plot_data(
            os.path.join(out, "sweep_cloud.dat"),
            gaps,
            errs,
            comment="far-field gap vs sup impedance error",
        )
        grid = np.geomspace(gaps.min(), gaps.max(), 100)
        for name, fit in fits.items():
            if fit.get("ok"):
                iolab.write_plot_data(
                    os.path.join(out, f"sweep_modulus_{name}.dat"),
                    grid,
                    modulus_curve(fit, grid),
                    comment=(
                        f"{name}-log modulus fit: C = {fit['C']:.6g}, "
                        f"theta = {fit['theta']:.6g}, coverage = {fit['coverage']:.3f}"
                    ),
                )
    for name, fit in fits.items():
        if fit.get("ok"):
            print(
                f"{mode} sweep {name}-log fit: C = {fit['C']:.4g} "
                f"theta = {fit['theta']:.4g} coverage = {fit['coverage']:.0%}"
            )
        else:
            print(f"{mode} sweep {name}-log fit failed: {fit.get('reason')}")
    print(f"{len(records)} records in {out}/sweep.csv")
    return EXIT_OK


def _cmd_probe(cfg, out, seed, args) -> int:
    geom, wave, imp, (trace, rep) = _solve(cfg)
    h = cfg.config_hash()
    if args.kind == "vanishing":
        r1 = min(geom.r0, 0.5)
        r_grid = np.geomspace(0.02, r1, 6)
        report = vanishing_rate_probe(trace, r_grid)
        iolab.save_report(report, os.path.join(out, "probe_vanishing.json"), h)
        masses = {}
        for row in report.rows:
            masses.setdefault(row.inputs["r"], []).append(row.lhs)
        rs = sorted(masses)
        iolab.write_plot_data(
            os.path.join(out, "vanishing_envelope.dat"),
            rs,
            [min(masses[r]) for r in rs],
            comment="patch radius vs worst-center patch mass",
        )
        k_min = report.extra["feasible_k"]
        print(f"vanishing-rate probe: minimal feasible K = {k_min}")
    elif args.kind == "rellich":
        collar = collar_samples(rep, geom)
        report = rellich_trace_probes(trace, collar)
        iolab.save_report(report, os.path.join(out, "probe_rellich.json"), h)
        for row in report.rows:
            print(f"  {row.case}: ratio = {row.ratio:.4g}")
    else:
        # the leading far-field asymptotics give min|u| >= 1 - max|f|/sqrt(R),
        # so the 1/2 crossing happens by R = 4 max|f|^2; reaching 6 max|f|^2
        # leaves room for the next-order corrections and guarantees the top
        # of the grid clears the threshold
        pattern = compute_far_field(rep, n_dir=int(cfg.experiment.get("n_dir", 64)))
        fmax = float(np.max(np.abs(pattern.samples)))
        r_min = max(1.5 * geom.circumradius, 1.5)
        r_hi = max(64.0, 6.0 * fmax**2)
        r_grid = np.geomspace(r_min, r_hi, 10)
        report = far_lower_bound_probe(rep, r_grid)
        iolab.save_report(report, os.path.join(out, "probe_lowerbound.json"), h)
        iolab.write_plot_data(
            os.path.join(out, "lowerbound_min_field.dat"),
            [row.inputs["R"] for row in report.rows],
            [row.lhs for row in report.rows],
            comment="radius vs min |total field|",
        )
        print(
            f"far lower bound: empirical R0 = {report.extra['empirical_R0']} "
            f"(flux spread {report.extra['flux_spread']:.3g})"
        )
    if report.passed is False:
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------


def _cmd_selftest() -> int:
    """Fast oracle suite: special functions, solver cross-check, far-field
    round trip, persistence round trip."""
    from .fields import ImpedanceField, IncidentWave
    from .geometry import build_geometry
    from .norms import BoundaryFunction, sobolev_norm
    from .wavefunctions import recurrence_residual, wronskian_residual

    failures = 0

    def check(name, ok, detail=""):
        nonlocal failures
        line = f"PASS {name}" if ok else f"FAIL {name}"
        if detail and not ok:
            line += f"  ({detail})"
        print(line)
        failures += 0 if ok else 1

    args = np.array([0.1, 1.0, 7.3, 42.0, 100.0])
    worst_w = max(
        np.max(np.abs(wronskian_residual(n, args, spherical=sph)))
        for sph in (False, True)
        for n in (0, 1, 5, 25, 50)
    )
    check("wronskian residuals < 1e-10", worst_w < 1e-10, f"worst {worst_w:.3g}")
    worst_r = max(
        np.max(recurrence_residual(kind, n, args))
        for kind in ("cyl_J", "cyl_Y", "sph_j", "sph_y")
        for n in (1, 5, 25, 49)
    )
    check("recurrence residuals < 1e-10", worst_r < 1e-10, f"worst {worst_r:.3g}")

    geom = build_geometry("circle2d", 128)
    wave = IncidentWave(2.0, np.array([1.0, 0.0]))
    imp = ImpedanceField("constant", 1.0)
    _, rep_m = solve_modal(geom, wave, imp)
    _, rep_n = solve_nystrom_2d(geom, wave, imp)
    p_m = compute_far_field(rep_m, n_dir=64)
    p_n = compute_far_field(rep_n, n_dir=64)
    rel = pattern_gap(p_m, p_n) / p_m.l2_norm()
    check("modal vs Nystrom far field < 1e-8", rel < 1e-8, f"rel {rel:.3g}")

    from .farfield import far_to_near

    rep_back = far_to_near(p_m, eps=0.0)
    pts = 3.0 * geom.nodes
    (v1,) = evaluate_field(rep_m, pts)
    (v2,) = evaluate_field(rep_back, pts)
    err = np.max(np.abs(v1 - v2))
    check("far-field round trip < 1e-10", err < 1e-10, f"err {err:.3g}")

    f = BoundaryFunction(geom, np.cos(3 * geom.params))
    quad = np.sqrt(np.sum(geom.weights * np.abs(f.values) ** 2))
    nrm = sobolev_norm(f, 0.0)
    check(
        "L2 norm equals quadrature",
        abs(nrm - quad) < 1e-12 * max(quad, 1.0),
        f"diff {abs(nrm - quad):.3g}",
    )

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "p.json")
        iolab.save_pattern(p_m, path)
        p_back = iolab.load_pattern(path)
        ok = np.array_equal(p_back.samples, p_m.samples) and np.array_equal(
            p_back.directions, p_m.directions
        )
        check("persistence round trip bit-exact", ok)

    print(f"{'all checks passed' if failures == 0 else f'{failures} checks FAILED'}")
    return EXIT_OK if failures == 0 else EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
