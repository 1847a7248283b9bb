"""Persistence round trips.

The contract is bit-exactness: every numeric field written to JSON or
CSV must load back as the identical double.  The tests use awkward
values (pi multiples, subnormal-ish magnitudes, seventeen-digit
mantissas) rather than round decimals on purpose.
"""

import json

import numpy as np
import pytest

from impedlab import io as iolab
from impedlab.errors import ConsistencyError, PersistenceError
from impedlab.farfield import compute_far_field
from impedlab.fields import ImpedanceField, IncidentWave
from impedlab.geometry import build_geometry
from impedlab.modal import solve_modal
from impedlab.nystrom import solve_nystrom_2d
from impedlab.probes import ProbeReport, ProbeRow, SweepRecord


@pytest.fixture(scope="module")
def kite_solution():
    geom = build_geometry("kite2d", 64)
    wave = IncidentWave(1.5, np.array([1.0, 0.0]))
    imp = ImpedanceField("fourier2d", (np.array([1.0, 0.3]), np.array([0.0, 0.2])))
    trace, rep = solve_nystrom_2d(geom, wave, imp)
    return geom, trace, rep


def test_geometry_round_trip(tmp_path, kite_solution):
    geom = kite_solution[0]
    path = str(tmp_path / "g.json")
    iolab.save_geometry(geom, path, config_hash="deadbeef")
    back = iolab.load_geometry(path)
    assert np.array_equal(back.nodes, geom.nodes)
    assert np.array_equal(back.weights, geom.weights)
    doc = json.loads(open(path).read())
    assert doc["meta"]["config_hash"] == "deadbeef"
    assert "package_version" in doc["meta"]


def test_geometry_corruption_detected(tmp_path, kite_solution):
    geom = kite_solution[0]
    path = str(tmp_path / "g.json")
    iolab.save_geometry(geom, path)
    doc = json.loads(open(path).read())
    doc["nodes"][0] += 1e-3
    open(path, "w").write(json.dumps(doc))
    with pytest.raises(ConsistencyError, match="disagree"):
        iolab.load_geometry(path)


def test_trace_round_trip(tmp_path, kite_solution):
    _, trace, _ = kite_solution
    path = str(tmp_path / "t.json")
    iolab.save_trace(trace, path)
    back = iolab.load_trace(path)
    assert np.array_equal(back.u_values, trace.u_values)
    assert np.array_equal(back.dnu_values, trace.dnu_values)
    assert np.array_equal(back.lambda_values, trace.lambda_values)
    assert back.k == trace.k
    assert np.array_equal(back.geometry.nodes, trace.geometry.nodes)


def test_trace_node_mismatch(tmp_path, kite_solution):
    _, trace, _ = kite_solution
    path = str(tmp_path / "t.json")
    iolab.save_trace(trace, path)
    other = build_geometry("kite2d", 128)
    with pytest.raises(ConsistencyError, match="nodes"):
        iolab.load_trace(path, geom=other)
    same = build_geometry("kite2d", 64)
    assert iolab.load_trace(path, geom=same).geometry is same


def test_pattern_round_trip(tmp_path, kite_solution):
    rep = kite_solution[2]
    pattern = compute_far_field(rep, n_dir=48)
    path = str(tmp_path / "p.json")
    iolab.save_pattern(pattern, path)
    back = iolab.load_pattern(path)
    assert np.array_equal(back.samples, pattern.samples)
    assert np.array_equal(back.directions, pattern.directions)
    assert np.array_equal(back.weights, pattern.weights)
    assert back.coefficients is None  # layer pattern carries no modal form
    back.validate()


def test_pattern_round_trip_with_coefficients(tmp_path):
    geom = build_geometry("circle2d", 64)
    wave = IncidentWave(2.0, np.array([0.0, 1.0]))
    _, rep = solve_modal(geom, wave, ImpedanceField("constant", 1.0))
    pattern = compute_far_field(rep, n_dir=32)
    path = str(tmp_path / "pm.json")
    iolab.save_pattern(pattern, path)
    back = iolab.load_pattern(path)
    assert np.array_equal(back.coefficients, pattern.coefficients)
    assert np.array_equal(back.omega, pattern.omega)


def test_representation_round_trips(tmp_path, kite_solution):
    _, _, rep_layer = kite_solution
    path = str(tmp_path / "r1.json")
    iolab.save_representation(rep_layer, path)
    back = iolab.load_representation(path)
    assert back.kind == "layer2d"
    assert np.array_equal(back.density, rep_layer.density)
    assert back.eta == rep_layer.eta
    assert np.array_equal(back.geometry.nodes, rep_layer.geometry.nodes)

    geom = build_geometry("sphere3d", 12)
    wave = IncidentWave(1.0, np.array([0.0, 0.0, 1.0]))
    _, rep_modal = solve_modal(geom, wave, ImpedanceField("constant", 2.0))
    path2 = str(tmp_path / "r2.json")
    iolab.save_representation(rep_modal, path2)
    back2 = iolab.load_representation(path2)
    assert back2.kind == "modal3d"
    assert np.array_equal(back2.coefficients, rep_modal.coefficients)
    assert back2.boundary_radius == rep_modal.boundary_radius
    assert back2.geometry is None and back2.density is None


def test_nonfinite_floats_survive(tmp_path):
    path = str(tmp_path / "vals.json")
    iolab.save_json(
        {"values": iolab._enc_real([np.nan, np.inf, -np.inf, np.pi])}, path
    )
    vals = iolab._dec_real(iolab.load_json(path)["values"])
    assert np.isnan(vals[0]) and vals[1] == np.inf and vals[2] == -np.inf
    assert vals[3] == np.pi


def test_sweep_csv_round_trip(tmp_path):
    records = [
        SweepRecord(np.pi * 1e-3, 17, 0.0031415926535897931, 0.1 / 3.0, 2.0 / 7.0, 0.625),
        SweepRecord(1.2345678901234567e-8, 18, 9.876543210987654e-9, 1e-300, 0.0, 1.0),
        SweepRecord(1e-2, 19, np.nan, np.nan, np.nan, 0.0, flag="NoDataError"),
    ]
    path = str(tmp_path / "s.csv")
    iolab.save_sweep_csv(records, path, config_hash="cafe", extra_meta={"mode": "noise"})
    back, meta = iolab.load_sweep_csv(path)
    assert len(back) == 3
    for a, b in zip(records, back):
        assert a.eps == b.eps and a.seed == b.seed
        assert (a.farfield_gap == b.farfield_gap) or (
            np.isnan(a.farfield_gap) and np.isnan(b.farfield_gap)
        )
        assert (a.err_linf == b.err_linf) or np.isnan(b.err_linf)
        assert a.mask_fraction == b.mask_fraction
    assert meta["config_hash"] == "cafe" and meta["mode"] == "noise"
    text = open(path).read()
    assert "eps,seed,farfield_gap,err_linf,err_l2,mask_fraction" in text
    assert "# flagged: seed 19" in text


def test_sweep_csv_rejects_malformed(tmp_path):
    path = str(tmp_path / "bad.csv")
    open(path, "w").write("not,the,right,header\n1,2,3,4\n")
    with pytest.raises(PersistenceError, match="line 1"):
        iolab.load_sweep_csv(path)
    open(path, "w").write(iolab.SWEEP_HEADER + "\n1,2,3\n")
    with pytest.raises(PersistenceError, match="line 2"):
        iolab.load_sweep_csv(path)
    open(path, "w").write(iolab.SWEEP_HEADER + "\n1,2,x,4,5,6\n")
    with pytest.raises(PersistenceError, match="line 2"):
        iolab.load_sweep_csv(path)
    open(path, "w").write("# only comments\n")
    with pytest.raises(PersistenceError, match="header"):
        iolab.load_sweep_csv(path)


def test_malformed_json_reports_location(tmp_path):
    path = str(tmp_path / "broken.json")
    open(path, "w").write('{"type": "trace", "k": }\n')
    with pytest.raises(PersistenceError, match="line 1"):
        iolab.load_json(path)


def test_missing_field_named(tmp_path):
    path = str(tmp_path / "incomplete.json")
    iolab.save_json({"type": "farfield", "dim": 2}, path)
    with pytest.raises(PersistenceError, match="samples"):
        iolab.load_pattern(path)


def test_probe_report_serialization(tmp_path):
    report = ProbeReport(
        probe="demo",
        rows=[
            ProbeRow("a", {"r": 0.1}, 1.0, 2.0),
            ProbeRow("b", {"r": np.float64(0.2)}, 0.0, 0.0),
        ],
        notices=["note"],
        extra={"feasible_k": 1.5, "grid": np.array([1.0, 2.0])},
        passed=True,
    )
    path = str(tmp_path / "rep.json")
    iolab.save_report(report, path, config_hash="50")
    doc = iolab.load_json(path)
    assert doc["probe"] == "demo" and doc["passed"] is True
    assert doc["rows"][0]["ratio"] == 0.5
    assert doc["rows"][1]["ratio"] is None
    assert doc["extra"]["grid"] == [1.0, 2.0]


def test_plot_data(tmp_path):
    path = str(tmp_path / "curve.dat")
    x = np.array([0.1, 0.2, 0.3])
    y = np.array([np.pi, np.e, 1.0 / 3.0])
    iolab.write_plot_data(path, x, y, comment="test curve")
    data = np.loadtxt(path)
    assert np.array_equal(data[:, 0], x) and np.array_equal(data[:, 1], y)
    with pytest.raises(PersistenceError, match="disagree"):
        iolab.write_plot_data(path, x, y[:2])
