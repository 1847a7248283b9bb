"""Lossless persistence for the pipeline artifacts.

JSON for structured objects (complex arrays encoded as [re, im] pairs
per entry, non-finite floats as strings), CSV for sweep tables, and
two-column whitespace-separated text for plot data.  Every file carries
a metadata block with the package version and, when available, the
config hash, so any artifact can be traced to the experiment definition
that produced it.

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly; loading therefore reproduces every numeric field bit
for bit.
"""

from __future__ import annotations

import json
import os
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConsistencyError, PersistenceError
from .farfield import FarFieldPattern
from .fields import BoundaryTrace, ExteriorRepresentation
from .geometry import BoundaryGeometry, build_geometry
from .probes import ProbeReport, SweepRecord

FORMAT_VERSION = 1

GEOMETRY_PARAM_KEYS = ("radius", "arms", "amplitude", "grading")

__all__ = [
    "save_json",
    "load_json",
    "save_geometry",
    "load_geometry",
    "save_trace",
    "load_trace",
    "save_pattern",
    "load_pattern",
    "save_representation",
    "load_representation",
    "save_sweep_csv",
    "load_sweep_csv",
    "save_report",
    "write_plot_data",
    "meta_block",
]


def meta_block(config_hash: Optional[str] = None, **extra) -> Dict:
    from . import __version__

    block = {"format_version": FORMAT_VERSION, "package_version": __version__}
    if config_hash is not None:
        block["config_hash"] = config_hash
    block.update(extra)
    return block


# ---------------------------------------------------------------------------
# encoding helpers
# ---------------------------------------------------------------------------


def _enc_float(x: float):
    # json cannot represent nan/inf; strings round trip through _dec_float
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _dec_float(v) -> float:
    return float(v)


def _enc_real(arr) -> List:
    return [_enc_float(float(x)) for x in np.asarray(arr, dtype=float).ravel()]


def _enc_complex(arr) -> List:
    a = np.asarray(arr, dtype=complex).ravel()
    return [[_enc_float(float(z.real)), _enc_float(float(z.imag))] for z in a]


def _dec_real(data, shape=None) -> np.ndarray:
    out = np.array([_dec_float(v) for v in data], dtype=float)
    return out.reshape(shape) if shape is not None else out


def _dec_complex(data, shape=None) -> np.ndarray:
    out = np.array([complex(_dec_float(p[0]), _dec_float(p[1])) for p in data])
    return out.reshape(shape) if shape is not None else out


def save_json(obj: Dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, allow_nan=False)
        fh.write("\n")


def load_json(path: str) -> Dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise PersistenceError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    except OSError as exc:
        raise PersistenceError(f"cannot read {path}: {exc}") from exc


def _need(doc: Dict, key: str, path: str):
    if key not in doc:
        raise PersistenceError(f"{path}: missing field {key!r}")
    return doc[key]


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


def _geometry_spec(geom: BoundaryGeometry) -> Dict:
    params = {k: geom.meta[k] for k in GEOMETRY_PARAM_KEYS if k in geom.meta}
    return {"family": geom.family, "n": geom.n_nodes, "params": params}


def _rebuild_geometry(spec: Dict, path: str) -> BoundaryGeometry:
    family = _need(spec, "family", path)
    n = int(_need(spec, "n", path))
    return build_geometry(family, n, **spec.get("params", {}))


def save_geometry(geom: BoundaryGeometry, path: str, config_hash=None) -> None:
    doc = {
        "type": "geometry",
        "meta": meta_block(config_hash),
        "spec": _geometry_spec(geom),
        "nodes": _enc_real(geom.nodes),
        "weights": _enc_real(geom.weights),
        "normals": _enc_real(geom.outward_normals),
    }
    save_json(doc, path)


def load_geometry(path: str) -> BoundaryGeometry:
    doc = load_json(path)
    geom = _rebuild_geometry(_need(doc, "spec", path), path)
    nodes = _dec_real(_need(doc, "nodes", path), geom.nodes.shape)
    if not np.array_equal(nodes, geom.nodes):
        raise ConsistencyError(
            f"{path}: stored nodes disagree with the rebuilt geometry"
        )
    return geom


# ---------------------------------------------------------------------------
# boundary trace
# ---------------------------------------------------------------------------


def save_trace(trace: BoundaryTrace, path: str, config_hash=None) -> None:
    doc = {
        "type": "trace",
        "meta": meta_block(config_hash, **_jsonable_meta(trace.meta)),
        "geometry": _geometry_spec(trace.geometry),
        "k": float(trace.k),
        "omega": _enc_real(trace.omega),
        "u_values": _enc_complex(trace.u_values),
        "dnu_values": _enc_complex(trace.dnu_values),
        "lambda_values": _enc_real(trace.lambda_values),
    }
    save_json(doc, path)


def load_trace(path: str, geom: Optional[BoundaryGeometry] = None) -> BoundaryTrace:
    doc = load_json(path)
    stored_geom = _rebuild_geometry(_need(doc, "geometry", path), path)
    n = stored_geom.n_nodes
    if geom is not None and geom.n_nodes != n:
        raise ConsistencyError(
            f"{path}: trace has {n} nodes but the config geometry has "
            f"{geom.n_nodes}"
        )
    return BoundaryTrace(
        geometry=stored_geom if geom is None else geom,
        k=float(_need(doc, "k", path)),
        omega=_dec_real(_need(doc, "omega", path)),
        u_values=_dec_complex(_need(doc, "u_values", path)),
        dnu_values=_dec_complex(_need(doc, "dnu_values", path)),
        lambda_values=_dec_real(_need(doc, "lambda_values", path)),
        meta=dict(doc.get("meta", {})),
    )


# ---------------------------------------------------------------------------
# far-field pattern
# ---------------------------------------------------------------------------


def save_pattern(pattern: FarFieldPattern, path: str, config_hash=None) -> None:
    doc = {
        "type": "farfield",
        "meta": meta_block(config_hash, **_jsonable_meta(pattern.meta)),
        "dim": int(pattern.dim),
        "k": float(pattern.k),
        "omega": _enc_real(pattern.omega),
        "directions": _enc_real(pattern.directions),
        "samples": _enc_complex(pattern.samples),
        "weights": _enc_real(pattern.weights),
        "coefficients": None
        if pattern.coefficients is None
        else _enc_complex(pattern.coefficients),
    }
    save_json(doc, path)


def load_pattern(path: str) -> FarFieldPattern:
    doc = load_json(path)
    dim = int(_need(doc, "dim", path))
    n_dir = len(_need(doc, "samples", path))
    coeff = doc.get("coefficients")
    return FarFieldPattern(
        dim=dim,
        k=float(_need(doc, "k", path)),
        omega=_dec_real(_need(doc, "omega", path)),
        directions=_dec_real(_need(doc, "directions", path), (n_dir, dim)),
        samples=_dec_complex(doc["samples"]),
        weights=_dec_real(_need(doc, "weights", path)),
        coefficients=None if coeff is None else _dec_complex(coeff),
        meta=dict(doc.get("meta", {})),
    )


# ---------------------------------------------------------------------------
# exterior representation
# ---------------------------------------------------------------------------


def save_representation(
    rep: ExteriorRepresentation, path: str, config_hash=None
) -> None:
    doc = {
        "type": "representation",
        "meta": meta_block(config_hash, **_jsonable_meta(rep.meta)),
        "kind": rep.kind,
        "k": float(rep.k),
        "omega": _enc_real(rep.omega),
        "coefficients": None
        if rep.coefficients is None
        else _enc_complex(rep.coefficients),
        "density": None if rep.density is None else _enc_complex(rep.density),
        "geometry": None if rep.geometry is None else _geometry_spec(rep.geometry),
        "boundary_radius": rep.boundary_radius,
        "eta": rep.eta,
    }
    save_json(doc, path)


def load_representation(path: str) -> ExteriorRepresentation:
    doc = load_json(path)
    coeff = doc.get("coefficients")
    dens = doc.get("density")
    geo_spec = doc.get("geometry")
    return ExteriorRepresentation(
        kind=_need(doc, "kind", path),
        k=float(_need(doc, "k", path)),
        omega=_dec_real(_need(doc, "omega", path)),
        coefficients=None if coeff is None else _dec_complex(coeff),
        density=None if dens is None else _dec_complex(dens),
        geometry=None if geo_spec is None else _rebuild_geometry(geo_spec, path),
        boundary_radius=doc.get("boundary_radius"),
        eta=doc.get("eta"),
        meta=dict(doc.get("meta", {})),
    )


def _jsonable_meta(meta: Dict) -> Dict:
    """Keep only scalars and short strings; arrays inside meta are
    derived data and reconstructible."""
    out = {}
    for key, val in meta.items():
        if isinstance(val, (bool, int, float, str)) or val is None:
            out[key] = val
        elif isinstance(val, (np.integer, np.floating)):
            out[key] = val.item()
    return out


# ---------------------------------------------------------------------------
# sweep tables
# ---------------------------------------------------------------------------

SWEEP_HEADER = "eps,seed,farfield_gap,err_linf,err_l2,mask_fraction"


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def save_sweep_csv(
    records: Sequence[SweepRecord],
    path: str,
    config_hash: Optional[str] = None,
    extra_meta: Optional[Dict] = None,
) -> None:
    lines = []
    meta = meta_block(config_hash, **(extra_meta or {}))
    for key in sorted(meta):
        lines.append(f"# {key} = {meta[key]}")
    flagged = [r for r in records if r.flag]
    for r in flagged:
        lines.append(f"# flagged: seed {r.seed} eps {_fmt(r.eps)}: {r.flag}")
    lines.append(SWEEP_HEADER)
    for r in records:
        lines.append(
            ",".join(
                [
                    _fmt(r.eps),
                    str(int(r.seed)),
                    _fmt(r.farfield_gap),
                    _fmt(r.err_linf),
                    _fmt(r.err_l2),
                    _fmt(r.mask_fraction),
                ]
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_sweep_csv(path: str) -> Tuple[List[SweepRecord], Dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise PersistenceError(f"cannot read {path}: {exc}") from exc
    meta: Dict = {}
    records: List[SweepRecord] = []
    seen_header = False
    for lineno, line in enumerate(raw, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body and not body.startswith("flagged"):
                key, _, val = body.partition("=")
                meta[key.strip()] = val.strip()
            continue
        if not seen_header:
            if line.strip() != SWEEP_HEADER:
                raise PersistenceError(
                    f"{path}: line {lineno}: expected header {SWEEP_HEADER!r}, "
                    f"got {line.strip()!r}"
                )
            seen_header = True
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise PersistenceError(
                f"{path}: line {lineno}: expected 6 fields, got {len(parts)}"
            )
        try:
            records.append(
                SweepRecord(
                    eps=float(parts[0]),
                    seed=int(parts[1]),
                    farfield_gap=float(parts[2]),
                    err_linf=float(parts[3]),
                    err_l2=float(parts[4]),
                    mask_fraction=float(parts[5]),
                )
            )
        except ValueError as exc:
            raise PersistenceError(f"{path}: line {lineno}: {exc}") from exc
    if not seen_header:
        raise PersistenceError(f"{path}: no header line found")
    return records, meta


# ---------------------------------------------------------------------------
# probe reports and plot data
# ---------------------------------------------------------------------------


def save_report(report: ProbeReport, path: str, config_hash=None) -> None:
    doc = {
        "type": "probe_report",
        "meta": meta_block(config_hash),
        "probe": report.probe,
        "tolerance": report.tolerance,
        "passed": report.passed,
        "notices": list(report.notices),
        "extra": _jsonable_extra(report.extra),
        "rows": [
            {
                "case": row.case,
                "inputs": _jsonable_extra(row.inputs),
                "lhs": _enc_float(row.lhs),
                "rhs": _enc_float(row.rhs),
                "ratio": None if row.ratio is None else _enc_float(row.ratio),
            }
            for row in report.rows
        ],
    }
    save_json(doc, path)


def _jsonable_extra(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable_extra(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable_extra(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _enc_float(float(obj))
    if isinstance(obj, np.ndarray):
        return [_jsonable_extra(v) for v in obj.tolist()]
    return obj


def write_plot_data(path: str, x, y, comment: str = "") -> None:
    """Two-column whitespace-separated (x, y) file, one curve per file."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise PersistenceError(
            f"plot columns disagree: x has {x.shape[0]} rows, y has {y.shape[0]}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for xi, yi in zip(x, y):
            fh.write(f"{_fmt(xi)} {_fmt(yi)}\n")
