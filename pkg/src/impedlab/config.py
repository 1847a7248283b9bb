"""Experiment configuration: sectioned TOML files validated against the
a-priori class before anything runs.

A config names a geometry, an incident wave, an impedance, and the
experiment parameters.  Validation collects EVERY violated bound into
one message instead of stopping at the first, because a config is
usually edited by hand and a complete list saves round trips.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import DomainError, ValidationError
from .fields import ImpedanceField, IncidentWave, sampled_c01_norm
from .geometry import FAMILIES, BoundaryGeometry, build_geometry

__all__ = ["RunConfig", "load_config", "parse_config", "validate_config"]

GEOMETRY_PARAM_KEYS = ("radius", "arms", "amplitude")


@dataclass
class RunConfig:
    """Parsed and validated experiment definition."""

    geometry: Dict
    wave: Dict
    impedance: Dict
    discretization: Dict = field(default_factory=dict)
    experiment: Dict = field(default_factory=dict)
    output: Dict = field(default_factory=dict)
    source_text: str = ""
    path: Optional[str] = None

    def config_hash(self) -> str:
        """Hash of the literal config text, recorded in every artifact so
        a result file can be traced to the exact experiment definition."""
        return hashlib.sha256(self.source_text.encode()).hexdigest()[:16]

    # ---- constructors for the domain objects ----

    def build_geometry(self) -> BoundaryGeometry:
        sec = self.geometry
        kwargs = {k: sec[k] for k in GEOMETRY_PARAM_KEYS if k in sec}
        if sec["family"] == "star_polygon2d" and "grading" in self.discretization:
            kwargs["grading"] = int(self.discretization["grading"])
        return build_geometry(sec["family"], int(sec["n"]), **kwargs)

    def build_wave(self) -> IncidentWave:
        return IncidentWave(
            float(self.wave["k"]), np.asarray(self.wave["omega"], dtype=float)
        )

    def build_impedance(self) -> ImpedanceField:
        sec = self.impedance
        kind = sec["kind"]
        lam0 = float(sec.get("lambda0", 0.1))
        lam_cap = float(sec.get("Lambda", 10.0))
        if kind == "constant":
            data = float(sec["value"])
        elif kind == "fourier2d":
            data = (
                np.asarray(sec.get("cos", [0.0]), dtype=float),
                np.asarray(sec.get("sin", [0.0]), dtype=float),
            )
        elif kind == "axisym3d":
            data = np.asarray(sec["legendre"], dtype=float)
        else:
            raise ValidationError(f"unknown impedance kind {kind!r}")
        return ImpedanceField(kind, data, lambda0=lam0, c01_bound=lam_cap)

    def truncation(self) -> Optional[int]:
        n = int(self.discretization.get("truncation", 0))
        return n if n > 0 else None

    def seed(self) -> int:
        return int(self.experiment.get("seed", 1234))

    def eps_grid(self) -> List[float]:
        return [float(e) for e in self.experiment.get("eps_grid", [1e-2])]


def parse_config(text: str, path: Optional[str] = None) -> RunConfig:
    """TOML text to RunConfig, without class validation."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        where = f"{path}: " if path else ""
        raise ValidationError(f"{where}config parse error: {exc}") from exc
    missing = [s for s in ("geometry", "wave", "impedance") if s not in doc]
    if missing:
        raise ValidationError(f"config missing required sections: {missing}")
    return RunConfig(
        geometry=doc["geometry"],
        wave=doc["wave"],
        impedance=doc["impedance"],
        discretization=doc.get("discretization", {}),
        experiment=doc.get("experiment", {}),
        output=doc.get("output", {}),
        source_text=text,
        path=path,
    )


def validate_config(cfg: RunConfig) -> List[str]:
    """Collect every violated bound of the admissible class.

    Checked: k > 0, |omega| = 1 and dimension matching the geometry,
    lambda0 > 0, sampled impedance >= lambda0, its Lipschitz seminorm
    below Lambda, the origin interior to the obstacle, and the
    experiment section's mode/trials/eps ranges.
    """
    msgs: List[str] = []
    sec = cfg.geometry
    if "family" not in sec or "n" not in sec:
        return ["geometry section needs 'family' and 'n'"]
    if sec["family"] not in FAMILIES:
        return [f"unknown geometry family {sec['family']!r}; expected {FAMILIES}"]
    try:
        geom = cfg.build_geometry()
    except (DomainError, ValidationError) as exc:
        return [f"geometry: {exc}"]

    k = float(cfg.wave.get("k", 0.0))
    if not k > 0.0:
        msgs.append(f"wave.k = {k} violates k > 0")
    omega = np.asarray(cfg.wave.get("omega", []), dtype=float)
    if omega.shape != (geom.dim,):
        msgs.append(
            f"wave.omega has shape {omega.shape}, geometry is {geom.dim}D"
        )
    elif abs(np.linalg.norm(omega) - 1.0) > 1e-12:
        msgs.append(f"wave.omega has |omega| = {np.linalg.norm(omega):.6g}, not 1")

    if np.min(np.linalg.norm(geom.nodes, axis=1)) <= 0.0:
        msgs.append("geometry does not contain the origin in its interior")

    lam0 = float(cfg.impedance.get("lambda0", 0.1))
    if not lam0 > 0.0:
        msgs.append(f"impedance.lambda0 = {lam0} violates lambda0 > 0")
    try:
        imp = cfg.build_impedance()
        wave_ok = omega.shape == (geom.dim,)
        vals = imp.values_on(geom, omega if wave_ok else None)
    except (DomainError, ValidationError) as exc:
        msgs.append(f"impedance: {exc}")
    else:
        if lam0 > 0.0 and np.min(vals) < lam0 - 1e-12:
            msgs.append(
                f"min impedance = {np.min(vals):.6g} violates lambda >= "
                f"lambda0 = {lam0}"
            )
        c01 = sampled_c01_norm(geom, vals)
        lam_cap = float(cfg.impedance.get("Lambda", 10.0))
        if c01 > lam_cap * (1.0 + 1e-9):
            msgs.append(
                f"impedance C^{{0,1}} norm = {c01:.6g} violates the bound "
                f"Lambda = {lam_cap}"
            )

    exp = cfg.experiment
    mode = exp.get("mode", "noise")
    if mode not in ("noise", "pair"):
        msgs.append(f"experiment.mode = {mode!r} must be 'noise' or 'pair'")
    trials = int(exp.get("trials", 1))
    if trials < 1:
        msgs.append(f"experiment.trials = {trials} must be >= 1")
    if any(float(e) < 0.0 for e in exp.get("eps_grid", [])):
        msgs.append("experiment.eps_grid entries must be nonnegative")
    return msgs


def load_config(path: str) -> RunConfig:
    """Parse and validate; raises ValidationError listing every violated
    bound when the config leaves the admissible class."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    cfg = parse_config(text, path=path)
    violations = validate_config(cfg)
    if violations:
        raise ValidationError(
            "config violates the admissible class:\n  - " + "\n  - ".join(violations)
        )
    return cfg
