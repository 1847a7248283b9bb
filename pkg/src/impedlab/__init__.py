"""impedlab: a numerical laboratory for exterior impedance scattering.

Forward solvers (separated variables and a Nystrom boundary integral
method), far-field maps and their inverses, boundary Sobolev norms,
impedance recovery from far-field data, and probes that exercise the
quantitative estimates relating far-field perturbations to boundary
impedance perturbations.
"""

from .errors import (
    AccuracyWarning,
    ConsistencyError,
    DomainError,
    IllConditionedError,
    ImpedLabError,
    InvalidGeometryError,
    NoDataError,
    PersistenceError,
    ReconstructionError,
    TruncationCapWarning,
    ValidationError,
)
from .fields import (
    BoundaryTrace,
    ExteriorRepresentation,
    ImpedanceField,
    IncidentWave,
    evaluate_field,
    flux_through_radius,
)
from .geometry import (
    FAMILIES,
    BoundaryGeometry,
    BoundaryPatch,
    boundary_patch,
    build_geometry,
)
from .modal import default_truncation, solve_modal
from .nystrom import solve_nystrom_2d
from .farfield import (
    FarFieldPattern,
    alpha_of,
    asymptotic_defect,
    compute_far_field,
    far_to_near,
    mode_amplification,
    pattern_gap,
    perturb_pattern,
)
from .norms import (
    BoundaryFunction,
    interpolation_check,
    sobolev_norm,
    sup_norm,
)
from .reconstruction import (
    ImpedanceEstimate,
    bound_at,
    eta,
    eta_eta,
    impedance_from_trace,
    paper_r_choice,
    reconstruct_from_farfield,
    weighted_interpolation_bound,
)
from .probes import (
    CollarSamples,
    ProbeReport,
    ProbeRow,
    SweepConfig,
    SweepRecord,
    collar_samples,
    far_lower_bound_probe,
    fit_modulus,
    pair_gap_probes,
    rellich_trace_probes,
    stability_sweep,
    vanishing_rate_probe,
)
from .config import RunConfig, load_config
from .wavefunctions import (
    KINDS,
    MAX_ORDER,
    eval_wave_function,
    recurrence_residual,
    wronskian_residual,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ImpedLabError", "DomainError", "InvalidGeometryError", "ValidationError",
    "IllConditionedError", "NoDataError", "ReconstructionError",
    "PersistenceError", "ConsistencyError", "AccuracyWarning",
    "TruncationCapWarning",
    # wave functions
    "KINDS", "MAX_ORDER", "eval_wave_function", "wronskian_residual",
    "recurrence_residual",
    # geometry
    "FAMILIES", "BoundaryGeometry", "BoundaryPatch", "build_geometry",
    "boundary_patch",
    # fields and solvers
    "IncidentWave", "ImpedanceField", "BoundaryTrace",
    "ExteriorRepresentation", "evaluate_field", "flux_through_radius",
    "solve_modal", "default_truncation", "solve_nystrom_2d",
    # far field
    "FarFieldPattern", "compute_far_field", "far_to_near", "pattern_gap",
    "perturb_pattern", "asymptotic_defect", "mode_amplification", "alpha_of",
    # norms
    "BoundaryFunction", "sobolev_norm", "sup_norm", "interpolation_check",
    # reconstruction
    "ImpedanceEstimate", "impedance_from_trace", "reconstruct_from_farfield",
    "weighted_interpolation_bound", "bound_at", "paper_r_choice", "eta",
    "eta_eta",
    # probes
    "ProbeRow", "ProbeReport", "CollarSamples", "collar_samples",
    "vanishing_rate_probe", "rellich_trace_probes", "pair_gap_probes",
    "far_lower_bound_probe", "SweepConfig", "SweepRecord", "stability_sweep",
    "fit_modulus",
    # configuration
    "RunConfig", "load_config",
]
