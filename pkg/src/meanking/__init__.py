"""Simulation and verification toolkit for the King's problem with three
non-orthogonal spin observables n_k . sigma."""

from .errors import (
    DegenerateTriple,
    FormMismatch,
    Infeasible,
    InvariantViolation,
    KingError,
    NonHermitian,
    NonUnitVector,
    ProbabilityLeak,
    ROutOfRange,
)
from .povm import (
    LABELS,
    SIGN_VECTORS,
    CoefficientSet,
    FeasibilityReport,
    PovmSet,
    VectorTriple,
    ben_menahem_check,
    build_povm,
    classify_degenerate,
    dual_kets,
    feasibility,
    gram,
    reciprocal_basis,
    reduce_to_projective,
    solve_coefficients,
    verify_povm,
)
from .protocol import ProtocolConfig, infer, run

__all__ = [
    "CoefficientSet",
    "DegenerateTriple",
    "FeasibilityReport",
    "FormMismatch",
    "Infeasible",
    "InvariantViolation",
    "KingError",
    "LABELS",
    "NonHermitian",
    "NonUnitVector",
    "PovmSet",
    "ProbabilityLeak",
    "ProtocolConfig",
    "ROutOfRange",
    "SIGN_VECTORS",
    "VectorTriple",
    "ben_menahem_check",
    "build_povm",
    "classify_degenerate",
    "dual_kets",
    "feasibility",
    "gram",
    "infer",
    "reciprocal_basis",
    "reduce_to_projective",
    "run",
    "solve_coefficients",
    "verify_povm",
]

__version__ = "0.1.0"
