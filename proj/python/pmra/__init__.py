"""Projected multi-reference alignment: moments, orbit recovery, estimators."""

from ._core import (
    CosineMatrix,
    CosineMomentSet,
    DihedralElement,
    EMConfig,
    FitResult,
    MomentKind,
    MomentSet,
    ObservationBatch,
    OptConfig,
    RecoveryError,
    RecoveryTrace,
    __version__,
    debias,
    dft,
    em_fit,
    empirical_moments,
    fit_M,
    fit_T,
    generate,
    generic_signal,
    idft,
    orbit,
    orbit_distance,
    population_cosine_moments,
    population_moments,
    project,
    projected_orbit_sample,
    reconstruct,
    to_cosine,
)

__all__ = [
    "CosineMatrix",
    "CosineMomentSet",
    "DihedralElement",
    "EMConfig",
    "FitResult",
    "MomentKind",
    "MomentSet",
    "ObservationBatch",
    "OptConfig",
    "RecoveryError",
    "RecoveryTrace",
    "__version__",
    "debias",
    "dft",
    "em_fit",
    "empirical_moments",
    "fit_M",
    "fit_T",
    "generate",
    "generic_signal",
    "idft",
    "orbit",
    "orbit_distance",
    "population_cosine_moments",
    "population_moments",
    "project",
    "projected_orbit_sample",
    "reconstruct",
    "to_cosine",
]
