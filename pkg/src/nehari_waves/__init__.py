"""Traveling ground waves of FPU-type atomic chains with a double-well
potential, computed by a constrained gradient flow on the Nehari manifold
and validated against the chain dynamics."""

from .averaging import OperatorMode, average, average_adjoint, difference_derivative
from .errors import BlowupError, CsvFormatError, DegenerateProfileError
from .flow import (
    FlowConfig,
    ProjectionMode,
    RunSummary,
    align_profiles,
    continue_in_K,
    solve,
    tail_mass,
)
from .functionals import (
    FunctionalValues,
    evaluate,
    grad_action,
    grad_constraint,
    multiplier,
    psi,
)
from .grid import (
    GridProfile,
    GridSpec,
    ModelParams,
    inner,
    norm2_sq,
    norm_r,
    read_profile_csv,
    write_profile_csv,
)
from .lattice import ChainState, embed_wave, integrate, validate_wave
from .nehari import (
    RayCoefficients,
    amplitude_threshold,
    nehari_estimates,
    project_to_nehari,
    ray_maximizer,
)

__version__ = "0.1.0"

__all__ = [
    "OperatorMode",
    "average",
    "average_adjoint",
    "difference_derivative",
    "BlowupError",
    "CsvFormatError",
    "DegenerateProfileError",
    "FlowConfig",
    "ProjectionMode",
    "RunSummary",
    "align_profiles",
    "continue_in_K",
    "solve",
    "tail_mass",
    "FunctionalValues",
    "evaluate",
    "grad_action",
    "grad_constraint",
    "multiplier",
    "psi",
    "GridProfile",
    "GridSpec",
    "ModelParams",
    "inner",
    "norm2_sq",
    "norm_r",
    "read_profile_csv",
    "write_profile_csv",
    "ChainState",
    "embed_wave",
    "integrate",
    "validate_wave",
    "RayCoefficients",
    "amplitude_threshold",
    "nehari_estimates",
    "project_to_nehari",
    "ray_maximizer",
    "__version__",
]
