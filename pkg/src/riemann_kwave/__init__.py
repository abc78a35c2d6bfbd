"""Riemann simple waves and k-waves of hyperbolic systems ``A^i(u) u_i = 0``."""

from .errors import (
    CatastropheError,
    ConfigError,
    ContractError,
    CoverageError,
    DomainError,
    FrameDegeneracyError,
    NoConvergenceError,
    NonHyperbolicError,
    NotAWaveVectorError,
    PartialSurfaceError,
    RiemannKWaveError,
)
from .estimator import RiemannKWave
from .geometry import (
    Frame,
    check_involutivity,
    commutation_residual,
    lie_bracket,
    make_frame,
    span_distance,
)
from .kwave import (
    ImplicitProfile,
    KWaveSolution,
    NewtonSettings,
    WaveSurface,
    check_lambda_constraints,
    evaluate,
    integrate_surface,
    path_independence_error,
    sample_grid,
    solve_invariants,
)
from .models import HydroModel, eval_matrices, get_model, list_models, model_from_config
from .symmetry import (
    annihilating_fields,
    annihilators,
    invariance_residual,
    rectification_check,
    reduced_system_residual,
)
from .io import read_solution, write_solution
from .verify import pde_residual, solution_rank, verify_grid
from .wave import WaveBranch, characteristic_branches, kernel_vector, wave_relation_residual

__version__ = "0.1.0"
