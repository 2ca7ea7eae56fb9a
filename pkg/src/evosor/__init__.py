"""Relaxed Jacobi/Gauss-Seidel solvers with evolutionary relaxation-factor adaptation."""

from .linsys import (
    JacobiOperator,
    LinearSystem,
    SingularSystemError,
    SpectralEstimationError,
    as_linear_system,
    direct_solve,
    gauss_seidel_sweep,
    iteration_matrix,
    jacobi_sweep,
    operator_norm_inf,
    residual_error,
    spectral_radius,
)
from .solvers import (
    CONVERGED,
    DIVERGED,
    ITERATION_LIMIT,
    GaussSeidelSolver,
    JacobiSolver,
    SolveResult,
    gauss_seidel_solve,
    jacobi_solve,
)
from .hybrid import (
    GenerationTrace,
    HybridSolver,
    adapt_pair,
    evolve,
    initial_omegas,
    recombine,
    select_reproduce,
    time_variant_factor,
)
from .problems import (
    PRESETS,
    ProblemFamily,
    ProblemFormatError,
    generate,
    load_problem,
    save_problem,
)

__version__ = "0.1.0"

__all__ = [
    "JacobiOperator",
    "LinearSystem",
    "SingularSystemError",
    "SpectralEstimationError",
    "as_linear_system",
    "direct_solve",
    "gauss_seidel_sweep",
    "iteration_matrix",
    "jacobi_sweep",
    "operator_norm_inf",
    "residual_error",
    "spectral_radius",
    "CONVERGED",
    "DIVERGED",
    "ITERATION_LIMIT",
    "GaussSeidelSolver",
    "JacobiSolver",
    "SolveResult",
    "gauss_seidel_solve",
    "jacobi_solve",
    "GenerationTrace",
    "HybridSolver",
    "adapt_pair",
    "evolve",
    "initial_omegas",
    "recombine",
    "select_reproduce",
    "time_variant_factor",
    "PRESETS",
    "ProblemFamily",
    "ProblemFormatError",
    "generate",
    "load_problem",
    "save_problem",
    "__version__",
]
