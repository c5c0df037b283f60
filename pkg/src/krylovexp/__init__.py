"""Krylov subspace approximation of exp(sigma t A) v and phi_p(sigma t A) v
with a-posteriori error bounds, estimates, and restarted step-size control."""

from .approximant import (Approximant, DefectRoundoffError, DefectSample,
                          effective_order)
from .dense import expm_dense, phi_dense, phi_scalar
from .estimators import (ErrorEstimate, era, era_corrected, err1,
                         expokit_first_step, quad_estimates, write_sweep_csv)
from .krylov import (KrylovConfig, KrylovDecomposition, build_krylov,
                     extend_krylov)
from .oracle import oracle_laplacian, oracle_phi, oracle_series
from .problems import (ProblemSpec, build_convection_diffusion, build_heat,
                       build_hubbard, build_schrodinger, starting_vector)
from .sparse import SparseOperator, log_norm_estimate, validate_prefactor
from .stepper import (ControllerSpec, PropagationResult, StepRecord,
                      early_stop_dimension, propagate, propagate_fixed_steps,
                      step_size_direct, step_size_heuristic,
                      step_size_iterated, write_bench_csv)

__version__ = "0.1.0"

__all__ = [
    "Approximant", "ControllerSpec", "DefectRoundoffError", "DefectSample",
    "ErrorEstimate", "KrylovConfig", "KrylovDecomposition",
    "PropagationResult", "ProblemSpec", "SparseOperator", "StepRecord",
    "build_convection_diffusion", "build_heat", "build_hubbard",
    "build_krylov", "build_schrodinger", "early_stop_dimension",
    "effective_order", "era", "era_corrected", "err1", "expm_dense",
    "expokit_first_step", "extend_krylov", "log_norm_estimate",
    "oracle_laplacian", "oracle_phi", "oracle_series", "phi_dense",
    "phi_scalar", "propagate", "propagate_fixed_steps", "quad_estimates",
    "starting_vector", "step_size_direct", "step_size_heuristic",
    "step_size_iterated", "validate_prefactor", "write_bench_csv",
    "write_sweep_csv",
]
