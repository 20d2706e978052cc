# All-at-once space-time solver library

from .discretization import (
    AllAtOnceSystem,
    Grid2D,
    SpatialPair,
    TimeStencil,
    apply_L,
    assemble,
    bdf_stencil,
    build_convdiff,
    build_heat_fd,
    build_heat_q1,
    dense_L,
    sequential_solve,
)
from .errors import (
    ConfigError,
    ConjugateSymmetryError,
    ContractViolation,
    DomainError,
    InnerSolverError,
    SpaceTimeError,
)
from .krylov import GmresConfig, SolveReport, gmres_solve, residual_metrics, solve_system
from .operators import OpCounter, ToeplitzSpec, kron_matvec, spmv, time_matrix, toeplitz_matvec
from .preconditioner import (
    BECPreconditioner,
    bec_eigenvalues,
    choose_epsilon,
    inner_solve_dense,
    inner_solve_fst,
    inner_solve_multigrid,
    r_eps_pattern,
    reconstruct_R_eps,
)
from .problems import EXAMPLES, build_system
from .transforms import FourierPlan, SinePlan, dst1_apply, fft_apply

__all__ = [
    "AllAtOnceSystem",
    "Grid2D",
    "SpatialPair",
    "TimeStencil",
    "apply_L",
    "assemble",
    "bdf_stencil",
    "build_convdiff",
    "build_heat_fd",
    "build_heat_q1",
    "dense_L",
    "sequential_solve",
    "ConfigError",
    "ConjugateSymmetryError",
    "ContractViolation",
    "DomainError",
    "InnerSolverError",
    "SpaceTimeError",
    "GmresConfig",
    "SolveReport",
    "gmres_solve",
    "residual_metrics",
    "solve_system",
    "OpCounter",
    "ToeplitzSpec",
    "kron_matvec",
    "spmv",
    "time_matrix",
    "toeplitz_matvec",
    "BECPreconditioner",
    "bec_eigenvalues",
    "choose_epsilon",
    "inner_solve_dense",
    "inner_solve_fst",
    "inner_solve_multigrid",
    "r_eps_pattern",
    "reconstruct_R_eps",
    "EXAMPLES",
    "build_system",
    "FourierPlan",
    "SinePlan",
    "dst1_apply",
    "fft_apply",
]
