"""Selective confidence intervals for the l1 Wasserstein distance between two noisy samples."""

from ._errors import (
    DegenerateDirection,
    DegenerateSolution,
    DimensionMismatch,
    EmptyRegion,
    InfeasibleProblem,
    NumericalFailure,
    NumericalUnderflow,
    ParseError,
    RootNotBracketed,
    SingularBasis,
    SingularMatrix,
    WassCIError,
)
from .estimator import SelectiveWassersteinCI
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    generate_instance,
    run_coverage_experiment,
    run_length_experiment,
    run_robustness_experiment,
    run_timing_experiment,
)
from .io import load_two_sample_csv, read_covariance_csv, read_sample_csv, write_lp_dump
from .model import (
    CostDecomposition,
    LpSolution,
    ProblemInstance,
    TransportProblem,
    build_cost_decomposition,
    build_transport_problem,
    distance_from_basis,
)
from .numerics import ExtendedInterval, log_gauss_mass, normal_cdf, normal_quantile, solve_dense
from .selective import (
    ConfidenceInterval,
    SelectionLine,
    SelectiveResult,
    TruncationRegion,
    compute_z1,
    compute_z2,
    naive_ci,
    nuisance_line,
    run_algorithm_1,
    selective_ci,
    truncated_normal_cdf,
)
from .transport import SolverOptions, relative_costs, solve_transport, vertex_interval

__version__ = "0.1.0"
