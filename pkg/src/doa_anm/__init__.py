"""Gridless 2-D DOA estimation for L-shaped arrays by cross-covariance atomic norm minimization."""

from .array_model import (
    ArrayGeometry,
    Atom,
    DomainError,
    Snapshots,
    SourceConfig,
    analytic_ccm,
    electrical_to_physical,
    make_atom,
    simulate,
    steering_vector,
)
from .covariance import (
    ConfigurationError,
    CrossCovariance,
    ErrorModel,
    chi2_quantile,
    estimate_error_model,
    sample_ccm,
    selection_operator,
    whiten,
)
from .estimators import CCANM, MCCANM
from .metrics import match_and_rmse
from .retrieval import DoaEstimate, VandermondeDecomposition, decompose, estimate_rank, retrieve
from .solver import (
    NumericError,
    SdpProblem,
    SdpSolution,
    SolverOptions,
    Status,
    Variant,
    ellipsoid_project,
    psd_project,
    solve,
)
from .toeplitz import TwoLevelToeplitz, from_atoms, project_structure

__version__ = "0.1.0"
