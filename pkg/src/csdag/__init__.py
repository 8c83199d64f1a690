"""Corrected-score estimation of Gaussian Bayesian networks from
error-prone node measurements.

The package fits a directed acyclic network over p jointly measured
variables, some rows of which intervene a single node, when the
measurements carry known additive Gaussian error.  Estimation couples
SCAD-penalized objectives (a corrected-score sandwich form, or the naive
log-likelihood that ignores the error) with cycle elimination by topological
sorting, plus tuning-parameter selectors and a Monte Carlo harness.
"""

from .core import (
    NO_INTERVENTION,
    ZERO_THRESHOLD,
    CoefMatrix,
    DataSet,
    ErrorSpec,
    PenaltyParams,
    observational_rows,
    validate,
)
from .dag import (
    DirectedGraph,
    TopoResult,
    graph_from_coefs,
    is_dag,
    kahn_eliminate,
)
from .estimators import (
    EstimatorConfig,
    FitResult,
    fit_nps,
    fit_pcd_corrected,
    fit_pcd_naive,
)
from .exceptions import (
    ArgumentError,
    CsdagError,
    DataValidationError,
    NumericalError,
)
from .metrics import GraphEval, evaluate_coefs, evaluate_graph, frob_scaled
from .penalty import scad, scad_d1, scad_d2
from .score import (
    ScoreContext,
    corrected_ls,
    h_matrix,
    mean_score,
    naive_v,
    psi,
    sandwich_pvalues,
    v_quadratic,
)
from .simgen import (
    ContaminationSpec,
    TrueNetwork,
    contaminate,
    gen_data,
    random_dag,
    simulate_dataset,
)
from .tuning import (
    LambdaGrid,
    RcpParams,
    default_lambda_grid,
    select_lambda_rcp,
    select_lambda_sic,
    sic,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "CoefMatrix",
    "ContaminationSpec",
    "CsdagError",
    "DataSet",
    "DataValidationError",
    "DirectedGraph",
    "ErrorSpec",
    "EstimatorConfig",
    "FitResult",
    "GraphEval",
    "LambdaGrid",
    "NO_INTERVENTION",
    "NumericalError",
    "PenaltyParams",
    "RcpParams",
    "ScoreContext",
    "TopoResult",
    "TrueNetwork",
    "ZERO_THRESHOLD",
    "contaminate",
    "corrected_ls",
    "default_lambda_grid",
    "evaluate_coefs",
    "evaluate_graph",
    "fit_nps",
    "fit_pcd_corrected",
    "fit_pcd_naive",
    "frob_scaled",
    "gen_data",
    "graph_from_coefs",
    "h_matrix",
    "is_dag",
    "kahn_eliminate",
    "mean_score",
    "naive_v",
    "observational_rows",
    "psi",
    "random_dag",
    "sandwich_pvalues",
    "scad",
    "scad_d1",
    "scad_d2",
    "select_lambda_rcp",
    "select_lambda_sic",
    "sic",
    "simulate_dataset",
    "v_quadratic",
    "validate",
]
