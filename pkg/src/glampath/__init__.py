"""Matrix-free penalized estimation for generalized linear array models."""

from .arrays import TensorDesign, g_map, h_map, linear_index, rho
from .family import Family, FamilyEvaluationError, Observations
from .inner import InnerConfig, InnerProblem, fista_solve
from .outer import OuterConfig, outer_solve
from .path import FitPath, PathConfig, fit_path, lambda_sequence, mse_heldout, predict
from .penalty import Penalty, lambda_max
from .splines import bspline_design, default_basis_count

__all__ = [
    "TensorDesign", "rho", "h_map", "g_map", "linear_index",
    "Family", "FamilyEvaluationError", "Observations",
    "Penalty", "lambda_max",
    "InnerConfig", "InnerProblem", "fista_solve",
    "OuterConfig", "outer_solve",
    "PathConfig", "FitPath", "fit_path", "lambda_sequence", "predict", "mse_heldout",
    "bspline_design", "default_basis_count",
]
