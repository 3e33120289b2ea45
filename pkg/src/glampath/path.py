"""Regularization paths with warm starts, prediction and held-out error."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .arrays import TensorDesign, h_map
from .family import Family, Observations
from .outer import OuterConfig, outer_solve
from .penalty import Penalty, lambda_max

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathConfig:
    n_lambda: int = 100
    lambda_min_ratio: float = 1e-4
    outer: OuterConfig = field(default_factory=OuterConfig)

    def __post_init__(self):
        if self.n_lambda < 1:
            raise ValueError("n_lambda must be positive")
        if not 0 < self.lambda_min_ratio < 1:
            raise ValueError("lambda_min_ratio must lie in (0, 1)")


@dataclass
class FitPath:
    lambdas: np.ndarray
    fits: list            # flat coefficient vectors, one per fitted lambda
    objectives: list
    diagnostics: list     # dicts: outer_iters, inner_iters, converged, status
    truncated: bool = False
    lambda_max: Optional[float] = None

    def __len__(self):
        return len(self.fits)

    def nonzero(self) -> list:
        return [int(np.count_nonzero(theta)) for theta in self.fits]


def lambda_sequence(lam_max: float, config: PathConfig = PathConfig()) -> np.ndarray:
    """``n_lambda`` log-uniform values from ``lam_max`` down to
    ``lam_max * lambda_min_ratio``."""
    if not lam_max > 0:
        raise ValueError("lambda_max must be positive")
    if config.n_lambda == 1:
        return np.array([lam_max])
    return lam_max * np.logspace(0.0, np.log10(config.lambda_min_ratio), config.n_lambda)


def fit_path(design: TensorDesign, family: Family, data: Observations, penalty: Penalty,
             config: PathConfig = PathConfig(),
             lambdas: Optional[Sequence[float]] = None) -> FitPath:
    """Fit a decreasing lambda sequence, warm-starting each fit at the last.

    Without explicit ``lambdas`` the sequence starts at ``lambda_max``. If a
    later fit fails to converge the path is cut there and flagged.
    """
    lam_max = None
    if lambdas is None:
        lam_max = lambda_max(design, family, data, penalty)
        if lam_max == 0:
            raise ValueError("lambda_max is zero: the zero vector is optimal for every lambda")
        lambdas = lambda_sequence(lam_max, config)
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0 or np.any(lambdas < 0):
        raise ValueError("lambdas must be a non-empty sequence of nonnegative values")
    if np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambdas must be strictly decreasing")

    theta = design.zeros()
    path = FitPath(lambdas=lambdas, fits=[], objectives=[], diagnostics=[], lambda_max=lam_max)
    for t, lam in enumerate(lambdas):
        res = outer_solve(design, family, data, float(lam), penalty, config.outer, init=theta)
        if not res.converged:
            if t == 0:
                raise RuntimeError(f"first model (lambda={lam:g}) failed: {res.trace.status}")
            logger.warning("path truncated at lambda index %d (%s)", t, res.trace.status)
            path.truncated = True
            path.lambdas = lambdas[:t]
            break
        theta = res.theta
        path.fits.append(theta)
        path.objectives.append(res.objective)
        path.diagnostics.append({
            "outer_iters": len(res.trace.steps),
            "inner_iters": res.trace.inner_iterations,
            "converged": res.converged,
            "status": res.trace.status,
            "objective_trace": res.trace.objectives,
        })
    return path


def predict(design: TensorDesign, family: Family, coef) -> tuple:
    """Linear predictor and mean arrays for a coefficient vector or block list."""
    eta = h_map(design, coef)
    return eta, family.mean(eta)


def mse_heldout(path: FitPath, design: TensorDesign, family: Family, Y_full,
                mask) -> tuple:
    """Sum of squared errors of the fitted mean over the held-out cells.

    Returns the per-lambda errors and the index of the smallest one.
    """
    Y_full = np.asarray(Y_full, dtype=float)
    mask = np.asarray(mask).astype(bool)
    if mask.shape != design.dims or Y_full.shape != design.dims:
        raise ValueError("truth and mask must match the design rows")
    if not mask.any():
        raise ValueError("held-out mask is empty")
    errors = np.array([
        float(np.sum((predict(design, family, theta)[1][mask] - Y_full[mask]) ** 2))
        for theta in path.fits
    ])
    return errors, int(np.argmin(errors))
