"""Outer descent loop: reweighting, inner proximal solve, Armijo line search.

The objective minimized is ``F(theta) = -l(X theta)/n + lam * J(theta)``,
the scaling under which the inner least-squares subproblem is the local
quadratic model of ``F``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .arrays import TensorDesign, g_map_flat, h_map, outer_product
from .family import Family, Observations
from .inner import (
    InnerConfig,
    InnerDivergenceError,
    InnerProblem,
    fista_solve,
    lipschitz_tensor_exact,
    lipschitz_upper,
)
from .penalty import Penalty

logger = logging.getLogger(__name__)

WEIGHT_MODES = ("exact", "unit", "tensor_approx")


@dataclass(frozen=True)
class OuterConfig:
    max_outer: int = 100
    armijo_alpha0: float = 1.0
    armijo_b: float = 0.5
    armijo_v: float = 0.1
    armijo_max_steps: int = 50
    weight_mode: str = "exact"
    outer_tol: float = 1e-8
    inner: InnerConfig = field(default_factory=InnerConfig)

    def __post_init__(self):
        mode = {"one": "unit", "tensor": "tensor_approx"}.get(self.weight_mode, self.weight_mode)
        if mode not in WEIGHT_MODES:
            raise ValueError(f"unknown weight mode {self.weight_mode!r}")
        object.__setattr__(self, "weight_mode", mode)
        if self.max_outer < 1 or self.armijo_alpha0 <= 0 or self.outer_tol <= 0:
            raise ValueError("max_outer, armijo_alpha0 and outer_tol must be positive")
        if not (0 < self.armijo_b < 1 and 0 < self.armijo_v < 1):
            raise ValueError("armijo_b and armijo_v must lie in (0, 1)")


@dataclass
class OuterStep:
    objective: float
    alpha: float
    delta: float
    armijo_steps: int
    inner_iterations: int
    lipschitz: float


@dataclass
class OuterTrace:
    initial_objective: float
    steps: list = field(default_factory=list)
    converged: bool = False
    status: str = "running"
    weight_evaluations: int = 0

    @property
    def objectives(self) -> list:
        return [self.initial_objective] + [s.objective for s in self.steps]

    @property
    def inner_iterations(self) -> int:
        return sum(s.inner_iterations for s in self.steps)


@dataclass
class OuterResult:
    theta: np.ndarray
    objective: float
    trace: OuterTrace
    eta: np.ndarray = field(repr=False, default=None)

    @property
    def converged(self) -> bool:
        return self.trace.converged


def objective_from_eta(family: Family, data: Observations, eta, theta, lam: float,
                       penalty: Penalty) -> float:
    """``F = -l(eta)/n + lam J(theta)``."""
    return -family.loglik(data, eta) / eta.size + lam * penalty.value(theta)


def objective(design: TensorDesign, family: Family, data: Observations, theta,
              lam: float, penalty: Penalty) -> float:
    return objective_from_eta(family, data, h_map(design, theta), theta, lam, penalty)


def tensor_factors(V: np.ndarray) -> list:
    """Per-dimension geometric-mean factors whose outer product approximates ``V``.

    The raw factors reproduce a rank-one ``V`` only up to its overall
    geometric mean; that factor is folded back into the first dimension so
    rank-one weights are recovered exactly.
    """
    logV = np.log(np.asarray(V, dtype=float))
    d = logV.ndim
    log_mean = logV.mean()
    factors = []
    for j in range(d):
        others = tuple(k for k in range(d) if k != j)
        factors.append(np.exp(logV.mean(axis=others) - log_mean) if others
                       else np.exp(logV - log_mean))
    factors[0] = factors[0] * math.exp(log_mean)
    return factors


def compute_weights(mode: str, family: Family, eta: np.ndarray):
    """Weights for one outer iteration.

    Returns ``(V, factors)``; ``factors`` is the list of per-dimension weight
    vectors in tensor mode and ``None`` otherwise.
    """
    eta = np.asarray(eta, dtype=float)
    if mode == "unit":
        return np.ones(eta.shape, order="F"), None
    V = family.weights(eta)
    if mode == "exact":
        return V, None
    if mode == "tensor_approx":
        factors = tensor_factors(V)
        return outer_product(factors), factors
    raise ValueError(f"unknown weight mode {mode!r}")


def armijo_search(F: Callable, theta, eta, theta_tilde, eta_tilde, U, lam: float,
                  penalty: Penalty, config: OuterConfig, F_k: float = None):
    """Backtracking step along ``d = theta_tilde - theta``.

    ``F(eta, theta)`` evaluates the objective; trial predictors are convex
    combinations of ``eta`` and ``eta_tilde`` so no array map is needed per
    trial. Returns ``(alpha, theta_next, eta_next, F_next, j, delta_k)``;
    ``alpha`` is ``None`` when no step within ``armijo_max_steps`` satisfies
    the rule.
    """
    n = eta.size
    if F_k is None:
        F_k = F(eta, theta)
    d = theta_tilde - theta
    d_eta = eta_tilde - eta
    delta = -float(np.sum(U * d_eta)) / n + lam * (penalty.value(theta_tilde) - penalty.value(theta))
    # an inexact inner solve can give delta > 0; never accept an increase of F
    slope = min(delta, 0.0)
    for j in range(config.armijo_max_steps + 1):
        alpha = config.armijo_alpha0 * config.armijo_b**j
        theta_t = theta + alpha * d
        eta_t = eta + alpha * d_eta
        F_t = F(eta_t, theta_t)
        if F_t <= F_k + alpha * config.armijo_v * slope:
            return alpha, theta_t, eta_t, F_t, j, delta
    return None, theta, eta, F_k, config.armijo_max_steps, delta


def stationarity_residual(design: TensorDesign, family: Family, eta: np.ndarray,
                          theta: np.ndarray, U: np.ndarray, lam: float, penalty: Penalty,
                          V: Optional[np.ndarray] = None) -> float:
    """``max |theta - prox_{delta lam J}(theta - delta grad)|`` with
    ``grad = -X'U/n`` and ``delta = 1/L`` from the exact weights ``V``."""
    if V is None:
        V, _ = compute_weights("exact", family, eta)
    delta = 1.0 / lipschitz_upper(design, V)
    grad = -g_map_flat(design, U) / eta.size
    step = penalty.prox(delta * lam, theta - delta * grad)
    return float(np.max(np.abs(theta - step))) if theta.size else 0.0


def outer_solve(design: TensorDesign, family: Family, data: Observations, lam: float,
                penalty: Penalty, config: OuterConfig = OuterConfig(),
                init: Optional[np.ndarray] = None) -> OuterResult:
    """Penalized maximum likelihood for one lambda by the descent loop.

    Stops when ``|F_new - F_old| / max(1, |F_old|) < outer_tol``. This is
    quadratic in the step, so when the loop converges only linearly
    (non-canonical links, prior weights other than 1) the returned point is
    stationary only to about ``sqrt(outer_tol)``; see
    :func:`stationarity_residual`. A
    Gaussian model with unit prior weights has an exact quadratic model, so a
    single iteration suffices.
    """
    if data.shape != design.dims:
        raise ValueError(f"data shape {data.shape} does not match design rows {design.dims}")
    family.check_data(data)
    theta = design.zeros() if init is None else np.array(init, dtype=float)
    if theta.shape != (design.p,) or not np.all(np.isfinite(theta)):
        raise ValueError("init must be a finite flat vector of length p")

    def F(eta_, theta_):
        return objective_from_eta(family, data, eta_, theta_, lam, penalty)

    eta = h_map(design, theta)
    F_k = F(eta, theta)
    trace = OuterTrace(initial_objective=F_k)
    exact_quadratic = family.name == "gaussian" and bool(np.all(data.A == 1.0))
    mode = config.weight_mode

    for k in range(config.max_outer):
        U = family.score(data, eta)
        V, factors = compute_weights(mode, family, eta)
        trace.weight_evaluations += 1
        if mode == "exact":
            Z = family.working_response(data, eta)
        else:
            Z = U / V + eta

        if factors is not None and design.c == 1:
            L = lipschitz_tensor_exact(design, factors)
        else:
            L = lipschitz_upper(design, V)
        problem = InnerProblem(design, V, Z, lam, penalty, tensor_weights=factors, lipschitz=L)
        try:
            inner = fista_solve(problem, config.inner, init=theta)
        except InnerDivergenceError:
            logger.warning("inner loop diverged at outer iteration %d", k)
            trace.status = "inner_diverged"
            break
        theta_tilde, eta_tilde = inner.theta, inner.eta

        if exact_quadratic and F(eta_tilde, theta_tilde) <= F_k:
            # the inner problem is F up to a constant: take its minimizer as is
            alpha, j = 1.0, 0
            delta = float("nan")
            theta, eta, F_new = theta_tilde, eta_tilde, F(eta_tilde, theta_tilde)
        else:
            alpha, theta_new, eta_new, F_new, j, delta = armijo_search(
                F, theta, eta, theta_tilde, eta_tilde, U, lam, penalty, config, F_k)
            if alpha is None:
                trace.steps.append(OuterStep(F_k, 0.0, delta, j, inner.iterations, L))
                if abs(delta) <= config.outer_tol * max(1.0, abs(F_k)):
                    trace.converged, trace.status = True, "converged"
                else:
                    trace.status = "line_search_failed"
                break
            theta, eta = theta_new, eta_new

        trace.steps.append(OuterStep(F_new, alpha, delta, j, inner.iterations, L))
        change = abs(F_new - F_k) / max(1.0, abs(F_k))
        F_k = F_new
        if exact_quadratic:
            trace.converged = inner.converged
            trace.status = "converged" if inner.converged else "inner_max_iters"
            break
        if change < config.outer_tol:
            trace.converged, trace.status = True, "converged"
            break
    else:
        trace.status = "max_outer"

    return OuterResult(theta=theta, objective=F_k, trace=trace, eta=eta)
