"""Accelerated proximal gradient solver for the weighted penalized
least-squares subproblem

    minimize  h(theta) + lam * J(theta),
    h(theta) = (1/2n) || sqrt(W) (X theta - z) ||_2^2,

with every product against ``X`` carried out through the array maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .arrays import (
    TensorDesign,
    g_map_flat,
    h_map,
    tensor_gram,
    xtwx_apply_tensor,
)
from .penalty import Penalty


# Rayleigh quotients approach the top eigenvalue from below; Lipschitz
# constants are inflated by this relative margin so they stay upper bounds.
LIPSCHITZ_MARGIN = 1e-12


class PowerIterationError(RuntimeError):
    def __init__(self, iterations: int):
        super().__init__(f"power iteration did not converge in {iterations} iterations")
        self.iterations = iterations


class InnerDivergenceError(RuntimeError):
    def __init__(self, iteration: int):
        super().__init__(f"inner objective became non-finite at iterate {iteration}")
        self.iteration = iteration


def spectral_radius(S: np.ndarray, tol: float = 1e-15, max_iter: int = 100_000,
                    seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric positive semidefinite matrix by
    power iteration with Rayleigh-quotient monitoring."""
    S = np.asarray(S, dtype=float)
    if S.shape == (1, 1):
        return float(abs(S[0, 0]))
    scale = np.abs(S).max()
    if scale == 0:
        return 0.0
    M = S / scale
    v = np.random.default_rng(seed).standard_normal(S.shape[0])
    v /= np.linalg.norm(v)
    lam = v @ M @ v
    for it in range(1, max_iter + 1):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        new = v @ M @ v
        if abs(new - lam) <= tol * abs(new):
            return float(new * scale)
        lam = new
    raise PowerIterationError(max_iter)


def lipschitz_upper(design: TensorDesign, V: np.ndarray) -> float:
    """Computable bound ``max(w)/n * sum_r prod_j rho(X_rj^T X_rj)`` on
    ``||X^T W X||_2 / n``."""
    V = np.asarray(V, dtype=float)
    if V.shape != design.dims:
        raise ValueError(f"weight shape {V.shape} does not match design rows {design.dims}")
    vmax = float(V.max())
    if vmax <= 0:
        raise ValueError("weights must not all be zero")
    total = sum(math.prod(radii) for radii in design.gram_radii)
    return vmax * total / design.n * (1 + LIPSCHITZ_MARGIN)


def lipschitz_tensor_exact(design: TensorDesign, factors: Sequence[np.ndarray]) -> float:
    """Exact ``||X^T (W_d kron ... kron W_1) X||_2 / n`` for a one-component design."""
    if design.c != 1:
        raise ValueError("the exact tensor-weight constant needs a single component")
    if len(factors) != design.d:
        raise ValueError(f"expected {design.d} weight factors, got {len(factors)}")
    out = 1.0
    for X, w in zip(design.components[0], factors):
        w = np.asarray(w, dtype=float)
        out *= spectral_radius(X.T @ (w[:, None] * X))
    return out / design.n * (1 + LIPSCHITZ_MARGIN)


@dataclass(frozen=True)
class InnerConfig:
    """Stepsize and stopping policy.

    ``nu = 1`` uses ``1/L`` with no backtracking, ``0 < nu < 1`` starts at
    ``1/(nu L)`` and halves on detected divergence, ``nu = 0`` starts at 1
    and backtracks every iteration.
    """

    nu: float = 1.0
    max_iters: int = 2000
    tol: float = 1e-8
    extrapolation: str = "fista"
    monitor_every: int = 1
    record_history: bool = False

    def __post_init__(self):
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError("nu must lie in [0, 1]")
        if self.max_iters < 1 or self.tol <= 0 or self.monitor_every < 1:
            raise ValueError("max_iters, tol and monitor_every must be positive")
        if self.extrapolation not in ("fista", "none"):
            raise ValueError("extrapolation is 'fista' or 'none'")


@dataclass(eq=False)
class InnerProblem:
    design: TensorDesign
    V: np.ndarray
    Z: np.ndarray
    lam: float
    penalty: Penalty
    tensor_weights: Optional[Sequence[np.ndarray]] = None
    lipschitz: Optional[float] = None

    def __post_init__(self):
        self.V = np.asfortranarray(self.V, dtype=float)
        self.Z = np.asfortranarray(self.Z, dtype=float)
        dims = self.design.dims
        if self.V.shape != dims or self.Z.shape != dims:
            raise ValueError("weights and working response must match the design rows")
        if np.any(self.V < 0):
            raise ValueError("weights must be nonnegative")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.tensor_weights is not None:
            self.tensor_weights = [np.asarray(w, dtype=float) for w in self.tensor_weights]
        if self.lipschitz is None:
            if self.tensor_weights is not None and self.design.c == 1:
                self.lipschitz = lipschitz_tensor_exact(self.design, self.tensor_weights)
            else:
                self.lipschitz = lipschitz_upper(self.design, self.V)

    @property
    def n(self) -> int:
        return self.design.n

    @cached_property
    def xtwz(self) -> np.ndarray:
        return g_map_flat(self.design, self.V * self.Z)

    @cached_property
    def gram(self):
        return tensor_gram(self.design, self.tensor_weights)

    def h_from_eta(self, eta: np.ndarray) -> float:
        r = eta - self.Z
        return float(np.sum(self.V * r * r)) / (2 * self.n)

    def objective(self, theta: np.ndarray, eta: np.ndarray = None) -> float:
        if eta is None:
            eta = h_map(self.design, theta)
        return self.h_from_eta(eta) + self.lam * self.penalty.value(theta)


def grad_h(problem: InnerProblem, theta: np.ndarray, xtwz: np.ndarray = None,
           eta: np.ndarray = None) -> np.ndarray:
    """``(1/n) X^T W (X theta - z)`` using the precomputed ``X^T W z``.

    With tensor weights the gram blocks are used instead of the array maps;
    otherwise an already available ``eta = X theta`` saves one map.
    """
    design = problem.design
    if xtwz is None:
        xtwz = problem.xtwz
    if problem.tensor_weights is not None:
        xtwx = design.join(xtwx_apply_tensor(design, problem.gram, theta))
    else:
        if eta is None:
            eta = h_map(design, theta)
        xtwx = g_map_flat(design, problem.V * eta)
    return (xtwx - xtwz) / problem.n


@dataclass
class InnerResult:
    theta: np.ndarray
    objective: float
    iterations: int
    converged: bool
    backtracks: int
    step: float
    eta: np.ndarray = field(repr=False, default=None)
    history: list = field(repr=False, default_factory=list)


def fista_solve(problem: InnerProblem, config: InnerConfig = InnerConfig(),
                init: np.ndarray = None) -> InnerResult:
    """Proximal gradient with extrapolation ``omega_l = (l-1)/(l+2)``.

    ``l`` counts proximal steps since the last (re)start, so the first step
    is a plain proximal gradient step. ``history[l]`` is the objective after
    ``l`` steps when ``config.record_history`` is set.
    """
    design, pen, lam = problem.design, problem.penalty, problem.lam
    L = problem.lipschitz
    nu = config.nu
    if L <= 0:
        raise ValueError("Lipschitz constant must be positive")
    if nu == 1.0:
        delta = 1.0 / L
    elif nu > 0.0:
        delta = 1.0 / (nu * L)
    else:
        delta = 1.0
    safe_delta = 1.0 / L
    accelerate = config.extrapolation == "fista"
    xtwz = problem.xtwz

    x = design.zeros() if init is None else np.array(init, dtype=float)
    eta = h_map(design, x)
    G = problem.objective(x, eta)
    if not math.isfinite(G):
        raise InnerDivergenceError(0)
    x_prev, eta_prev = x, eta
    best = (G, x, eta)
    history = [G] if config.record_history else []
    l = 0
    backtracks = 0
    increases = 0
    G_last_monitored = G
    converged = False

    it = 0
    while it < config.max_iters:
        it += 1
        omega = (l - 1) / (l + 2) if accelerate and l >= 2 else 0.0
        if omega:
            y = x + omega * (x - x_prev)
            eta_y = eta + omega * (eta - eta_prev)
        else:
            y, eta_y = x, eta
        grad = grad_h(problem, y, xtwz, eta_y)

        if nu == 0.0:
            h_y = problem.h_from_eta(eta_y)
            while True:
                x_new = pen.prox(delta * lam, y - delta * grad) if lam > 0 else y - delta * grad
                eta_new = h_map(design, x_new)
                step = x_new - y
                bound = h_y + grad @ step + (step @ step) / (2 * delta)
                h_new = problem.h_from_eta(eta_new)
                if h_new <= bound + 1e-12 * max(1.0, abs(bound)) or delta <= safe_delta:
                    break
                delta /= 2
                backtracks += 1
        else:
            x_new = pen.prox(delta * lam, y - delta * grad) if lam > 0 else y - delta * grad
            eta_new = h_map(design, x_new)

        x_prev, eta_prev = x, eta
        x, eta = x_new, eta_new
        l += 1

        if it % config.monitor_every and it != config.max_iters:
            continue
        G_new = problem.objective(x, eta)
        if config.record_history:
            history.append(G_new)
        if not math.isfinite(G_new):
            if 0.0 < nu < 1.0 and delta > safe_delta:
                G_new = math.inf
            else:
                raise InnerDivergenceError(it)
        if G_new < best[0]:
            best = (G_new, x, eta)

        if 0.0 < nu < 1.0 and delta > safe_delta:
            increases = increases + 1 if G_new > G_last_monitored else 0
            if increases >= 3 or not math.isfinite(G_new):
                # restart from the best iterate with a smaller step, momentum reset
                delta = max(delta / 2, safe_delta)
                backtracks += 1
                increases = 0
                G_new, x, eta = best
                x_prev, eta_prev = x, eta
                l = 0
                G_last_monitored = G_new
                continue

        if abs(G_new - G_last_monitored) / max(1.0, abs(G_new)) < config.tol:
            converged = True
            G_last_monitored = G_new
            break
        G_last_monitored = G_new

    G_final = problem.objective(x, eta)
    if G_final > best[0]:
        G_final, x, eta = best
    return InnerResult(
        theta=x,
        objective=G_final,
        iterations=it,
        converged=converged,
        backtracks=backtracks,
        step=delta,
        eta=eta,
        history=history,
    )

