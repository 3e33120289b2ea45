"""Dense reference computations for desk-scale verification.

Everything here forms the full design matrix, so it is only usable on small
problems. The solver is plain proximal gradient: no extrapolation, no
line search beyond a majorization check, and it shares nothing with the
matrix-free solvers except the family formulas.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .arrays import TensorDesign
from .family import Family, Observations
from .penalty import Penalty

DEFAULT_CAP = 10**7


class MaterializationError(MemoryError):
    def __init__(self, required: int, cap: int):
        super().__init__(f"dense design needs {required} entries, cap is {cap}")
        self.required = required
        self.cap = cap


def dense_materialize(design: TensorDesign, cap: int = DEFAULT_CAP) -> np.ndarray:
    """``[X_{1,d} kron ... kron X_{1,1} | ... ]`` as an explicit ``n x p`` matrix."""
    required = design.n * design.p
    if required > cap:
        raise MaterializationError(required, cap)
    blocks = [reduce(lambda acc, m: np.kron(m, acc), comp[1:], comp[0])
              for comp in design.components]
    return np.hstack(blocks)


@dataclass(eq=False)
class DenseProblem:
    X: np.ndarray
    family: Family
    data: Observations
    penalty: Penalty
    lam: float

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.shape[0] != self.data.Y.size:
            raise ValueError("design rows must match the number of observations")
        self._y = self.data.Y.ravel(order="F")
        self._a = self.data.A.ravel(order="F")
        self._flat = Observations(self._y, self._a)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def neg_loglik(self, theta) -> float:
        return -self.family.loglik(self._flat, self.X @ theta) / self.n

    def gradient(self, theta) -> np.ndarray:
        u = self.family.score(self._flat, self.X @ theta)
        return -(self.X.T @ u) / self.n


def dense_objective(problem: DenseProblem, theta) -> float:
    theta = np.asarray(theta, dtype=float)
    return problem.neg_loglik(theta) + problem.lam * problem.penalty.value(theta)


def _prox(penalty: Penalty, gamma: float, z: np.ndarray) -> np.ndarray:
    # written out again so the oracle does not lean on the solver's prox
    if penalty.kind == "ridge":
        return z / (1.0 + 2.0 * gamma)
    out = np.where(np.abs(z) > gamma, z - gamma * np.sign(z), 0.0)
    if penalty.kind == "elastic_net":
        out = out / (1.0 + 2.0 * penalty.alpha * gamma)
    return out


def _curvature_weights(problem: DenseProblem, theta) -> np.ndarray:
    fam = problem.family
    eta = problem.X @ theta
    if fam.name == "gamma":
        # observed information of a*(y e^-eta + eta)
        w = problem._y * np.exp(-np.clip(eta, -fam.eta_bound, fam.eta_bound))
    else:
        w = fam.dmean(eta)
    return problem._a * w / fam.dispersion


def dense_reference_solve(problem: DenseProblem, iters: int = 100_000, init=None,
                          tol: float = 0.0) -> np.ndarray:
    """Proximal gradient with the exact local Lipschitz constant.

    The curvature weights are refreshed every iteration; the step is halved
    while the quadratic majorization fails (needed for non-Gaussian losses
    whose gradient is only locally Lipschitz). Stops early once the largest
    coordinate change is at most ``tol``.
    """
    X = problem.X
    n, p = X.shape
    theta = np.zeros(p) if init is None else np.array(init, dtype=float)
    lam = problem.lam
    quadratic = problem.family.name == "gaussian"
    if quadratic:
        L_fixed = np.linalg.eigvalsh(X.T @ (problem._a[:, None] * X)).max() / n
    f = problem.neg_loglik(theta)
    for _ in range(iters):
        g = problem.gradient(theta)
        if quadratic:
            L = L_fixed
        else:
            w = _curvature_weights(problem, theta)
            L = np.linalg.eigvalsh(X.T @ (w[:, None] * X)).max() / n
        if not np.isfinite(L):
            raise FloatingPointError("reference solve met a non-finite curvature")
        L = max(L, 1e-12)
        while True:
            new = _prox(problem.penalty, lam / L, theta - g / L)
            step = new - theta
            f_new = problem.neg_loglik(new)
            if quadratic or f_new <= f + g @ step + 0.5 * L * (step @ step) + 1e-15 * abs(f):
                break
            L *= 2.0
        if not np.all(np.isfinite(new)) or not np.isfinite(f_new):
            raise FloatingPointError("reference solve produced non-finite values")
        change = np.abs(step).max()
        theta, f = new, f_new
        if change <= tol:
            break
    return theta


def relative_deviation(F_a: float, F_b: float) -> float:
    """``(F_a - F_b) / |F_b|``."""
    if F_b == 0:
        raise ZeroDivisionError("relative deviation is undefined for F_b = 0")
    return (F_a - F_b) / abs(F_b)
