"""Exponential families with their links, in terms of the linear predictor.

All functions act entrywise on arrays. The log-likelihood is the kernel
``sum_i a_i (y_i theta(eta_i) - b(theta(eta_i)))``; terms that do not depend
on ``eta`` are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

SUPPORTED = {
    "gaussian": "identity",
    "binomial": "logit",
    "poisson": "log",
    "gamma": "log",
}


class FamilyEvaluationError(ArithmeticError):
    """A likelihood quantity became non-finite.

    ``index`` is the 0-based multi-index of the first offending cell.
    """

    def __init__(self, what: str, index: tuple):
        super().__init__(f"non-finite {what} at cell {index}")
        self.index = index


@dataclass(frozen=True)
class Observations:
    """Response array ``Y`` and prior weights ``A`` sharing one shape.

    For the binomial family ``Y`` holds success proportions and ``A`` the
    number of trials.
    """

    Y: np.ndarray
    A: np.ndarray = None

    def __post_init__(self):
        Y = np.asfortranarray(self.Y, dtype=float)
        A = np.ones_like(Y) if self.A is None else np.asfortranarray(self.A, dtype=float)
        if A.shape != Y.shape:
            raise ValueError(f"weights shape {A.shape} differs from response shape {Y.shape}")
        if np.any(A < 0) or not np.all(np.isfinite(A)):
            raise ValueError("prior weights must be finite and nonnegative")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "A", A)

    @property
    def shape(self) -> tuple:
        return self.Y.shape


@dataclass(frozen=True)
class Family:
    """A supported (family, link) pair with fixed dispersion.

    ``eta_bound`` clamps linear predictors before they enter ``exp`` and
    ``weight_floor`` bounds GLM weights away from zero.
    """

    name: str = "gaussian"
    link: str = None
    dispersion: float = 1.0
    eta_bound: float = 30.0
    weight_floor: float = 1e-10

    def __post_init__(self):
        if self.name not in SUPPORTED:
            raise ValueError(f"unsupported family {self.name!r}")
        link = SUPPORTED[self.name] if self.link is None else self.link
        if SUPPORTED[self.name] != link:
            raise ValueError(f"unsupported family/link pair {self.name}+{link}")
        if self.dispersion <= 0:
            raise ValueError("dispersion must be positive")
        object.__setattr__(self, "link", link)

    def _clamp(self, eta):
        return np.clip(eta, -self.eta_bound, self.eta_bound)

    # canonical parameter and its derivative
    def theta(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.name == "gamma":
            return -np.exp(-self._clamp(eta))
        return eta

    def dtheta(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.name == "gamma":
            return np.exp(-self._clamp(eta))
        return np.ones_like(eta)

    def cumulant(self, eta):
        """``b(theta(eta))``."""
        eta = np.asarray(eta, dtype=float)
        if self.name == "gaussian":
            return 0.5 * eta**2
        if self.name == "binomial":
            return np.logaddexp(0.0, eta)
        if self.name == "poisson":
            return np.exp(self._clamp(eta))
        # gamma: b(theta) = -log(-theta) with theta = -exp(-eta)
        return self._clamp(eta)

    def mean(self, eta):
        eta = np.asarray(eta, dtype=float)
        if self.link == "identity":
            return eta.copy()
        if self.link == "logit":
            return expit(eta)
        return np.exp(self._clamp(eta))

    def dmean(self, eta):
        """Derivative of the inverse link."""
        eta = np.asarray(eta, dtype=float)
        if self.link == "identity":
            return np.ones_like(eta)
        if self.link == "logit":
            mu = expit(eta)
            return mu * (1.0 - mu)
        return np.exp(self._clamp(eta))

    def link_deriv(self, mu):
        """``g'(mu)``."""
        mu = np.asarray(mu, dtype=float)
        if self.link == "identity":
            return np.ones_like(mu)
        if self.link == "logit":
            return 1.0 / np.maximum(mu * (1.0 - mu), self.weight_floor)
        return 1.0 / np.maximum(mu, self.weight_floor)

    def check_data(self, data: Observations) -> None:
        Y, live = data.Y, data.A > 0
        if not np.all(np.isfinite(Y[live])):
            raise ValueError("responses must be finite where prior weights are positive")
        if self.name == "binomial" and np.any((Y[live] < 0) | (Y[live] > 1)):
            raise ValueError("binomial responses are proportions in [0, 1]")
        if self.name == "poisson" and np.any(Y[live] < 0):
            raise ValueError("poisson responses must be nonnegative")
        if self.name == "gamma" and np.any(Y[live] <= 0):
            raise ValueError("gamma responses must be positive")

    def loglik(self, data: Observations, eta) -> float:
        eta = np.asarray(eta, dtype=float)
        _same_shape(data, eta)
        live = data.A > 0
        y = np.where(live, data.Y, 0.0)
        terms = np.where(live, data.A * (y * self.theta(eta) - self.cumulant(eta)), 0.0)
        _check_finite(terms, "log-likelihood term")
        return float(terms.sum()) / self.dispersion

    def score(self, data: Observations, eta) -> np.ndarray:
        """``u_i = a_i theta'(eta_i) (y_i - mu_i)``."""
        eta = np.asarray(eta, dtype=float)
        _same_shape(data, eta)
        live = data.A > 0
        y = np.where(live, data.Y, 0.0)
        u = np.where(live, data.A * self.dtheta(eta) * (y - self.mean(eta)), 0.0)
        _check_finite(u, "score")
        return u / self.dispersion

    def weights(self, eta) -> np.ndarray:
        """GLM weights ``theta'(eta) (g^{-1})'(eta)``, floored."""
        eta = np.asarray(eta, dtype=float)
        if self.name == "gamma":
            w = np.ones_like(eta)
        else:
            w = self.dmean(eta)
        return np.maximum(w, self.weight_floor) / self.dispersion

    def working_response(self, data: Observations, eta) -> np.ndarray:
        """``z_i = a_i (y_i - mu_i) g'(mu_i) + eta_i``; valid with GLM weights."""
        eta = np.asarray(eta, dtype=float)
        _same_shape(data, eta)
        live = data.A > 0
        y = np.where(live, data.Y, 0.0)
        mu = self.mean(eta)
        z = np.where(live, data.A * (y - mu) * self.link_deriv(mu), 0.0) + eta
        _check_finite(z, "working response")
        return z

    @property
    def weights_constant(self) -> bool:
        """True when the GLM weights do not depend on ``eta``."""
        return self.name in ("gaussian", "gamma")


def _same_shape(data: Observations, eta: np.ndarray) -> None:
    if eta.shape != data.shape:
        raise ValueError(f"predictor shape {eta.shape} differs from data shape {data.shape}")


def _check_finite(arr: np.ndarray, what: str) -> None:
    bad = ~np.isfinite(arr)
    if bad.any():
        flat = int(np.flatnonzero(bad.ravel(order="F"))[0])
        raise FamilyEvaluationError(what, np.unravel_index(flat, arr.shape, order="F"))
