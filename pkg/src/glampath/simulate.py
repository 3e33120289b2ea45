"""Simulated three-dimensional GLAMs with Gaussian marginal designs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import TensorDesign, h_map
from .family import Family


@dataclass(frozen=True)
class SimConfig:
    """``n = (60r, 20r, 10r)``, ``p_j = max(3, n_j q)``; design rows are
    ``N(0, Sigma)`` with ``sigma`` on the diagonal and ``kappa`` elsewhere;
    coefficient ``m`` is nonzero with probability ``s``."""

    r: float = 1.0
    q: float = 0.5
    kappa: float = 0.0
    sigma: float = 1.0
    s: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.r <= 0 or self.q <= 0:
            raise ValueError("r and q must be positive")
        if self.kappa < 0 or self.sigma <= 0 or not 0 <= self.s <= 1:
            raise ValueError("need kappa >= 0, sigma > 0 and s in [0, 1]")
        if self.kappa > self.sigma:
            raise ValueError("kappa > sigma gives an indefinite covariance")
        if any(n < 1 for n in self.dims):
            raise ValueError("r too small: some n_j is zero")

    @property
    def dims(self) -> tuple:
        return tuple(int(round(k * self.r)) for k in (60, 20, 10))

    @property
    def col_dims(self) -> tuple:
        return tuple(max(3, int(round(n * self.q))) for n in self.dims)


def coefficients(B: np.ndarray) -> np.ndarray:
    """``theta_m = (-1)^m exp(-(m-1)/10) B_m`` for ``m = 1..p``."""
    m = np.arange(1, len(B) + 1)
    return (-1.0) ** m * np.exp(-(m - 1) / 10.0) * np.asarray(B, dtype=float)


def simulate(config: SimConfig, family: str = "gaussian") -> dict:
    """Draw a design, coefficients and responses; deterministic in ``seed``.

    Returns a dict with ``design``, ``theta`` (flat), ``Y``, ``A`` and ``eta``.
    """
    fam = Family(family)
    if fam.name not in ("gaussian", "poisson"):
        raise ValueError("simulation supports the gaussian and poisson families")
    rng = np.random.default_rng(config.seed)
    marginals = []
    for n, p in zip(config.dims, config.col_dims):
        cov = np.full((p, p), config.kappa) + (config.sigma - config.kappa) * np.eye(p)
        marginals.append(rng.multivariate_normal(np.zeros(p), cov, size=n, method="cholesky"))
    design = TensorDesign.single(*marginals)
    B = rng.random(design.p) < config.s
    theta = coefficients(B)
    eta = h_map(design, theta)
    if fam.name == "gaussian":
        Y = eta + rng.standard_normal(eta.shape)
    else:
        Y = rng.poisson(fam.mean(eta)).astype(float)
    return {
        "design": design,
        "theta": theta,
        "Y": np.asfortranarray(Y),
        "A": np.ones(eta.shape, order="F"),
        "eta": eta,
    }
