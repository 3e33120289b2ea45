"""Convex penalties, their proximal operators and the smallest all-zero lambda."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import TensorDesign, g_map_flat
from .family import Family, Observations

KINDS = ("lasso", "ridge", "elastic_net")


@dataclass(frozen=True)
class Penalty:
    """``J(theta)``: ``||theta||_1`` (lasso), ``||theta||_2^2`` (ridge) or
    ``||theta||_1 + alpha ||theta||_2^2`` (elastic_net)."""

    kind: str = "lasso"
    alpha: float = 0.0

    def __post_init__(self):
        kind = "elastic_net" if self.kind in ("elasticnet", "enet") else self.kind
        if kind not in KINDS:
            raise ValueError(f"unknown penalty {self.kind!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        object.__setattr__(self, "kind", kind)

    @property
    def has_l1(self) -> bool:
        return self.kind != "ridge"

    def value(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        if self.kind == "ridge":
            return float(theta @ theta)
        out = float(np.abs(theta).sum())
        if self.kind == "elastic_net" and self.alpha:
            out += self.alpha * float(theta @ theta)
        return out

    def prox(self, gamma: float, z) -> np.ndarray:
        """``argmin_x 0.5 ||x - z||^2 + gamma J(x)``."""
        if gamma <= 0:
            raise ValueError("prox step must be positive")
        z = np.asarray(z, dtype=float)
        if self.kind == "ridge":
            return z / (1.0 + 2.0 * gamma)
        x = np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)
        if self.kind == "elastic_net" and self.alpha:
            x /= 1.0 + 2.0 * self.alpha * gamma
        return x


def lambda_max(design: TensorDesign, family: Family, data: Observations,
               penalty: Penalty) -> float:
    """Smallest lambda for which the zero vector is the penalized estimate.

    The subgradient condition at zero only involves the l1 part, so the
    elastic-net quadratic term does not enter.
    """
    if not penalty.has_l1:
        raise ValueError("a pure ridge penalty has no finite lambda_max")
    if data.shape != design.dims:
        raise ValueError(f"data shape {data.shape} does not match design rows {design.dims}")
    u0 = family.score(data, np.zeros(design.dims, order="F"))
    return float(np.max(np.abs(g_map_flat(design, u0) / design.n)))
