"""Design-matrix-free array arithmetic for tensor-structured designs.

Arrays are numpy ``ndarray`` objects whose flat order is column-major
(``order="F"``): entry ``(i_1, ..., i_d)`` sits at position
``i_1 + n_1((i_2 - 1) + n_2(...))``. Every reshape below is done in that
order, so on F-contiguous buffers the rotations performed by :func:`rho`
never copy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

Blocks = list  # list[np.ndarray], one d-dimensional array per component


def linear_index(multi_index: Sequence[int], dims: Sequence[int]) -> int:
    """1-based column-major position of the 1-based ``multi_index``."""
    if len(multi_index) != len(dims):
        raise ValueError(f"index has {len(multi_index)} entries, dims has {len(dims)}")
    pos = 0
    for i, n in zip(reversed(multi_index), reversed(dims)):
        if not 1 <= i <= n:
            raise ValueError(f"index {tuple(multi_index)} outside box {tuple(dims)}")
        pos = pos * n + (i - 1)
    return pos + 1


def rho(X: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Rotated contraction of ``X`` (r x n_1) against the first axis of ``A``.

    Returns the ``n_2 x ... x n_d x r`` array with entries
    ``sum_j X[i_d, j] * A[j, i_1, ..., i_{d-1}]``.
    """
    X = np.asarray(X)
    A = np.asarray(A)
    if X.ndim != 2:
        raise ValueError("X must be a matrix")
    if A.ndim == 0 or X.shape[1] != A.shape[0]:
        raise ValueError(f"cannot contract {X.shape} against array of shape {A.shape}")
    if A.ndim == 1:
        return X @ A
    flat = A.reshape(A.shape[0], -1, order="F")
    out = (X @ flat).T
    return out.reshape(A.shape[1:] + (X.shape[0],), order="F")


@dataclass(frozen=True, eq=False)
class TensorDesign:
    """Design ``X = [X_1 | ... | X_c]`` with ``X_r = X_{r,d} kron ... kron X_{r,1}``.

    ``components[r][j]`` is the marginal matrix for component ``r`` and array
    dimension ``j`` (both 0-based here).
    """

    components: tuple

    def __post_init__(self):
        comps = tuple(
            tuple(np.asarray(m, dtype=float) for m in comp) for comp in self.components
        )
        if not comps:
            raise ValueError("design needs at least one component")
        d = len(comps[0])
        if d == 0:
            raise ValueError("components need at least one marginal matrix")
        for r, comp in enumerate(comps):
            if len(comp) != d:
                raise ValueError(f"component {r} has {len(comp)} factors, expected {d}")
            for j, m in enumerate(comp):
                if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
                    raise ValueError(f"factor ({r}, {j}) must be a non-empty matrix")
                if m.shape[0] != comps[0][j].shape[0]:
                    raise ValueError(
                        f"factor ({r}, {j}) has {m.shape[0]} rows, "
                        f"expected {comps[0][j].shape[0]}"
                    )
        object.__setattr__(self, "components", comps)

    @classmethod
    def single(cls, *marginals) -> "TensorDesign":
        """Design with one tensor component."""
        return cls((tuple(marginals),))

    @property
    def c(self) -> int:
        return len(self.components)

    @property
    def d(self) -> int:
        return len(self.components[0])

    @property
    def dims(self) -> tuple:
        return tuple(m.shape[0] for m in self.components[0])

    @property
    def n(self) -> int:
        return int(np.prod(self.dims))

    @property
    def col_dims(self) -> tuple:
        """Per-component coefficient array shapes."""
        return tuple(tuple(m.shape[1] for m in comp) for comp in self.components)

    @property
    def block_sizes(self) -> tuple:
        return tuple(int(np.prod(s)) for s in self.col_dims)

    @property
    def p(self) -> int:
        return sum(self.block_sizes)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.block_sizes)])

    def split(self, theta: np.ndarray) -> Blocks:
        """View a flat coefficient vector as per-component arrays."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.p,):
            raise ValueError(f"expected flat vector of length {self.p}, got {theta.shape}")
        off = self.offsets
        return [
            theta[off[r]:off[r + 1]].reshape(shape, order="F")
            for r, shape in enumerate(self.col_dims)
        ]

    def join(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        """Vec-concatenate coefficient blocks into a flat vector."""
        self.check_blocks(blocks)
        return np.concatenate([np.asarray(b, dtype=float).ravel(order="F") for b in blocks])

    def zeros(self) -> np.ndarray:
        return np.zeros(self.p)

    def check_blocks(self, blocks: Sequence[np.ndarray]) -> None:
        if len(blocks) != self.c:
            raise ValueError(f"expected {self.c} coefficient blocks, got {len(blocks)}")
        for r, (b, shape) in enumerate(zip(blocks, self.col_dims)):
            if np.shape(b) != shape:
                raise ValueError(f"block {r} has shape {np.shape(b)}, expected {shape}")

    @cached_property
    def gram_radii(self) -> tuple:
        """Spectral radii of ``X_{r,j}^T X_{r,j}`` for every factor."""
        from .inner import spectral_radius

        return tuple(
            tuple(spectral_radius(m.T @ m) for m in comp) for comp in self.components
        )


Coef = Union[np.ndarray, Sequence[np.ndarray]]


def _as_blocks(design: TensorDesign, coef: Coef) -> Blocks:
    if isinstance(coef, np.ndarray):
        return design.split(coef)
    design.check_blocks(coef)
    return [np.asarray(b, dtype=float) for b in coef]


def _chain(factors, A):
    for X in factors:
        A = rho(X, A)
    return A


def h_map(design: TensorDesign, coef: Coef) -> np.ndarray:
    """Linear predictor ``X theta`` as an ``n_1 x ... x n_d`` array.

    ``coef`` is either a list of coefficient blocks or the flat vector.
    """
    blocks = _as_blocks(design, coef)
    out = np.zeros(design.dims, order="F")
    for comp, theta_r in zip(design.components, blocks):
        out += _chain(comp, theta_r)
    return out


def g_map(design: TensorDesign, U: np.ndarray) -> Blocks:
    """Blocks of ``X^T vec(U)``."""
    U = np.asarray(U, dtype=float)
    if U.shape != design.dims:
        raise ValueError(f"array shape {U.shape} does not match design rows {design.dims}")
    return [_chain([m.T for m in comp], U) for comp in design.components]


def g_map_flat(design: TensorDesign, U: np.ndarray) -> np.ndarray:
    return design.join(g_map(design, U))


def xtwx_apply(design: TensorDesign, V: np.ndarray, coef: Coef) -> Blocks:
    """``X^T W X theta`` with ``W = diag(vec V)``."""
    V = np.asarray(V, dtype=float)
    if V.shape != design.dims:
        raise ValueError(f"weight shape {V.shape} does not match design rows {design.dims}")
    return g_map(design, V * h_map(design, coef))


def tensor_gram(design: TensorDesign, weight_factors: Sequence[np.ndarray]) -> list:
    """Precompute ``gram[r][m][j] = X_{r,j}^T diag(w_j) X_{m,j}``."""
    if len(weight_factors) != design.d:
        raise ValueError(f"expected {design.d} weight factors, got {len(weight_factors)}")
    ws = [np.asarray(w, dtype=float) for w in weight_factors]
    for j, (w, nj) in enumerate(zip(ws, design.dims)):
        if w.shape != (nj,):
            raise ValueError(f"weight factor {j} has shape {w.shape}, expected ({nj},)")
    comps = design.components
    return [
        [[comps[r][j].T @ (ws[j][:, None] * comps[m][j]) for j in range(design.d)]
         for m in range(design.c)]
        for r in range(design.c)
    ]


def xtwx_apply_tensor(design: TensorDesign, gram: list, coef: Coef) -> Blocks:
    """``X^T (W_d kron ... kron W_1) X theta`` from precomputed gram blocks."""
    blocks = _as_blocks(design, coef)
    col = design.col_dims
    if len(gram) != design.c or any(len(row) != design.c for row in gram):
        raise ValueError("gram blocks must be a c x c nested list")
    out = []
    for r in range(design.c):
        acc = np.zeros(col[r], order="F")
        for m in range(design.c):
            factors = gram[r][m]
            for j, G in enumerate(factors):
                if G.shape != (col[r][j], col[m][j]):
                    raise ValueError(
                        f"gram block ({r}, {m}, {j}) has shape {G.shape}, "
                        f"expected {(col[r][j], col[m][j])}"
                    )
            acc += _chain(factors, blocks[m])
        out.append(acc)
    return out


def outer_product(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Array ``V[i_1, ..., i_d] = v_1[i_1] * ... * v_d[i_d]``."""
    out = np.asarray(factors[0], dtype=float)
    for f in factors[1:]:
        out = np.multiply.outer(out, np.asarray(f, dtype=float))
    return np.asfortranarray(out)
