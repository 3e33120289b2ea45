import itertools

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from glampath import TensorDesign

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_design(rng, d=3, c=1, n_max=5, p_max=4, n=None, p=None):
    dims = n if n is not None else tuple(int(k) for k in rng.integers(1, n_max + 1, size=d))
    comps = []
    for _ in range(c):
        cols = p if p is not None else rng.integers(1, p_max + 1, size=d)
        comps.append(tuple(rng.standard_normal((nj, int(pj))) for nj, pj in zip(dims, cols)))
    return TensorDesign(tuple(comps))


@st.composite
def designs(draw, d_max=3, c_max=2, n_max=5, p_max=4):
    seed = draw(st.integers(0, 2**32 - 1))
    d = draw(st.integers(1, d_max))
    c = draw(st.integers(1, c_max))
    rng = np.random.default_rng(seed)
    return random_design(rng, d=d, c=c, n_max=n_max, p_max=p_max), rng


def kron_dense(design):
    """Dense design built entry by entry: row ``(i_1..i_d)``, column ``(k_1..k_d)``
    holds ``prod_j X_j[i_j, k_j]``, both multi-indices flattened first-index-fastest."""
    blocks = []
    for comp in design.components:
        rows = list(itertools.product(*[range(X.shape[0]) for X in comp][::-1]))
        cols = list(itertools.product(*[range(X.shape[1]) for X in comp][::-1]))
        M = np.empty((len(rows), len(cols)))
        for a, i_rev in enumerate(rows):
            for b, k_rev in enumerate(cols):
                M[a, b] = np.prod([X[i, k] for X, i, k in zip(comp, i_rev[::-1], k_rev[::-1])])
        blocks.append(M)
    return np.hstack(blocks)


def fd_grad(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
