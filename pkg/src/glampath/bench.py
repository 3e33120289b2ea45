"""Wall-clock and allocation measurements for the matrix-free solver."""

from __future__ import annotations

import time
import tracemalloc
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .arrays import TensorDesign, h_map
from .family import Family, Observations
from .outer import OuterConfig
from .path import PathConfig, fit_path
from .penalty import Penalty
from .reference import MaterializationError, dense_materialize
from .simulate import SimConfig, simulate


@dataclass
class Measurement:
    seconds: float
    peak_bytes: int
    value: object = None


@contextmanager
def _tracing():
    started = not tracemalloc.is_tracing()
    if started:
        tracemalloc.start()
    tracemalloc.reset_peak()
    try:
        yield
    finally:
        if started:
            tracemalloc.stop()


def measure(fn: Callable, reps: int = 1) -> Measurement:
    """Best-of-``reps`` wall-clock time and peak traced allocation of ``fn()``."""
    best = float("inf")
    peak = 0
    value = None
    for _ in range(max(1, reps)):
        with _tracing():
            t0 = time.perf_counter()
            value = fn()
            elapsed = time.perf_counter() - t0
            peak = max(peak, tracemalloc.get_traced_memory()[1])
        best = min(best, elapsed)
    return Measurement(best, peak, value)


def hmap_vs_dense(n: int = 20, p: int = 20, d: int = 3, reps: int = 3, seed: int = 0) -> dict:
    """Time one ``h_map`` against one explicit ``X @ theta`` of the same design."""
    rng = np.random.default_rng(seed)
    design = TensorDesign.single(*[rng.standard_normal((n, p)) for _ in range(d)])
    theta = rng.standard_normal(design.p)
    X = dense_materialize(design, cap=design.n * design.p)
    fast = measure(lambda: h_map(design, theta), reps)
    slow = measure(lambda: X @ theta, reps)
    diff = float(np.abs(fast.value.ravel(order="F") - slow.value).max())
    return {"hmap_seconds": fast.seconds, "dense_seconds": slow.seconds, "max_abs_diff": diff,
            "n": design.n, "p": design.p}


def bench(sizes: Sequence[float], reps: int = 1, seed: int = 0, n_lambda: int = 10,
          cap: int = 10**8) -> list:
    """Rows ``{size, method, seconds, peak_bytes, checksum}``, two per size.

    ``glam_path`` fits a short gaussian lasso path matrix-free;
    ``dense_matvec`` times one explicit product with the materialized design
    (``nan`` when the design exceeds ``cap`` entries).
    """
    rows = []
    for r in sizes:
        sim = simulate(SimConfig(r=r, q=0.5, seed=seed), "gaussian")
        design = sim["design"]
        data = Observations(sim["Y"], sim["A"])
        config = PathConfig(n_lambda=n_lambda, lambda_min_ratio=1e-2, outer=OuterConfig())
        fit = measure(lambda: fit_path(design, Family("gaussian"), data, Penalty("lasso"), config),
                      reps)
        rows.append({"size": r, "method": "glam_path", "seconds": fit.seconds,
                     "peak_bytes": fit.peak_bytes,
                     "checksum": float(np.sum(fit.value.objectives))})
        try:
            X = dense_materialize(design, cap=cap)
        except MaterializationError:
            rows.append({"size": r, "method": "dense_matvec", "seconds": float("nan"),
                         "peak_bytes": 0, "checksum": float("nan")})
            continue
        mv = measure(lambda: X @ sim["theta"], reps)
        rows.append({"size": r, "method": "dense_matvec", "seconds": mv.seconds,
                     "peak_bytes": mv.peak_bytes + X.nbytes,
                     "checksum": float(np.sum(mv.value))})
    return rows
