"""Regenerate the committed gaussian desk fixture under tests/fixtures/.

The fixture stores a small design, a response array and dense-oracle
objectives along a short lasso path, so the regression test needs no
oracle run of its own.
"""

import json
from pathlib import Path

import numpy as np

from glampath import Family, Observations, Penalty, TensorDesign, h_map, lambda_max
from glampath import io
from glampath.reference import (
    DenseProblem, dense_materialize, dense_objective, dense_reference_solve,
)

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "gaussian_desk"


def main():
    rng = np.random.default_rng(20240611)
    marginals = [rng.standard_normal((n, p)) for n, p in ((6, 3), (5, 3), (4, 2))]
    design = TensorDesign.single(*marginals)
    Y = h_map(design, 0.5 * rng.standard_normal(design.p)) + rng.standard_normal(design.dims)
    data = Observations(Y)
    fam, pen = Family("gaussian"), Penalty("lasso")
    lam_max = lambda_max(design, fam, data, pen)
    lambdas = lam_max * np.logspace(0, -2, 8)

    X = dense_materialize(design)
    objectives, init = [], None
    for lam in lambdas:
        problem = DenseProblem(X, fam, data, pen, float(lam))
        init = dense_reference_solve(problem, iters=400_000, init=init, tol=1e-13)
        objectives.append(dense_objective(problem, init))

    OUT.mkdir(parents=True, exist_ok=True)
    for j, m in enumerate(marginals, start=1):
        io.write_matrix_csv(OUT / f"X_{j}.csv", m)
    io.write_array(OUT / "response.glam", Y)
    doc = {"family": "gaussian", "penalty": "lasso", "lambda_max": lam_max,
           "lambdas": lambdas.tolist(), "oracle_objectives": objectives}
    (OUT / "oracle.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
