import json
from pathlib import Path

import numpy as np
import pytest

from glampath import (
    Family, InnerConfig, Observations, OuterConfig, PathConfig, Penalty, TensorDesign,
    fit_path, lambda_max,
)
from glampath import io

FIXTURE = Path(__file__).parent / "fixtures" / "gaussian_desk"


@pytest.fixture(scope="module")
def desk():
    doc = json.loads((FIXTURE / "oracle.json").read_text())
    design = TensorDesign.single(*[io.read_matrix_csv(FIXTURE / f"X_{j}.csv") for j in (1, 2, 3)])
    data = Observations(io.read_array(FIXTURE / "response.glam"))
    return doc, design, data


def test_fixture_lambda_max(desk):
    doc, design, data = desk
    assert lambda_max(design, Family(), data, Penalty()) == pytest.approx(doc["lambda_max"],
                                                                         rel=1e-12)


def test_path_matches_stored_oracle_objectives(desk):
    doc, design, data = desk
    cfg = PathConfig(outer=OuterConfig(inner=InnerConfig(tol=1e-13, max_iters=50000)))
    path = fit_path(design, Family(), data, Penalty(), cfg, lambdas=doc["lambdas"])
    assert len(path) == len(doc["lambdas"])
    for got, ref in zip(path.objectives, doc["oracle_objectives"]):
        if ref == 0.0:
            assert got == 0.0
        else:
            assert (got - ref) / abs(ref) <= 1e-8
            assert got == pytest.approx(ref, rel=1e-7)
    assert not np.any(path.fits[0])
