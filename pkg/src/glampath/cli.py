"""Command-line front end: ``glampath {fit,predict,simulate,bench}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .arrays import TensorDesign
from .bench import bench
from .family import Family, Observations
from .inner import InnerConfig
from .outer import OuterConfig
from .path import FitPath, PathConfig, fit_path, mse_heldout, predict
from .penalty import Penalty
from .simulate import SimConfig, simulate
from .splines import bspline_design, default_basis_count, uniform_grid

EXIT_TRUNCATED = 3
PATH_DOC = "path.json"


class CliError(Exception):
    pass


def build_design(dims, design_files=None, bspline=False, basis_ratio=5, order=4) -> TensorDesign:
    d = len(dims)
    if bspline:
        marginals = []
        for n in dims:
            p = default_basis_count(n, basis_ratio)
            marginals.append(bspline_design(uniform_grid(n), p, order=min(order, p)))
        return TensorDesign.single(*marginals)
    if not design_files:
        raise CliError("give --design CSV files or --bspline")
    if len(design_files) % d:
        raise CliError(f"{len(design_files)} design files cannot be split into components of {d}")
    mats = [io.read_matrix_csv(f) for f in design_files]
    comps = [tuple(mats[i:i + d]) for i in range(0, len(mats), d)]
    for r, comp in enumerate(comps):
        for j, (m, n) in enumerate(zip(comp, dims)):
            if m.shape[0] != n:
                raise CliError(f"design file for component {r + 1}, dimension {j + 1} has "
                               f"{m.shape[0]} rows but the response has {n}")
    return TensorDesign(tuple(comps))


def _config_from_args(args) -> PathConfig:
    inner = InnerConfig(nu=args.nu, tol=args.tol, max_iters=args.maxit)
    outer = OuterConfig(weight_mode=args.iwls, outer_tol=args.outer_tol,
                        max_outer=args.max_outer, inner=inner)
    return PathConfig(n_lambda=args.nlambda, lambda_min_ratio=args.lambda_min_ratio, outer=outer)


def write_fit(out: Path, design: TensorDesign, family: Family, penalty: Penalty,
              path: FitPath, save_mean: bool = False) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "design").mkdir(exist_ok=True)
    (out / "coef").mkdir(exist_ok=True)
    for r, comp in enumerate(design.components):
        for j, m in enumerate(comp):
            io.write_matrix_csv(out / "design" / f"X_r{r + 1}_j{j + 1}.csv", m)
    models = []
    for t, theta in enumerate(path.fits):
        for r, block in enumerate(design.split(theta)):
            io.write_array(out / "coef" / f"model_{t + 1:03d}_r{r + 1}.glam", block)
        if save_mean:
            (out / "mean").mkdir(exist_ok=True)
            io.write_array(out / "mean" / f"model_{t + 1:03d}.glam",
                           predict(design, family, theta)[1])
        diag = path.diagnostics[t]
        models.append({
            "model": t + 1,
            "lambda": float(path.lambdas[t]),
            "objective": path.objectives[t],
            "nonzero": int(np.count_nonzero(theta)),
            "outer_iters": diag["outer_iters"],
            "inner_iters": diag["inner_iters"],
            "converged": diag["converged"],
        })
    doc = {
        "family": family.name,
        "link": family.link,
        "penalty": penalty.kind,
        "alpha": penalty.alpha,
        "dims": list(design.dims),
        "components": design.c,
        "col_dims": [list(s) for s in design.col_dims],
        "lambda_max": path.lambda_max,
        "truncated": path.truncated,
        "models": models,
    }
    (out / PATH_DOC).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def read_fit(fit_dir: Path) -> tuple:
    """Load ``(design, family, doc, thetas)`` from a fit output directory."""
    doc = json.loads((fit_dir / PATH_DOC).read_text(encoding="utf-8"))
    d = len(doc["dims"])
    comps = []
    for r in range(doc["components"]):
        comps.append(tuple(io.read_matrix_csv(fit_dir / "design" / f"X_r{r + 1}_j{j + 1}.csv")
                           for j in range(d)))
    design = TensorDesign(tuple(comps))
    family = Family(doc["family"])
    thetas = []
    for m in doc["models"]:
        blocks = [io.read_array(fit_dir / "coef" / f"model_{m['model']:03d}_r{r + 1}.glam")
                  for r in range(design.c)]
        blocks = [b.reshape(shape, order="F") for b, shape in zip(blocks, design.col_dims)]
        thetas.append(design.join(blocks))
    return design, family, doc, thetas


def cmd_fit(args) -> int:
    Y = io.read_array(args.response)
    A = io.read_array(args.weights) if args.weights else None
    if A is not None and A.shape != Y.shape:
        raise CliError(f"weights shape {A.shape} differs from response shape {Y.shape}")
    design = build_design(Y.shape, args.design, args.bspline, args.basis_ratio, args.order)
    family = Family(args.family)
    penalty = Penalty(args.penalty, args.alpha)
    data = Observations(Y, A)
    config = _config_from_args(args)
    if args.penalty == "ridge" and not args.lambdas:
        raise CliError("a ridge penalty needs explicit --lambda values")
    path = fit_path(design, family, data, penalty, config, lambdas=args.lambdas)
    write_fit(Path(args.out), design, family, penalty, path, save_mean=args.save_mean)
    return EXIT_TRUNCATED if path.truncated else 0


def cmd_predict(args) -> int:
    fit_dir = Path(args.fit)
    design, family, doc, thetas = read_fit(fit_dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for m, theta in zip(doc["models"], thetas):
        eta, mu = predict(design, family, theta)
        io.write_array(out / f"eta_{m['model']:03d}.glam", eta)
        io.write_array(out / f"mu_{m['model']:03d}.glam", mu)
    if args.truth:
        if not args.mask:
            raise CliError("--truth needs --mask")
        truth = io.read_array(args.truth)
        mask = io.read_array(args.mask)
        path = FitPath(lambdas=np.array([m["lambda"] for m in doc["models"]]), fits=thetas,
                       objectives=[], diagnostics=[])
        errors, best = mse_heldout(path, design, family, truth, mask)
        with open(out / "mse.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["model", "lambda", "mse", "argmin"])
            for t, (m, e) in enumerate(zip(doc["models"], errors)):
                w.writerow([m["model"], repr(m["lambda"]), repr(float(e)), int(t == best)])
        print(f"minimal held-out MSE at model {doc['models'][best]['model']}")
    return 0


def cmd_simulate(args) -> int:
    config = SimConfig(r=args.r, q=args.q, kappa=args.kappa, sigma=args.sigma, s=args.s,
                       seed=args.seed)
    sim = simulate(config, args.family)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for j, m in enumerate(sim["design"].components[0]):
        io.write_matrix_csv(out / f"X_{j + 1}.csv", m)
    io.write_array(out / "response.glam", sim["Y"])
    io.write_array(out / "weights.glam", sim["A"])
    io.write_array(out / "theta.glam", sim["theta"].reshape(sim["design"].col_dims[0], order="F"))
    meta = {"family": args.family, "r": args.r, "q": args.q, "kappa": args.kappa,
            "sigma": args.sigma, "s": args.s, "seed": args.seed,
            "dims": list(config.dims), "col_dims": list(config.col_dims)}
    (out / "sim.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return 0


BENCH_COLUMNS = ["size", "method", "seconds", "peak_alloc", "checksum"]


def cmd_bench(args) -> int:
    rows = bench(args.sizes, reps=args.reps, seed=args.seed, n_lambda=args.nlambda)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(BENCH_COLUMNS)
        for row in rows:
            w.writerow([row["size"], row["method"], f"{row['seconds']:.6g}",
                        row["peak_bytes"], repr(row["checksum"])])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glampath", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a regularization path")
    fit.add_argument("--response", required=True, help="response array file")
    fit.add_argument("--design", nargs="+", action="extend", default=[],
                     help="marginal CSV matrices, component-major (X_11 .. X_1d X_21 ..)")
    fit.add_argument("--bspline", action="store_true", help="cubic B-spline marginal bases")
    fit.add_argument("--basis-ratio", type=int, default=5)
    fit.add_argument("--order", type=int, default=4)
    fit.add_argument("--family", default="gaussian",
                     choices=["gaussian", "binomial", "poisson", "gamma"])
    fit.add_argument("--penalty", default="lasso", choices=["lasso", "ridge", "elasticnet"])
    fit.add_argument("--alpha", type=float, default=0.0)
    fit.add_argument("--nlambda", type=int, default=100)
    fit.add_argument("--lambda-min-ratio", type=float, default=1e-4)
    fit.add_argument("--lambda", dest="lambdas", type=float, nargs="+", default=None,
                     help="explicit decreasing lambda values")
    fit.add_argument("--nu", type=float, default=1.0)
    fit.add_argument("--iwls", default="exact", choices=["exact", "unit", "tensor"])
    fit.add_argument("--weights", help="prior weight array file (zeros mark missing cells)")
    fit.add_argument("--tol", type=float, default=1e-8)
    fit.add_argument("--maxit", type=int, default=2000)
    fit.add_argument("--outer-tol", type=float, default=1e-8)
    fit.add_argument("--max-outer", type=int, default=100)
    fit.add_argument("--save-mean", action="store_true", help="also write fitted mean arrays")
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=cmd_fit)

    pred = sub.add_parser("predict", help="evaluate a fitted path")
    pred.add_argument("--fit", required=True, help="output directory of 'fit'")
    pred.add_argument("--truth", help="complete response array for held-out error")
    pred.add_argument("--mask", help="array with 1 on held-out cells")
    pred.add_argument("--out", required=True)
    pred.set_defaults(func=cmd_predict)

    sim = sub.add_parser("simulate", help="simulate a 3-d GLAM")
    sim.add_argument("--r", type=float, default=0.2)
    sim.add_argument("--q", type=float, default=0.5)
    sim.add_argument("--kappa", type=float, default=0.0)
    sim.add_argument("--sigma", type=float, default=1.0)
    sim.add_argument("--s", type=float, default=1.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--family", default="gaussian", choices=["gaussian", "poisson"])
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="time matrix-free fits against dense products")
    b.add_argument("--sizes", type=float, nargs="+", required=True)
    b.add_argument("--reps", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--nlambda", type=int, default=10)
    b.add_argument("--out", help="CSV output (default stdout)")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, ValueError, OSError, RuntimeError, ArithmeticError) as exc:
        print(f"glampath {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
