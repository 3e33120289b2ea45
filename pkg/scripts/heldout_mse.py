"""Held-out model selection on a simulated GLAM.

Simulates data, hides a random fraction of the cells through zero prior
weights, fits a lasso path on the rest and reports the held-out error of
every model together with the selected one.
"""

import argparse

import numpy as np

from glampath import Family, Observations, PathConfig, Penalty, fit_path, mse_heldout
from glampath.simulate import SimConfig, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="poisson", choices=["gaussian", "poisson"])
    ap.add_argument("--r", type=float, default=0.5)
    ap.add_argument("--q", type=float, default=0.3)
    ap.add_argument("--s", type=float, default=0.3)
    ap.add_argument("--holdout", type=float, default=0.25)
    ap.add_argument("--nlambda", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sim = simulate(SimConfig(r=args.r, q=args.q, s=args.s, seed=args.seed), args.family)
    design, Y = sim["design"], sim["Y"]
    mask = np.random.default_rng(args.seed + 1).random(design.dims) < args.holdout
    train = Observations(np.where(mask, 0.0, Y), (~mask).astype(float))
    fam = Family(args.family)
    path = fit_path(design, fam, train, Penalty(),
                    PathConfig(n_lambda=args.nlambda, lambda_min_ratio=1e-3))
    errors, best = mse_heldout(path, design, fam, Y, mask)
    truth = sim["theta"] != 0

    print(f"n = {design.n}, p = {design.p}, held-out cells = {int(mask.sum())}")
    print(f"{'model':>5} {'lambda':>12} {'nonzero':>8} {'heldout SSE':>14}")
    for t, (lam, nz, err) in enumerate(zip(path.lambdas, path.nonzero(), errors)):
        flag = "  <-" if t == best else ""
        print(f"{t + 1:5d} {lam:12.5g} {nz:8d} {err:14.6g}{flag}")
    chosen = path.fits[best] != 0
    print(f"selected model {best + 1}: {int(chosen.sum())} nonzero, "
          f"{int((chosen & truth).sum())} of {int(truth.sum())} true nonzeros recovered")


if __name__ == "__main__":
    main()
