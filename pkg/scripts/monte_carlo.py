"""Repeated-sampling check of the plug-in estimators against the oracle.

Draws ``--reps`` tables of size ``--n`` from a model and prints the mean
error, the empirical SD and the fraction of draws within 4 standard errors.

    python3 scripts/monte_carlo.py --n 100000 --reps 200
"""
import argparse

import numpy as np

from trialtransport import oracle
from trialtransport.estimators import standardize_beta, standardize_phi, standardized_standard_error
from trialtransport.io import data_path, load_scm
from trialtransport.scm import enumerate_joint, sample


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--scm", default=str(data_path("fig1.scm.json")))
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    scm = load_scm(args.scm)
    law = enumerate_joint(scm).marginal(["S", "X", "A", "Y"])
    targets = {
        "phi(1,0)": (lambda t: standardize_phi(t, 1, 0), oracle.phi_param(scm, 1, 0), 1, "phi"),
        "phi(0,0)": (lambda t: standardize_phi(t, 0, 0), oracle.phi_param(scm, 0, 0), 0, "phi"),
        "beta(1)": (lambda t: standardize_beta(t, 1), oracle.beta(scm, 1), 1, "beta"),
        "beta(0)": (lambda t: standardize_beta(t, 0), oracle.beta(scm, 0), 0, "beta"),
    }
    errors = {k: [] for k in targets}
    inside = {k: 0 for k in targets}
    for rep in range(args.reps):
        t = sample(scm, args.n, seed=args.seed + rep, workers=args.workers)
        for name, (fn, truth, a, kind) in targets.items():
            risk = law[1, :, a, 1] / law[1, :, a].sum(axis=-1)
            w = t.counts[0, :, 0].sum(-1) if kind == "phi" else t.counts[0].sum(axis=(1, 2))
            err = fn(t) - truth
            errors[name].append(err)
            inside[name] += abs(err) <= 4 * standardized_standard_error(t, a, w, risk)

    print(f"n={args.n} reps={args.reps}")
    print(f"{'quantity':<10}{'truth':>10}{'mean err':>12}{'sd':>10}{'within 4 SE':>13}")
    for name, (_, truth, _, _) in targets.items():
        e = np.array(errors[name])
        print(f"{name:<10}{truth:>10.5f}{e.mean():>12.2e}{e.std(ddof=1):>10.2e}"
              f"{inside[name] / args.reps:>13.3f}")


if __name__ == "__main__":
    main()
