"""Rate at which the CLAT rejected fraction approaches the oracle mass g(a0)."""

import argparse

from clat.dist import Normal, StandardNormal, TwoGroupModel
from clat.sim import convergence_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pi1", type=float, default=0.2)
    ap.add_argument("--mu", type=float, default=2.5)
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--q", type=float, default=0.1)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    model = TwoGroupModel(args.pi1, StandardNormal(), Normal(args.mu, args.sigma))
    res = convergence_experiment(model, args.q, reps_per_n=args.reps, seed=args.seed)
    print(f"g(a0) = {res.g_a0:.6f}")
    for n, e, m in zip(res.n_grid, res.median_error, res.mfdr):
        print(f"n={int(n):>8}  median |R/n - g(a0)| = {e:.3e}  mFDR = {m:.4f}")
    print(f"log-log slope = {res.slope:.3f}")


if __name__ == "__main__":
    main()
