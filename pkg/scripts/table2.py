"""Average rank of the largest alternative observation, with its exact expectation."""

import argparse

import numpy as np
from scipy import integrate, stats

from clat.cli import TABLE2_ROWS
from clat.sim import average_r


def expected_rank(n, beta, sigma, mu):
    pi1 = n ** -beta
    alt = stats.norm(mu, sigma)
    f = lambda x: stats.norm.pdf(x) * np.exp((n - 1) * np.log1p(-pi1 * alt.sf(x)))
    val = integrate.quad(f, -10, 12, limit=500, points=[mu - 3 * sigma, mu, mu + 3 * sigma])[0]
    return 1 + n * (1 - pi1) * val


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'beta':>5}{'sigma':>6}{'mu':>5}{'mean r':>9}{'se':>7}{'E[r]':>8}")
    for beta, sigma, mu in TABLE2_ROWS:
        r = average_r(beta, sigma, mu, n=args.n, n_reps=args.reps, seed=args.seed)
        se = r.values.std(ddof=1) / np.sqrt(r.values.size)
        print(f"{beta:>5}{sigma:>6}{mu:>5}{r.mean:>9.2f}{se:>7.2f}{expected_rank(args.n, beta, sigma, mu):>8.2f}")


if __name__ == "__main__":
    main()
