"""Spike-alternative comparison: CLAT, BH and the KDE local-fdr rule at q = 0.1."""

import argparse
import json
from dataclasses import replace

from clat.cli import TABLE1, TABLE1_METHODS
from clat.sim import replicate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    res = replicate(replace(TABLE1, seed=args.seed), TABLE1_METHODS, 0.1, args.reps, args.workers)
    print(f"{'method':<10}{'ET':>9}{'EV':>9}{'mFDR':>8}{'FDR':>8}")
    for name, s in res.methods.items():
        print(f"{name:<10}{s.ET:>9.1f}{s.EV:>9.2f}{s.mFDR:>8.3f}{s.FDR:>8.3f}")
    print(json.dumps(res.to_dict(timing=False)))


if __name__ == "__main__":
    main()
