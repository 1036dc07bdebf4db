"""mFDR and mFNR sweeps for the four simulation cases, all five methods.

Full runs are long (500 replicates per grid point by default); use --reps to
shorten.  Output goes to one directory per preset.
"""

import argparse
import sys

from clat.cli import SWEEPS, main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--presets", default=",".join(SWEEPS))
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out-dir", default="sweeps")
    args = ap.parse_args()

    for preset in args.presets.split(","):
        argv = ["simulate", "--preset", preset, "--reps", str(args.reps), "--seed", str(args.seed),
                "--out-dir", f"{args.out_dir}/{preset}"]
        if args.workers:
            argv += ["--workers", str(args.workers)]
        print(f"running {preset}", file=sys.stderr)
        rc = cli_main(argv)
        if rc:
            sys.exit(rc)


if __name__ == "__main__":
    main()
