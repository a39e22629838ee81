"""Coverage of uniform bootstrap bands against a long-run reference signature."""

import argparse
import json

from topsig.experiments import coverage_experiment

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--level", type=float, default=0.1, help="band level alpha (0.1 = nominal 90%%)")
    ap.add_argument("--duration", type=float, nargs="+", default=[30.0], help="signal length(s) in seconds")
    ap.add_argument("--block-len", type=int, nargs="+", default=[100])
    ap.add_argument("--reference-runs", type=int, default=50)
    ap.add_argument("--sigma", type=float, default=0.1)
    args = ap.parse_args()
    for duration in args.duration:
        for L in args.block_len:
            res = coverage_experiment(args.trials, args.level, sigma=args.sigma,
                                      reference_runs=args.reference_runs, block_len=L, duration=duration)
            print(json.dumps(res))
