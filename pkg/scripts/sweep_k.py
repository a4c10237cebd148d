"""Leave-one-out accuracy of LSCL as a function of k.

    python scripts/sweep_k.py [DATA.csv] [--lo 5] [--hi 25] [--S 2] [--out curve.json]

Without a dataset a small synthetic one is generated (3 classes, 26 per
class, so every k up to 25 is valid).  Prints one row per k and optionally
writes the curve as JSON.
"""

import argparse
import json
from pathlib import Path

from lscl import LsclConfig, SyntheticSpec, generate_synthetic, load_dataset
from lscl.evaluation import run_leave_one_out


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("data", nargs="?", type=Path)
    ap.add_argument("--lo", type=int, default=5)
    ap.add_argument("--hi", type=int, default=25)
    ap.add_argument("--S", type=int, default=2)
    ap.add_argument("--lam", type=float, default=0.01)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    ds = load_dataset(args.data) if args.data else generate_synthetic(SyntheticSpec(3, 26, 8, 1.5, 1.0, seed=1))
    curve = []
    print(f"{'k':>4}  {'accuracy':>8}  {'std(classes)':>12}  {'time(s)':>8}")
    for k in range(args.lo, args.hi + 1):
        r = run_leave_one_out(ds, "lscl", LsclConfig(k=k, S=args.S, lam=args.lam))
        curve.append({"k": k, "mean_accuracy": r.mean_accuracy, "std_accuracy": r.std_accuracy})
        print(f"{k:4d}  {r.mean_accuracy:8.4f}  {r.std_accuracy:12.3f}  {r.total_wall_time_s:8.2f}")
    if args.out:
        args.out.write_text(json.dumps(curve, indent=2) + "\n")


if __name__ == "__main__":
    main()
