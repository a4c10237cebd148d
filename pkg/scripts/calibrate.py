"""Measure the empirical thresholds pinned in the test suite.

    python scripts/calibrate.py [--trials 1000] [--speed-samples 40]

Prints 1-NN two-fold accuracy on the reference synthetic set, stage-1
true-class retention over many held-out queries, and the per-sample time
ratio of SRC to LSCL on the C=40, n=1200 configuration.
"""

import argparse
import time

import numpy as np

from lscl import LsclConfig, SyntheticSpec, generate_synthetic, lscl_classify, src_classify
from lscl.dataset import split_two_fold
from lscl.neighbors import lmc_classify, select_candidates


def one_nn_accuracy(seeds):
    accs = []
    for s in seeds:
        ds = generate_synthetic(SyntheticSpec(20, 30, 64, 8.0, 1.0, s))
        tr, te = split_two_fold(ds, s)
        hits = [lmc_classify(y, tr, 1) == c for y, c in zip(te.vectors, te.class_ids)]
        accs.append(np.mean(hits))
    return accs


def retention(trials, k=5, S=10):
    kept = total = 0
    seed = 0
    while total < trials:
        ds = generate_synthetic(SyntheticSpec(20, 30, 64, 8.0, 1.0, seed))
        tr, te = split_two_fold(ds, seed)
        for y, c in zip(te.vectors, te.class_ids):
            kept += c in select_candidates(y, tr, k, S).class_ids
            total += 1
        seed += 1
    return kept / total, total


def speed(samples):
    ds = generate_synthetic(SyntheticSpec(40, 32, 64, 8.0, 1.0, 11))
    hold = np.zeros(ds.n, dtype=bool)
    for idx in ds.class_indices:
        hold[idx[:2]] = True
    train, test = ds.subset(np.flatnonzero(~hold)), ds.subset(np.flatnonzero(hold))
    cfg = LsclConfig(k=5, S=10)
    X = test.vectors[:samples]
    t0 = time.perf_counter()
    for y in X:
        lscl_classify(y, train, cfg)
    t_lscl = (time.perf_counter() - t0) / len(X)
    t0 = time.perf_counter()
    for y in X:
        src_classify(y, train, cfg.lam, cfg.solver)
    t_src = (time.perf_counter() - t0) / len(X)
    return train.n, t_lscl, t_src


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--speed-samples", type=int, default=40)
    args = ap.parse_args()

    accs = one_nn_accuracy(range(5))
    print(f"1-NN two-fold accuracy per seed: {[round(a, 4) for a in accs]}  min={min(accs):.4f}")
    rate, n = retention(args.trials)
    print(f"stage-1 retention (k=5, S=10): {rate:.4f} over {n} queries")
    n_train, t_lscl, t_src = speed(args.speed_samples)
    print(f"n_train={n_train}  lscl {t_lscl * 1e3:.2f} ms/sample  src {t_src * 1e3:.2f} ms/sample  ratio {t_src / t_lscl:.1f}x")


if __name__ == "__main__":
    main()
