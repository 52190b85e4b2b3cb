#!/usr/bin/env python3
"""Writes a small a9a-like libsvm file: one-hot categorical groups, binary labels."""
import argparse

import numpy as np

GROUP_SIZES = [5, 5, 5, 5, 16, 7, 14, 6, 5, 2, 3, 3, 3, 44]  # 123 columns


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--out", default="data/synthetic_a9a.libsvm")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    dim = sum(GROUP_SIZES)
    weights = rng.normal(0.0, 0.8, size=dim)
    bias = -1.0
    lines = []
    for _ in range(args.rows):
        cols = []
        offset = 0
        for size in GROUP_SIZES:
            freq = 1.0 / np.arange(1, size + 1) ** 1.2
            cols.append(offset + rng.choice(size, p=freq / freq.sum()))
            offset += size
        logit = bias + weights[cols].sum()
        label = "+1" if rng.random() < 1.0 / (1.0 + np.exp(-logit)) else "-1"
        lines.append(label + " " + " ".join(f"{c + 1}:1" for c in sorted(cols)))
    with open(args.out, "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
