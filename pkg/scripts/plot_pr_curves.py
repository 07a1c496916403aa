#!/usr/bin/env python3
"""Plot precision-recall curves from a results directory.

Reads every curve.csv of one replicate and seed size and overlays the
strategies on a single PR figure.
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_curve(path):
    recalls, precisions = [], []
    with open(path) as f:
        for row in csv.DictReader(f):
            recalls.append(float(row["recall"]))
            precisions.append(float(row["precision"]))
    return recalls, precisions


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--results", required=True)
    parser.add_argument("--replicate", type=int, default=0)
    parser.add_argument("--size", type=int, default=2000)
    parser.add_argument("--out", default="pr_curves.png")
    args = parser.parse_args()

    rep_dir = Path(args.results) / f"rep{args.replicate:03d}"
    fig, ax = plt.subplots(figsize=(8, 6))
    suffix = f"_{args.size:05d}"
    for cell in sorted(rep_dir.iterdir()):
        if not cell.name.endswith(suffix) or not (cell / "curve.csv").exists():
            continue
        strategy = cell.name[: -len(suffix)]
        recalls, precisions = read_curve(cell / "curve.csv")
        ax.plot(recalls, precisions, label=strategy, linewidth=1.2)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_title(f"Precision and recall by strategy (seed size {args.size})")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
