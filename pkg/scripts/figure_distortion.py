#!/usr/bin/env python3
"""Distortion scatter experiment: max-pool map vs. linear sum-hash baseline.

Generates 10-sparse non-negative vectors in R^1000 with uniform(0, 1]
values, embeds both ways into 50 coordinates, and writes a CSV of true
vs. approximated max norms (one row per vector per map). The max-pool
column hugs the true value exactly; the sum-hash column only ever
inflates, strictly so whenever its buckets collide.

Usage: python scripts/figure_distortion.py [--out DIR] [--seed N] [--n N]
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from sparse_sketch import io  # noqa: E402
from sparse_sketch.cli import main as cli_main  # noqa: E402
from sparse_sketch.datagen import random_nonneg_dataset  # noqa: E402


def run(out_dir: str, seed: int, n: int) -> str:
    os.makedirs(out_dir, exist_ok=True)
    data_path = os.path.join(out_dir, "distortion_data.tsv")
    report_path = os.path.join(out_dir, "distortion_report.csv")
    io.write_dataset_text(data_path, random_nonneg_dataset(n, 10, 1000, seed=seed))
    rc = cli_main([
        "distort", "--against-zero",
        "--input", data_path,
        "--output", report_path,
        "--m", "50", "--T", "1",
        "--p", "inf",
        "--seed", str(seed),
    ])
    if rc != 0:
        raise SystemExit(rc)
    return report_path


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out", help="output directory (default ./out)")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--n", type=int, default=200, help="number of vectors")
    args = ap.parse_args()
    path = run(args.out, args.seed, args.n)
    print(f"wrote {path}")
