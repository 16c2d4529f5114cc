#!/usr/bin/env python3
"""Constrained comparison: ONM vs Euclidean-connection Newton vs projected gradient.

Writes traces, summary and regret.svg under the config's output_dir and prints
the mean final regret of each algorithm.
"""
import argparse
import csv
from pathlib import Path

from manifold_lqg.cli import run_experiment

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(HERE.parent / "configs" / "fig1_constrained.json"))
    ap.add_argument("--output-dir", default=None)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    manifest = run_experiment(args.config, args.output_dir, args.threads)
    out = Path(manifest.config["output_dir"])
    with open(out / "path_length.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    final = {r["algorithm"]: float(r["final_regret_mean"]) for r in rows}
    for alg, val in final.items():
        print(f"{alg:>18s}  final mean regret {val:10.4f}")
    onm, en, pg = final.get("onm"), final.get("euclidean_newton"), final.get("pg")
    if None not in (onm, en, pg):
        print(f"ordering onm < euclidean_newton < pg: {onm < en < pg}; onm < 0.9 pg: {onm < 0.9 * pg}")
    print(f"artifacts in {out} ({manifest.wall_clock_s:.1f}s)")


if __name__ == "__main__":
    main()
