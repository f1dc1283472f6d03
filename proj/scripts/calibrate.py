#!/usr/bin/env python3
"""Pilot-run summary for tuning the simulation config.

Runs the scgp CLI on a config (optionally overriding the trajectory count for
a faster pilot), then reports the ensemble statistics that matter when fitting
the defaults: mean/95% band of crack length over time, truncation fraction,
and trajectory length spread. Pure stdlib so it runs anywhere the CLI does.

Usage:
  scripts/calibrate.py --cli build/tools/scgp --config configs/sim_default.json \
      [--n 2000] [--seed 42]
"""

import argparse
import csv
import json
import math
import subprocess
import sys
import tempfile
from collections import defaultdict
from pathlib import Path


def percentile(sorted_vals, p):
    h = (len(sorted_vals) - 1) * p
    lo = int(h)
    if lo + 1 >= len(sorted_vals):
        return sorted_vals[-1]
    return sorted_vals[lo] + (h - lo) * (sorted_vals[lo + 1] - sorted_vals[lo])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True, help="path to the scgp binary")
    ap.add_argument("--config", required=True)
    ap.add_argument("--n", type=int, help="override n_trajectories for the pilot")
    ap.add_argument("--seed", type=int, help="override the config seed")
    args = ap.parse_args()

    with open(args.config) as f:
        cfg = json.load(f)
    if args.n:
        cfg["n_trajectories"] = args.n
    if args.seed is not None:
        cfg["seed"] = args.seed

    with tempfile.TemporaryDirectory(prefix="scgp_calibrate_") as tmp:
        cfg_path = Path(tmp) / "config.json"
        out_path = Path(tmp) / "ensemble.csv"
        cfg_path.write_text(json.dumps(cfg))
        subprocess.run([args.cli, "--config", str(cfg_path), "simulate", "--out", str(out_path)],
                       check=True)

        last_t = {}
        last_a = {}
        truncated = {}
        by_grid = defaultdict(list)  # bimonthly grid index -> crack lengths (ZOH)
        cursor = {}

        with open(out_path) as f:
            for row in csv.DictReader(f):
                tid = int(row["traj_id"])
                t = float(row["t_years"])
                a = float(row["a_mm"])
                last_t[tid] = t
                last_a[tid] = a
                truncated[tid] = row["truncated"] == "1"
                # predecessor sampling onto the bimonthly grid
                k = cursor.get(tid, 0)
                while k / 6.0 <= t + 1e-12:
                    by_grid[k].append(a)
                    k += 1
                cursor[tid] = k

    n = len(last_t)
    n_trunc = sum(truncated.values())
    print(f"trajectories: {n}")
    print(f"truncated at alpha_cr: {n_trunc} ({100.0 * n_trunc / n:.1f}%)")
    finals = sorted(last_a.values())
    print(f"final crack length mm: median {percentile(finals, 0.5):.1f}, "
          f"p2.5 {percentile(finals, 0.025):.1f}, p97.5 {percentile(finals, 0.975):.1f}")
    horizon = sorted(t for t in last_t.values())
    print(f"final time years: median {percentile(horizon, 0.5):.2f}")

    print("\n grid_t  survivors   mean    p2.5   p97.5")
    for k in sorted(by_grid):
        vals = sorted(by_grid[k])
        if len(vals) < 2:
            continue
        mean = sum(vals) / len(vals)
        print(f"  {k / 6.0:5.2f}  {len(vals):9d}  {mean:6.1f}  {percentile(vals, 0.025):6.1f}"
              f"  {percentile(vals, 0.975):6.1f}")


if __name__ == "__main__":
    sys.exit(main())
