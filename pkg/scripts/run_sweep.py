#!/usr/bin/env python3
"""Domain size and G(0) against q_f for a vacuum-seeded ensemble.

Runs the same sweep as ``spinquench sweep`` and prints the summary table.
"""

import argparse
from pathlib import Path

from spinquench.config import PRESETS, load, preset
from spinquench.runner import read_sweep, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", choices=PRESETS, default="uniform")
    ap.add_argument("--config", type=Path)
    ap.add_argument("--qf-hz", type=float, nargs="+", default=[0.0, 2.0, 4.0, 6.0])
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--out-dir", type=Path, default=Path("spinquench-out/sweep"))
    args = ap.parse_args()
    cfg = preset(args.preset)
    if args.config:
        cfg = load(args.config, cfg)
    path = run_sweep(cfg, args.qf_hz, args.reps, args.out_dir, jobs=args.jobs)
    print(f"{'qf_hz':>6} {'G0':>10} {'l_d_um':>14} {'pi/k*_um':>9}")
    for r in read_sweep(path):
        print(f"{r['qf_hz']:6.2f} {r['G0_mean']:10.4g} "
              f"{r['l_d_mean_um']:7.2f}+-{r['l_d_sem_um']:5.2f} {r['l_d_predicted_um']:9.2f}")
    print(path)


if __name__ == "__main__":
    main()
