#!/usr/bin/env python3
"""Print growth rate and dominant domain size against q for a given q0."""

import argparse

import numpy as np

from spinquench.spectrum import classify, dominant_wavevector, max_growth_rate, predicted_domain_size


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q0-hz", type=float, default=15.0)
    ap.add_argument("--q-hz", type=float, nargs="+", default=list(np.arange(-4.0, 17.0, 2.0)))
    args = ap.parse_args()
    print(f"{'q_hz':>7} {'regime':>8} {'rate_1/s':>9} {'k*_1/um':>8} {'pi/k*_um':>9}")
    for q in args.q_hz:
        c = classify(q, args.q0_hz)
        rate = max_growth_rate(q, args.q0_hz)
        try:
            k, ld = dominant_wavevector(q, args.q0_hz), predicted_domain_size(q, args.q0_hz)
        except ValueError:
            k, ld = float("nan"), float("nan")
        print(f"{q:7.2f} {c.regime.value:>8} {rate:9.3f} {k:8.4f} {ld:9.3f}")


if __name__ == "__main__":
    main()
