"""Imputed E[X2 Y] for a missing phi2: entropy argmax vs the closed-form
stationary value, across correlations s12 and class balances q.

    python3 scripts/phi2_discrepancy.py
"""

import argparse

import numpy as np

from cmaxent.anticausal import phi2_feasible_interval, phi2_upper_bound
from cmaxent.errors import InfeasibleError
from cmaxent.moments import MomentSpec
from cmaxent.oracle import det_argmax_phi2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--phi1", type=float, default=0.3)
    args = ap.parse_args()

    print(f"{'q':>5} {'s12':>6} {'argmax':>10} {'formula':>10} {'diff':>10}  feasible interval")
    for q in (0.5, 0.3, 0.15):
        for s12 in (0.0, 0.25, 0.5, 0.75):
            spec = MomentSpec(q, [0, 0], [args.phi1, np.nan], [[1.0, s12], [s12, 1.0]], avail_phi2=False)
            try:
                star, _ = det_argmax_phi2(spec)
                lo, hi = phi2_feasible_interval(spec)
            except InfeasibleError as exc:
                print(f"{q:5.2f} {s12:6.2f}  infeasible: {exc}")
                continue
            formula = phi2_upper_bound(spec)
            flag = "" if lo < formula < hi else "  (formula outside)"
            print(f"{q:5.2f} {s12:6.2f} {star:10.6f} {formula:10.6f} {formula - star:10.2e}  ({lo:.4f}, {hi:.4f}){flag}")
    print("argmax closed form: s12 * phi1 / s1^2")


if __name__ == "__main__":
    main()
