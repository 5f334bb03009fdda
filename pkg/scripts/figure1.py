"""Causal vs anticausal decision boundaries when E[X1 X2] is unknown.

Fits both predictors to the running example (q = 1/2, unit variances,
phi = (0.3, 0.1)) without the cross moment, then draws the two posteriors
and their boundary lines.  Needs matplotlib (``pip install .[plots]``).

    python3 scripts/figure1.py --out figure1.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from cmaxent.anticausal import anticausal_posterior, fit_anticausal_missing_s12
from cmaxent.causal import causal_posterior, fit_causal_missing_s12
from cmaxent.geometry import angle_between, boundary_from_anticausal, boundary_from_causal, partial_slope_ratio
from cmaxent.moments import MomentSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--phi", type=float, nargs=2, default=(0.3, 0.1))
    ap.add_argument("--q", type=float, default=0.5)
    ap.add_argument("--grid", type=int, default=201)
    ap.add_argument("--out", default="figure1.png")
    args = ap.parse_args()

    spec = MomentSpec(args.q, [0, 0], args.phi, np.eye(2)).with_missing(s12=True)
    cm, am = fit_causal_missing_s12(spec), fit_anticausal_missing_s12(spec)
    bc, ba = boundary_from_causal(cm), boundary_from_anticausal(am)

    g = np.linspace(-4, 4, args.grid)
    pts = np.stack(np.meshgrid(g, g, indexing="xy"), axis=-1)
    box = ((-4.0, 4.0), (-4.0, 4.0))

    fig, axes = plt.subplots(1, 2, figsize=(9, 4.2), sharey=True)
    for ax, p, title in zip(axes, (causal_posterior(cm, pts), anticausal_posterior(am, pts)), ("causal", "anticausal")):
        im = ax.contourf(g, g, p, levels=20, cmap="RdBu_r", vmin=0, vmax=1)
        for b, style, label in ((bc, "-", "causal boundary"), (ba, "--", "anticausal boundary")):
            seg = np.array(b.segment(box))
            ax.plot(seg[:, 0], seg[:, 1], "k" + style, lw=1.2, label=label)
        ax.set_title(f"{title}: p(y=+1 | x)")
        ax.set_xlabel("x1")
    axes[0].set_ylabel("x2")
    axes[0].legend(loc="lower left", fontsize=8)
    fig.colorbar(im, ax=axes, shrink=0.85)
    fig.savefig(args.out, dpi=150)

    print(f"slope ratio {ba.slope / bc.slope:.6f} (predicted {partial_slope_ratio(spec):.6f})")
    print(f"angle between boundaries {angle_between(bc.w, ba.w):.5f} rad")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
