"""Lyapunov branches and the band/gap table of the periodic edge operator.

    python3 scripts/band_structure.py --cosine 10 --lam-min -50 --lam-max 1000 --out bands.png
"""

import argparse

import numpy as np

from hexaspec.edge import dirichlet_spectrum_scan
from hexaspec.lyapunov import lyapunov_batch, real_line_band_structure
from hexaspec.potential import build_potential


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cosine", type=float, nargs="*", default=[10.0])
    p.add_argument("--lam-min", type=float, default=-50.0)
    p.add_argument("--lam-max", type=float, default=1000.0)
    p.add_argument("--grid", type=int, default=2000)
    p.add_argument("--out", default="")
    args = p.parse_args()

    q = build_potential(args.cosine)
    window = (args.lam_min, args.lam_max)
    bs = real_line_band_structure(q, window, args.grid)
    print(f"potential {q.label()}")
    for b in bs.bands:
        print(f"band  [{b.lo:12.6f}, {b.hi:12.6f}]  multiplicity {b.multiplicity}  "
              f"edges {b.edge_lo}/{b.edge_hi}")
    for lo, hi in bs.gaps:
        print(f"gap   [{lo:12.6f}, {hi:12.6f}]")
    flat = dirichlet_spectrum_scan(q, args.lam_max, args.grid) if args.lam_max > 0 else []
    for r in flat:
        print(f"flat  {r:12.6f}")

    if args.out:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        lams = np.linspace(*window, 4000)
        tab = lyapunov_batch(q, lams)
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(lams, tab.delta(1), label=r"$\Delta_1$")
        ax.plot(lams, tab.delta(2), label=r"$\Delta_2$")
        ax.axhspan(-1, 1, color="0.9")
        for lo, hi in bs.gaps:
            ax.axvspan(lo, hi, color="tab:red", alpha=0.15)
        for r in flat:
            ax.axvline(r, color="tab:green", lw=0.6)
        ax.set_ylim(-3, 3)
        ax.set_xlabel(r"$\lambda$")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.out, dpi=150)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
