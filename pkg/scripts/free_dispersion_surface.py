"""Dispersion sheets of the free hexagonal beam lattice over the Brillouin zone.

Solves the sheets numerically on a theta grid, compares them with the
closed form ``cos(lam^(1/4)) = +-|s0(theta)|/3`` and plots the lowest sheets
along the line ``theta2 = -theta1`` (through both Dirac points).

    python3 scripts/free_dispersion_surface.py --grid 61 --lam-max 300 --out free_surface.png
"""

import argparse
import math

import numpy as np

from hexaspec.graphene import s0_norm, solve_sheets_many, theta_grid
from hexaspec.potential import FREE


def closed_form(c, lam_max):
    a = math.acos(min(1.0, c))
    return sorted(m ** 4 for m in (a, math.pi - a, math.pi + a) if m ** 4 <= lam_max)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--grid", type=int, default=61)
    p.add_argument("--lam-max", type=float, default=300.0)
    p.add_argument("--out", default="")
    args = p.parse_args()

    th = theta_grid(args.grid)
    T = np.stack(np.meshgrid(th, th, indexing="ij"), -1).reshape(-1, 2)
    sheets = solve_sheets_many(FREE, T, (0.0, args.lam_max), 4 * int(args.lam_max))
    worst = 0.0
    for t, rows in zip(T, sheets):
        ref = closed_form(s0_norm(t) / 3.0, args.lam_max)
        for s in rows:
            if s.lam > 0:
                worst = max(worst, min(abs(s.lam - r) for r in ref) / s.lam)
    print(f"{len(T)} quasimomenta, {sum(map(len, sheets))} sheet points, "
          f"max relative deviation from closed form {worst:.2e}")

    if args.out:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        line = np.linspace(-np.pi, np.pi, 301)
        L = np.stack([line, -line], -1)
        cut = solve_sheets_many(FREE, L, (0.0, args.lam_max), 4 * int(args.lam_max))
        fig, ax = plt.subplots(figsize=(6, 4))
        for t, rows in zip(line, cut):
            ax.plot([t] * len(rows), [s.lam for s in rows], "k.", ms=2)
        ax.axhline(math.pi ** 4, color="tab:red", lw=0.8, label="flat band (hinged level)")
        for x in (2 * math.pi / 3, -2 * math.pi / 3):
            ax.axvline(x, color="tab:blue", lw=0.5, ls=":")
        ax.set_xlabel(r"$\theta_1 = -\theta_2$")
        ax.set_ylabel(r"$\lambda$")
        ax.legend(loc="upper right")
        fig.tight_layout()
        fig.savefig(args.out, dpi=150)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
