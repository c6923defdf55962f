"""Fate of the lowest free Dirac point under angle perturbations.

Reports the exact perturbed roots at the unperturbed Dirac quasimomentum,
the minimum sheet separation on circles around it, then locates the
quasimomentum where the perturbed sheets touch and repeats the circle
test there.

    python3 scripts/dirac_persistence.py --epsilon 0.02 --c1 0.5
"""

import argparse

import numpy as np

from hexaspec.graphene import dirac_scan
from hexaspec.perturbation import (PerturbationConfig, dirac_persistence_check,
                                   floquet_singularity, locate_conical_point)
from hexaspec.potential import FREE


def show(label, rep):
    print(f"{label}: centre {np.round(rep.center, 6)}")
    print(f"  roots near lambda* = {rep.lambda_star:.6f}: {[round(r, 6) for r in rep.roots_at_theta_star]}")
    for rho, s in zip(rep.radii, rep.separations):
        print(f"  rho = {rho:<6} min separation {s:.5f}  ratio {s / rho:.3f}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--epsilon", type=float, default=0.02)
    p.add_argument("--c1", type=float, default=0.5)
    p.add_argument("--angles", type=int, default=24)
    args = p.parse_args()

    cfg = PerturbationConfig(args.epsilon, args.c1)
    dirac = dirac_scan(FREE, (0.0, 100.0), 400)[0]
    radii = (0.04, 0.02, 0.01)
    rep = dirac_persistence_check(FREE, cfg, dirac, radii=radii, n_angles=args.angles)
    show("unperturbed Dirac quasimomentum", rep)
    for r in rep.roots_at_theta_star:
        print(f"  12x12 Floquet matrix at {r:.6f}: sigma_min/sigma_max = "
              f"{floquet_singularity(FREE, r, dirac.theta_star.as_array(), cfg):.1e}")

    center, sep, roots = locate_conical_point(FREE, cfg, dirac)
    print(f"touching point: theta* + {np.round(center - dirac.theta_star.as_array(), 5)}, "
          f"sheet gap {sep:.2e}, roots {[round(r, 6) for r in roots]}")
    show("located cone", dirac_persistence_check(FREE, cfg, dirac, radii=radii,
                                                 n_angles=args.angles, center=center))


if __name__ == "__main__":
    main()
