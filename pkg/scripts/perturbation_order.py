"""Convergence order of the first-order determinant expansion in epsilon.

Prints the fitted log-log slope of ``|det M_eps - d0 - eps d1|`` for random
``(lam, theta, c1)`` and the agreement of ``d1`` with central differences.

    python3 scripts/perturbation_order.py --samples 50 --cosine 1.3 -0.7
"""

import argparse

import numpy as np

from hexaspec.edge import monodromy, relative_dirichlet_indicator
from hexaspec.perturbation import PerturbationConfig, assemble_m_eps, det_expansion, d1_factored
from hexaspec.potential import build_potential


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cosine", type=float, nargs="*", default=[1.3, -0.7])
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    q = build_potential(args.cosine)
    rng = np.random.default_rng(args.seed)
    eps = np.array([1e-2, 5e-3, 2.5e-3])
    print(f"{'lambda':>10} {'c1':>7} {'slope':>7} {'d1':>12} {'d1 fd rel':>10} {'factored':>12}")
    n = 0
    while n < args.samples:
        lam, th, c1 = rng.uniform(-50, 500), rng.uniform(-np.pi, np.pi, 2), rng.uniform(-1, 1)
        if relative_dirichlet_indicator(monodromy(q, lam, 1e-12)) <= 1e-3:
            continue
        n += 1
        cfg = PerturbationConfig(0.0, c1)
        d0, d1 = det_expansion(q, lam, th, cfg, 1e-12)
        det = lambda e: assemble_m_eps(q, lam, th, cfg.with_epsilon(e), 1e-12)[1].real
        err = [abs(det(e) - d0 - e * d1) for e in eps]
        slope = np.polyfit(np.log(eps), np.log(err), 1)[0]
        fd = (det(1e-4) - det(-1e-4)) / 2e-4
        print(f"{lam:10.3f} {c1:7.3f} {slope:7.3f} {d1:12.5e} {abs(fd - d1) / abs(d1):10.1e} "
              f"{d1_factored(q, lam, th, cfg, 1e-12):12.5e}")


if __name__ == "__main__":
    main()
