"""Oscillation of sectional curvature on a perturbed sphere, by eps and by distance from the base.

    python scripts/osc_profile.py [--bump saddle|gauss]
"""

import argparse

import numpy as np

from cmgkit import catalog, probes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bump", default="saddle", choices=sorted(catalog.BUMPS))
    ap.add_argument("--n", type=int, default=3)
    args = ap.parse_args()

    direction = np.ones(args.n) / np.sqrt(args.n)
    radii = [0.0, 0.1, 0.2, 0.4]
    print("osc K at r * (1, ..., 1)/sqrt(n)")
    print(f"{'eps':>8} " + " ".join(f"{'r=' + str(r):>12}" for r in radii))
    for eps in (0.0, 0.01, 0.05, 0.1, 0.2):
        m = catalog.conformal_perturbation(catalog.sphere(args.n), eps, args.bump)
        oscs = [probes.osc_k(m, r * direction).osc for r in radii]
        print(f"{eps:>8.3g} " + " ".join(f"{o:>12.4e}" for o in oscs))


if __name__ == "__main__":
    main()
