"""Conformal defect (kappa_proxy) against curvature oscillation along e^{2 eps u} g_sphere.

Writes one CSV per bump profile to --out (default: qc_sweep/).  The relation
between the two columns is emitted as data; nothing is asserted.

    python scripts/qc_sweep.py [--n 3] [--out qc_sweep]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from cmgkit import catalog, germs, probes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--out", default="qc_sweep")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    base, f = germs.model_germ("sphere", args.n, 1.0)
    grid = [0.0] + list(np.geomspace(1e-3, 0.5, 12))
    print(probes.KAPPA_DEFINITION)
    for bump in catalog.BUMPS:
        rows = probes.quasiconformal_sweep(lambda e: (catalog.conformal_perturbation(base, e, bump), f), grid,
                                           workers=args.workers)
        path = out / f"sweep_{bump}_n{args.n}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["param", "kappa_proxy", "k_max", "k_min", "osc", "refined"])
            for r in rows:
                w.writerow([r.param, r.kappa_proxy, r.k_max, r.k_min, r.osc, r.refined])
        print(f"\n{bump}: {path}")
        print(f"{'eps':>10} {'kappa-1':>12} {'osc':>12} {'osc/(kappa-1)':>14}")
        for r in rows:
            ratio = r.osc / r.defect_sup if r.defect_sup > 0 else float("nan")
            print(f"{r.param:>10.4g} {r.defect_sup:>12.4e} {r.osc:>12.4e} {ratio:>14.4f}")


if __name__ == "__main__":
    main()
