"""Index of grad f at a Morse point, flat metric vs random conformal rescalings.

    python scripts/index_table.py [--rescalings 5] [--seed 0]
"""

import argparse

import numpy as np

from cmgkit import catalog, germs, index


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rescalings", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    print(f"{'n':>2} {'k':>2} {'(-1)^k':>7} {'flat':>5}  rescaled")
    for n in (2, 3):
        metrics = [catalog.conformal_perturbation(catalog.euclidean(n), 1.0, catalog.random_conformal_factor(n, rng))
                   for _ in range(args.rescalings)]
        for k in range(n + 1):
            f = germs.morse_germ(n, k)
            flat = index.index_of_gradient(catalog.euclidean(n), f)
            rescaled = [index.index_of_gradient(m, f).index for m in metrics]
            print(f"{n:>2} {k:>2} {(-1) ** k:>7} {flat.index:>5}  {rescaled}  ({flat.method})")


if __name__ == "__main__":
    main()
