"""Draw-fraction landscape over the (p, q) simplex.

For each game version and each grid point, estimates the probability that the
base site is still undecided after backward induction from a distant all-draw
frontier.  One CSV row per (version, p, q); horizons share label fields, so
columns are comparable and nonincreasing left to right.

    python3 scripts/draw_sweep.py --step 1/10 --horizons 10,50,100 --samples 2000
"""

import argparse
from fractions import Fraction

from percolab.core import Params
from percolab.game import GameVersion, draw_fraction
from percolab.pca import SeededStream


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--step", type=Fraction, default=Fraction(1, 5))
    ap.add_argument("--horizons", default="10,50,100")
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)

    horizons = [int(tok) for tok in args.horizons.split(",")]
    axis = []
    x = Fraction(0)
    while x <= 1:
        axis.append(x)
        x += args.step

    print("version,p,q," + ",".join(f"draw_h{h}" for h in horizons))
    for version in GameVersion:
        for p in axis:
            for q in axis:
                if p + q > 1:
                    continue
                params = Params(p, q)
                fracs = [draw_fraction(version, params, h, args.samples,
                                       SeededStream(args.seed)).fraction
                         for h in horizons]
                cells = ",".join(f"{f:.4f}" for f in fracs)
                print(f"{version.value},{p},{q},{cells}")


if __name__ == "__main__":
    main()
