"""How fast does the ?-mass die out?

Runs the envelope automaton from the all-? row for several (p, q) and prints
the ?-density every few steps, plus a crude half-life estimate per setting.

    python3 scripts/qmark_decay.py --width 5000 --steps 400 --seed 3
"""

import argparse
import sys
from fractions import Fraction

from percolab.core import EnvSymbol, Params
from percolab.pca import Alphabet, Boundary, Configuration, ModelSpec, SeededStream, trajectory

SETTINGS = [("1/4", "1/4"), ("1/10", "1/10"), ("1/2", "1/4"), ("1/100", "1/100"), ("2/5", "0")]


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--width", type=int, default=5000)
    ap.add_argument("--steps", type=int, default=400)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--every", type=int, default=10, help="print every k-th step")
    args = ap.parse_args(argv)

    print("p,q,t,qmark_density")
    half_lives = []
    for ptxt, qtxt in SETTINGS:
        params = Params(Fraction(ptxt), Fraction(qtxt))
        model = ModelSpec(Alphabet.ENVELOPE, 0, params)
        init = Configuration.constant(args.width, EnvSymbol.QMARK, Boundary.CYCLIC)
        res = trajectory(init, model, args.steps, SeededStream(args.seed))
        half = None
        for row in res.rows:
            if half is None and row.countQ * 2 <= args.width:
                half = row.t
            if row.t % args.every == 0 or row.t == args.steps:
                print(f"{ptxt},{qtxt},{row.t},{row.countQ / row.width:.6f}")
        half_lives.append((ptxt, qtxt, half))

    print(file=sys.stderr)
    for ptxt, qtxt, half in half_lives:
        label = half if half is not None else f">{args.steps}"
        print(f"# (p={ptxt}, q={qtxt}) reaches half density at t={label}", file=sys.stderr)


if __name__ == "__main__":
    main()
