"""Watch the weight functional contract along a trajectory.

Runs the envelope automaton, snapshots the empirical cylinder measure at a few
times, and prints the ?-mass, the stationarity gauge (what the forced-vanishing
cylinders of the current parameter branch add up to), and the weights w0..w4.
On a long run everything ?-flavoured should head to zero whenever p + q > 0.

    python3 scripts/stationarity_probe.py --p 1/4 --q 1/4 --width 20000
"""

import argparse
from fractions import Fraction

from percolab.core import EnvSymbol, Params, as_fraction
from percolab.measures import empirical_measure, stationary_conclusion_check, weight
from percolab.pca import Alphabet, Boundary, Configuration, ModelSpec, SeededStream, step


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=as_fraction, default=Fraction(1, 4))
    ap.add_argument("--q", type=as_fraction, default=Fraction(1, 4))
    ap.add_argument("--width", type=int, default=20_000)
    ap.add_argument("--snapshots", default="0,10,30,100,300,1000")
    ap.add_argument("--order", type=int, default=6)
    ap.add_argument("--seed", type=int, default=20260816)
    args = ap.parse_args(argv)

    params = Params(args.p, args.q)
    model = ModelSpec(Alphabet.ENVELOPE, 0, params)
    times = sorted({int(tok) for tok in args.snapshots.split(",")})
    cfg = Configuration.constant(args.width, EnvSymbol.QMARK, Boundary.CYCLIC)
    stream = SeededStream(args.seed)

    print("t,qmark,gauge,w0,w1,w2,w3,w4")
    t = 0
    for target in times:
        while t < target:
            cfg = step(cfg, model, stream, t)
            t += 1
        mu = empirical_measure(cfg, args.order)
        rep = stationary_conclusion_check(params, mu)
        ws = [weight(k, mu, params) for k in range(5)]
        cells = ",".join(f"{float(w):.6f}" for w in ws)
        print(f"{t},{float(rep.qmark):.6f},{float(rep.gauge):.6f},{cells}")
    print(f"# branch: {rep.branch}; forced-vanishing cylinders: "
          f"{[name for name, _ in rep.forced] or 'none'}")


if __name__ == "__main__":
    main()
