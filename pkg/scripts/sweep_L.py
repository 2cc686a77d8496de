"""Tabulate L(a) and the zero count over a grid and list the sign changes of L."""

import argparse
import sys

import numpy as np

from plaplace import Params, sweep_initial_values


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--params", type=float, nargs=4, default=[3, 2, 3, 1], metavar=("N", "p", "q", "alpha"))
    ap.add_argument("--a-max", type=float, default=30.0)
    ap.add_argument("--steps", type=int, default=120)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)

    P = Params(*args.params)
    rows = sweep_initial_values(P, np.linspace(args.a_max / args.steps, args.a_max, args.steps),
                                threads=args.threads)
    print("a,L,L_err,n_zeros,class")
    for r in rows:
        print(f"{r.a!r},{r.L!r},{r.L_err!r},{r.n_zeros},{r.decay_class}")
    flips = [(a.a, b.a) for a, b in zip(rows, rows[1:])
             if a.L is not None and b.L is not None and np.sign(a.L) != np.sign(b.L)]
    for lo, hi in flips:
        print(f"# L changes sign in ({lo!r}, {hi!r})", file=sys.stderr)


if __name__ == "__main__":
    main()
