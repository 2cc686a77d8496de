"""Empirical onset of oscillation in alpha for fixed (N, p, q), p < 2.

Below alpha* the profile decays; near delta the zero count grows without
bound. The scan reports the smallest alpha whose profile is labelled
Oscillatory for every sampled a. This is numerical evidence only.
"""

import argparse

import numpy as np

from plaplace import Params, classify_decay
from plaplace.exponents import compute_exponents
from plaplace.profile_ode import default_controls


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=float, default=1.0)
    ap.add_argument("--p", type=float, default=1.5)
    ap.add_argument("--q", type=float, default=3.0)
    ap.add_argument("--a", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--points", type=int, default=30)
    ap.add_argument("--r-max", type=float, default=1e8)
    args = ap.parse_args(argv)

    base = Params(args.N, args.p, args.q, 0.5)
    ex = compute_exponents(base)
    lo = ex.alpha_star if ex.alpha_star is not None else 0.0
    onset = None
    print("alpha," + ",".join(f"zeros(a={a:g})" for a in args.a) + ",all_oscillatory")
    for alpha in np.linspace(lo, ex.delta, args.points + 1)[1:-1].tolist():
        P = Params(args.N, args.p, args.q, alpha)
        ctl = default_controls(P, r_max=args.r_max)
        reps = [classify_decay(a, P, ctl) for a in args.a]
        osc = all(r.decay_class == "Oscillatory" for r in reps)
        print(f"{alpha!r}," + ",".join(str(r.n_zeros) for r in reps) + f",{int(osc)}")
        if osc and onset is None:
            onset = alpha
    print(f"# delta = {ex.delta!r}; empirical onset = {onset!r}")


if __name__ == "__main__":
    main()
