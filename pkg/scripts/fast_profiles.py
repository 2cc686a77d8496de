"""Bisect for the first fast-decaying profile in three representative regimes."""

import time

from plaplace import Params, bisect_fast_decay
from plaplace.exponents import ell_constant
from plaplace.profile_ode import default_controls

CASES = [
    ("semilinear N=3", Params(3, 2, 3, 1), 1.0, 10.0, None),
    ("singular N=1", Params(1, 1.5, 3, 0.6), 0.1, 5.0, 1e3),
    ("degenerate N=3", Params(3, 3, 4, 1.5), 0.5, 10.0, None),
]


def main():
    for name, P, lo, hi, r_max in CASES:
        t0 = time.perf_counter()
        rctl = default_controls(P, r_max=r_max) if r_max else None
        res = bisect_fast_decay(P, lo, hi, report_controls=rctl)
        rep = res.report
        line = f"{name:16s} a*={res.a_star!r:22s} class={rep.decay_class:20s} value={rep.class_value!r}"
        if rep.decay_class == "FastDelta":
            line += f" (closed form {ell_constant(P)!r})"
        print(line + f"  [{time.perf_counter() - t0:.2f}s, {len(res.history)} evaluations]")


if __name__ == "__main__":
    main()
