"""Shooting in the initial value a = w(0): sweeps, fast-decay and zero-count thresholds."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .classify import DecayReport, TRIVIAL, classify_trajectory, in_section_S3
from .errors import BracketError, NotFoundError
from .exponents import Params, is_p_two
from .profile_ode import IntegratorControls, default_controls, solve

THREADS_ENV = "SELFSIM_THREADS"


@dataclass(frozen=True)
class SweepRow:
    a: float
    L: Optional[float]
    L_err: Optional[float]
    n_zeros: Optional[int]
    decay_class: str
    error: Optional[str] = None


def thread_cap(requested: Optional[int] = None) -> int:
    env = os.environ.get(THREADS_ENV)
    cap = None
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            cap = 1
    n = requested if requested is not None else (cap or 1)
    if cap is not None:
        n = min(n, cap)
    return max(1, n)


def _row(args) -> SweepRow:
    a, params, controls = args
    if a == 0:
        return SweepRow(0.0, 0.0, 0.0, 0, TRIVIAL)
    try:
        rep = classify_trajectory(solve(a, params, controls), params)
    except Exception as exc:  # a failed row must not abort the sweep
        return SweepRow(a, None, None, None, "Failed", f"{type(exc).__name__}: {exc}")
    if not in_section_S3(params):
        return SweepRow(a, None, None, rep.n_zeros, rep.decay_class)
    return SweepRow(a, rep.L, rep.L_err, rep.n_zeros, rep.decay_class,
                    "; ".join(rep.notes) if rep.decay_class == "Undetermined" and rep.notes else None)


def sweep_initial_values(params: Params, a_grid: Sequence[float],
                         controls: Optional[IntegratorControls] = None,
                         threads: Optional[int] = None) -> List[SweepRow]:
    """One classification per grid value, rows ordered by a."""
    if controls is None:
        controls = default_controls(params)
    grid = sorted(float(a) for a in a_grid)
    if not grid:
        return []
    jobs = [(a, params, controls) for a in grid]
    n = thread_cap(threads)
    if n <= 1 or len(jobs) < 2:
        return [_row(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        # map preserves input order, so the result is independent of scheduling
        return list(pool.map(_row, jobs, chunksize=max(1, len(jobs) // (4 * n))))


def shooting_controls(params: Params, **overrides) -> IntegratorControls:
    """Horizons for the zero predicate.

    For p < 2 a trajectory near the fast solution leaves it at rate
    e^{(delta-alpha)tau}; the predicate horizon must be long enough for a
    bracket of width ~1e-12 to separate the two sides.
    """
    if is_p_two(params.p) or params.p > 2.0:
        return default_controls(params, **overrides)
    base = default_controls(params)
    return base.with_(r_max=max(base.r_max, 1e6), **overrides)


def positivity_certificates(params: Params):
    """Exact early-exit tests proving that no further zero can occur (alpha < N).

    If w > 0, w' <= 0, J_N = r^N (w + z/r) > 0 and |w|^{q-1} < N - alpha, then
    J_N' > 0 keeps J_N positive, so w > -z/r >= 0 from then on. The same holds
    with all signs reversed. In delta-coordinates J_N > 0 reads y > Y.
    Returns (profile_test, phase_test) or (None, None) when alpha >= N.
    """
    N, q, alpha = params.N, params.q, params.alpha
    if not alpha < N:
        return None, None
    cap = N - alpha

    def in_r(r, w, z):
        s = w + z / r
        return abs(w) ** (q - 1.0) < cap and ((w > 0 and z < 0 and s > 0) or (w < 0 and z > 0 and s < 0))

    if params.p >= 2.0 or is_p_two(params.p):
        return in_r, None
    d = params.p / (2.0 - params.p)
    rate = d * (q - 1.0)

    def in_tau(tau, y, Y):
        if not ((y > Y > 0) or (y < Y < 0)):
            return False
        return math.exp(-rate * tau) * abs(y) ** (q - 1.0) < cap

    return in_r, in_tau


def has_zero(a: float, params: Params, controls: IntegratorControls, count: int = 1) -> bool:
    """At least ``count`` isolated zeros before the horizon."""
    cert_r, cert_tau = positivity_certificates(params)
    tr = solve(a, params, controls, zero_limit=count, stop_when=cert_r, stop_when_phase=cert_tau)
    if tr.failed:
        raise RuntimeError(f"integration failed at a={a!r}: {tr.message}")
    return len(tr.zeros) >= count


@dataclass
class BisectionResult:
    a_star: float
    a_lo: float
    a_hi: float
    history: List[Tuple[float, bool]]
    report: DecayReport
    target: int = 1  # number of zeros defining the upper set
    scan: List[Tuple[float, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "a_star": self.a_star,
            "a_lo": self.a_lo,
            "a_hi": self.a_hi,
            "width": self.a_hi - self.a_lo,
            "class": self.report.decay_class,
            "report": self.report.to_dict(),
            "history": [{"a": a, "upper": bool(u)} for a, u in self.history],
            "scan": [{"a": a, "n_zeros": n} for a, n in self.scan],
        }


def _bisect(pred, lo: float, hi: float, tol: float, history: list) -> Tuple[float, float]:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        v = pred(mid)
        history.append((mid, v))
        if v:
            hi = mid
        else:
            lo = mid
    return lo, hi


def bisect_fast_decay(params: Params, a_lo: float, a_hi: float, tol: float = 1e-12,
                      controls: Optional[IntegratorControls] = None,
                      report_controls: Optional[IntegratorControls] = None) -> BisectionResult:
    """Boundary between zero-free and zero-carrying initial values.

    The returned a_star is the zero-free end of the final bracket; that
    solution is classified with ``report_controls``.
    """
    if not (0 < a_lo < a_hi):
        raise BracketError("need 0 < a_lo < a_hi")
    if not tol > 0:
        raise BracketError("tol must be positive")
    ctl = controls or shooting_controls(params)
    history: List[Tuple[float, bool]] = []
    lo_z = has_zero(a_lo, params, ctl)
    hi_z = has_zero(a_hi, params, ctl)
    history += [(a_lo, lo_z), (a_hi, hi_z)]
    if lo_z or not hi_z:
        raise BracketError(
            f"endpoints do not separate: zero at a_lo={lo_z}, zero at a_hi={hi_z}"
        )
    lo, hi = _bisect(lambda a: has_zero(a, params, ctl), a_lo, a_hi, tol, history)
    rctl = report_controls or default_controls(params)
    report = classify_trajectory(solve(lo, params, rctl), params)
    return BisectionResult(lo, lo, hi, history, report)


def find_min_zero_threshold(params: Params, m: int, a_max: float,
                            controls: Optional[IntegratorControls] = None,
                            n_scan: int = 40, tol: float = 1e-12,
                            report_controls: Optional[IntegratorControls] = None) -> BisectionResult:
    """First grid crossing of N(a) >= m+1, refined by bisection.

    a_star is the upper end of the final bracket (a value with at least m+1
    zeros); the report classifies the lower end, which carries m zeros.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if not a_max > 0:
        raise ValueError("a_max must be positive")
    ctl = controls or shooting_controls(params)
    grid = [a_max * (i + 1) / n_scan for i in range(n_scan)]
    scan: List[Tuple[float, int]] = []
    prev = 0.0
    hit = None
    best = 0
    cert_r, cert_tau = positivity_certificates(params)
    for a in grid:
        tr = solve(a, params, ctl, zero_limit=m + 1, stop_when=cert_r, stop_when_phase=cert_tau)
        k = len(tr.zeros)
        scan.append((a, k))
        best = max(best, k)
        if k >= m + 1:
            hit = a
            break
        prev = a
    if hit is None:
        raise NotFoundError(
            f"N(a) < {m + 1} for every scanned a <= {a_max}; max count {best}", max_count=best
        )
    history: List[Tuple[float, bool]] = []
    if prev == 0.0:
        # the first grid point already crosses; shrink towards 0 geometrically
        lo = hit
        while lo > 1e-12 * a_max and has_zero(lo, params, ctl, m + 1):
            history.append((lo, True))
            lo *= 0.5
        history.append((lo, False))
        prev = lo
    lo, hi = _bisect(lambda a: has_zero(a, params, ctl, m + 1), prev, hit, tol, history)
    rctl = report_controls or default_controls(params)
    report = classify_trajectory(solve(lo, params, rctl), params)
    return BisectionResult(hi, lo, hi, history, report, target=m + 1, scan=scan)
