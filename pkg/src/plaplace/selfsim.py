"""Space-time solutions u(x, t) = (b t)^{-1/(q-1)} w((b t)^{-1/b} |x|) built from a profile.

Here b = beta0 and the profile is integrated with alpha = alpha0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from . import classify as C
from .classify import DecayReport, classify_trajectory
from .errors import DivergentNormError, DomainError, ExtrapolationError, ParameterError
from .exponents import Params, compare, compute_exponents
from .profile_ode import IntegratorControls, Termination, Trajectory, default_controls, solve, startup_rate

QUAD_POINTS = 20001


def sphere_area(N: float) -> float:
    """Surface measure of the unit sphere in R^N (2 for N = 1)."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


def _tail_shape(report: DecayReport, params: Params) -> Optional[Callable[[np.ndarray], np.ndarray]]:
    """Shape g(r) of the far field for a classified profile, or None for an exact zero."""
    ex = compute_exponents(params)
    N, p, alpha = params.N, params.p, params.alpha
    cls = report.decay_class
    if cls in (C.COMPACT, C.TRIVIAL):
        return None
    if cls == C.SLOW:
        return lambda r: r ** (-alpha)
    if cls == C.DELTA:
        return lambda r: r ** (-ex.delta)
    if cls == C.ETA:
        return lambda r: r ** (-ex.eta)
    if cls == C.LIM_N:
        return lambda r: r ** (-N)
    if cls == C.LOG_P1:
        return lambda r: r ** (-N) * np.log(r) ** (-(N + 1.0) / 2.0)
    if cls == C.LOG_DELTA:
        return lambda r: r ** (-ex.delta) * np.log(r) ** (1.0 / (2.0 - p))
    if cls == C.EXPONENTIAL:
        return lambda r: np.exp(-0.5 * r * r) * r ** (alpha - N)
    raise ExtrapolationError(f"no tail model for decay class {cls!r}")


def _power_of(report: DecayReport, params: Params) -> Optional[float]:
    """Exponent k of a pure power tail r^{-k}, None otherwise."""
    ex = compute_exponents(params)
    return {
        C.SLOW: params.alpha,
        C.DELTA: ex.delta,
        C.ETA: ex.eta,
        C.LIM_N: params.N,
    }.get(report.decay_class)


@dataclass
class SelfSimilarSolution:
    profile: Trajectory
    report: DecayReport
    alpha0: float
    beta0: float

    def __post_init__(self):
        P = self.profile.params
        if self.alpha0 is None:
            raise ParameterError("q", "self-similar scaling needs q > p - 1")
        if compare(P.alpha, self.alpha0) != "=":
            raise ParameterError("alpha", f"self-similar reconstruction needs alpha = alpha0 = {self.alpha0!r}")
        r, w, wp = self.profile.r, self.profile.w, self.profile.wprime
        keep = np.concatenate([[True], np.diff(r) > 0])
        r, w, wp = r[keep], w[keep], wp[keep]
        self._r0 = float(r[0])
        self._spline = CubicHermiteSpline(r, w, wp)
        self._r_end = float(r[-1])
        self._w_end = float(w[-1])
        self._shape = None
        self._tail_amp = 0.0
        self._tail_ok = True
        if self.profile.termination != Termination.COMPACT_SUPPORT:
            try:
                self._shape = _tail_shape(self.report, P)
            except ExtrapolationError:
                self._tail_ok = False
        if self._shape is not None:
            # the fitted class constant, not the value at r_end: near a fast
            # solution the stored tail is dominated by a tiny slow residue
            amp = self.report.class_value
            if amp is None or not math.isfinite(amp):
                self._tail_ok = False
            else:
                self._tail_amp = float(amp)

    @property
    def params(self) -> Params:
        return self.profile.params

    @classmethod
    def from_profile(cls, traj: Trajectory, report: Optional[DecayReport] = None) -> "SelfSimilarSolution":
        ex = compute_exponents(traj.params)
        if report is None:
            report = classify_trajectory(traj, traj.params)
        return cls(traj, report, ex.alpha0, ex.beta0)

    def w(self, r):
        """Profile value at radius r >= 0, with the series start below r0 and the tail above r_end."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("radius must be nonnegative")
        out = np.empty_like(r)
        lo = r < self._r0
        hi = r > self._r_end
        mid = ~(lo | hi)
        out[mid] = self._spline(r[mid])
        if np.any(lo):
            P = self.params
            a = self.profile.a
            mu = startup_rate(a, P)
            pc = P.p_conj
            out[lo] = a - math.copysign(abs(mu) ** (1.0 / (P.p - 1.0)), mu) * r[lo] ** pc / pc
        if np.any(hi):
            if not self._tail_ok:
                raise ExtrapolationError(
                    f"radius beyond r_end={self._r_end!r} with decay class {self.report.decay_class!r}")
            out[hi] = 0.0 if self._shape is None else self._tail_amp * self._shape(r[hi])
        return out if out.ndim else float(out)


def build_solution(params: Params, a: float, controls: Optional[IntegratorControls] = None) -> SelfSimilarSolution:
    """Integrate and classify the profile w(0) = a at alpha = alpha0."""
    P = params
    a0 = compute_exponents(P).alpha0
    if a0 is None:
        raise ParameterError("q", "self-similar scaling needs q > p - 1")
    if compare(P.alpha, a0) != "=":
        raise ParameterError("alpha", "self-similar reconstruction needs alpha = alpha0")
    traj = solve(a, P, controls or default_controls(P))
    return SelfSimilarSolution.from_profile(traj)


def similarity_radius(sol: SelfSimilarSolution, t, x_norm):
    return (sol.beta0 * np.asarray(t, float)) ** (-1.0 / sol.beta0) * np.abs(np.asarray(x_norm, float))


def reconstruct_u(sol: SelfSimilarSolution, t, x_norm):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("t must be positive")
    q = sol.params.q
    bt = sol.beta0 * t
    val = bt ** (-1.0 / (q - 1.0)) * np.asarray(sol.w(similarity_radius(sol, t, x_norm)))
    return val if np.ndim(val) else float(val)


def _tail_integral(sol: SelfSimilarSolution, s: float) -> float:
    """Integral of r^{N-1} |w|^s over (r_end, inf) from the tail model."""
    if not sol._tail_ok:
        raise ExtrapolationError(f"no tail model for decay class {sol.report.decay_class!r}")
    if sol._shape is None:
        return 0.0
    P = sol.params
    N = P.N
    R = sol._r_end
    k = _power_of(sol.report, P)
    amp = abs(sol._tail_amp) ** s
    if k is not None:
        if not k * s > N:
            raise DivergentNormError(f"r^(N-1)|w|^s with |w| ~ r^-{k!r} is not integrable for s={s!r}")
        return amp * R ** (N - k * s) / (k * s - N)
    if sol.report.decay_class == C.LOG_P1 and s == 1.0:
        c = (N + 1.0) / 2.0
        if not c > 1.0:
            raise DivergentNormError("r^{-N} (ln r)^{-(N+1)/2} is not integrable for N <= 1, s = 1")
        return amp * math.log(R) ** (1.0 - c) / (c - 1.0)
    if sol.report.decay_class == C.LOG_DELTA and not compute_exponents(P).delta * s > N:
        raise DivergentNormError("log-corrected r^{-delta} tail is not integrable")
    shape = sol._shape

    def f(x):
        # r = R e^x; past x = 700 every remaining tail decays exponentially in x
        if x > 700.0:
            return 0.0
        r = R * math.exp(x)
        with np.errstate(over="ignore", under="ignore"):
            g = abs(float(shape(np.array(r))))
        return r ** N * g ** s if g > 0 else 0.0

    val, _ = quad(f, 0.0, math.inf, limit=200)
    return amp * val


def profile_norm(sol: SelfSimilarSolution, s: float, n: int = QUAD_POINTS) -> float:
    """‖w‖_s over R^N for the radial profile."""
    if not s >= 1.0:
        raise DomainError("s must be at least 1")
    P = sol.params
    N = P.N
    if sol.report.decay_class == C.SLOW and not s * sol.alpha0 > N:
        raise DivergentNormError(f"slow decay r^-alpha0 has infinite L^{s!r} norm (s*alpha0 <= N)")
    if sol.report.decay_class == C.TRIVIAL:
        return 0.0
    r0, R = sol._r0, sol._r_end
    # the series start is nearly constant on (0, r0)
    head = abs(sol.profile.a) ** s * r0 ** N / N
    x = np.linspace(math.log(r0), math.log(R), n)
    r = np.exp(x)
    body = float(np.trapezoid(r ** N * np.abs(sol.w(r)) ** s, x))
    tail = _tail_integral(sol, s)
    return (sphere_area(N) * (head + body + tail)) ** (1.0 / s)


def norm_exponent(sol: SelfSimilarSolution, s: float) -> float:
    return (sol.params.N / (s * sol.alpha0) - 1.0) / (sol.params.q - 1.0)


def norm_scaling(sol: SelfSimilarSolution, s: float, t: float) -> float:
    """‖u(t)‖_s = (beta0 t)^{(N/(s alpha0) - 1)/(q-1)} ‖w‖_s."""
    if not t > 0:
        raise DomainError("t must be positive")
    return (sol.beta0 * t) ** norm_exponent(sol, s) * profile_norm(sol, s)
