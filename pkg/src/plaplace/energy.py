"""Monotone and conserved diagnostics along profiles and phase trajectories.

All evaluators are vectorised: pass floats or numpy arrays for (r, w, z), or
any object with those attributes (ProfileState, Trajectory).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from ._dopri import dopri_solve
from .errors import InsufficientHorizonError, UndefinedRegimeError
from .exponents import Params, is_p_two
from .phase_plane import delta_of, in_S, make_delta_rhs
from .profile_ode import flux_to_slope, make_rhs


def _rwz(state):
    return (np.asarray(state.r, dtype=float), np.asarray(state.w, dtype=float),
            np.asarray(state.z, dtype=float))


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def energy_E(state, params: Params):
    _, w, z = _rwz(state)
    p, q, alpha = params.p, params.q, params.alpha
    pc = p / (p - 1.0)
    return _out(np.abs(z) ** pc / pc + 0.5 * alpha * w * w + np.abs(w) ** (q + 1.0) / (q + 1.0))


def energy_dE(state, params: Params):
    """E' = -(N-1)|w'|^p / r - r w'^2."""
    r, w, z = _rwz(state)
    wp = flux_to_slope(z, params.p)
    return _out(-(params.N - 1.0) * np.abs(wp) ** params.p / r - r * wp * wp)


def energy_at_origin(a: float, params: Params) -> float:
    return 0.5 * params.alpha * a * a + abs(a) ** (params.q + 1.0) / (params.q + 1.0)


@dataclass(frozen=True)
class VReport:
    V: object
    dV: object
    # the five summands of r^{1-lambda} V'; each is a separate sign condition
    gradient: object
    source: object
    cross: object
    square: object
    quadratic: object

    @property
    def terms(self):
        return (self.gradient, self.source, self.cross, self.square, self.quadratic)


def pps_V(state, params: Params, lam: float, sigma: float, e: float) -> VReport:
    r, w, z = _rwz(state)
    N, p, q, alpha = params.N, params.p, params.q, params.alpha
    pc = p / (p - 1.0)
    wp = flux_to_slope(z, p)
    awp = np.abs(wp) ** p
    aw = np.abs(w) ** (q + 1.0)
    V = r ** lam * (awp / pc + aw / (q + 1.0) + 0.5 * e * w * w + sigma * w * z / r)
    t1 = -(N - 1.0 - sigma - lam / pc) * awp
    t2 = -(sigma - lam / (q + 1.0)) * aw
    t3 = sigma * (lam - N) * w * z / r
    t4 = -(r * wp + 0.5 * (sigma - e + alpha) * w) ** 2
    t5 = -(sigma * alpha - 0.5 * e * lam - 0.25 * (sigma + alpha - e) ** 2) * w * w
    dV = r ** (lam - 1.0) * (t1 + t2 + t3 + t4 + t5)
    return VReport(_out(V), _out(dV), _out(t1), _out(t2), _out(t3), _out(t4), _out(t5))


def positivity_multipliers(params: Params, case: str) -> Tuple[float, float, float]:
    """(lambda, sigma, e) used in the positivity arguments, cases 'i', 'ii', 'iii'."""
    N, p, alpha = params.N, params.p, params.alpha
    if case == "i":
        s = (N - p) / p
        return N, s, s + alpha - N
    if case == "ii":
        return N, N / 2.0, alpha - N / 2.0
    if case == "iii":
        s = N - 1.0 - 2.0 * alpha / params.p_conj
        return 2.0 * alpha, s, s - alpha
    raise ValueError(f"unknown case {case!r}")


def case_ii_terms(state, params: Params):
    """Three summands of r^{1-N} V' for (lambda, sigma, e) = (N, N/2, alpha - N/2)."""
    r, w, z = _rwz(state)
    N, p, q = params.N, params.p, params.q
    p2 = 2.0 * N / (N + 2.0)
    wp = flux_to_slope(z, p)
    g = -(N + 2.0) * (p2 - p) / (2.0 * p) * np.abs(wp) ** p
    s = -N * (q - 1.0) / (2.0 * (q + 1.0)) * np.abs(w) ** (q + 1.0)
    sq = -(r * wp + 0.5 * N * w) ** 2
    return _out(g), _out(s), _out(sq)


@dataclass(frozen=True)
class FluxMoments:
    J_N: object
    J_alpha: object
    dJ_N: object
    dJ_alpha: object


def flux_moments(state, params: Params) -> FluxMoments:
    r, w, z = _rwz(state)
    N, q, alpha = params.N, params.q, params.alpha
    src = np.abs(w) ** (q - 1.0)
    J_N = r ** N * (w + z / r)
    J_alpha = r ** alpha * (w + z / r)
    dJ_N = r ** (N - 1.0) * (N - alpha - src) * w
    dJ_alpha = r ** (alpha - 1.0) * ((alpha - N) * z / r - src * w)
    return FluxMoments(_out(J_N), _out(J_alpha), _out(dJ_N), _out(dJ_alpha))


# ---------------------------------------------------------------- phase plane


def _require_sub2(params: Params) -> float:
    if params.p >= 2.0 or is_p_two(params.p):
        raise UndefinedRegimeError("Lyapunov functions of the delta-system need p < 2")
    return delta_of(params)


@dataclass(frozen=True)
class LyapunovSample:
    Wcal: object
    W: object
    U: object
    dW: object  # U - delta(q-1)/(q+1) e^{-delta(q-1)tau}|y|^{q+1}


def lyapunov_W(tau, y, Y, params: Params) -> LyapunovSample:
    d = _require_sub2(params)
    N, p, q, alpha = params.N, params.p, params.q, params.alpha
    pc = p / (p - 1.0)
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(y, dtype=float)
    Y = np.asarray(Y, dtype=float)
    ay = np.abs(y)
    Wcal = ((2 * d - N) * d ** (p - 1.0) * ay ** p / p + np.abs(Y) ** pc / pc
            - d * y * Y + 0.5 * (alpha - d) * y * y)
    damp = np.exp(-d * (q - 1.0) * tau)
    W = Wcal + damp * ay ** (q + 1.0) / (q + 1.0)
    U = dissipation_U(y, Y, params)
    dW = U - d * (q - 1.0) / (q + 1.0) * damp * ay ** (q + 1.0)
    return LyapunovSample(_out(Wcal), _out(W), _out(U), _out(dW))


def dissipation_U(y, Y, params: Params):
    """U = A B (2 delta - N - H) written as A B (2 delta - N) - A^2, free of the quotient."""
    d = _require_sub2(params)
    p, N = params.p, params.N
    y = np.asarray(y, dtype=float)
    Y = np.asarray(Y, dtype=float)
    dy = d * y
    A = dy - np.sign(Y) * np.abs(Y) ** (1.0 / (p - 1.0))
    B = np.sign(dy) * np.abs(dy) ** (p - 1.0) - Y
    return _out(A * B * (2 * d - N) - A * A)


@dataclass(frozen=True)
class PsiResult:
    tau: np.ndarray
    Psi: np.ndarray
    error: float  # tail bound plus quadrature error estimate
    tail_bound: float
    quad_error: float


def psi_function(tau, y, Y, params: Params, accuracy: Optional[float] = None) -> PsiResult:
    """Psi = W - delta(q-1)/(q+1) int_tau^inf e^{-delta(q-1)s}|y|^{q+1} ds on stored samples."""
    d = _require_sub2(params)
    q = params.q
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(y, dtype=float)
    c = d * (q - 1.0) / (q + 1.0)
    rate = d * (q - 1.0)
    g = np.exp(-rate * tau) * np.abs(y) ** (q + 1.0)
    seg = 0.5 * np.diff(tau) * (g[1:] + g[:-1])
    # cumulative integral from each sample to the last one
    rev = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    quad_err = _trapezoid_error(tau, g)
    window = tau >= tau[-1] - math.log(10.0)
    ysup = float(np.max(np.abs(y[window]))) if window.any() else abs(float(y[-1]))
    tail_sup = math.exp(-rate * tau[-1]) * ysup ** (q + 1.0) / rate
    tail_est = math.exp(-rate * tau[-1]) * abs(float(y[-1])) ** (q + 1.0) / rate
    W = np.asarray(lyapunov_W(tau, y, Y, params).W)
    Psi = W - c * (rev + tail_est)
    err = c * (tail_sup + quad_err)
    if accuracy is not None and err > accuracy:
        raise InsufficientHorizonError(
            f"Psi error bar {err:.3g} exceeds requested accuracy {accuracy:.3g}; extend tau_max"
        )
    return PsiResult(tau, Psi, err, c * tail_sup, c * quad_err)


def _trapezoid_error(t, g) -> float:
    """Richardson-type estimate: trapezoid on all samples vs every other sample."""
    if len(t) < 5:
        return float(np.abs(np.trapezoid(g, t)))
    fine = np.trapezoid(g, t)
    coarse = np.trapezoid(g[::2], t[::2])
    if (len(t) - 1) % 2:
        coarse += 0.5 * (t[-1] - t[-2]) * (g[-1] + g[-2])
    return float(abs(fine - coarse) / 3.0)


# ----------------------------------------------------------- difference oracles


def three_point_derivative(t, f):
    """Second-order derivative on a nonuniform grid at interior samples."""
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    h1 = t[1:-1] - t[:-2]
    h2 = t[2:] - t[1:-1]
    return (h1 * h1 * f[2:] - h2 * h2 * f[:-2] - (h1 * h1 - h2 * h2) * f[1:-1]) / (h1 * h2 * (h1 + h2))


def local_flow(fun: Callable, t: float, u1: float, u2: float, dt: float,
               rtol: float = 1e-13, atol: float = 1e-300):
    """State reached from (t, u1, u2) after signed time dt, integrated tightly."""
    if dt == 0:
        return u1, u2
    if dt > 0:
        raw = dopri_solve(fun, t, u1, u2, t + dt, rtol=rtol, atol=(atol, atol), stiff_fallback=False)
        return raw.y1[-1], raw.y2[-1]
    back = lambda s, a, b: tuple(-v for v in fun(-s, a, b))
    raw = dopri_solve(back, -t, u1, u2, -t - dt, rtol=rtol, atol=(atol, atol), stiff_fallback=False)
    return raw.y1[-1], raw.y2[-1]


@dataclass(frozen=True)
class DifferenceCheck:
    t: float
    exact: float
    fd_h: float
    fd_h2: float
    h: float

    @property
    def residual_h(self) -> float:
        return abs(self.fd_h - self.exact)

    @property
    def residual_h2(self) -> float:
        return abs(self.fd_h2 - self.exact)

    def second_order(self, floor: float) -> bool:
        """Halving h cuts the residual roughly fourfold, or both sit at the roundoff floor."""
        if self.residual_h <= floor and self.residual_h2 <= floor:
            return True
        return self.residual_h2 <= self.residual_h / 3.0 + floor


def difference_check(quantity: Callable, derivative: Callable, fun: Callable,
                     t: float, u1: float, u2: float, h: float) -> DifferenceCheck:
    """Centered differences of quantity(t, u1, u2) vs derivative(t, u1, u2) along fun."""
    vals = {}
    for k in (-1.0, -0.5, 0.5, 1.0):
        a, b = local_flow(fun, t, u1, u2, k * h)
        vals[k] = quantity(t + k * h, a, b)
    fd_h = (vals[1.0] - vals[-1.0]) / (2 * h)
    fd_h2 = (vals[0.5] - vals[-0.5]) / h
    return DifferenceCheck(t, float(derivative(t, u1, u2)), float(fd_h), float(fd_h2), h)


def profile_flow(params: Params):
    return make_rhs(params)


def phase_flow(params: Params):
    return make_delta_rhs(params)


class _S:
    """Light container so evaluators accept scalar states."""

    def __init__(self, r, w, z):
        self.r, self.w, self.z = r, w, z


def check_dV(params, lam, sigma, e, r, w, z, h):
    fun = make_rhs(params)
    return difference_check(
        lambda t, a, b: pps_V(_S(t, a, b), params, lam, sigma, e).V,
        lambda t, a, b: pps_V(_S(t, a, b), params, lam, sigma, e).dV,
        fun, r, w, z, h,
    )


def check_dJ_N(params, r, w, z, h):
    fun = make_rhs(params)
    return difference_check(
        lambda t, a, b: flux_moments(_S(t, a, b), params).J_N,
        lambda t, a, b: flux_moments(_S(t, a, b), params).dJ_N,
        fun, r, w, z, h,
    )


def check_dJ_alpha(params, r, w, z, h):
    fun = make_rhs(params)
    return difference_check(
        lambda t, a, b: flux_moments(_S(t, a, b), params).J_alpha,
        lambda t, a, b: flux_moments(_S(t, a, b), params).dJ_alpha,
        fun, r, w, z, h,
    )


def check_dE(params, r, w, z, h):
    fun = make_rhs(params)
    return difference_check(
        lambda t, a, b: energy_E(_S(t, a, b), params),
        lambda t, a, b: energy_dE(_S(t, a, b), params),
        fun, r, w, z, h,
    )


def check_dW(params, tau, y, Y, h):
    fun = make_delta_rhs(params)
    return difference_check(
        lambda t, a, b: lyapunov_W(t, a, b, params).W,
        lambda t, a, b: lyapunov_W(t, a, b, params).dW,
        fun, tau, y, Y, h,
    )


def w_decrease_outside_S(tau, y, Y, params: Params):
    """Samplewise finite-difference W' at interior samples with an error indicator.

    Returns (mask_outside_S, dW_fd, err_indicator), all at samples 1..n-2.
    The indicator compares the 3-point stencil on neighbours with the one
    built from second neighbours.
    """
    tau = np.asarray(tau, dtype=float)
    Wv = np.asarray(lyapunov_W(tau, y, Y, params).W)
    fd = three_point_derivative(tau, Wv)
    wide = np.full_like(fd, np.nan)
    if len(tau) >= 5:
        wide[1:-1] = _wide_stencil(tau, Wv)
    err = np.abs(fd - wide)
    err = np.where(np.isfinite(err), err, np.abs(fd))
    outside = ~np.asarray(in_S(np.asarray(y)[1:-1], np.asarray(Y)[1:-1], params))
    return outside, fd, err


def _wide_stencil(t, f):
    """3-point derivative at samples 2..n-3 using second neighbours."""
    h1 = t[2:-2] - t[:-4]
    h2 = t[4:] - t[2:-2]
    return (h1 * h1 * f[4:] - h2 * h2 * f[:-4] - (h1 * h1 - h2 * h2) * f[2:-2]) / (h1 * h2 * (h1 + h2))
