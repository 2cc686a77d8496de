"""Logarithmic substitutions and the planar systems they produce.

With tau = ln r and an exponent d,

    y_d(tau) = r^d w(r),    Y_d(tau) = -r^{(d+1)(p-1)} z(r),   z = |w'|^{p-2} w'.

For d = delta = p/(2-p) (p < 2) the profile equation becomes a perturbation
of an autonomous planar system by a source term carrying e^{-delta(q-1)tau}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import DomainError, UndefinedRegimeError
from .exponents import Params, compute_exponents, is_p_two

DIAGONAL_RTOL = 1e-12


@dataclass(frozen=True)
class PhaseState:
    tau: float
    y: float
    Y: float
    d: float


def _require_sub2(params: Params) -> float:
    if params.p >= 2.0 or is_p_two(params.p):
        raise UndefinedRegimeError("the delta-system requires p < 2")
    return params.p / (2.0 - params.p)


def delta_of(params: Params) -> float:
    return _require_sub2(params)


def to_phase_d(r: float, w: float, z: float, d: float, params: Params) -> PhaseState:
    if not r > 0:
        raise DomainError("logarithmic substitution requires r > 0")
    tau = math.log(r)
    y = math.exp(d * tau) * w
    Y = -math.exp((d + 1.0) * (params.p - 1.0) * tau) * z
    return PhaseState(tau, y, Y, d)


def from_phase_d(state: PhaseState, params: Params) -> Tuple[float, float, float]:
    """Inverse of to_phase_d: returns (r, w, z)."""
    tau, d = state.tau, state.d
    r = math.exp(tau)
    w = math.exp(-d * tau) * state.y
    z = -math.exp(-(d + 1.0) * (params.p - 1.0) * tau) * state.Y
    return r, w, z


def from_phase_arrays(tau, y, Y, d: float, params: Params):
    tau = np.asarray(tau, dtype=float)
    r = np.exp(tau)
    w = np.exp(-d * tau) * np.asarray(y, dtype=float)
    z = -np.exp(-(d + 1.0) * (params.p - 1.0) * tau) * np.asarray(Y, dtype=float)
    return r, w, z


def _signed_pow(x: float, e: float) -> float:
    """sign(x)|x|^e; with e = 1/(p-1) this is |x|^{(2-p)/(p-1)} x."""
    if x > 0:
        return x ** e
    if x < 0:
        return -((-x) ** e)
    return 0.0


def autonomous_rhs(y: float, Y: float, params: Params) -> Tuple[float, float]:
    d = _require_sub2(params)
    N, p, alpha = params.N, params.p, params.alpha
    m = _signed_pow(Y, 1.0 / (p - 1.0))
    return d * y - m, (d - N) * Y - m + alpha * y


def nonautonomous_rhs(tau: float, y: float, Y: float, params: Params) -> Tuple[float, float]:
    d = _require_sub2(params)
    dy, dY = autonomous_rhs(y, Y, params)
    if y != 0.0:
        dY += math.exp(-d * (params.q - 1.0) * tau) * _signed_pow(y, params.q)
    return dy, dY


def make_delta_rhs(params: Params, with_source: bool = True):
    """Fast closure of the delta-system for the stepper."""
    d = _require_sub2(params)
    N, p, q, alpha = params.N, params.p, params.q, params.alpha
    inv = 1.0 / (p - 1.0)
    c = d - N
    decay = d * (q - 1.0)
    exp = math.exp

    def f(tau, y, Y):
        if Y > 0:
            m = Y ** inv
        elif Y < 0:
            m = -((-Y) ** inv)
        else:
            m = 0.0
        dY = c * Y - m + alpha * y
        if with_source and y != 0.0:
            ay = abs(y)
            dY += exp(-decay * tau) * ay ** (q - 1.0) * y
        return d * y - m, dY

    return f


def sysd_rhs(tau: float, y: float, Y: float, d: float, params: Params,
             autonomous: bool = False) -> Tuple[float, float]:
    """General-d system. The growth factor e^{(p+(p-2)d) tau} is applied in log space.

    The source carries e^{-d(q-1) tau}, which reduces to the delta-system at d = delta.
    """
    N, p, q, alpha = params.N, params.p, params.q, params.alpha
    eta = (N - p) / (p - 1.0)
    m = _signed_pow(Y, 1.0 / (p - 1.0))
    dy = d * y - m
    lin = (p - 1.0) * (d - eta) * Y
    inner = alpha * y - m
    src = 0.0
    if not autonomous and y != 0.0:
        log_src = -d * (q - 1.0) * tau + q * math.log(abs(y))
        src = math.copysign(math.exp(log_src), y)
    bracket = inner + src
    if bracket == 0.0:
        return dy, lin
    log_g = (p + (p - 2.0) * d) * tau + math.log(abs(bracket))
    return dy, lin + math.copysign(math.exp(log_g), bracket)


@dataclass(frozen=True)
class StationarySet:
    points: Tuple[Tuple[float, float], ...]

    @property
    def has_M_ell(self) -> bool:
        return len(self.points) == 3


def stationary_points(params: Params) -> StationarySet:
    ex = compute_exponents(params)
    if ex.ell is None:
        return StationarySet(((0.0, 0.0),))
    d = ex.delta
    ell = ex.ell
    M = (ell, (d * ell) ** (params.p - 1.0))
    return StationarySet(((0.0, 0.0), M, (-M[0], -M[1])))


def h_function(y, Y, params: Params):
    """H(y, Y); vectorised over numpy arrays.

    Quotient (delta y - m(Y)) / (|delta y|^{p-2} delta y - Y) off the diagonal,
    |delta y|^{2-p}/(p-1) on it.
    """
    d = _require_sub2(params)
    p = params.p
    y = np.asarray(y, dtype=float)
    Y = np.asarray(Y, dtype=float)
    dyv = d * y
    phi = np.sign(dyv) * np.abs(dyv) ** (p - 1.0)
    m = np.sign(Y) * np.abs(Y) ** (1.0 / (p - 1.0))
    num = dyv - m
    den = phi - Y
    diag = np.abs(den) < DIAGONAL_RTOL * (np.abs(dyv) ** (p - 1.0) + np.abs(Y))
    both0 = (dyv == 0) & (Y == 0)
    safe = np.where(diag | both0, 1.0, den)
    out = np.where(diag | both0, np.abs(dyv) ** (2.0 - p) / (p - 1.0), num / safe)
    if out.ndim == 0:
        return float(out)
    return out


def h_lower_bound(y, Y, params: Params):
    d = _require_sub2(params)
    p = params.p
    return 0.5 * (np.abs(d * np.asarray(y, float)) ** (2.0 - p)
                  + np.abs(np.asarray(Y, float)) ** ((2.0 - p) / (p - 1.0)))


def in_S(y, Y, params: Params):
    d = _require_sub2(params)
    res = np.asarray(h_function(y, Y, params)) < 2.0 * d - params.N
    if res.ndim == 0:
        return bool(res)
    return res


@dataclass
class PhaseTrajectory:
    """Output of a log-phase integration (d = delta)."""

    params: Params
    tau: np.ndarray
    y: np.ndarray
    Y: np.ndarray
    zeros: List[Tuple[float, int]]
    Y_zeros: List[float]
    status: str
    message: str = ""
    n_steps: int = 0
    used_fallback: bool = False
    err_estimate: float = 0.0

    @property
    def d(self) -> float:
        return delta_of(self.params)

    def to_profile(self):
        return from_phase_arrays(self.tau, self.y, self.Y, self.d, self.params)
