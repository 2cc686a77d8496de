"""Integration of the radial profile equation in flux form.

Unknowns are w and the flux z = |w'|^{p-2} w', so that

    w' = sign(z)|z|^{1/(p-1)},
    z' = -(N-1) z / r - r w' - alpha w - |w|^{q-1} w,

with w(0) = a, w'(0) = 0. The origin is singular; integration starts at a
small r0 from a two-term series.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional, Tuple

import numpy as np

from ._dopri import RawSolution, dopri_solve
from .errors import DomainError, SingularityError
from .exponents import Params, classify_regime, is_p_two
from .phase_plane import (
    PhaseState,
    PhaseTrajectory,
    delta_of,
    from_phase_arrays,
    make_delta_rhs,
    to_phase_d,
)


@dataclass(frozen=True)
class ProfileState:
    r: float
    w: float
    z: float

    def wprime(self, p: float) -> float:
        return flux_to_slope(self.z, p)


def flux_to_slope(z, p: float):
    if np.ndim(z) == 0:
        z = float(z)
        return math.copysign(abs(z) ** (1.0 / (p - 1.0)), z) if z != 0 else 0.0
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.abs(z) ** (1.0 / (p - 1.0))


def slope_to_flux(wp, p: float):
    if np.ndim(wp) == 0:
        wp = float(wp)
        return math.copysign(abs(wp) ** (p - 1.0), wp) if wp != 0 else 0.0
    wp = np.asarray(wp, dtype=float)
    return np.sign(wp) * np.abs(wp) ** (p - 1.0)


@dataclass(frozen=True)
class IntegratorControls:
    r0: Optional[float] = None  # None -> 1e-4 * min(1, |a|^{(1-q)/p})
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    r_max: float = 100.0
    max_steps: int = 2_000_000
    event_tol: float = 1e-12
    support_tol: float = 1e-7
    r_handoff: float = 1.0  # p < 2: switch to the log-phase system here
    stiff_fallback: bool = True

    def __post_init__(self):
        from .errors import ParameterError

        for name in ("rel_tol", "abs_tol", "event_tol", "support_tol", "r_max", "r_handoff"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ParameterError(name, f"{name} must be a positive finite number")
        if self.r0 is not None and not (0 < self.r0 < 1e-1):
            raise ParameterError("r0", "r0 must lie in (0, 0.1)")
        if not (isinstance(self.max_steps, int) and self.max_steps > 0):
            raise ParameterError("max_steps", "max_steps must be a positive integer")

    def with_(self, **kw) -> "IntegratorControls":
        return replace(self, **kw)


def default_controls(params: Params, **overrides) -> IntegratorControls:
    """Horizon chosen by regime: decay rates differ by orders of magnitude."""
    if is_p_two(params.p):
        base = IntegratorControls(r_max=100.0)
    elif params.p > 2.0:
        base = IntegratorControls(r_max=10.0)
    else:
        reg = classify_regime(params)
        # bounded phase orbits are cheap to follow; oscillation needs many periods in tau
        if reg.section == "S4" or reg.oscillation_expected:
            base = IntegratorControls(r_max=math.exp(30.0))
        else:
            base = IntegratorControls(r_max=1e3)
    return replace(base, **overrides)


class Termination(str, enum.Enum):
    REACHED_RMAX = "ReachedRmax"
    COMPACT_SUPPORT = "CompactSupport"
    STEP_FAILURE = "StepFailure"
    ZERO_LIMIT = "ZeroLimit"  # stopped early at a requested zero count
    STOPPED = "Stopped"  # a caller-supplied stop condition fired


@dataclass
class Trajectory:
    a: float
    params: Params
    controls: IntegratorControls
    r: np.ndarray
    w: np.ndarray
    z: np.ndarray
    zeros: List[Tuple[float, int]]
    wprime_zeros: List[float]
    termination: Termination
    r_support: Optional[float] = None
    message: str = ""
    n_steps: int = 0
    err_estimate: float = 0.0
    used_fallback: bool = False
    phase: Optional[PhaseTrajectory] = None
    # index into r/w/z where the log-phase samples start (None if no phase part)
    phase_start: Optional[int] = None

    @property
    def wprime(self) -> np.ndarray:
        return flux_to_slope(self.z, self.params.p)

    @property
    def samples(self) -> Iterator[ProfileState]:
        for r, w, z in zip(self.r, self.w, self.z):
            yield ProfileState(float(r), float(w), float(z))

    @property
    def r_end(self) -> float:
        return float(self.r[-1])

    @property
    def failed(self) -> bool:
        return self.termination == Termination.STEP_FAILURE

    def negated(self) -> "Trajectory":
        return replace(
            self,
            a=-self.a,
            w=-self.w,
            z=-self.z,
            zeros=[(r, -s) for r, s in self.zeros],
        )

    @classmethod
    def trivial(cls, params: Params, controls: IntegratorControls) -> "Trajectory":
        r = np.array([0.0, controls.r_max])
        zero = np.zeros(2)
        return cls(0.0, params, controls, r, zero, zero.copy(), [], [], Termination.REACHED_RMAX)


def default_r0(a: float, params: Params) -> float:
    return 1e-4 * min(1.0, abs(a) ** ((1.0 - params.q) / params.p))


def startup_rate(a: float, params: Params) -> float:
    """mu(a) = (alpha a + |a|^{q-1} a)/N, so that z ~ -mu r near 0."""
    return (params.alpha * a + math.copysign(abs(a) ** params.q, a)) / params.N


def series_start(a: float, params: Params, r0: float) -> ProfileState:
    if a == 0:
        raise DomainError("a = 0 gives the trivial solution")
    if not r0 > 0:
        raise DomainError("r0 must be positive")
    p = params.p
    mu = startup_rate(a, params)
    pc = p / (p - 1.0)
    z0 = -mu * r0
    w0 = a - math.copysign(abs(mu) ** (1.0 / (p - 1.0)), mu) * r0 ** pc / pc
    return ProfileState(r0, w0, z0)


def make_rhs(params: Params):
    """Closure (r, w, z) -> (w', z') used by the stepper."""
    N, p, q, alpha = params.N, params.p, params.q, params.alpha
    inv = 1.0 / (p - 1.0)
    nm1 = N - 1.0
    qm1 = q - 1.0
    linear = is_p_two(p)

    def f(r, w, z):
        if linear:
            dw = z
        elif z > 0:
            dw = z ** inv
        elif z < 0:
            dw = -((-z) ** inv)
        else:
            dw = 0.0
        src = abs(w) ** qm1 * w if w != 0.0 else 0.0
        return dw, -nm1 * z / r - r * dw - alpha * w - src

    return f


def rhs(state: ProfileState, params: Params) -> Tuple[float, float]:
    if not state.r > 0:
        raise SingularityError("the profile equation is singular at r = 0; use series_start")
    return make_rhs(params)(state.r, state.w, state.z)


def energy_value(w, z, params: Params):
    """E = |w'|^p/p' + alpha w^2/2 + |w|^{q+1}/(q+1), vectorised."""
    p, q, alpha = params.p, params.q, params.alpha
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    pc = p / (p - 1.0)
    return np.abs(z) ** pc / pc + 0.5 * alpha * w * w + np.abs(w) ** (q + 1.0) / (q + 1.0)


def _support_gate(a: float, params: Params, tol: float):
    p, q, alpha = params.p, params.q, params.alpha
    pc = p / (p - 1.0)
    wt = tol * abs(a)
    zt = tol ** (p - 1.0)
    et = tol * tol

    def gate(r, w, z):
        aw = abs(w)
        e = abs(z) ** pc / pc + 0.5 * alpha * w * w + aw ** (q + 1.0) / (q + 1.0)
        return max(aw / wt, abs(z) / zt, e / et) - 1.0

    return gate


def _status_to_termination(status: str) -> Termination:
    return {
        "end": Termination.REACHED_RMAX,
        "gate": Termination.COMPACT_SUPPORT,
        "zero_limit": Termination.ZERO_LIMIT,
        "failure": Termination.STEP_FAILURE,
        "stopped": Termination.STOPPED,
    }[status]


def integrate_profile(
    a: float,
    params: Params,
    controls: IntegratorControls,
    *,
    zero_limit: Optional[int] = None,
    r_end: Optional[float] = None,
    stop_when=None,
) -> Trajectory:
    """Integrate in r from the series start up to ``r_end`` (default controls.r_max).

    ``stop_when(r, w, z) -> bool`` ends the run early (termination Stopped).
    """
    if a == 0:
        raise DomainError("a = 0 gives the trivial solution; use Trajectory.trivial")
    r0 = controls.r0 if controls.r0 is not None else default_r0(a, params)
    target = controls.r_max if r_end is None else r_end
    st = series_start(a, params, r0)
    support = _support_gate(a, params, controls.support_tol) if params.p > 2.0 and not is_p_two(params.p) else None
    gate = _compose_gate(support, stop_when)
    raw = dopri_solve(
        make_rhs(params),
        st.r,
        st.w,
        st.z,
        target,
        rtol=controls.rel_tol,
        atol=(controls.abs_tol, controls.abs_tol),
        max_steps=controls.max_steps,
        event_tol=controls.event_tol,
        gate=gate,
        zero_limit=zero_limit,
        stiff_fallback=controls.stiff_fallback,
    )
    stopped = raw.status == "gate" and stop_when is not None and stop_when(raw.t[-1], raw.y1[-1], raw.y2[-1])
    return _wrap_profile(a, params, controls, raw, stopped)


def _compose_gate(support, stop_when):
    if stop_when is None:
        return support

    def gate(r, w, z):
        if stop_when(r, w, z):
            return -1.0
        return support(r, w, z) if support is not None else 1.0

    return gate


def _wrap_profile(a, params, controls, raw: RawSolution, stopped: bool = False) -> Trajectory:
    term = Termination.STOPPED if stopped else _status_to_termination(raw.status)
    r = np.asarray(raw.t)
    return Trajectory(
        a=a,
        params=params,
        controls=controls,
        r=r,
        w=np.asarray(raw.y1),
        z=np.asarray(raw.y2),
        zeros=list(raw.zeros1),
        wprime_zeros=list(raw.zeros2),
        termination=term,
        r_support=float(r[-1]) if term == Termination.COMPACT_SUPPORT else None,
        message=raw.message,
        n_steps=raw.n_steps,
        err_estimate=raw.err_estimate,
        used_fallback=raw.used_fallback,
    )


def integrate_log_phase(
    handoff: PhaseState,
    params: Params,
    tau_max: float,
    controls: IntegratorControls,
    *,
    zero_limit: Optional[int] = None,
    with_source: bool = True,
    stop_when=None,
) -> PhaseTrajectory:
    """Integrate the delta-system from ``handoff`` up to tau_max.

    ``stop_when(tau, y, Y) -> bool`` ends the run early (status "stopped").
    """
    d = delta_of(params)
    if abs(handoff.d - d) > 1e-14 * max(1.0, d):
        raise DomainError("handoff state must use the exponent delta")
    if tau_max < handoff.tau:
        raise DomainError("tau_max lies before the handoff point")
    raw = dopri_solve(
        make_delta_rhs(params, with_source=with_source),
        handoff.tau,
        handoff.y,
        handoff.Y,
        tau_max,
        rtol=controls.rel_tol,
        atol=(controls.abs_tol, controls.abs_tol),
        max_steps=controls.max_steps,
        event_tol=controls.event_tol,
        zero_limit=zero_limit,
        stiff_fallback=controls.stiff_fallback,
        gate=_compose_gate(None, stop_when),
    )
    status = "stopped" if raw.status == "gate" else raw.status
    return PhaseTrajectory(
        params=params,
        tau=np.asarray(raw.t),
        y=np.asarray(raw.y1),
        Y=np.asarray(raw.y2),
        zeros=list(raw.zeros1),
        Y_zeros=list(raw.zeros2),
        status=status,
        message=raw.message,
        n_steps=raw.n_steps,
        used_fallback=raw.used_fallback,
        err_estimate=raw.err_estimate,
    )


def solve(
    a: float,
    params: Params,
    controls: Optional[IntegratorControls] = None,
    *,
    zero_limit: Optional[int] = None,
    stop_when=None,
    stop_when_phase=None,
) -> Trajectory:
    """Profile from r0 to controls.r_max, via the log-phase system when p < 2.

    ``stop_when`` / ``stop_when_phase`` are early-exit conditions in (r, w, z)
    and (tau, y, Y) coordinates respectively.

    For p < 2 the profile is integrated in r up to r_handoff and continued in
    tau = ln r, where the solution is O(1) and the step count grows only
    linearly in ln r_max.
    """
    if controls is None:
        controls = default_controls(params)
    if a == 0:
        return Trajectory.trivial(params, controls)
    p = params.p
    if p >= 2.0 or is_p_two(p) or controls.r_max <= controls.r_handoff:
        return integrate_profile(a, params, controls, zero_limit=zero_limit, stop_when=stop_when)

    head = integrate_profile(a, params, controls, zero_limit=zero_limit, r_end=controls.r_handoff,
                             stop_when=stop_when)
    if head.termination != Termination.REACHED_RMAX:
        return head
    d = delta_of(params)
    hand = to_phase_d(head.r_end, float(head.w[-1]), float(head.z[-1]), d, params)
    remaining = None if zero_limit is None else zero_limit - len(head.zeros)
    ph = integrate_log_phase(hand, params, math.log(controls.r_max), controls, zero_limit=remaining,
                             stop_when=stop_when_phase)
    r2, w2, z2 = from_phase_arrays(ph.tau[1:], ph.y[1:], ph.Y[1:], d, params)
    n0 = len(head.r)
    zeros = list(head.zeros) + [(math.exp(t), s) for t, s in ph.zeros]
    wpz = list(head.wprime_zeros) + [math.exp(t) for t in ph.Y_zeros]
    msg = "; ".join(m for m in (head.message, ph.message) if m)
    return Trajectory(
        a=a,
        params=params,
        controls=controls,
        r=np.concatenate([head.r, r2]),
        w=np.concatenate([head.w, w2]),
        z=np.concatenate([head.z, z2]),
        zeros=zeros,
        wprime_zeros=wpz,
        termination=_status_to_termination(ph.status),
        message=msg,
        n_steps=head.n_steps + ph.n_steps,
        err_estimate=head.err_estimate + ph.err_estimate * math.exp(-d * ph.tau[-1]),
        used_fallback=head.used_fallback or ph.used_fallback,
        phase=ph,
        phase_start=n0,
    )
