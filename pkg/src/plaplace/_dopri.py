"""Scalar Dormand-Prince 5(4) stepper for planar systems.

The right-hand sides in this package are two-dimensional and cheap, so a
plain-float loop beats array-based solvers by a wide margin. Sign changes of
either component are located on the continuous extension. If the step-size
controller detects stiffness (Hairer's test on the last two stages), the
remaining interval is handed to scipy's LSODA, which switches to BDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

RHS = Callable[[float, float, float], Tuple[float, float]]

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# continuous extension (Hairer's contd5)
D1, D3, D4, D5, D6, D7 = (
    -12715105075 / 11282082432,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)

STIFF_RHO = 3.25
STIFF_COUNT = 15
# a non-smooth RHS (|z|^{1/(p-1)} near z = 0, p > 2) can pin the step size
# without tripping the stiffness test; hand off when progress stalls
PROGRESS_BLOCK = 1000
PROGRESS_LIMIT = 200_000


@dataclass
class RawSolution:
    t: List[float]
    y1: List[float]
    y2: List[float]
    zeros1: List[Tuple[float, int]] = field(default_factory=list)
    zeros2: List[float] = field(default_factory=list)
    status: str = "end"  # end | gate | zero_limit | failure
    message: str = ""
    n_steps: int = 0
    n_rejected: int = 0
    used_fallback: bool = False
    err_estimate: float = 0.0


def _sign(x: float) -> int:
    return 1 if x > 0 else (-1 if x < 0 else 0)


class _ZeroBook:
    """Tracks sign changes of one component and merges chatter."""

    def __init__(self, y0: float, t0: float, tol: float, with_dir: bool):
        self.last = _sign(y0)
        self.tol = tol
        self.with_dir = with_dir
        self.items: list = []

    def add(self, t: float, direction: int):
        if self.items:
            prev = self.items[-1]
            tp = prev[0] if self.with_dir else prev
            if abs(t - tp) <= self.tol * max(1.0, abs(t)):
                return
        self.items.append((t, direction) if self.with_dir else t)


def _norm(e1, e2, s1, s2):
    return math.sqrt(0.5 * ((e1 / s1) ** 2 + (e2 / s2) ** 2))


def _initial_step(fun, t0, y1, y2, f0, rtol, atol1, atol2, t_end):
    s1 = atol1 + rtol * abs(y1)
    s2 = atol2 + rtol * abs(y2)
    d0 = _norm(y1, y2, s1, s2)
    d1 = _norm(f0[0], f0[1], s1, s2)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, abs(t_end - t0))
    f1 = fun(t0 + h0, y1 + h0 * f0[0], y2 + h0 * f0[1])
    d2 = _norm(f1[0] - f0[0], f1[1] - f0[1], s1, s2) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, abs(t_end - t0))


def dopri_solve(
    fun: RHS,
    t0: float,
    y1: float,
    y2: float,
    t_end: float,
    *,
    rtol: float = 1e-10,
    atol: Tuple[float, float] = (1e-14, 1e-14),
    max_steps: int = 2_000_000,
    event_tol: float = 1e-12,
    gate: Optional[Callable[[float, float, float], float]] = None,
    zero_limit: Optional[int] = None,
    stiff_fallback: bool = True,
    h0: Optional[float] = None,
) -> RawSolution:
    """Integrate (y1, y2)' = fun(t, y1, y2) from t0 to t_end.

    ``gate`` returns a float; integration stops (status "gate") at the first
    accepted step where it is <= 0. ``zero_limit`` stops after that many
    sign changes of y1.
    """
    atol1, atol2 = atol
    t = t0
    out = RawSolution([t0], [y1], [y2])
    z1 = _ZeroBook(y1, t0, event_tol, True)
    z2 = _ZeroBook(y2, t0, event_tol, False)
    k1 = fun(t, y1, y2)
    h = h0 if h0 is not None else _initial_step(fun, t, y1, y2, k1, rtol, atol1, atol2, t_end)
    hmin_rel = 64 * 2.220446049250313e-16
    ia_sti = 0
    non_sti = 0
    n = 0
    err_sum = 0.0
    block_t = t0
    block_n = 0

    def finish(status, message=""):
        out.zeros1 = z1.items
        out.zeros2 = z2.items
        out.status = status
        out.message = message
        out.n_steps = n
        out.err_estimate = err_sum
        return out

    while t < t_end:
        if n >= max_steps:
            return finish("failure", f"max_steps={max_steps} exhausted at t={t!r}")
        if t + h > t_end:
            h = t_end - t
        if h <= hmin_rel * max(1.0, abs(t)):
            return finish("failure", f"step size underflow at t={t!r}")
        a0, a1 = k1
        b = fun(t + C2 * h, y1 + h * A21 * a0, y2 + h * A21 * a1)
        c = fun(t + C3 * h, y1 + h * (A31 * a0 + A32 * b[0]), y2 + h * (A31 * a1 + A32 * b[1]))
        d = fun(
            t + C4 * h,
            y1 + h * (A41 * a0 + A42 * b[0] + A43 * c[0]),
            y2 + h * (A41 * a1 + A42 * b[1] + A43 * c[1]),
        )
        e = fun(
            t + C5 * h,
            y1 + h * (A51 * a0 + A52 * b[0] + A53 * c[0] + A54 * d[0]),
            y2 + h * (A51 * a1 + A52 * b[1] + A53 * c[1] + A54 * d[1]),
        )
        s61 = y1 + h * (A61 * a0 + A62 * b[0] + A63 * c[0] + A64 * d[0] + A65 * e[0])
        s62 = y2 + h * (A61 * a1 + A62 * b[1] + A63 * c[1] + A64 * d[1] + A65 * e[1])
        g = fun(t + h, s61, s62)
        n1 = y1 + h * (B1 * a0 + B3 * c[0] + B4 * d[0] + B5 * e[0] + B6 * g[0])
        n2 = y2 + h * (B1 * a1 + B3 * c[1] + B4 * d[1] + B5 * e[1] + B6 * g[1])
        k7 = fun(t + h, n1, n2)
        n += 1
        if not (math.isfinite(n1) and math.isfinite(n2) and math.isfinite(k7[0]) and math.isfinite(k7[1])):
            out.n_rejected += 1
            h *= 0.2
            continue
        e1 = h * (E1 * a0 + E3 * c[0] + E4 * d[0] + E5 * e[0] + E6 * g[0] + E7 * k7[0])
        e2 = h * (E1 * a1 + E3 * c[1] + E4 * d[1] + E5 * e[1] + E6 * g[1] + E7 * k7[1])
        sc1 = atol1 + rtol * max(abs(y1), abs(n1))
        sc2 = atol2 + rtol * max(abs(y2), abs(n2))
        err = _norm(e1, e2, sc1, sc2)
        if err > 1.0:
            out.n_rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            continue

        # accepted
        err_sum += abs(e1)
        t_old, o1, o2 = t, y1, y2
        t = t + h if t + h < t_end else t_end
        y1, y2 = n1, n2

        s_new1 = _sign(y1)
        s_new2 = _sign(y2)
        dense = None
        if s_new1 != 0 and z1.last != 0 and s_new1 != z1.last:
            dense = _dense_coeffs(h, o1, o2, y1, y2, k1, c, d, e, g, k7)
            tz = _locate(dense, 0, t_old, h, o1, event_tol)
            z1.add(tz, s_new1)
        elif s_new1 != 0 and z1.last == 0 and len(out.t) > 1:
            z1.add(t_old, s_new1)
        if s_new1 != 0:
            z1.last = s_new1
        if s_new2 != 0 and z2.last != 0 and s_new2 != z2.last:
            if dense is None:
                dense = _dense_coeffs(h, o1, o2, y1, y2, k1, c, d, e, g, k7)
            z2.add(_locate(dense, 1, t_old, h, o2, event_tol), 0)
        if s_new2 != 0:
            z2.last = s_new2

        out.t.append(t)
        out.y1.append(y1)
        out.y2.append(y2)

        if zero_limit is not None and len(z1.items) >= zero_limit:
            return finish("zero_limit")
        if gate is not None and gate(t, y1, y2) <= 0.0:
            return finish("gate")

        block_n += 1
        if stiff_fallback and block_n >= PROGRESS_BLOCK and t < t_end:
            rate = (t - block_t) / block_n
            if rate <= 0 or (t_end - t) / rate > PROGRESS_LIMIT:
                out.n_steps = n
                return _continue_lsoda(
                    fun, out, z1, z2, t, y1, y2, t_end, rtol, atol, event_tol,
                    gate, zero_limit, max_steps - n, err_sum, h,
                )
            block_t, block_n = t, 0

        # stiffness detection on the last two stages
        if stiff_fallback:
            den = (n1 - s61) ** 2 + (n2 - s62) ** 2
            if den > 0:
                num = (k7[0] - g[0]) ** 2 + (k7[1] - g[1]) ** 2
                if h * math.sqrt(num / den) > STIFF_RHO:
                    non_sti = 0
                    ia_sti += 1
                    if ia_sti >= STIFF_COUNT and t < t_end:
                        out.n_steps = n
                        return _continue_lsoda(
                            fun, out, z1, z2, t, y1, y2, t_end, rtol, atol, event_tol,
                            gate, zero_limit, max_steps - n, err_sum, h,
                        )
                else:
                    non_sti += 1
                    if non_sti >= 6:
                        ia_sti = 0

        k1 = k7
        fac = 0.9 * err ** -0.2 if err > 0 else 5.0
        h *= min(5.0, max(0.2, fac))

    return finish("end")


def _dense_coeffs(h, o1, o2, n1, n2, k1, k3, k4, k5, k6, k7):
    rows = []
    for i, (yo, yn) in enumerate(((o1, n1), (o2, n2))):
        ydiff = yn - yo
        bspl = h * k1[i] - ydiff
        r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
        rows.append((yo, ydiff, bspl, ydiff - h * k7[i] - bspl, r5))
    return rows


def _dense_eval(row, th):
    r1, r2, r3, r4, r5 = row
    th1 = 1.0 - th
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)))


def _locate(dense, comp, t_old, h, y_old, tol):
    row = dense[comp]
    f = lambda th: _dense_eval(row, th)
    f0, f1 = f(0.0), f(1.0)
    if f0 == 0.0:
        return t_old
    if f0 * f1 > 0:
        # interpolant misses the crossing; fall back to the secant point
        th = f0 / (f0 - f1) if f0 != f1 else 0.5
        return t_old + min(max(th, 0.0), 1.0) * h
    th = brentq(f, 0.0, 1.0, xtol=min(0.5, tol / max(h, 1e-300)), rtol=4 * 2.220446049250313e-16)
    return t_old + th * h


def _continue_lsoda(fun, out, z1, z2, t, y1, y2, t_end, rtol, atol, event_tol, gate,
                    zero_limit, steps_left, err_sum, h_last):
    """Finish the integration with LSODA after stiffness was detected."""
    out.used_fallback = True
    events = []

    def ev_y1(tt, yy):
        return yy[0]

    def ev_y2(tt, yy):
        return yy[1]

    if zero_limit is not None:
        remaining = zero_limit - len(z1.items)
        ev_y1.terminal = max(1, remaining)
    events.append(ev_y1)
    events.append(ev_y2)
    if gate is not None:
        def ev_gate(tt, yy):
            return gate(tt, yy[0], yy[1])
        ev_gate.terminal = True
        ev_gate.direction = -1
        events.append(ev_gate)

    sol = solve_ivp(
        lambda tt, yy: fun(tt, yy[0], yy[1]),
        (t, t_end),
        [y1, y2],
        method="LSODA",
        rtol=max(rtol, 1e-12),
        atol=np.array(atol, dtype=float),
        events=events,
        first_step=min(h_last, t_end - t),
    )
    ts = sol.t[1:]
    out.t.extend(float(x) for x in ts)
    out.y1.extend(float(x) for x in sol.y[0, 1:])
    out.y2.extend(float(x) for x in sol.y[1, 1:])
    for tz in sol.t_events[0]:
        tz = float(tz)
        # direction from the stored samples straddling the event
        idx = np.searchsorted(np.asarray(out.t), tz)
        idx = min(max(idx, 1), len(out.t) - 1)
        s = _sign(out.y1[idx]) or -z1.last
        z1.add(tz, s)
        z1.last = s
    for tz in sol.t_events[1]:
        z2.add(float(tz), 0)
    out.n_steps += len(ts)
    out.zeros1 = z1.items
    out.zeros2 = z2.items
    out.err_estimate = err_sum + rtol * float(np.sum(np.abs(sol.y[0])))
    if sol.status == -1:
        out.status = "failure"
        out.message = f"LSODA failure: {sol.message}"
    elif sol.status == 1:
        fired_gate = gate is not None and len(sol.t_events[-1]) > 0
        out.status = "gate" if fired_gate else "zero_limit"
    else:
        out.status = "end"
    if out.status != "failure":
        out.message = f"stiff tail from t={t!r} integrated by LSODA"
    return out
