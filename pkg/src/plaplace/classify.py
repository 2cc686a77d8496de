"""Decay limit, zero counting and asymptotic classification of profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .energy import flux_moments
from .errors import DomainError, UndefinedRegimeError
from .exponents import (
    Params,
    classify_regime,
    compare,
    compute_exponents,
    expansion_constants,
    in_section_S3,
    is_p_two,
)
from .profile_ode import IntegratorControls, Termination, Trajectory, default_controls, solve

FIT_GATE = 0.10
DOMINANCE = 2.0
OSC_MIN_ZEROS = 12
OSC_GAP_SPREAD = 0.20

SLOW = "SlowDecay"
COMPACT = "FastCompactSupport"
DELTA = "FastDelta"
ETA = "FastEta"
LOG_P1 = "FastLogP1"
LOG_DELTA = "FastLogDeltaEqAlpha"
LIM_N = "FastDeltaEqN"  # alpha = delta = N: r^N w -> k
EXPONENTIAL = "FastExponential"  # p = 2 only, optional fit
OSCILLATORY = "Oscillatory"
UNDETERMINED = "Undetermined"
TRIVIAL = "Trivial"


@dataclass(frozen=True)
class LEstimate:
    L: float
    err: float
    method: str  # "tail-fit", "direct-fit", "exact"
    J_end: float = 0.0
    tail: float = 0.0
    warning: str = ""


def _last_decade(r: np.ndarray, width: float = math.log(10.0)) -> np.ndarray:
    r_end = r[-1]
    return r >= r_end * math.exp(-width)


def _power_tail(r: np.ndarray, g: np.ndarray) -> Tuple[float, float, bool]:
    """Integral of g over [r_end, inf) from a power-law fit on the window.

    Returns (tail, bound, ok). ``ok`` is False when the window does not look
    like an integrable one-signed power law.
    """
    ag = np.abs(g)
    if len(r) < 4 or np.any(ag == 0) or not (np.all(g > 0) or np.all(g < 0)):
        return 0.0, float(np.max(ag) * r[-1]) if len(r) else 0.0, False
    lr = np.log(r)
    slope, icpt = np.polyfit(lr, np.log(ag), 1)
    misfit = float(np.max(np.abs(np.log(ag) - (slope * lr + icpt))))
    if not slope < -1.0 - 1e-3:
        return 0.0, float(ag[-1] * r[-1]), False
    R = r[-1]
    mag = math.exp(icpt) * R ** (slope + 1.0) / (-(slope + 1.0))
    tail = math.copysign(mag, g[-1])
    # the estimate itself is taken as the uncertainty, widened by the fit misfit
    bound = mag * (1.0 + math.expm1(misfit))
    return tail, bound, True


def estimate_L(traj: Trajectory, params: Params) -> LEstimate:
    """L = lim r^alpha w as J_alpha(r_end) plus a fitted tail of J_alpha'."""
    if not in_section_S3(params):
        raise UndefinedRegimeError("L is defined only when (2-p) alpha < p")
    if traj.a == 0:
        return LEstimate(0.0, 0.0, "exact")
    r, w, z = traj.r, traj.w, traj.z
    alpha, N, q = params.alpha, params.N, params.q
    fm = flux_moments(traj, params)
    J = np.asarray(fm.J_alpha)
    J_end = float(J[-1])
    R = float(r[-1])
    num = R ** alpha * (traj.err_estimate + abs(float(w[-1])) * traj.controls.rel_tol) + abs(J_end) * 1e-12
    if traj.termination == Termination.COMPACT_SUPPORT:
        return LEstimate(0.0, abs(J_end) + num, "exact", J_end=J_end)

    m = _last_decade(r)
    m &= r > 0
    rw, ww, zw = r[m], w[m], z[m]
    g1 = (alpha - N) * rw ** (alpha - 2.0) * zw
    g2 = -rw ** (alpha - 1.0) * np.abs(ww) ** (q - 1.0) * ww
    t1, b1, ok1 = _power_tail(rw, g1) if alpha != N else (0.0, 0.0, True)
    t2, b2, ok2 = _power_tail(rw, g2)
    warning = ""
    if R < 1e2:
        warning = f"horizon r_max={R:.3g} below 1e2"
    if ok1 and ok2:
        L = J_end + t1 + t2
        err = b1 + b2 + num
        direct = rw ** alpha * ww
        # a loose bound relative to the spread of r^alpha w falls back to a direct fit
        spread = float(np.max(direct) - np.min(direct))
        if err > spread and spread > 0 and len(direct) > 3:
            return LEstimate(float(direct[-1]), spread + num, "direct-fit", J_end, t1 + t2,
                             warning or "tail bound looser than direct spread")
        return LEstimate(L, err, "tail-fit", J_end, t1 + t2, warning)
    direct = rw ** alpha * ww
    spread = float(np.max(direct) - np.min(direct)) if len(direct) else abs(J_end)
    tail_b = (0.0 if ok1 else b1) + (0.0 if ok2 else b2)
    warning = (warning + "; " if warning else "") + "tail not a one-signed integrable power law"
    return LEstimate(float(direct[-1]) if len(direct) else J_end, spread + tail_b + num,
                     "direct-fit", J_end, 0.0, warning)


def count_zeros(traj: Trajectory) -> Tuple[int, bool]:
    n = len(traj.zeros)
    if traj.termination == Termination.COMPACT_SUPPORT:
        return n, False
    if traj.termination in (Termination.ZERO_LIMIT, Termination.STEP_FAILURE):
        return n, True
    if n < 2:
        return n, False
    t = [math.log(zr) for zr, _ in traj.zeros[-2:]]
    gap = t[1] - t[0]
    remaining = math.log(traj.r_end) - t[1]
    return n, remaining < 1.5 * gap


@dataclass
class FitResult:
    name: str
    estimate: float
    residual: float
    extra: Dict[str, float] = field(default_factory=dict)


@dataclass
class DecayReport:
    a: float
    L: Optional[float]
    L_err: Optional[float]
    n_zeros: int
    censored: bool
    decay_class: str
    class_value: Optional[float] = None
    fits: Dict[str, dict] = field(default_factory=dict)
    horizon: float = 0.0
    termination: str = ""
    notes: List[str] = field(default_factory=list)

    @property
    def determined(self) -> bool:
        return self.decay_class != UNDETERMINED

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "L": self.L,
            "L_err": self.L_err,
            "class": self.decay_class,
            "class_value": self.class_value,
            "n_zeros": self.n_zeros,
            "censored": self.censored,
            "horizon": self.horizon,
            "termination": self.termination,
            "fits": self.fits,
            "notes": list(self.notes),
        }


def _window(traj: Trajectory, window: Optional[Tuple[float, float]]):
    r = traj.r
    tau = np.log(np.where(r > 0, r, np.nan))
    if window is None:
        lo = tau[-1] - math.log(10.0)
        hi = tau[-1]
    else:
        lo, hi = window
    m = (tau >= lo) & (tau <= hi) & np.isfinite(tau)
    return m, tau


def _flat_fit(name: str, g: np.ndarray) -> FitResult:
    if len(g) < 3 or not np.all(np.isfinite(g)):
        return FitResult(name, float("nan"), math.inf)
    if not (np.all(g > 0) or np.all(g < 0)):
        return FitResult(name, float(g[-1]), math.inf, {"min": float(np.min(g)), "max": float(np.max(g))})
    est = float(g[-1])
    res = float((np.max(g) - np.min(g)) / abs(est))
    return FitResult(name, est, res, {"min": float(np.min(g)), "max": float(np.max(g))})


def _fit_delta(traj, params, m, tau, ex):
    g = np.exp(ex.delta * tau[m]) * traj.w[m]
    return _flat_fit("delta", g)


def _fit_eta(traj, params, m, tau, ex):
    g = np.exp(ex.eta * tau[m]) * traj.w[m]
    return _flat_fit("eta", g)


def _fit_p1(traj, params, m, tau, ex):
    N = params.N
    mm = m & (tau > 0)
    g = np.exp(N * tau[mm]) * tau[mm] ** ((N + 1.0) / 2.0) * traj.w[mm]
    return _flat_fit("p1", g)


def _fit_log_delta(traj, params, m, tau, ex):
    """|y|^{2-p} grows linearly in tau with slope eta_bar^{2-p}."""
    p = params.p
    mm = m & (tau > 0)
    y = np.exp(ex.delta * tau[mm]) * traj.w[mm]
    if len(y) < 4 or not (np.all(y > 0) or np.all(y < 0)):
        return FitResult("log_delta", float("nan"), math.inf)
    hv = np.abs(y) ** (2.0 - p)
    slope, icpt = np.polyfit(tau[mm], hv, 1)
    if slope <= 0:
        return FitResult("log_delta", float("nan"), math.inf)
    fit = slope * tau[mm] + icpt
    res = float(np.max(np.abs(hv - fit)) / np.mean(hv))
    ratio = float(np.abs(y[-1]) * tau[mm][-1] ** (-1.0 / (2.0 - p)))
    est = math.copysign(slope ** (1.0 / (2.0 - p)), y[-1])
    return FitResult("log_delta", est, res, {"slope": float(slope), "intercept": float(icpt),
                                             "raw_ratio_end": ratio})


def _fit_lim_N(traj, params, m, tau, ex):
    g = np.exp(params.N * tau[m]) * traj.w[m]
    return _flat_fit("lim_N", g)


def _fit_exponential(traj, params):
    """p = 2: e^{r^2/2} r^{N-alpha} w -> A over the range where w is well above noise."""
    r, w = traj.r, traj.w
    N, alpha = params.N, params.alpha
    aw = np.abs(w)
    a = abs(traj.a)
    # the fast component is resolved while |w| stays well above the slow residue
    m = (r >= 1.0) & (aw > 1e-8 * a)
    if m.sum() < 4:
        return FitResult("exponential", float("nan"), math.inf)
    rr = r[m]
    top = rr[-1]
    mm = m & (r >= 0.5 * top)
    g = np.exp(0.5 * r[mm] ** 2) * r[mm] ** (N - alpha) * w[mm]
    return _flat_fit("exponential", g)


def _oscillation(traj: Trajectory) -> Optional[Tuple[int, float]]:
    zs = [math.log(zr) for zr, _ in traj.zeros if zr > 0]
    if len(zs) < OSC_MIN_ZEROS:
        return None
    gaps = np.diff(zs[-6:])
    if len(gaps) < 5 or np.min(gaps) <= 0:
        return None
    if np.max(gaps) / np.min(gaps) - 1.0 < OSC_GAP_SPREAD:
        return len(zs), float(np.mean(gaps))
    return None


def _select(cands: List[FitResult]) -> Tuple[Optional[FitResult], str]:
    finite = sorted((c for c in cands if math.isfinite(c.residual)), key=lambda c: c.residual)
    if not finite:
        return None, "no candidate fit is one-signed on the window"
    best = finite[0]
    if best.residual > FIT_GATE:
        return None, f"best fit {best.name} residual {best.residual:.3g} above gate {FIT_GATE}"
    if len(finite) > 1 and finite[1].residual < DOMINANCE * best.residual:
        return None, f"fits {best.name} and {finite[1].name} not separated by {DOMINANCE}x"
    return best, ""


def classify_trajectory(traj: Trajectory, params: Params,
                        window: Optional[Tuple[float, float]] = None) -> DecayReport:
    a = traj.a
    n, censored = count_zeros(traj)
    rep = DecayReport(a=a, L=None, L_err=None, n_zeros=n, censored=censored,
                      decay_class=UNDETERMINED, horizon=traj.r_end,
                      termination=traj.termination.value)
    if a == 0:
        rep.L, rep.L_err, rep.decay_class = 0.0, 0.0, TRIVIAL
        return rep
    if traj.failed:
        rep.notes.append(f"integration failed: {traj.message}")
        return rep
    if traj.message:
        rep.notes.append(traj.message)
    regime = classify_regime(params)
    ex = compute_exponents(params)
    p, N, alpha = params.p, params.N, params.alpha

    if regime.section == "S3":
        est = estimate_L(traj, params)
        rep.L, rep.L_err = est.L, est.err
        rep.fits["L"] = {"method": est.method, "J_end": est.J_end, "tail": est.tail}
        if est.warning:
            rep.notes.append(est.warning)
        if abs(est.L) > est.err:
            rep.decay_class = SLOW
            rep.class_value = est.L
            return rep

    osc = _oscillation(traj)
    if osc is not None:
        rep.decay_class = OSCILLATORY
        rep.class_value = float(osc[0])
        rep.fits["oscillation"] = {"count": osc[0], "mean_tau_gap": osc[1], "horizon": traj.r_end}
        return rep

    if p > 2.0 and not is_p_two(p):
        if traj.termination == Termination.COMPACT_SUPPORT:
            rep.decay_class = COMPACT
            rep.class_value = traj.r_support
            rep.fits["support"] = {"r_support": traj.r_support}
        else:
            rep.notes.append("fast decay without a detected support edge")
        return rep

    if is_p_two(p):
        fit = _fit_exponential(traj, params)
        rep.fits[fit.name] = {"estimate": fit.estimate, "residual": fit.residual, **fit.extra}
        if fit.residual <= FIT_GATE:
            rep.decay_class = EXPONENTIAL
            rep.class_value = fit.estimate
        else:
            rep.notes.append("exponential tail fit above residual gate")
        return rep

    m, tau = _window(traj, window)
    rel_p1 = compare(p, ex.p1)
    if regime.section == "S3":
        cands = [_fit_delta(traj, params, m, tau, ex), _fit_eta(traj, params, m, tau, ex),
                 _fit_p1(traj, params, m, tau, ex)]
        allowed = {"delta": rel_p1 == ">", "eta": rel_p1 == "<", "p1": rel_p1 == "="}
    else:
        rel_da = compare(ex.delta, alpha)
        rel_dN = compare(ex.delta, N)
        if rel_da == "<" and rel_dN == "<":
            cands = [_fit_delta(traj, params, m, tau, ex), _fit_eta(traj, params, m, tau, ex)]
            allowed = {"delta": True, "eta": True}
        elif rel_da == "=" and rel_dN == "<":
            if window is None:
                # O(1/tau) corrections: fit over the second half of the tau range
                m, tau = _window(traj, (0.5 * math.log(traj.r_end), math.log(traj.r_end)))
            cands = [_fit_log_delta(traj, params, m, tau, ex), _fit_eta(traj, params, m, tau, ex)]
            allowed = {"log_delta": True, "eta": True}
        elif rel_da == "=" and rel_dN == "=":
            cands = [_fit_lim_N(traj, params, m, tau, ex)]
            allowed = {"lim_N": True}
        else:
            rep.notes.append("oscillation expected but the zero-spacing gate was not met")
            cands, allowed = [], {}
    for c in cands:
        rep.fits[c.name] = {"estimate": c.estimate, "residual": c.residual, **c.extra}
    best, why = _select(cands)
    if best is None:
        # bounded r^delta w straddling ell without a limit
        dfit = next((c for c in cands if c.name == "delta"), None)
        if dfit is not None and ex.ell is not None and regime.section == "S4":
            lo, hi = dfit.extra.get("min"), dfit.extra.get("max")
            if lo is not None and hi is not None and lo <= ex.ell <= hi and n == 0:
                rep.decay_class = DELTA
                rep.class_value = dfit.estimate
                rep.fits["delta"]["no_limit"] = True
                return rep
        if why:
            rep.notes.append(why)
        return rep
    if not allowed.get(best.name, False):
        rep.notes.append(f"fit {best.name} contradicts the regime (p vs p1)")
        return rep
    rep.decay_class = {"delta": DELTA, "eta": ETA, "p1": LOG_P1, "log_delta": LOG_DELTA,
                       "lim_N": LIM_N}[best.name]
    rep.class_value = best.estimate
    return rep


def classify_decay(a: float, params: Params, controls: Optional[IntegratorControls] = None,
                   window: Optional[Tuple[float, float]] = None) -> DecayReport:
    if a == 0:
        raise DomainError("a = 0 is the trivial solution")
    if controls is None:
        controls = default_controls(params)
    traj = solve(a, params, controls)
    return classify_trajectory(traj, params, window)


@dataclass(frozen=True)
class ExpansionReport:
    regime: str
    k: float
    K: float
    M: float
    predicted: float  # K, K+M or M
    exponent: float  # decay exponent of the leading correction
    fitted: float  # coefficient from a joint fit of L and the correction
    fitted_with_L: float  # coefficient using the supplied L
    relative_error: float
    slope_limit: float  # r^{alpha+1} w' at r_end
    slope_error: float  # |r^{alpha+1} w' + alpha L| / (alpha L)


def verify_expansion(traj: Trajectory, L: float, params: Params) -> ExpansionReport:
    if not L > 0:
        raise DomainError("expansion check needs a positive slow-decay limit L")
    ec = expansion_constants(params, L)
    alpha, q = params.alpha, params.q
    if ec.regime == ">":
        e, pred = ec.k, ec.K
    elif ec.regime == "=":
        e, pred = ec.k, ec.K + ec.M
    else:
        e, pred = alpha * (q - 1.0), ec.M
    r, w = traj.r, traj.w
    m = _last_decade(r) & (r > 0)
    rr, yy = r[m], r[m] ** alpha * w[m]
    basis = np.vstack([np.ones_like(rr), rr ** -e, rr ** (-2.0 * e)]).T
    coef, *_ = np.linalg.lstsq(basis, yy, rcond=None)
    fitted = float(coef[1])
    with_L = float(np.median(rr ** e * (yy - L)))
    rel = abs(fitted - pred) / abs(pred) if pred != 0 else abs(fitted)
    slope = float(r[-1] ** (alpha + 1.0) * traj.wprime[-1])
    return ExpansionReport(ec.regime, ec.k, ec.K, ec.M, pred, e, fitted, with_L, rel, slope,
                           abs(slope + alpha * L) / (alpha * L))
