"""Critical exponents, closed-form constants and regime classification.

Everything here is a pure function of the parameter quadruple (N, p, q, alpha)
for the radial profile equation

    (|w'|^{p-2} w')' + (N-1)/r |w'|^{p-2} w' + r w' + alpha w + |w|^{q-1} w = 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional

from .errors import DomainError, ParameterError, UndefinedRegimeError

# Relative tolerance used to decide that two thresholds coincide.
BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class Params:
    N: float
    p: float
    q: float
    alpha: float

    def __post_init__(self):
        for name in ("N", "p", "q", "alpha"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ParameterError(name, f"{name} must be a finite real number")
        if self.N < 1:
            raise ParameterError("N", "N must be at least 1")
        if self.p <= 1:
            raise ParameterError("p", "p must exceed 1")
        if self.q <= 1:
            raise ParameterError("q", "q must exceed 1")
        if self.alpha <= 0:
            raise ParameterError("alpha", "alpha must be positive")

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    def with_alpha(self, alpha: float) -> "Params":
        return Params(self.N, self.p, self.q, alpha)

    def natural(self) -> "Params":
        """Same (N, p, q) with alpha replaced by the self-similar value alpha0."""
        return self.with_alpha(alpha0_of(self.p, self.q))

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def alpha0_of(p: float, q: float) -> float:
    if q + 1.0 - p <= 0:
        raise DomainError("alpha0 requires q > p - 1")
    return p / (q + 1.0 - p)


def compare(x: float, y: float, rtol: float = BOUNDARY_RTOL) -> str:
    """Three-way comparison that treats near-equal values as equal."""
    if math.isinf(x) or math.isinf(y):
        return "=" if x == y else ("<" if x < y else ">")
    if abs(x - y) <= rtol * max(1.0, abs(x), abs(y)):
        return "="
    return "<" if x < y else ">"


def is_p_two(p: float) -> bool:
    return compare(p, 2.0) == "="


@dataclass(frozen=True)
class Exponents:
    p1: float
    p2: float
    q1: float
    q_star: float
    delta: float
    eta: float
    alpha0: Optional[float]  # None when q <= p - 1
    beta0: Optional[float]
    alpha_star: Optional[float] = None
    ell: Optional[float] = None
    varrho: Optional[float] = None
    eta_bar: Optional[float] = None

    @property
    def delta_positive(self) -> bool:
        return self.delta > 0

    def to_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)


def _delta(p: float) -> float:
    return math.inf if is_p_two(p) else p / (2.0 - p)


def _q_star(N: float, p: float) -> float:
    return math.inf if N <= p else (N * (p - 1.0) + p) / (N - p)


def _alpha_star_value(N: float, p: float) -> float:
    d = p / (2.0 - p)
    return d + d * (N - d) / ((p - 1.0) * (2.0 * d - N))


def _ell_defined(params: Params) -> bool:
    p = params.p
    if p >= 2.0 or is_p_two(p):
        return False
    d = p / (2.0 - p)
    rn, ra = compare(d, params.N), compare(d, params.alpha)
    return "=" not in (rn, ra) and (rn == ra)


def _eta_bar_defined(params: Params) -> bool:
    if params.p >= 2.0 or is_p_two(params.p):
        return False
    d = params.p / (2.0 - params.p)
    return compare(d, params.N) == "<"


def compute_exponents(params: Params) -> Exponents:
    N, p, q, alpha = params.N, params.p, params.q, params.alpha
    a0 = alpha0_of(p, q) if q + 1.0 - p > 0 else None
    astar = _alpha_star_value(N, p) if (2 * N / (N + 2) < p < 2.0 and not is_p_two(p)) else None
    ell = ell_constant(params) if _ell_defined(params) else None
    rho = None
    if compare(p, 2 * N / (N + 1)) == "=" and alpha < N:
        rho = varrho_constant(params)
    eb = eta_bar_constant(params) if _eta_bar_defined(params) else None
    return Exponents(
        p1=2.0 * N / (N + 1.0),
        p2=2.0 * N / (N + 2.0),
        q1=p - 1.0 + p / N,
        q_star=_q_star(N, p),
        delta=_delta(p),
        eta=(N - p) / (p - 1.0),
        alpha0=a0,
        beta0=(q - 1.0) * a0 if a0 is not None else None,
        alpha_star=astar,
        ell=ell,
        varrho=rho,
        eta_bar=eb,
    )


def alpha_star(params: Params) -> float:
    """Oscillation threshold for alpha; defined for p2 < p < 2."""
    N, p = params.N, params.p
    if not (2.0 * N / (N + 2.0) < p < 2.0) or is_p_two(p):
        raise UndefinedRegimeError("alpha_star requires 2N/(N+2) < p < 2")
    return _alpha_star_value(N, p)


def ell_constant(params: Params) -> float:
    """Amplitude of the explicit solution ell * r^{-delta}."""
    if not _ell_defined(params):
        raise UndefinedRegimeError("ell requires p < 2 and (delta-N)(delta-alpha) > 0")
    N, p, alpha = params.N, params.p, params.alpha
    d = p / (2.0 - p)
    return (d ** (p - 1.0) * (d - N) / (d - alpha)) ** (1.0 / (2.0 - p))


def lambda_constant(params: Params) -> float:
    """Abscissa of the diagonal point lying on the curve H = 2 delta - N."""
    N, p = params.N, params.p
    if not (p < 2.0) or is_p_two(p):
        raise UndefinedRegimeError("lambda requires p < 2")
    d = p / (2.0 - p)
    base = (2.0 * d - N) * (p - 1.0)
    if base <= 0:
        raise UndefinedRegimeError("lambda requires N < 2 delta")
    return base ** (1.0 / (2.0 - p)) / d


def varrho_constant(params: Params) -> float:
    N, p, alpha = params.N, params.p, params.alpha
    if compare(p, 2.0 * N / (N + 1.0)) != "=" or not alpha < N:
        raise UndefinedRegimeError("varrho requires p = 2N/(N+1) and alpha < N")
    return (N * (N - 1.0) / (2.0 * (N - alpha))) ** ((N + 1.0) / 2.0) / N


def eta_bar_constant(params: Params) -> float:
    """Constant of the logarithmic class when alpha = delta < N."""
    if not _eta_bar_defined(params):
        raise UndefinedRegimeError("eta_bar requires p < 2 and delta < N")
    N, p = params.N, params.p
    d = p / (2.0 - p)
    return ((2.0 - p) * d ** (p - 1.0) * (N - d)) ** (1.0 / (2.0 - p))


def k_ell(params: Params) -> float:
    """Value of the autonomous Lyapunov function at the stationary point M_ell."""
    ell = ell_constant(params)
    N, p = params.N, params.p
    d = p / (2.0 - p)
    return (d - N) * d ** (p - 2.0) * ell ** p / 2.0


def q_star_alpha(params: Params) -> Optional[float]:
    """Positivity threshold in q for N/2 < alpha < (N-1)p'/2; None when undefined."""
    N, alpha = params.N, params.alpha
    inv = (N - 1.0) / (2.0 * alpha) - 1.0 / params.p_conj
    if inv <= 0:
        return None
    return 1.0 / inv - 1.0


def in_section_S3(params: Params) -> bool:
    return (2.0 - params.p) * params.alpha < params.p


@dataclass(frozen=True)
class ExpansionConstants:
    k: float
    K: float
    M: float
    regime: str  # "<", "=" or ">" comparing (q+1-p) alpha with p


def expansion_constants(params: Params, L: float) -> ExpansionConstants:
    """Coefficients of the slow-decay expansion r^alpha w = L + K r^{-k} + ...

    The K coefficient uses (alpha L)^{p-1}; see the decisions ledger.
    """
    if not L > 0:
        raise DomainError("expansion constants require L > 0")
    if not in_section_S3(params):
        raise UndefinedRegimeError("expansion requires (2-p) alpha < p")
    N, p, q, alpha = params.N, params.p, params.q, params.alpha
    k = p - (2.0 - p) * alpha
    K = (alpha * (p - 1.0) - (N - p)) * (alpha * L) ** (p - 1.0) / k
    M = L ** q / (alpha * (q - 1.0))
    regime = compare((q + 1.0 - p) * alpha, p)
    return ExpansionConstants(k=k, K=K, M=M, regime=regime)


@dataclass(frozen=True)
class Regime:
    section: str
    q_band: str
    alpha_band: Dict[str, Optional[str]] = field(default_factory=dict)
    positivity_guaranteed: bool = False
    zero_guaranteed: bool = False
    oscillation_expected: bool = False
    oscillation_heuristic: bool = False

    def to_dict(self):
        return asdict(self)


def _q_band(params: Params, ex: Exponents) -> str:
    q = params.q
    if compare(q, ex.q1) in ("<", "="):
        return "q<=q1"
    if math.isinf(ex.q_star) or compare(q, ex.q_star) == "<":
        return "q1<q<q*"
    return "q>=q*"


def classify_regime(params: Params) -> Regime:
    ex = compute_exponents(params)
    N, p, q, alpha = params.N, params.p, params.q, params.alpha
    s3 = in_section_S3(params)
    p2_lt_p = compare(ex.p2, p) == "<"
    p1_lt_p = compare(ex.p1, p) == "<"
    q_ge_qstar = (not math.isinf(ex.q_star)) and compare(q, ex.q_star) != "<"

    band: Dict[str, Optional[str]] = {
        "delta": compare(alpha, ex.delta),
        "eta": compare(alpha, ex.eta),
        "N": compare(alpha, N),
        "alpha_star": compare(alpha, ex.alpha_star) if ex.alpha_star is not None else None,
        "(N-1)p'/2": compare(alpha, (N - 1.0) * params.p_conj / 2.0),
    }

    pos = False
    if s3:
        if p2_lt_p and compare(alpha, N / 2.0) != ">" and q_ge_qstar:
            pos = True
        elif not p2_lt_p:
            pos = True
        elif p2_lt_p and alpha > N / 2.0 and band["(N-1)p'/2"] == "<":
            qa = q_star_alpha(params)
            if qa is not None and compare(q, qa) != "<":
                pos = True

    zero = p1_lt_p and compare(N, alpha) != ">"

    osc = False
    heur = False
    if not s3:
        d = ex.delta
        if (compare(N, d) != ">" and compare(d, alpha) == "<") or (
            compare(N, d) == "<" and compare(d, alpha) == "="
        ):
            osc = True
    elif p < 2.0 and not is_p_two(p) and zero:
        floor = max(N, ex.alpha_star) if ex.alpha_star is not None else N
        if alpha > floor:
            osc = True
            heur = True

    return Regime(
        section="S3" if s3 else "S4",
        q_band=_q_band(params, ex),
        alpha_band=band,
        positivity_guaranteed=pos,
        zero_guaranteed=zero,
        oscillation_expected=osc,
        oscillation_heuristic=heur,
    )


def a_underline(params: Params) -> float:
    """Initial values in (0, a_underline] give positive solutions when alpha < N."""
    if not params.alpha < params.N:
        raise UndefinedRegimeError("a_underline requires alpha < N")
    return (params.N - params.alpha) ** (1.0 / (params.q - 1.0))
