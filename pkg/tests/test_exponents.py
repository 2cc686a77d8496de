import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from plaplace.errors import DomainError, ParameterError, UndefinedRegimeError
from plaplace.exponents import (Params, a_underline, alpha_star, classify_regime, compare,
                                compute_exponents, ell_constant, eta_bar_constant,
                                expansion_constants, in_section_S3, k_ell, lambda_constant,
                                varrho_constant)
from plaplace.phase_plane import autonomous_rhs, stationary_points

Ns = st.floats(1.0, 6.0)
ps = st.floats(1.05, 4.0)
qs = st.floats(1.05, 8.0)
alphas = st.floats(0.05, 6.0)


def far(x, y, gap=1e-6):
    return abs(x - y) > gap * max(1.0, abs(x), abs(y))


def test_semilinear_values():
    ex = compute_exponents(Params(3, 2, 3, 1))
    assert ex.p1 == 1.5 and ex.p2 == 1.2
    assert ex.q1 == pytest.approx(5 / 3, rel=1e-15)
    assert ex.q_star == pytest.approx(5.0, rel=1e-15)
    # the p = 2 thresholds reduce to (N+2)/N and (N+2)/(N-2)
    assert ex.q1 == pytest.approx((3 + 2) / 3, rel=1e-15)
    assert ex.q_star == pytest.approx((3 + 2) / (3 - 2), rel=1e-15)
    assert ex.eta == 1.0 and ex.alpha0 == 1.0 and ex.beta0 == 2.0
    assert math.isinf(ex.delta) and ex.ell is None and ex.alpha_star is None


def test_singular_case_values():
    ex = compute_exponents(Params(1, 1.5, 3, 0.6))
    assert ex.delta == 3.0 and ex.eta == -1.0
    assert ex.p1 == 1.0 and ex.p2 == pytest.approx(2 / 3)
    assert ex.q1 == 2.0 and math.isinf(ex.q_star)
    assert ex.ell == pytest.approx(25 / 12, rel=1e-12)
    # (3^{1/2} * 2 / 2.4)^2 evaluated independently
    assert ex.ell == pytest.approx((math.sqrt(3) * 2 / 2.4) ** 2, rel=1e-14)


def test_degenerate_case_has_negative_delta_and_no_ell():
    ex = compute_exponents(Params(3, 3, 4, 1.5))
    assert ex.delta == -3.0 and not ex.delta_positive
    assert ex.ell is None
    with pytest.raises(UndefinedRegimeError):
        ell_constant(Params(3, 3, 4, 1.5))


def test_alpha_star_and_the_diagonal_point():
    P = Params(1, 1.5, 3, 0.6)
    assert alpha_star(P) == pytest.approx(0.6, abs=1e-12)
    lam = lambda_constant(P)
    # lambda = delta^{-1} ((2 delta - N)(p-1))^{1/(2-p)} = (1/3)(2.5)^2
    assert lam == pytest.approx(2.5 ** 2 / 3, rel=1e-14)
    assert lam == pytest.approx(ell_constant(P), rel=1e-12)
    with pytest.raises(UndefinedRegimeError):
        alpha_star(Params(3, 2.5, 3, 1))


def test_varrho_examples():
    assert varrho_constant(Params(2, 4 / 3, 3, 1)) == pytest.approx(0.5, abs=1e-12)
    assert varrho_constant(Params(2, 4 / 3, 3, 1.5)) == pytest.approx(0.5 * 2 ** 1.5, rel=1e-12)
    with pytest.raises(UndefinedRegimeError):
        varrho_constant(Params(3, 2, 3, 1))


def test_expansion_constants_examples():
    ec = expansion_constants(Params(3, 2, 3, 1), 1.0)
    assert (ec.k, ec.K, ec.M, ec.regime) == (2.0, 0.0, 0.5, "=")
    ec = expansion_constants(Params(1, 1.5, 3, 0.5), 2.0)
    assert ec.k == 1.25 and ec.M == pytest.approx(8.0) and ec.regime == "<"
    with pytest.raises(DomainError):
        expansion_constants(Params(3, 2, 3, 1), 0.0)


def test_K_uses_power_p_minus_one():
    # one case where the two candidate powers of (alpha L) differ: p = 1.5, alpha L = 2
    P = Params(3, 1.5, 4, 1.0)
    ec = expansion_constants(P, 2.0)
    assert ec.K == pytest.approx((1.0 * 0.5 - 1.5) * 2.0 ** 0.5 / 1.0)
    assert ec.regime == ">"


def test_regime_examples():
    r = classify_regime(Params(3, 2, 5, 1))
    assert r.section == "S3" and r.positivity_guaranteed
    r = classify_regime(Params(1, 1.5, 3, 2.9))
    assert r.section == "S3" and r.zero_guaranteed
    r = classify_regime(Params(1, 1.5, 3, 3.5))
    assert r.section == "S4" and r.oscillation_expected


def test_k_ell_value():
    P = Params(1, 1.5, 3, 0.6)
    # (delta - N) delta^{p-2} ell^p / 2
    assert k_ell(P) == pytest.approx(2 * 3 ** -0.5 * (25 / 12) ** 1.5 / 2, rel=1e-13)


def test_eta_bar_value():
    P = Params(3, 1.4, 3, 7 / 3)
    assert eta_bar_constant(P) == pytest.approx((0.6 * (7 / 3) ** 0.4 * (3 - 7 / 3)) ** (1 / 0.6), rel=1e-13)
    assert eta_bar_constant(P) == pytest.approx(0.382, abs=5e-4)


@pytest.mark.parametrize("field,kw", [("p", dict(p=1.0)), ("q", dict(q=1.0)), ("N", dict(N=0.5)),
                                      ("alpha", dict(alpha=0.0)), ("p", dict(p=float("nan")))])
def test_params_validation_names_the_field(field, kw):
    base = dict(N=3, p=2, q=3, alpha=1)
    base.update(kw)
    with pytest.raises(ParameterError) as info:
        Params(**base)
    assert info.value.field == field


def test_p_message():
    with pytest.raises(ParameterError, match="p must exceed 1"):
        Params(3, 1.0, 3, 1)


def test_a_underline():
    assert a_underline(Params(3, 2, 3, 1)) == pytest.approx(math.sqrt(2))
    with pytest.raises(UndefinedRegimeError):
        a_underline(Params(1, 1.5, 3, 2.9))


@given(Ns, st.floats(1.05, 1.95))
def test_structural_equivalences_for_singular_p(N, p):
    ex = compute_exponents(Params(N, p, 3.0, 1.0))
    d = ex.delta
    assume(far(p, ex.p1) and far(p, ex.p2))
    assert (ex.p1 < p) == (N < d)
    assert (ex.p1 < p) == (ex.eta < N)
    assert (ex.p2 < p) == (N < 2 * d)


@given(Ns, ps, qs)
def test_threshold_ordering(N, p, q):
    ex = compute_exponents(Params(N, p, q, 1.0))
    assert (ex.alpha0 is None) == (q <= p - 1)
    assume(far(p, ex.p1) and far(p, ex.p2))
    assert p - 1 < ex.q1 < ex.q_star
    assert (ex.p1 < p) == (1 < ex.q1)
    assert (ex.p2 < p) == (1 < ex.q_star)


@given(Ns, ps, qs)
def test_alpha0_versus_source_thresholds(N, p, q):
    assume(q > p - 1 + 1e-3)
    ex = compute_exponents(Params(N, p, q, 1.0))
    assume(far(q, ex.q1))
    assert (ex.q1 < q) == (ex.alpha0 < N)
    if p < N:
        assume(far(q, ex.q_star))
        assert (q < ex.q_star) == (ex.alpha0 > (N - p) / p)


@given(Ns, ps, qs)
def test_alpha0_is_always_in_S3(N, p, q):
    assume(q > p - 1 + 1e-3)
    P = Params(N, p, q, 1.0).natural()
    assert in_section_S3(P)
    assert classify_regime(P).section == "S3"


@given(Ns, st.floats(1.05, 1.95), alphas)
def test_ell_is_a_stationary_point(N, p, alpha):
    P = Params(N, p, 3.0, alpha)
    ex = compute_exponents(P)
    d = ex.delta
    assume(far(d, N, 1e-3) and far(d, alpha, 1e-3))
    pts = stationary_points(P)
    if (d - N) * (d - alpha) <= 0:
        assert ex.ell is None and not pts.has_M_ell
        return
    y, Y = pts.points[1]
    dy, dY = autonomous_rhs(y, Y, P)
    # residuals relative to the size of the individual terms
    scale = d * abs(y) + abs(Y) + alpha * abs(y) + abs(d - N) * abs(Y)
    assert abs(dy) <= 1e-12 * scale and abs(dY) <= 1e-12 * scale


@given(st.floats(1.0, 5.0), st.floats(0.0, 1.0))
def test_alpha_star_gives_ell_equal_lambda(N, u):
    lo = max(2 * N / (N + 2), 1.0)
    p = lo + (2 - lo) * (0.02 + 0.96 * u)
    ex = compute_exponents(Params(N, p, 3.0, 1.0))
    ast = ex.alpha_star
    assume(ast is not None and ast > 0)
    P = Params(N, p, 3.0, ast)
    assume(compute_exponents(P).ell is not None)
    assert ell_constant(P) == pytest.approx(lambda_constant(P), rel=1e-12)


def test_compare_is_tolerant():
    assert compare(1.0, 1.0 + 1e-14) == "="
    assert compare(1.0, 1.1) == "<"
    assert compare(math.inf, 3.0) == ">"


def test_optional_fields_follow_definedness():
    for P in [Params(1, 1.5, 3, 0.6), Params(3, 2, 3, 1), Params(2, 4 / 3, 3, 1), Params(3, 1.4, 3, 7 / 3)]:
        ex = compute_exponents(P)
        assert (ex.alpha_star is not None) == (ex.p2 < P.p < 2)
        assert (ex.varrho is not None) == (compare(P.p, ex.p1) == "=" and P.alpha < P.N)
        if P.p < 2:
            d = ex.delta
            assert (ex.ell is not None) == (compare(d, P.N) == compare(d, P.alpha) != "=")
