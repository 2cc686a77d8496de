import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plaplace import classify as C
from plaplace.errors import BracketError, NotFoundError
from plaplace.exponents import Params, a_underline
from plaplace.profile_ode import default_controls, solve
from plaplace.shooting import (bisect_fast_decay, find_min_zero_threshold, has_zero,
                               positivity_certificates, shooting_controls, sweep_initial_values,
                               thread_cap)

HW = Params(3, 2, 3, 1)
SING = Params(1, 1.5, 3, 0.6)
DEG = Params(3, 3, 4, 1.5)


def test_sweep_rows_below_a_underline():
    au = a_underline(HW)
    rows = sweep_initial_values(HW, [0.25 * au, 0.5 * au, au])
    for row in rows:
        assert row.n_zeros == 0 and row.L > 0


def test_sweep_large_values_have_zeros():
    rows = sweep_initial_values(HW, [8.0, 15.0, 30.0])
    assert all(r.n_zeros >= 1 for r in rows)


def test_sweep_empty_grid():
    assert sweep_initial_values(HW, []) == []


def test_sweep_synthesises_trivial_row_and_orders():
    rows = sweep_initial_values(HW, [1.0, 0.0, -1.0])
    assert [r.a for r in rows] == [-1.0, 0.0, 1.0]
    assert rows[1].L == 0.0 and rows[1].decay_class == C.TRIVIAL
    assert rows[0].L == pytest.approx(-rows[2].L)


def test_sweep_in_S4_skips_L():
    P = Params(1, 1.5, 3, 3.5)
    row, = sweep_initial_values(P, [1.0])
    assert row.L is None and row.decay_class == C.OSCILLATORY


def test_sweep_independent_of_workers(monkeypatch):
    grid = list(np.linspace(0.1, 10, 12))
    serial = sweep_initial_values(HW, grid, threads=1)
    monkeypatch.setenv("SELFSIM_THREADS", "3")
    parallel = sweep_initial_values(HW, grid, threads=3)
    assert serial == parallel


def test_thread_cap(monkeypatch):
    monkeypatch.delenv("SELFSIM_THREADS", raising=False)
    assert thread_cap() == 1 and thread_cap(4) == 4
    monkeypatch.setenv("SELFSIM_THREADS", "2")
    assert thread_cap(8) == 2 and thread_cap() == 2
    monkeypatch.setenv("SELFSIM_THREADS", "junk")
    assert thread_cap(8) == 1


@pytest.mark.parametrize("P,lo,hi,a_star", [
    (HW, 1.0, 10.0, 4.760308954552272),
    (SING, 0.1, 5.0, 0.8577710294579219),
    (DEG, 0.5, 10.0, 2.6068792916943835),
])
def test_bisection_values(P, lo, hi, a_star):
    res = bisect_fast_decay(P, lo, hi)
    assert res.a_hi - res.a_lo <= 1e-12
    assert res.a_star == pytest.approx(a_star, rel=1e-9)
    assert not has_zero(res.a_lo, P, shooting_controls(P))
    assert has_zero(res.a_hi, P, shooting_controls(P))


def test_bisection_bracket_errors():
    with pytest.raises(BracketError):
        bisect_fast_decay(HW, 1.0, 2.0)  # no zero at either end
    with pytest.raises(BracketError):
        bisect_fast_decay(HW, 2.0, 1.0)
    with pytest.raises(BracketError):
        bisect_fast_decay(HW, 1.0, 10.0, tol=0.0)


def test_zero_threshold_one_zero():
    res = find_min_zero_threshold(HW, 1, 40.0)
    assert res.a_star == pytest.approx(22.789904368160933, rel=1e-9)
    assert res.report.n_zeros == 1
    assert res.a_hi - res.a_lo <= 1e-12


def test_zero_threshold_zero_matches_bisection():
    res = find_min_zero_threshold(HW, 0, 10.0)
    assert res.a_star == pytest.approx(4.760308954552272, rel=1e-9)


def test_zero_threshold_not_found():
    with pytest.raises(NotFoundError) as info:
        find_min_zero_threshold(HW, 5, 10.0, n_scan=5)
    assert info.value.max_count < 6


def test_zero_threshold_argument_checks():
    with pytest.raises(ValueError):
        find_min_zero_threshold(HW, -1, 10.0)
    with pytest.raises(ValueError):
        find_min_zero_threshold(HW, 0, 0.0)


def test_certificate_absent_when_alpha_at_least_N():
    assert positivity_certificates(Params(1, 1.5, 3, 1.0)) == (None, None)


@pytest.mark.parametrize("P", [HW, Params(3, 1.6, 3, 1.0), Params(2, 2.5, 3, 0.8)])
@given(a=st.floats(0.1, 30.0))
@settings(max_examples=12)
def test_profile_certificate_is_sound(P, a):
    cert, _ = positivity_certificates(P)
    tr = solve(a, P)
    zeros = [z for z, _ in tr.zeros]
    for i, (r, w, z) in enumerate(zip(tr.r, tr.w, tr.z)):
        if r > 0 and cert(r, w, z):
            assert not [zr for zr in zeros if zr > r]
            break


@given(a=st.floats(0.1, 5.0))
@settings(max_examples=12)
def test_phase_certificate_is_sound(a):
    _, cert = positivity_certificates(SING)
    ph = solve(a, SING).phase
    for tau, y, Y in zip(ph.tau, ph.y, ph.Y):
        if cert(tau, y, Y):
            assert np.all(np.sign(ph.y[ph.tau >= tau]) == np.sign(y))
            break


def test_certificate_does_not_change_predicate():
    ctl = shooting_controls(HW)
    for a in (2.0, 4.7, 4.8, 12.0):
        full = solve(a, HW, ctl)
        assert has_zero(a, HW, ctl) == (len(full.zeros) >= 1)


def test_zero_count_locally_constant_and_L_changes_sign():
    rows = sweep_initial_values(HW, np.linspace(0.5, 20.0, 40))
    Ls = np.array([r.L for r in rows])
    assert np.any(Ls > 0) and np.any(Ls < 0)
    for r0, r1 in zip(rows, rows[1:]):
        if min(abs(r0.L) / r0.L_err, abs(r1.L) / r1.L_err) > 1e3 and np.sign(r0.L) == np.sign(r1.L):
            # counts can only jump through a fast-decay value where L vanishes
            assert r0.n_zeros == r1.n_zeros
