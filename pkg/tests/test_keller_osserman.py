import math

import numpy as np
import pytest

from nmago import (Constant, Divergence, DomainError, Exponential,
                   FUndefinedError, Power, PowerSingular, build_G, build_g,
                   build_profile, classify_ko, estimate_H_inf, eval_F, eval_H)

C23 = 3.0 ** (2.0 / 3.0)


# --- F ------------------------------------------------------------------------

def test_eval_F_examples():
    assert eval_F(Constant(1.0), 2.0) == pytest.approx(2.0)
    assert eval_F(Power(2.0), 3.0) == pytest.approx(9.0)
    assert eval_F(Exponential(), 1.0) == pytest.approx(math.e - 1.0)


def test_eval_F_quadrature_cross_check():
    for f, tau in [(Power(2.0), 3.0), (Exponential(), 1.0),
                   (PowerSingular(0.5), 2.0)]:
        assert eval_F(f, tau, method="quadrature") == pytest.approx(
            eval_F(f, tau, method="closed"), rel=1e-9)


def test_eval_F_divergent_at_zero():
    with pytest.raises(FUndefinedError):
        eval_F(PowerSingular(2.0), 1.0)


# --- classification -------------------------------------------------------------

def test_classify_examples():
    assert classify_ko(Power(1.0), 2) is Divergence.DIVERGES
    assert classify_ko(Power(3.0), 2) is Divergence.CONVERGES
    for N in (2, 3, 4):
        assert classify_ko(Exponential(), N) is Divergence.CONVERGES
    assert classify_ko(Constant(1.0), 3) is Divergence.DIVERGES


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_classification_flips_at_critical_exponent(N):
    crit = N / (N - 1.0)
    assert classify_ko(Power(crit - 0.05), N) is Divergence.DIVERGES
    assert classify_ko(Power(crit + 0.05), N) is Divergence.CONVERGES


def test_classify_propagates_f_undefined():
    with pytest.raises(FUndefinedError):
        classify_ko(PowerSingular(1.5), 2)


# --- G -------------------------------------------------------------------------

def test_G_closed_form_constant(profile_const_n2):
    G = profile_const_n2.G
    # (3^(2/3)/2) (t^(2/3) - 1)
    assert float(G(8.0)) == pytest.approx(C23 / 2.0 * 3.0, abs=1e-9)
    assert float(G(profile_const_n2.a)) == 0.0
    t = np.linspace(1.0, 40.0, 200)
    exact = C23 / 2.0 * (t ** (2.0 / 3.0) - 1.0)
    assert np.max(np.abs(G(t) - exact)) < 1e-9


def test_G_closed_form_linear():
    G = build_G(Power(1.0), 2, 1.0, 100.0)
    assert float(G(8.0)) == pytest.approx(3.0 * 1.5 ** (-1.0 / 3.0), abs=1e-9)


def test_G_table_strictly_increasing(profile_const_n2):
    assert np.all(np.diff(profile_const_n2.G.values) > 0)


def test_G_reanchoring_shift():
    # moving the anchor shifts G by a constant
    Ga = build_G(Power(1.0), 3, 1.0, 50.0)
    G2a = build_G(Power(1.0), 3, 2.0, 50.0)
    t = np.linspace(2.5, 40.0, 64)
    diff = Ga(t) - G2a(t)
    assert np.max(diff) - np.min(diff) < 1e-9
    assert float(np.mean(diff)) == pytest.approx(float(Ga(2.0)), abs=1e-9)


# --- g, the inverse --------------------------------------------------------------

def test_g_closed_form(profile_const_n2):
    g = profile_const_n2.g
    assert float(g(0.0)) == pytest.approx(1.0)
    c = 2.0 / C23
    t = np.linspace(0.0, 10.0, 101)
    exact = (c * t + 1.0) ** 1.5
    assert np.max(np.abs(g(t) - exact)) < 1e-9
    assert float(g(3.1201)) == pytest.approx(8.0, abs=1e-3)


def test_g_round_trip(profile_const_n2):
    prof = profile_const_n2
    for t in np.linspace(0.01, 10.0, 57):
        assert abs(float(prof.G(float(prof.g(t)))) - t) <= 1e-8


def test_g_strictly_increasing_convex(profile_const_n2):
    g = profile_const_n2.g
    assert np.all(np.diff(g.values) > 0)
    t = np.linspace(0.0, 10.0, 200)
    assert np.all(g.second_derivative(t) > 0)


def test_g_defining_identity():
    # (g')^{1/(N-1)} g'' = f(g) on the grid
    for N, f in [(2, Constant(1.0)), (2, Power(1.0)), (3, Power(1.0))]:
        g = build_g(f, N, 1.0, 15.0)
        t = g.t[g.t <= 15.0][::10]
        lhs = g.derivative(t) ** (1.0 / (N - 1.0)) * g.second_derivative(t)
        rhs = np.asarray(f(np.asarray(g(t))), dtype=float)
        assert np.max(np.abs(lhs - rhs) / rhs) < 1e-6


def test_g_overflow_guard_truncates():
    # slightly supercritical power: the inverse reaches the overflow guard
    # at a representable argument and must truncate, not crash
    g = build_g(Power(2.1), 2, 1.0, 50.0)
    assert g.truncated_at is not None
    assert g.values[-1] <= 1.1e300
    with pytest.raises(DomainError):
        g.ensure(g.truncated_at + 1.0)


def test_g_asymptote_inside_range_truncates_gracefully():
    # steeper growth: the asymptote is hit before the guard value is even
    # representable; the table must still truncate rather than crash
    g = build_g(Power(2.2), 2, 1.0, 50.0)
    assert g.truncated_at is not None
    assert g.values[-1] > 1e100


# --- H and its limit --------------------------------------------------------------

def test_H_closed_form_constant(profile_const_n2):
    prof = profile_const_n2
    # H(tau) = (1 - tau^(-2/3))/2 for f = 1, N = 2, a = 1
    for tau in (2.0, 8.0, 64.0, 1e6):
        assert eval_H(prof, tau) == pytest.approx(
            0.5 * (1.0 - tau ** (-2.0 / 3.0)), rel=1e-8)
    assert eval_H(prof, prof.a) == 0.0
    assert np.all(prof.H_vals >= 0.0)


def test_H_inf_values(profile_const_n2):
    assert profile_const_n2.H_inf == pytest.approx(0.5, abs=0.01)
    prof1 = build_profile(Power(1.0), 2, 1.0)
    assert prof1.H_inf == pytest.approx(2.0, abs=0.02)


def test_H_inf_absent_at_borderline():
    # p = N/(N-1) makes G logarithmic and H drift like log tau
    prof = build_profile(Power(2.0), 2, 1.0)
    assert prof.H_inf is None
    assert estimate_H_inf(prof) is None


def test_H_inf_general_power_matches_analytic():
    # H_inf = beta/(1-beta), beta = (p+1)(N-1)/(2N-1)
    for N, p in [(3, 1.0), (4, 0.5), (2, 0.5)]:
        beta = (p + 1.0) * (N - 1.0) / (2.0 * N - 1.0)
        prof = build_profile(Power(p), N, 1.0)
        assert prof.H_inf == pytest.approx(beta / (1.0 - beta), rel=1e-2)


# --- profile assembly and export ----------------------------------------------------

def test_profile_json_schema(profile_const_n2):
    payload = profile_const_n2.to_json()
    assert set(payload) == {"a", "classification", "H_inf", "G_table", "g_table"}
    assert payload["classification"] == "Diverges"
    ts = [row[0] for row in payload["G_table"]]
    assert all(a < b for a, b in zip(ts, ts[1:]))
    ss = [row[0] for row in payload["g_table"]]
    assert ss[0] == 0.0 and all(a < b for a, b in zip(ss, ss[1:]))
