import math

import numpy as np
import pytest
from scipy.integrate import quad

from nmago import (Affine, Constant, DomainError, Exponential, FUndefinedError,
                   Power, PowerSingular, Tabulated, spec_from_json,
                   spec_from_string)


def test_constant_eval_and_calculus():
    c = Constant(3.0)
    assert c(0.7) == 3.0
    assert c.derivative(0.7) == 0.0
    assert c.antiderivative_from_zero(2.0) == 6.0
    assert c.integral(1.0, 4.0) == 9.0


def test_power_eval_derivatives():
    p = Power(2.0, scale=0.5, shift=1.0)   # 1 + s^2/2
    assert p(2.0) == 3.0
    assert p.derivative(2.0) == 2.0
    assert p.second_derivative(2.0) == 1.0


@pytest.mark.parametrize("fn,lo,hi", [
    (Power(2.5), 0.3, 4.0),
    (Affine(2.0, 1.0), 0.1, 3.0),
    (Exponential(1.0, 0.5), 0.0, 2.0),
    (PowerSingular(3.0), 0.2, 0.9),
    (PowerSingular(1.0), 0.2, 0.9),
    (PowerSingular(2.0, 1.5, 1.0), 0.0, 0.7),
])
def test_closed_integrals_match_quadrature(fn, lo, hi):
    num, _ = quad(lambda s: float(fn(s)), lo, hi, epsrel=1e-12)
    assert fn.integral(lo, hi) == pytest.approx(num, rel=1e-9)


def test_antiderivative_from_zero_singular():
    f = PowerSingular(0.5)          # s^-1/2, integrable at 0
    assert f.antiderivative_from_zero(4.0) == pytest.approx(4.0)
    with pytest.raises(FUndefinedError):
        PowerSingular(1.5).antiderivative_from_zero(1.0)


def test_log_antiderivative_overflow_safe():
    f = Exponential()
    tau = 5e4
    # e^tau overflows but log F must stay finite and equal tau up to exp(-tau)
    assert f.log_antiderivative_from_zero(tau) == pytest.approx(tau)
    p = Power(3.0)
    assert p.log_antiderivative_from_zero(1e80) == pytest.approx(
        4 * math.log(1e80) - math.log(4.0))


def test_domain_enforcement():
    f = PowerSingular(2.0, center=1.0)
    with pytest.raises(DomainError):
        f(1.0)
    with pytest.raises(DomainError):
        f(1.5)
    assert float(f(0.5)) == pytest.approx(4.0)


def test_tabulated_monotone_interpolation():
    xs = np.linspace(0.0, 1.0, 21)
    ys = np.exp(xs)                  # increasing data
    t = Tabulated(tuple(xs), tuple(ys))
    fine = np.linspace(0.0, 1.0, 211)
    vals = t(fine)
    assert np.all(np.diff(vals) > 0)
    assert np.max(np.abs(vals - np.exp(fine))) < 2e-5


def test_tabulated_rejects_bad_abscissae():
    with pytest.raises(DomainError):
        Tabulated((0.0, 0.0, 1.0), (1.0, 2.0, 3.0))


@pytest.mark.parametrize("fn", [
    Constant(2.0), Affine(1.0, 0.5), Power(2.0, 0.5, 1.0),
    Exponential(2.0, 0.3), PowerSingular(3.0), PowerSingular(2.0, 1.0, 1.0),
    Tabulated((0.0, 0.5, 1.0), (1.0, 2.0, 4.0)),
])
def test_json_round_trip(fn):
    assert spec_from_json(fn.to_json()) == fn


def test_json_rejects_unknown_keys():
    with pytest.raises(DomainError, match="bogus"):
        spec_from_json({"kind": "power", "exponent": 2.0, "bogus": 1})
    with pytest.raises(DomainError, match="kind"):
        spec_from_json({"exponent": 2.0})


def test_shrink_scale_algebra():
    # eps p(2t) for p = t^-3 collapses to (eps/8) t^-3
    p = PowerSingular(3.0)
    q = p.shrink_scale(0.5)
    assert float(q(0.25)) == pytest.approx(0.5 * float(p(0.5)))
    assert q.scale == pytest.approx(0.5 / 8.0)
    # amplify is plain scaling
    assert float(p.amplify(4.0)(0.5)) == pytest.approx(4.0 * float(p(0.5)))


@pytest.mark.parametrize("fn", [
    Constant(2.0), Affine(1.0, 0.5), Power(2.0), Exponential(1.0, 1.0),
    PowerSingular(3.0), PowerSingular(2.0, 1.0, 1.0),
    Tabulated((0.1, 0.5, 1.0), (4.0, 2.0, 1.0)),
])
def test_shrink_scale_pointwise(fn):
    eps = 0.3
    g = fn.shrink_scale(eps)
    for t in (0.11, 0.2, 0.35):
        assert float(g(t)) == pytest.approx(eps * float(fn(2 * t)), rel=1e-12)


def test_spec_from_string():
    assert spec_from_string("power:2") == Power(2.0)
    assert spec_from_string("power:2,0.5,1") == Power(2.0, 0.5, 1.0)
    assert spec_from_string("constant:8") == Constant(8.0)
    assert spec_from_string("powsing:3,1,1") == PowerSingular(3.0, 1.0, 1.0)
    assert spec_from_string("exponential") == Exponential()
    with pytest.raises(DomainError):
        spec_from_string("mystery:1")
