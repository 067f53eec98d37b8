import math

import numpy as np
import pytest

from nmago.numerics import (Divergence, MonotoneCubic, aitken_limit,
                            cheb_cumulative, cheb_nodes_on, classify_decay,
                            gauss_legendre_01, segmented_quad)


def test_cheb_cumulative_polynomial_exact():
    x = cheb_nodes_on(0.0, 2.0, 64)
    cum = cheb_cumulative(x ** 5, 0.0, 2.0)
    assert np.max(np.abs(cum - x ** 6 / 6)) < 1e-13


def test_cheb_cumulative_spectral():
    x = cheb_nodes_on(0.0, 1.5, 256)
    cum = cheb_cumulative(np.exp(x) * np.sin(3 * x), 0.0, 1.5)
    exact = (np.exp(x) * (np.sin(3 * x) - 3 * np.cos(3 * x)) + 3) / 10.0
    assert np.max(np.abs(cum - exact)) < 1e-13


def test_gauss_legendre_01():
    x, w = gauss_legendre_01(64)
    assert w.sum() == pytest.approx(1.0)
    assert (x ** 7 @ w) == pytest.approx(1 / 8)


def test_monotone_cubic_exact_slopes():
    xs = np.linspace(0.0, 2.0, 41)
    mc = MonotoneCubic(xs, np.exp(xs), np.exp(xs))
    t = np.linspace(0.0, 2.0, 999)
    # quartic-order value error: h^4/384 * max|f''''| with h = 0.05
    assert np.max(np.abs(mc(t) - np.exp(t))) < 2e-7
    assert np.max(np.abs(mc.derivative(t) - np.exp(t))) < 2e-5


def test_monotone_cubic_preserves_monotonicity_with_wild_slopes():
    # deliberately inconsistent huge slopes must be clamped, not overshoot
    xs = np.array([0.0, 1.0, 2.0])
    mc = MonotoneCubic(xs, np.array([0.0, 1.0, 2.0]), np.array([50.0, 50.0, 50.0]))
    t = np.linspace(0.0, 2.0, 500)
    assert np.all(np.diff(mc(t)) >= -1e-14)


def test_segmented_quad_log_singularity():
    val = segmented_quad(lambda t: 1.0 / t, 1e-12, 1.0)
    assert val == pytest.approx(math.log(1e12), rel=1e-12)


def test_aitken_geometric():
    seq = 3.0 - 2.0 * 0.7 ** np.arange(12)
    assert aitken_limit(seq) == pytest.approx(3.0, abs=1e-12)


def _power_case(beta):
    betas = [beta] * 12
    def inc(j, b=beta):
        # increments of t^-b over [2^j, 2^(j+1)) starting high on the ladder
        lo, hi = 2.0 ** (30 + j), 2.0 ** (31 + j)
        if b == 1.0:
            return math.log(hi / lo)
        return (hi ** (1 - b) - lo ** (1 - b)) / (1 - b)
    return betas, inc


@pytest.mark.parametrize("beta,expected", [
    (0.5, Divergence.DIVERGES),
    (1.3, Divergence.CONVERGES),
    (0.98, Divergence.DIVERGES),     # in-band, growing increments
    (1.0, Divergence.DIVERGES),      # critical: constant increments
    (1.02, Divergence.CONVERGES),    # in-band, settled geometric decay
    (1.0005, Divergence.INCONCLUSIVE),
])
def test_classify_decay(beta, expected):
    betas, inc = _power_case(beta)
    verdict, _ = classify_decay(betas, inc)
    assert verdict is expected
