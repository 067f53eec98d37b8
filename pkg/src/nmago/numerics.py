"""Shared numerical kernels.

Chebyshev cumulative integration (the Picard quadrature backbone), monotone
cubic Hermite interpolation, geometric-panel quadrature of singular
integrands, Aitken extrapolation, and the tri-state divergence classifier
shared by the nonlinearity and the weight-class tests.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad


# ----------------------------------------------------------------------------
# Chebyshev-Lobatto spectral cumulative integration
# ----------------------------------------------------------------------------

def cheb_lobatto(n):
    """n+1 Chebyshev-Lobatto points on [-1, 1], increasing."""
    return -np.cos(np.pi * np.arange(n + 1) / n)


@lru_cache(maxsize=8)
def cheb_cumulative_matrix(n):
    """Matrix Q with (Q v)_i ~ integral from -1 to x_i of the degree-n
    interpolant of the values v at the Chebyshev-Lobatto points."""
    i = np.arange(n + 1)
    # analysis: values at nodes -> Chebyshev coefficients (discrete orthogonality;
    # the (-1)^k accounts for the increasing node order x_i = -cos(pi i / n))
    eps = np.ones(n + 1)
    eps[0] = eps[n] = 0.5
    parity = (-1.0) ** i
    A = ((2.0 / n) * (eps * parity)[:, None]
         * np.cos(np.pi * np.outer(i, i) / n) * eps[None, :])
    # term-by-term antiderivative: coefficients c (deg n) -> b (deg n+1)
    B = np.zeros((n + 2, n + 1))
    B[1, 0] = 1.0
    if n >= 2:
        B[1, 2] = -0.5
    for k in range(2, n + 2):
        B[k, k - 1] = 1.0 / (2.0 * k)
        if k + 1 <= n:
            B[k, k + 1] = -1.0 / (2.0 * k)
    # fix the constant so the antiderivative vanishes at x = -1
    signs = (-1.0) ** np.arange(1, n + 2)
    B[0, :] = -signs @ B[1:, :]
    # evaluation of the degree-(n+1) antiderivative at the nodes
    x = cheb_lobatto(n)
    k = np.arange(n + 2)
    T = np.cos(np.outer(np.arccos(np.clip(x, -1.0, 1.0)), k))
    return T @ B @ A


def cheb_nodes_on(lo, hi, n):
    return lo + (hi - lo) * (cheb_lobatto(n) + 1.0) / 2.0


def cheb_cumulative(values, lo, hi):
    """Cumulative integral from ``lo`` of values sampled at cheb_nodes_on."""
    n = len(values) - 1
    return (hi - lo) / 2.0 * (cheb_cumulative_matrix(n) @ np.asarray(values))


@lru_cache(maxsize=4)
def gauss_legendre_01(n):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


# ----------------------------------------------------------------------------
# Monotone piecewise-cubic Hermite interpolation
# ----------------------------------------------------------------------------

class MonotoneCubic:
    """Cubic Hermite interpolant with Fritsch-Carlson slope limiting.

    Built from exact derivative values; slopes are clamped into the
    monotonicity box only where the data would otherwise admit an overshoot,
    so smooth monotone data keeps its fourth-order accuracy.
    """

    def __init__(self, x, y, dy):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dy = np.array(dy, dtype=float)
        if x.ndim != 1 or len(x) < 2 or np.any(np.diff(x) <= 0):
            raise ValueError("abscissae must be strictly increasing")
        h = np.diff(x)
        delta = np.diff(y) / h
        # clamp each interval's end slopes into [0, 3] * delta (signed)
        for i in range(len(h)):
            d = delta[i]
            if d == 0.0:
                continue
            lo, hi = (0.0, 3.0 * d) if d > 0 else (3.0 * d, 0.0)
            dy[i] = min(max(dy[i], lo), hi)
            dy[i + 1] = min(max(dy[i + 1], lo), hi)
        self.x, self.y, self.dy = x, y, dy

    def _locate(self, t):
        idx = np.searchsorted(self.x, t, side="right") - 1
        return np.clip(idx, 0, len(self.x) - 2)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        i = self._locate(t)
        h = self.x[i + 1] - self.x[i]
        s = (t - self.x[i]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return (h00 * self.y[i] + h * h10 * self.dy[i]
                + h01 * self.y[i + 1] + h * h11 * self.dy[i + 1])

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        i = self._locate(t)
        h = self.x[i + 1] - self.x[i]
        s = (t - self.x[i]) / h
        d00 = 6 * s * (s - 1) / h
        d10 = (1 - s) * (1 - 3 * s)
        d01 = -d00
        d11 = s * (3 * s - 2)
        return (d00 * self.y[i] + d10 * self.dy[i]
                + d01 * self.y[i + 1] + d11 * self.dy[i + 1])


# ----------------------------------------------------------------------------
# Quadrature over many panels of a geometric partition
# ----------------------------------------------------------------------------

def segmented_quad(fn, lo, hi, *, ratio=4.0, rtol=1e-12, atol=1e-15):
    """Adaptive quadrature of fn over [lo, hi] split into geometric panels.

    Splitting at lo * ratio**k tames endpoint singularities of power type:
    each panel sees a smooth integrand, so QUADPACK converges fast even when
    lo is many decades below hi.
    """
    if not (0 < lo < hi):
        raise ValueError("segmented_quad needs 0 < lo < hi")
    edges = [lo]
    while edges[-1] * ratio < hi:
        edges.append(edges[-1] * ratio)
    edges.append(hi)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(fn, a, b, epsabs=atol, epsrel=rtol, limit=100)
        total += val
    return total


def aitken_limit(seq):
    """Aitken delta-squared extrapolation of a convergent sequence tail."""
    s = np.asarray(seq, dtype=float)
    best = s[-1]
    while len(s) >= 3:
        d1 = s[1:-1] - s[:-2]
        d2 = s[2:] - 2.0 * s[1:-1] + s[:-2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = s[2:] - (s[2:] - s[1:-1]) ** 2 / d2
        ok = np.isfinite(t) & (np.abs(d2) > 0)
        if not np.any(ok):
            break
        s = t[ok]
        best = s[-1]
    return float(best)


# ----------------------------------------------------------------------------
# Tri-state divergence classification on a geometric ladder
# ----------------------------------------------------------------------------

class Divergence(enum.Enum):
    DIVERGES = "Diverges"
    CONVERGES = "Converges"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass
class LadderDiagnostics:
    betas: list = field(default_factory=list)        # effective decay orders
    ratios: list = field(default_factory=list)       # trailing increment ratios
    beta_hat: float | None = None                    # refined estimate near 1
    rule: str = ""                                   # which rule decided


def classify_decay(betas, increment, *, eps_slope=0.05, windows=5,
                   ratio_stab=0.004, beta_margin=0.002):
    """Decide whether an improper integral with decay orders ``betas``
    diverges (order <= 1) or converges (order > 1) at its singular end.

    ``betas`` are local log-log slope measurements of the integrand along a
    geometric ladder, normalized so the integral diverges exactly when the
    limiting order is <= 1.  ``increment(j)`` returns the integral over rung
    j -> j+1 of the trailing part of the ladder and is only consulted when
    the slope lands inside the indecisive band; the increment ratio then
    resolves near-critical orders down to ~``beta_margin``: non-decaying
    increments certify divergence, settled geometric decay certifies
    convergence, anything else stays Inconclusive.
    """
    diag = LadderDiagnostics(betas=list(betas))
    tail = [b for b in betas[-windows:] if not math.isnan(b)]
    if len(tail) >= windows:
        if all(b > 1.0 + eps_slope for b in tail):
            diag.rule = "slope"
            return Divergence.CONVERGES, diag
        if all(b < 1.0 - eps_slope for b in tail):
            diag.rule = "slope"
            return Divergence.DIVERGES, diag

    n_inc = windows + 3
    incs = []
    for j in range(n_inc + 1):
        try:
            incs.append(increment(j))
        except (OverflowError, ValueError):
            diag.rule = "increment-failure"
            return Divergence.INCONCLUSIVE, diag
    incs = np.asarray(incs, dtype=float)
    if np.any(incs <= 0) or not np.all(np.isfinite(incs)):
        diag.rule = "increment-failure"
        return Divergence.INCONCLUSIVE, diag
    ratios = incs[1:] / incs[:-1]
    last = ratios[-windows:]
    diag.ratios = list(last)
    if np.all(last >= 1.0 - 1e-4):
        diag.rule = "non-decaying increments"
        return Divergence.DIVERGES, diag
    if last.max() - last.min() > ratio_stab:
        diag.rule = "unsettled increments"
        return Divergence.INCONCLUSIVE, diag
    beta_hat = 1.0 - math.log2(float(last.mean()))
    diag.beta_hat = beta_hat
    diag.rule = "increment ratio"
    if beta_hat <= 1.0 - beta_margin:
        return Divergence.DIVERGES, diag
    if beta_hat >= 1.0 + beta_margin:
        return Divergence.CONVERGES, diag
    return Divergence.INCONCLUSIVE, diag
