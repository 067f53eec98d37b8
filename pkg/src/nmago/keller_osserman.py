"""Growth classification of the nonlinearity and its companion functions.

For a nonlinearity f with cumulative integral F, the borderline between
bounded and boundary-blow-up behavior is governed by whether

    integral^inf F(tau)**(-(N-1)/(2N-1)) dtau

diverges.  This module classifies that tail, builds the anchored integral
G(t) = integral_a^t ((2N-1)/(N-1) F)**(-(N-1)/(2N-1)), its inverse g (the
blow-up profile generator), and the curvature ratio H whose limit H_inf
gates the multiplicity construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import BPoly, CubicHermiteSpline

from . import defaults
from .errors import DomainError, FUndefinedError, NmagoError
from .numerics import Divergence, classify_decay
from .scalarfn import ScalarFnSpec

__all__ = [
    "Divergence", "KOProfile", "GInverse", "GTable",
    "eval_F", "classify_ko", "build_G", "build_g",
    "eval_H", "estimate_H_inf", "build_profile",
]


def eval_F(f, tau, method="auto"):
    """F(tau) = integral of f over (0, tau].

    Closed forms are used whenever the kind admits one; ``method="quadrature"``
    forces the numerical route (integrable power singularities at 0 are
    removed by the substitution s = sigma**(1/(1-gamma)) first).
    Raises FUndefinedError when the integral diverges at 0.
    """
    if tau <= 0:
        raise DomainError(f"F needs tau > 0, got {tau!r}")
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "closed"):
        return float(f.antiderivative_from_zero(tau))
    rtol = defaults.DEFAULTS["quad_rtol"]
    atol = defaults.DEFAULTS["quad_atol"]
    sing = f.singularity
    if sing == 0.0:
        gamma = getattr(f, "gamma", None)
        if gamma is not None and gamma >= 1.0:
            raise FUndefinedError("F undefined: f is not integrable at 0")
        if gamma is not None:
            m = 1.0 / (1.0 - gamma)
            val, _ = quad(lambda s: float(f(s ** m)) * m * s ** (m - 1.0),
                          0.0, tau ** (1.0 / m), epsrel=rtol, epsabs=atol)
            return val
    val, _ = quad(lambda s: float(f(s)), 0.0, tau,
                  epsrel=rtol, epsabs=atol, limit=200)
    return val


def _log_F(f, tau):
    return float(f.log_antiderivative_from_zero(tau))


def _ko_exponent(N):
    return (N - 1.0) / (2.0 * N - 1.0)


def classify_ko(f, N, *, ladder_hi=None, eps_slope=None, windows=None):
    """Tri-state test of the tail condition: does
    integral^inf F**(-(N-1)/(2N-1)) diverge?

    ``Diverges`` means the condition HOLDS.  The integrand's log-log slope is
    fit along a geometric ladder up to ``ladder_hi``; slopes inside the
    indecisive band fall back to the increment-ratio refinement in
    :func:`nmago.numerics.classify_decay`.
    """
    if N < 2 or int(N) != N:
        raise DomainError(f"N must be an integer >= 2, got {N!r}")
    c = _ko_exponent(N)
    hi = defaults.get("ko_ladder_hi", ladder_hi)
    eps = defaults.get("slope_eps", eps_slope)
    win = defaults.get("slope_windows", windows)

    n_rungs = int(math.ceil(math.log2(hi)))
    ladder = [2.0 ** j for j in range(n_rungs + 1)]
    log_phi = []
    for t in ladder:
        try:
            log_phi.append(-c * _log_F(f, t))
        except DomainError:
            break  # tabulated f ran out of domain; use what we have
    if len(log_phi) < win + 6:
        return Divergence.INCONCLUSIVE
    ln2 = math.log(2.0)
    betas = [-(log_phi[j + 1] - log_phi[j]) / ln2 for j in range(len(log_phi) - 1)]

    usable = len(log_phi)
    tail_start = usable - (win + 5)

    def increment(j):
        a, b = ladder[tail_start + j], ladder[tail_start + j + 1]
        val, _ = quad(lambda t: math.exp(-c * _log_F(f, t)), a, b,
                      epsrel=1e-12, epsabs=0.0, limit=100)
        return val

    verdict, _ = classify_decay(betas, increment, eps_slope=eps, windows=win,
                                ratio_stab=defaults.DEFAULTS["ratio_stab"],
                                beta_margin=defaults.DEFAULTS["beta_margin"])
    return verdict


class GTable:
    """Anchored integral G on [a, t_max]: strictly increasing, G(a) = 0.

    Values come from cumulative panel quadrature; evaluation between nodes
    uses cubic Hermite interpolation with the exact integrand as slope.
    Extends itself on demand past t_max.
    """

    def __init__(self, f, N, a, t_max):
        if a <= 0:
            raise DomainError(f"anchor must be positive, got {a!r}")
        if t_max <= a:
            raise DomainError("t_max must exceed the anchor")
        self.f, self.N, self.a = f, N, float(a)
        self.c0 = (2.0 * N - 1.0) / (N - 1.0)
        self.c = _ko_exponent(N)
        if float(f.antiderivative_from_zero(a)) <= 0.0:
            raise DomainError("F(a) must be positive")
        nodes = [self.a]
        uniform_hi = min(t_max, a + 10.0)
        nodes.extend(np.linspace(self.a, uniform_hi, 257)[1:])
        t = uniform_hi
        while t < t_max:
            t = min(t * 1.05, t_max)
            nodes.append(t)
        self._grow(np.asarray(nodes), start_value=0.0)

    def integrand(self, t):
        return math.exp(-self.c * (math.log(self.c0) + _log_F(self.f, t)))

    def _integrand_derivative(self, t):
        # d/dt (c0 F)^(-c) = -c (c0 F)^(-c) f/F
        lgF = _log_F(self.f, t)
        return -self.c * math.exp(-self.c * (math.log(self.c0) + lgF)) \
            * float(self.f(t)) * math.exp(-lgF)

    def _grow(self, new_nodes, start_value):
        vals = [start_value]
        for lo, hi in zip(new_nodes[:-1], new_nodes[1:]):
            seg, _ = quad(self.integrand, lo, hi, epsrel=1e-13, epsabs=1e-300,
                          limit=100)
            vals.append(vals[-1] + seg)
        slopes = np.array([self.integrand(t) for t in new_nodes])
        curvs = np.array([self._integrand_derivative(t) for t in new_nodes])
        if hasattr(self, "t"):
            self.t = np.concatenate([self.t, new_nodes[1:]])
            self.values = np.concatenate([self.values, np.asarray(vals[1:])])
            self.slopes = np.concatenate([self.slopes, slopes[1:]])
            self.curvs = np.concatenate([self.curvs, curvs[1:]])
        else:
            self.t = np.asarray(new_nodes, dtype=float)
            self.values = np.asarray(vals)
            self.slopes = slopes
            self.curvs = curvs
        # quintic pieces from exact value/slope/curvature at the nodes keep
        # the absolute error negligible even on the 5%-graded far grid
        data = np.column_stack([self.values, self.slopes, self.curvs])
        self._spline = BPoly.from_derivatives(self.t, data)

    def ensure(self, t_needed):
        if t_needed <= self.t[-1]:
            return
        nodes = [self.t[-1]]
        while nodes[-1] < t_needed:
            nodes.append(min(nodes[-1] * 1.25, nodes[-1] + 10.0)
                         if nodes[-1] < self.t[-1] * 1e6 else nodes[-1] * 1.25)
        nodes[-1] = max(nodes[-1], t_needed)
        self._grow(np.asarray(nodes), start_value=float(self.values[-1]))

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.a):
            raise DomainError("G evaluated below its anchor")
        self.ensure(float(np.max(t_arr)))
        return self._spline(t)

    def derivative(self, t):
        return self.integrand(float(t))

    def table(self, max_rows=512):
        step = max(1, len(self.t) // max_rows)
        idx = np.unique(np.r_[np.arange(0, len(self.t), step), len(self.t) - 1])
        return [[float(self.t[i]), float(self.values[i])] for i in idx]


def build_G(f, N, a, t_max, *, check_classification=True):
    """Construct the anchored-integral table; warns when the tail condition
    fails (the integral is then bounded and the table saturates)."""
    if check_classification and classify_ko(f, N) is not Divergence.DIVERGES:
        warnings.warn("tail condition does not hold: the anchored integral "
                      "stays bounded; proceeding anyway", stacklevel=2)
    return GTable(f, N, a, t_max)


class GInverse:
    """The inverse g of the anchored integral, built by integrating

        g'(t) = ((2N-1)/(N-1) F(g))**((N-1)/(2N-1)),  g(0) = a,

    with exact-derivative cubic Hermite interpolation between stored nodes.
    ``truncated_at`` is set when the overflow guard stopped the extension.
    """

    def __init__(self, f, N, a, s_max, *, overflow=None, table_rtol=None):
        if a <= 0:
            raise DomainError(f"anchor must be positive, got {a!r}")
        self.f, self.N, self.a = f, N, float(a)
        self.c0 = (2.0 * N - 1.0) / (N - 1.0)
        self.expo = _ko_exponent(N)
        self.overflow = defaults.get("g_overflow", overflow)
        self.rtol = defaults.get("ode_table_rtol", table_rtol)
        self.truncated_at = None
        self.t = np.array([0.0])
        self.values = np.array([self.a])
        self._spline = None
        self.ensure(s_max)

    def _rhs_scalar(self, g):
        lg = math.log(self.c0) + _log_F(self.f, g)
        return math.exp(min(self.expo * lg, 700.0))

    def _node_ladder(self, lo, hi):
        nodes = [lo]
        base_hi = min(hi, 20.0)
        if lo < base_hi:
            count = int(math.ceil((base_hi - lo) / 0.01))
            nodes.extend(np.linspace(lo, base_hi, count + 1)[1:])
        t = nodes[-1]
        while t < hi:
            t = min(t * 1.01, hi)
            nodes.append(t)
        return np.asarray(nodes)

    def ensure(self, s_needed):
        if self.truncated_at is not None and s_needed > self.truncated_at:
            raise DomainError(
                f"inverse table truncated at t = {self.truncated_at:g} by the "
                f"overflow guard; cannot extend to {s_needed:g}")
        if self._spline is not None and s_needed <= self.t[-1]:
            return
        lo = float(self.t[-1])
        g0 = float(self.values[-1])
        nodes = self._node_ladder(lo, float(s_needed))

        def rhs(_t, y):
            return [self._rhs_scalar(y[0])]

        def hit_guard(_t, y):
            return y[0] - self.overflow
        hit_guard.terminal = True
        hit_guard.direction = 1.0

        sol = solve_ivp(rhs, (lo, nodes[-1]), [g0], method="DOP853",
                        t_eval=nodes[1:] if len(nodes) > 1 else None,
                        rtol=self.rtol, atol=self.rtol, events=hit_guard,
                        dense_output=False, max_step=np.inf)
        new_t = sol.t
        new_v = sol.y[0]
        if sol.status == 1:  # overflow guard event
            self.truncated_at = float(sol.t_events[0][0])
        elif not sol.success:
            # a vertical asymptote inside the requested range collapses the
            # step before the guard value is representable: same truncation
            if len(new_v) and new_v[-1] > 1e100:
                self.truncated_at = float(new_t[-1]) if len(new_t) else lo
            else:
                raise NmagoError(
                    f"inverse-table integration failed: {sol.message}")
        keep = new_t > lo
        self.t = np.concatenate([self.t, new_t[keep]])
        self.values = np.concatenate([self.values, new_v[keep]])
        slopes = np.array([self._rhs_scalar(v) for v in self.values])
        self._spline = CubicHermiteSpline(self.t, self.values, slopes)
        if self.truncated_at is not None and s_needed > self.truncated_at:
            raise DomainError(
                f"inverse table truncated at t = {self.truncated_at:g} by the "
                f"overflow guard; cannot extend to {s_needed:g}")

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0):
            raise DomainError("inverse evaluated at negative argument")
        self.ensure(float(np.max(t_arr)))
        return self._spline(t)

    def derivative(self, t):
        g = self(t)
        return np.vectorize(self._rhs_scalar)(g) if np.ndim(g) else self._rhs_scalar(float(g))

    def second_derivative(self, t):
        g = np.asarray(self(t), dtype=float)
        fg = np.asarray(self.f(g), dtype=float)
        c0F = self.c0 * np.vectorize(
            lambda v: float(self.f.antiderivative_from_zero(v)))(g)
        return fg * c0F ** (-1.0 / (2.0 * self.N - 1.0))

    def table(self, max_rows=512):
        step = max(1, len(self.t) // max_rows)
        idx = np.unique(np.r_[np.arange(0, len(self.t), step), len(self.t) - 1])
        return [[float(self.t[i]), float(self.values[i])] for i in idx]


def build_g(f, N, a, s_max, **kw):
    return GInverse(f, N, a, s_max, **kw)


@dataclass
class KOProfile:
    """Bundle of the growth machinery for one (f, N, anchor)."""

    N: int
    f: ScalarFnSpec
    a: float
    classification: Divergence
    G: GTable
    g: GInverse
    H_tau: np.ndarray
    H_vals: np.ndarray
    H_inf: float | None

    def H(self, tau):
        return eval_H(self, tau)

    def to_json(self):
        return {
            "a": self.a,
            "classification": str(self.classification),
            "H_inf": self.H_inf,
            "G_table": self.G.table(),
            "g_table": self.g.table(),
        }


def eval_H(profile, tau):
    """H(tau) = G(tau) f(tau) ((2N-1)/(N-1) F(tau))**(-N/(2N-1)).

    Equals -G G''/(G')**2; vanishes at the anchor and tends to H_inf (when
    that limit exists) as tau grows.
    """
    if tau < profile.a:
        raise DomainError("H is defined for tau >= anchor")
    if tau == profile.a:
        return 0.0
    N = profile.N
    c0 = (2.0 * N - 1.0) / (N - 1.0)
    lgF = math.log(c0) + _log_F(profile.f, tau)
    G = float(profile.G(tau))
    return G * float(profile.f(tau)) * math.exp(-N / (2.0 * N - 1.0) * lgF)


def estimate_H_inf(profile, *, rel_tol=None, window=None):
    """The limit of H along the geometric ladder, or None when the relative
    variation over the last decade of rungs stays above tolerance."""
    rel = defaults.get("hinf_rel_tol", rel_tol)
    win = defaults.get("hinf_window", window)
    vals = profile.H_vals[-win:]
    if len(vals) < win or not np.all(np.isfinite(vals)):
        return None
    spread = float(np.max(vals) - np.min(vals))
    scale = max(abs(float(np.median(vals))), 1e-300)
    if spread / scale > rel:
        return None
    return float(vals[-1])


def build_profile(f, N, a=None, *, t_max=None, s_max=None, rungs=None):
    """Assemble a KOProfile: classification, anchored table, inverse, and the
    H ladder with its limit estimate."""
    a = defaults.get("anchor_a", a)
    rungs = defaults.get("hinf_rungs", rungs)
    classification = classify_ko(f, N)
    if t_max is None:
        t_max = a * 2.0 ** rungs
    if s_max is None:
        s_max = defaults.DEFAULTS["g_s_max"]
    G = build_G(f, N, a, t_max, check_classification=False)
    g = build_g(f, N, a, s_max)
    H_tau = a * 2.0 ** np.arange(1, rungs + 1)
    profile = KOProfile(N=N, f=f, a=a, classification=classification,
                        G=G, g=g, H_tau=H_tau, H_vals=np.array([]), H_inf=None)
    profile.H_vals = np.array([eval_H(profile, t) for t in H_tau])
    profile.H_inf = estimate_H_inf(profile)
    return profile
