"""Construction and certification of blow-up sub- and super-solutions.

Given an admissible boundary weight p (decreasing, singular at 0, with
divergent integral of P^{(N-1)/N} at 0), the chain

    P(t) = int_t^1 p,   phi(t) = int_t^1 ((N/(N-1)) P)^{(N-1)/N},
    y(r) = (1 - r^2)/2,  w(r) = g(k phi^{N/(2N-1)}(y(r)))

produces a one-parameter family of radial profiles that blow up on the
boundary.  For small k the profile is a sub-solution, for large k a
super-solution; this module performs the weight preparation, evaluates the
differential inequality two independent ways, and searches for certified
parameters k1 < k2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import quad

from . import defaults
from .errors import CertificationError, DomainError, EnvelopeMismatchError
from .keller_osserman import Divergence, build_profile, eval_H
from .numerics import classify_decay, segmented_quad
from .problem_model import ResidualReport

__all__ = [
    "WeightClass", "WeightClassVerdict", "ShrinkScale", "Amplify",
    "PhiPair", "BlowupCandidate", "BoundFamily",
    "validate_weight_class", "build_P_phi", "transform_weight",
    "fit_envelope", "build_w", "eval_inequality_residual", "find_k_bounds",
    "certification_radii",
]


# ----------------------------------------------------------------------------
# weight class validation
# ----------------------------------------------------------------------------

class WeightClass(Enum):
    IN_CLASS = "InClass"
    NOT_IN_CLASS = "NotInClass"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass
class WeightClassVerdict:
    status: WeightClass
    reason: str = ""

    def __bool__(self):
        return self.status is WeightClass.IN_CLASS


def _classify_at_zero(log_integrand, increment, *, base=0.5, rungs=None,
                      eps_slope=None, windows=None):
    """Tri-state divergence of an integral at its 0+ endpoint, probed on the
    halving ladder tau_j = base * 2**-j."""
    rungs = defaults.get("ko_ladder_lo_exp", rungs)
    eps = defaults.get("slope_eps", eps_slope)
    win = defaults.get("slope_windows", windows)
    taus = base * 2.0 ** (-np.arange(rungs + 1))
    logs = []
    for t in taus:
        try:
            logs.append(log_integrand(float(t)))
        except (DomainError, ValueError, OverflowError):
            break
    if len(logs) < win + 6:
        return Divergence.INCONCLUSIVE
    ln2 = math.log(2.0)
    betas = [2.0 + (logs[j] - logs[j + 1]) / ln2 for j in range(len(logs) - 1)]
    usable = len(logs)
    tail_lo = usable - (win + 5)

    def inc(j):
        hi_t = taus[tail_lo + j]
        lo_t = taus[tail_lo + j + 1]
        val, _ = quad(increment, lo_t, hi_t, epsrel=1e-12, epsabs=0.0, limit=100)
        return val

    verdict, _ = classify_decay(betas, inc, eps_slope=eps, windows=win,
                                ratio_stab=defaults.DEFAULTS["ratio_stab"],
                                beta_margin=defaults.DEFAULTS["beta_margin"])
    return verdict


def validate_weight_class(p, N):
    """Check the three admissibility conditions of the boundary weight:
    strictly decreasing, P unbounded at 0 (equivalently p not integrable
    there), and divergence of int_{0+} P^{(N-1)/N}."""
    if N < 2 or int(N) != N:
        raise DomainError(f"N must be an integer >= 2, got {N!r}")
    lo = max(p.domain.lo, 0.0)
    grid = np.geomspace(max(lo, 1e-12) if p.domain.lo_open or lo > 0 else 1e-12,
                        1.0 - 1e-12, 512)
    vals = np.asarray(p(grid), dtype=float)
    if np.any(vals <= 0):
        return WeightClassVerdict(WeightClass.NOT_IN_CLASS, "not positive on (0,1)")
    if np.any(np.diff(vals) >= 0):
        return WeightClassVerdict(WeightClass.NOT_IN_CLASS, "not decreasing on (0,1)")

    # P(0+) = int_0 p: bounded iff p is integrable at 0
    p_at_zero = _classify_at_zero(lambda t: math.log(float(p(t))),
                                  lambda t: float(p(t)))
    if p_at_zero is Divergence.CONVERGES:
        return WeightClassVerdict(WeightClass.NOT_IN_CLASS, "P bounded at 0")
    if p_at_zero is Divergence.INCONCLUSIVE:
        return WeightClassVerdict(WeightClass.INCONCLUSIVE,
                                  "integrability of p at 0 undecided")

    pair = build_P_phi(p, N)
    expo = (N - 1.0) / N

    def log_integrand(t):
        return expo * math.log(N / (N - 1.0) * pair.P(t))

    def integrand(t):
        return (N / (N - 1.0) * pair.P(t)) ** expo

    tail = _classify_at_zero(log_integrand, integrand)
    if tail is Divergence.DIVERGES:
        return WeightClassVerdict(WeightClass.IN_CLASS)
    if tail is Divergence.CONVERGES:
        return WeightClassVerdict(WeightClass.NOT_IN_CLASS,
                                  "P_infty integral converges")
    return WeightClassVerdict(WeightClass.INCONCLUSIVE,
                              "tail divergence undecided")


# ----------------------------------------------------------------------------
# P and phi
# ----------------------------------------------------------------------------

class PhiPair:
    """Evaluators for P(t) = int_t^1 p and
    phi(t) = int_t^1 ((N/(N-1)) P)^{(N-1)/N}, with the exact derivative
    formulas

        phi'(t) = -((N/(N-1)) P(t))^{(N-1)/N},
        phi''(t) = p(t) ((N/(N-1)) P(t))^{-1/N}.

    phi values come from panel quadrature on a geometric partition and are
    memoized; below ``t_floor`` a fitted power/log tail model takes over.
    """

    def __init__(self, p, N, *, t_floor=1e-12):
        self.p, self.N = p, N
        self.t_floor = t_floor
        self._phi_cache = {}
        self._tail = None
        self._expo = (N - 1.0) / N
        self._cn = N / (N - 1.0)

    def P(self, t):
        if not (0.0 < t <= 1.0):
            raise DomainError(f"P needs t in (0, 1], got {t!r}")
        if t == 1.0:
            return 0.0
        if self.p.has_closed_integral:
            return float(self.p.integral(t, 1.0))
        return segmented_quad(lambda s: float(self.p(s)), t, 1.0)

    def _phi_integrand(self, t):
        return (self._cn * self.P(t)) ** self._expo

    def phi(self, t):
        if t >= 1.0:
            return 0.0 if t == 1.0 else self._raise(t)
        if t < self.t_floor:
            return self.tail_model()(t)
        val = self._phi_cache.get(t)
        if val is None:
            val = segmented_quad(self._phi_integrand, t, 1.0, ratio=2.0)
            self._phi_cache[t] = val
        return val

    def _raise(self, t):
        raise DomainError(f"phi needs t in (0, 1], got {t!r}")

    def phi_prime(self, t):
        return -((self._cn * self.P(t)) ** self._expo)

    def phi_second(self, t):
        return float(self.p(t)) * (self._cn * self.P(t)) ** (-1.0 / self.N)

    def S(self, t):
        """phi phi'' / (phi')^2; bounded below by (N-1)/(2N-1)."""
        return self.phi(t) * self.phi_second(t) / self.phi_prime(t) ** 2

    def grid(self, per_decade=16):
        decades = int(math.ceil(-math.log10(self.t_floor)))
        geo = 10.0 ** (-np.arange(0, decades * per_decade + 1) / per_decade)
        return np.unique(np.concatenate([geo, np.linspace(0.1, 1.0, 33)]))

    def tail_model(self):
        """Asymptotic model of phi near 0: alpha t^m (m < 0) or
        alpha log(1/t) + beta, fitted on the last grid decade."""
        if self._tail is not None:
            return self._tail
        ts = np.geomspace(self.t_floor, self.t_floor * 10.0, 9)
        ph = np.array([self.phi(float(t)) for t in ts])
        slope, logc = np.polyfit(np.log(ts), np.log(ph), 1)
        if slope < -0.05:
            alpha = math.exp(logc)

            def model(t, a=alpha, m=slope):
                return a * t ** m
        else:
            a1, b1 = np.polyfit(np.log(1.0 / ts), ph, 1)

            def model(t, a=a1, b=b1):
                return a * math.log(1.0 / t) + b
        model.diverges = (slope < -0.05) or (abs(slope) <= 0.05)
        self._tail = model
        return model

    def table(self):
        ts = self.grid()
        return [[float(t), self.P(float(t)), self.phi(float(t))] for t in ts]


def build_P_phi(p, N, **kw):
    """(P evaluator, phi evaluator) packaged with the exact derivative
    formulas; see PhiPair."""
    return PhiPair(p, N, **kw)


# ----------------------------------------------------------------------------
# weight transforms and the boundary envelope
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ShrinkScale:
    eps: float


@dataclass(frozen=True)
class Amplify:
    M: float


def transform_weight(p, mode):
    """Algebraic weight replacement: ShrinkScale(eps) gives t -> eps p(2t),
    Amplify(M) gives t -> M p(t).  Both preserve class membership."""
    if isinstance(mode, ShrinkScale):
        return p.shrink_scale(mode.eps)
    if isinstance(mode, Amplify):
        return p.amplify(mode.M)
    raise DomainError(f"unknown weight transform {mode!r}")


def fit_envelope(K, p, r_lo=None, r_hi=None, n=None):
    """Empirical envelope constants: c = min, d = max of K(r)/p(1-r) on a
    dense grid of [r_lo, r_hi].  Raises EnvelopeMismatchError when the ratio
    drifts monotonically beyond three orders of magnitude (the two functions
    are then not boundary-comparable)."""
    r_lo = defaults.get("envelope_r_lo", r_lo)
    r_hi = defaults.get("envelope_r_hi", r_hi)
    n = defaults.get("envelope_grid", n)
    if not (0.0 < r_lo < 1.0):
        raise DomainError(f"window start must lie in (0, 1), got {r_lo!r}")
    r = np.linspace(r_lo, r_hi, n)
    ratio = np.asarray(K(r), dtype=float) / np.asarray(p(1.0 - r), dtype=float)
    c, d = float(np.min(ratio)), float(np.max(ratio))
    drift = defaults.DEFAULTS["envelope_drift"]
    if d / c > drift:
        buckets = np.array_split(ratio, 8)
        medians = np.array([np.median(b) for b in buckets])
        diffs = np.diff(medians)
        if np.all(diffs > 0) or np.all(diffs < 0):
            raise EnvelopeMismatchError(
                f"envelope mismatch: K/p(1-r) drifts monotonically by a factor "
                f"{d / c:.3g} over [{r_lo:g}, {r_hi:g}]")
    return c, d


# ----------------------------------------------------------------------------
# the blow-up candidate w and its differential inequality
# ----------------------------------------------------------------------------

def _y(r):
    return (1.0 - r * r) / 2.0


class BlowupCandidate:
    """w(r) = g(k phi^{N/(2N-1)}(y(r))) with chain-rule derivatives.

    Carries the pipeline weight (the transformed p used to build phi), the
    growth profile, and the parameter k.
    """

    def __init__(self, ko, pair, k, r_max=None):
        if k <= 0:
            raise DomainError(f"k must be positive, got {k!r}")
        self.ko, self.pair, self.k = ko, pair, k
        self.N = ko.N
        r_max = defaults.get("cert_r_max", r_max)
        self.r_max = r_max
        # pre-extend the inverse table to the largest needed argument
        ko.g.ensure(self.s_of(r_max))

    def s_of(self, r):
        N = self.N
        return self.k * self.pair.phi(_y(r)) ** (N / (2.0 * N - 1.0))

    def parts(self, r):
        """All chain-rule ingredients at one radius."""
        N = self.N
        t = _y(r)
        phi = self.pair.phi(t)
        dphi = self.pair.phi_prime(t)
        d2phi = self.pair.phi_second(t)
        s = self.k * phi ** (N / (2.0 * N - 1.0))
        g = float(self.ko.g(s))
        dg = float(self.ko.g.derivative(s))
        d2g = float(self.ko.g.second_derivative(s))
        return dict(t=t, phi=phi, dphi=dphi, d2phi=d2phi, s=s,
                    g=g, dg=dg, d2g=d2g, yp=-r, ypp=-1.0)

    def w(self, r):
        return float(self.ko.g(self.s_of(r)))

    def dw(self, r, parts=None):
        N = self.N
        q = parts or self.parts(r)
        e = -(N - 1.0) / (2.0 * N - 1.0)
        return (self.k * N / (2.0 * N - 1.0) * q["dg"] * q["phi"] ** e
                * q["dphi"] * q["yp"])

    def ddw(self, r, parts=None):
        N = self.N
        q = parts or self.parts(r)
        e = -(N - 1.0) / (2.0 * N - 1.0)
        kk = self.k * N / (2.0 * N - 1.0)
        bracket = (kk * q["d2g"] * q["phi"] ** e * q["dphi"] ** 2 * q["yp"] ** 2
                   - (N - 1.0) / (2.0 * N - 1.0) * q["dg"]
                   * q["dphi"] ** 2 / q["phi"] * q["yp"] ** 2
                   + q["dg"] * q["d2phi"] * q["yp"] ** 2
                   + q["dg"] * q["dphi"] * q["ypp"])
        return kk * q["phi"] ** e * bracket

    def direct_lhs(self, r):
        """((N-1)/r w')^{1/(N-1)} (w'' + (N-2)/r w') from the chain-rule
        derivatives; at r = 0 the limit ((N-1) w''(0))^{N/(N-1)}."""
        N = self.N
        q = self.parts(r)
        if r == 0.0:
            return ((N - 1.0) * self.ddw(0.0, q)) ** (N / (N - 1.0))
        dw = self.dw(r, q)
        ddw = self.ddw(r, q)
        return ((N - 1.0) / r * dw) ** (1.0 / (N - 1.0)) \
            * (ddw + (N - 2.0) / r * dw)

    def factored_lhs(self, r):
        """The grouped form

            (N-1)^{1/(N-1)} k^{(2N-1)/(N-1)} (N/(2N-1))^{N/(N-1)}
              * p(y) f(w) [Delta(r) + N(N-2)/(N-1) (1/H(w)) P(y)/p(y)]

        with Delta and Theta as in the construction; returns
        (value, bracket, Delta, Theta, S, H)."""
        N = self.N
        q = self.parts(r)
        w = q["g"]
        H = eval_H(self.ko, w)
        S = q["phi"] * q["d2phi"] / q["dphi"] ** 2
        P = self.pair.P(q["t"])
        p = float(self.pair.p(q["t"]))
        Pp = P / p
        r2 = r * r
        theta = (N / (2.0 * N - 1.0) / S * r2
                 - (N - 1.0) / (2.0 * N - 1.0) / H / S * r2
                 + r2 / H)
        delta = theta + N / (N - 1.0) / H * Pp
        bracket = delta + N * (N - 2.0) / (N - 1.0) / H * Pp
        coeff = ((N - 1.0) ** (1.0 / (N - 1.0))
                 * self.k ** ((2.0 * N - 1.0) / (N - 1.0))
                 * (N / (2.0 * N - 1.0)) ** (N / (N - 1.0)))
        value = coeff * p * float(self.ko.f(w)) * bracket
        return value, bracket, delta, theta, S, H


def build_w(ko, pair, k, r_max=None):
    """Candidate profile for one k; the growth table is pre-extended to
    cover radii up to r_max."""
    return BlowupCandidate(ko, pair, k, r_max)


def certification_radii(n_total=None, n_uniform=None, r_max=None, jitter=0.0):
    """Certification set: uniform on [0, 0.9] plus a geometric approach to
    r_max.  ``jitter`` shifts the interior points to produce fresh sets."""
    n_total = defaults.get("cert_radii", n_total)
    n_uniform = defaults.get("cert_uniform", n_uniform)
    r_max = defaults.get("cert_r_max", r_max)
    uni = np.linspace(0.0, 0.9, n_uniform)
    if jitter:
        step = 0.9 / (n_uniform - 1)
        uni = np.clip(uni + jitter * step, 0.0, 0.9)
    n_geo = n_total - len(uni)
    rho = ((1.0 - r_max) / 0.1) ** (1.0 / n_geo)
    geo = 1.0 - 0.1 * rho ** np.arange(1, n_geo + 1)
    return np.unique(np.concatenate([uni, geo]))


def eval_inequality_residual(candidate, spec, radii, *, cross_rtol=None):
    """Evaluate lhs - K(r) f(w(r)) at each radius, computing the lhs both
    directly (chain-rule derivatives) and through the factored identity, and
    cross-validating the two.

    The report's extras carry the factored values, the bracket range
    (empirical C1/C2), Delta/Theta/S samples, and any excluded radii.
    """
    cross_rtol = defaults.get("cross_check_rtol", cross_rtol)
    radii = np.asarray(sorted(float(r) for r in radii))
    lhs, rhs, factored, deltas, thetas, esses, brackets = [], [], [], [], [], [], []
    kept, excluded = [], []
    for r in radii:
        s = candidate.s_of(float(r))
        if s < 1e-12:  # w indistinguishable from the anchor: H(w) -> 0/0
            excluded.append(float(r))
            continue
        direct = candidate.direct_lhs(float(r))
        fac, bracket, delta, theta, S, _H = candidate.factored_lhs(float(r))
        w = candidate.w(float(r))
        kept.append(float(r))
        lhs.append(direct)
        rhs.append(float(spec.K(float(r))) * float(spec.f(w)))
        factored.append(fac)
        deltas.append(delta)
        thetas.append(theta)
        esses.append(S)
        brackets.append(bracket)
    lhs = np.asarray(lhs)
    factored = np.asarray(factored)
    denom = np.maximum(np.abs(lhs), np.abs(factored))
    cross = np.max(np.abs(lhs - factored) / np.where(denom > 0, denom, 1.0)) \
        if len(lhs) else 0.0
    report = ResidualReport(
        radii=np.asarray(kept), lhs=lhs, rhs=np.asarray(rhs),
        extras={
            "factored_lhs": factored,
            "cross_rel_max": float(cross),
            "cross_ok": bool(cross <= cross_rtol),
            "bracket": np.asarray(brackets),
            "bracket_min": float(np.min(brackets)) if brackets else math.nan,
            "bracket_max": float(np.max(brackets)) if brackets else math.nan,
            "delta": np.asarray(deltas),
            "theta": np.asarray(thetas),
            "S": np.asarray(esses),
            "excluded": excluded,
            "k": candidate.k,
        })
    return report


# ----------------------------------------------------------------------------
# the k search
# ----------------------------------------------------------------------------

@dataclass
class BoundFamily:
    """Certified sub/super pair: w1 (k = k1, shrink-scaled weight) lies below
    every solution started in (w1(0), w2(0)); w2 (k = k2, amplified weight)
    above."""

    p: object
    N: int
    c: float
    d: float
    ko: object
    k1: float
    k2: float
    C1: float
    C2: float
    w1: BlowupCandidate
    w2: BlowupCandidate
    sub_weight: object
    super_weight: object
    eps: float
    M: float
    sub_report: ResidualReport
    super_report: ResidualReport
    cert_radii: np.ndarray
    pair: PhiPair = None

    def __post_init__(self):
        if not (0 < self.k1 < self.k2):
            raise CertificationError(
                f"certified parameters must satisfy 0 < k1 < k2, "
                f"got {self.k1!r}, {self.k2!r}")
        if not self.w1.w(0.0) < self.w2.w(0.0):
            raise CertificationError("w1(0) < w2(0) violated")

    def to_json(self, n_samples=64):
        rr = np.linspace(0.0, 0.99, n_samples)
        return {
            "k1": self.k1, "k2": self.k2,
            "C1": self.C1, "C2": self.C2,
            "c": self.c, "d": self.d,
            "w1_samples": [[float(r), self.w1.w(float(r))] for r in rr],
            "w2_samples": [[float(r), self.w2.w(float(r))] for r in rr],
        }


def write_residual_csv(report, path, digits=None):
    digits = defaults.get("csv_digits", digits)
    fmt = f"{{:.{digits}g}}"
    lines = ["r,lhs,rhs,margin"]
    for r, lh, rh, mg in zip(report.radii, report.lhs, report.rhs, report.margins):
        lines.append(",".join(fmt.format(v) for v in (r, lh, rh, mg)))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _ratio_bounds(K, p, r_max):
    r = np.linspace(0.0, r_max, 8192)
    ratio = np.asarray(K(r), dtype=float) / np.asarray(p(1.0 - r), dtype=float)
    return float(np.min(ratio)), float(np.max(ratio))


def find_k_bounds(spec, p, *, a=None, r_lo=None, n_radii=None, profile=None,
                  max_halvings=None, max_doublings=None, r_max=None):
    """Search for certified sub/super parameters.

    Preconditions (all raised as CertificationError when violated): the
    weight is in the admissible class, the nonlinearity satisfies the tail
    condition, and H has a finite limit.  The sub pipeline shrink-scales p so
    p_sub(y(r)) <= K(r) everywhere; the super pipeline amplifies it so
    p_sup(y(r)) >= K(r); k then halves/doubles geometrically until all
    margins at the certification radii have the required sign.
    """
    N = spec.dimension
    max_h = defaults.get("k_max_halvings", max_halvings)
    max_d = defaults.get("k_max_doublings", max_doublings)
    r_max = defaults.get("cert_r_max", r_max)

    verdict = validate_weight_class(p, N)
    if not verdict:
        raise CertificationError(
            f"precondition failure: weight not admissible ({verdict.status}"
            + (f": {verdict.reason}" if verdict.reason else "") + ")")
    ko = profile if profile is not None else build_profile(spec.f, N, a)
    if ko.classification is not Divergence.DIVERGES:
        raise CertificationError(
            f"precondition failure: tail condition classified "
            f"{ko.classification} for f")
    if ko.H_inf is None:
        raise CertificationError(
            "precondition failure: H does not stabilize (no finite limit)")
    c_env, d_env = fit_envelope(spec.K, p, r_lo)

    rho_min, rho_max = _ratio_bounds(spec.K, p, r_max)
    eps = 0.999 * rho_min
    big_m = 1.001 * rho_max
    sub_p = transform_weight(p, ShrinkScale(eps))
    sup_p = transform_weight(p, Amplify(big_m))
    sub_pair = build_P_phi(sub_p, N)
    sup_pair = build_P_phi(sup_p, N)
    radii = certification_radii(n_radii, r_max=r_max)

    def search(pair, sign, max_steps):
        k = 1.0
        best = None
        for _ in range(max_steps + 1):
            cand = build_w(ko, pair, k, r_max)
            rep = eval_inequality_residual(cand, spec, radii)
            worst = float(np.max(sign * rep.margins))
            if best is None or worst < best[0]:
                best = (worst, k)
            if worst <= 0.0:
                return k, cand, rep
            k = k / 2.0 if sign > 0 else k * 2.0
        raise CertificationError(
            f"no certified bounds: best worst-margin {best[0]:.3g} "
            f"at k={best[1]:g}")

    k1, w1, sub_report = search(sub_pair, +1.0, max_h)
    k2, w2, sup_report = search(sup_pair, -1.0, max_d)
    while k1 >= k2:
        k1 /= 2.0
        w1 = build_w(ko, sub_pair, k1, r_max)
        sub_report = eval_inequality_residual(w1, spec, radii)
        if np.max(sub_report.margins) > 0.0:
            raise CertificationError("sub-solution lost while separating k1 < k2")

    return BoundFamily(
        p=p, N=N, c=c_env, d=d_env, ko=ko, k1=k1, k2=k2,
        C1=sup_report.extras["bracket_min"],
        C2=sub_report.extras["bracket_max"],
        w1=w1, w2=w2, sub_weight=sub_p, super_weight=sup_p,
        eps=eps, M=big_m, sub_report=sub_report, super_report=sup_report,
        cert_radii=radii, pair=build_P_phi(p, N))
