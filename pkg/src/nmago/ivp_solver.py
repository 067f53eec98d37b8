"""Initial value solver for the radial equation.

The solve proceeds in two stages.  On a rigorously sized initial interval
[0, h] the equivalent integral equation

    u(r) = u0 + int_0^r t^{2-N}/(N-1) (int_0^t N tau^{N-1} K f(u) dtau)^{(N-1)/N} dt

is iterated to its fixed point on a Chebyshev grid (the interval length comes
from the same constants that make the iteration a contraction, so convergence
is guaranteed, geometric, and measurable).  From r = h the solution continues
as the first-order system

    u' = v,   v' = K(r) f(u) (r/((N-1) v))^{1/(N-1)} - (N-2)/r v

under an embedded Dormand-Prince 5(4) pair until the boundary is reached or
the solution blows up inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from . import defaults
from .errors import DomainError, NmagoError
from .numerics import (MonotoneCubic, aitken_limit, cheb_cumulative,
                       cheb_nodes_on, gauss_legendre_01)
from .problem_model import eval_pde_residual

__all__ = [
    "LocalIntervalPlan", "RadialSolution", "Status", "PicardStats",
    "plan_local_interval", "picard_solve_local", "continue_ode", "solve_ivp",
    "write_solution_csv", "solution_sidecar",
]


# ----------------------------------------------------------------------------
# data types
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Status:
    kind: str                    # "ReachedOne" | "BlewUpAt" | "Truncated"
    T: float | None = None
    reason: str | None = None

    def __str__(self):
        if self.kind == "BlewUpAt":
            return f"BlewUpAt({self.T:.12g})"
        if self.kind == "Truncated":
            return f"Truncated({self.reason})"
        return self.kind

    @property
    def reached_one(self):
        return self.kind == "ReachedOne"

    @property
    def blew_up(self):
        return self.kind == "BlewUpAt"


@dataclass(frozen=True)
class LocalIntervalPlan:
    """Constants sizing the contraction interval of the local solve."""

    h_star: float            # half-width of the f bracket around u0
    L: float                 # Lipschitz bound of f on that bracket
    m: float                 # lower bound of f there
    M: float                 # upper bound L h* + f(u0)
    K_low: float             # inf of K on [0, 1/2]
    K_high: float            # sup of K on [0, 1/2]
    h: float                 # selected interval length
    contraction_bound: float

    def __post_init__(self):
        if self.m <= 0:
            raise DomainError("f must stay positive on the local bracket")
        if not self.contraction_bound < 1.0:
            raise NmagoError("planned interval is not contractive")


@dataclass
class PicardStats:
    iterations: int
    final_diff: float
    ratio: float | None        # worst successive-iterate ratio, None if unmeasurable
    halvings: int
    plan: LocalIntervalPlan


@dataclass
class RadialSolution:
    """Grid solution of the IVP with a monotone piecewise-cubic contract on
    both (r, u) and (r, u')."""

    u0: float
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    ddu: np.ndarray
    status: Status
    u2_at_0: float
    picard: PicardStats | None = None
    _u_interp: MonotoneCubic = field(default=None, repr=False)
    _du_interp: MonotoneCubic = field(default=None, repr=False)

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.du = np.asarray(self.du, dtype=float)
        self.ddu = np.asarray(self.ddu, dtype=float)
        if self.r[0] != 0.0:
            raise DomainError("solution grid must start at r = 0")
        if np.any(np.diff(self.r) <= 0):
            raise DomainError("solution grid must be strictly increasing")

    @property
    def end(self):
        return float(self.r[-1])

    def _interpolants(self):
        if self._u_interp is None:
            self._u_interp = MonotoneCubic(self.r, self.u, self.du)
            self._du_interp = MonotoneCubic(self.r, self.du, self.ddu)
        return self._u_interp, self._du_interp

    def eval_u(self, r):
        return self._interpolants()[0](r)

    def eval_du(self, r):
        return self._interpolants()[1](r)

    def eval_ddu(self, r):
        return self._interpolants()[1].derivative(r)


# ----------------------------------------------------------------------------
# interval planning
# ----------------------------------------------------------------------------

def plan_local_interval(spec, u0, *, safety=None):
    """Size the initial interval from the contraction constants:

        (1/(2(N-1))) h^2 (K_high M)^{(N-1)/N} <= h     (invariance)
        (1/(2N)) h^2 (K_low m)^{-1/N} K_high L < 1     (contraction)
    """
    if u0 <= 0:
        raise DomainError(f"u0 must be positive, got {u0!r}")
    N = spec.dimension
    safety = defaults.get("plan_safety", safety)

    h_star = min(0.25, u0 / 2.0)
    bracket = np.linspace(u0 - h_star, u0 + h_star, 513)
    fvals = np.asarray(spec.f(bracket), dtype=float)
    slopes = np.abs(np.diff(fvals)) / np.diff(bracket)
    L = float(np.max(slopes))
    m = float(spec.f(u0 - h_star))
    M = L * h_star + float(spec.f(u0))
    if m <= 0:
        raise DomainError("assumption violation: f(u0 - h*) <= 0")

    half = np.linspace(0.0, 0.5, 2049)
    kvals = np.asarray(spec.K(half), dtype=float)
    K_low, K_high = float(np.min(kvals)), float(np.max(kvals))

    h_map = 2.0 * (N - 1) * (K_high * M) ** (-(N - 1.0) / N)
    if L > 0:
        h_contr = math.sqrt(2.0 * N * (K_low * m) ** (1.0 / N) / (K_high * L))
    else:
        h_contr = math.inf
    h = safety * min(h_star, h_map, h_contr)
    bound = (1.0 / (2.0 * N)) * h * h * (K_low * m) ** (-1.0 / N) * K_high * L
    return LocalIntervalPlan(h_star=h_star, L=L, m=m, M=M,
                             K_low=K_low, K_high=K_high, h=h,
                             contraction_bound=bound)


# ----------------------------------------------------------------------------
# Picard iteration on [0, h]
# ----------------------------------------------------------------------------

def _u2_at_zero(spec, u0):
    N = spec.dimension
    return (float(spec.K(0.0)) * float(spec.f(u0))) ** ((N - 1.0) / N) / (N - 1.0)


def apply_integral_operator(spec, r_nodes, u_vals):
    """One application of the fixed-point operator on the Chebyshev grid.

    The inner integral is computed in the scaled variable tau = t x, which
    absorbs the t^{2-N} prefactor analytically (the integrand behaves like t
    near 0, so nothing singular is ever evaluated):

        psi(t) = t/(N-1) * (int_0^1 N x^{N-1} K(t x) f(u(t x)) dx)^{(N-1)/N}

    Returns (new u values, psi = u' values).
    """
    N = spec.dimension
    x, w = gauss_legendre_01(defaults.DEFAULTS["picard_inner_quad"])
    interp = BarycentricInterpolator(r_nodes, u_vals)
    tau = np.outer(r_nodes, x)                       # (nodes, quad)
    u_tau = interp(tau.ravel()).reshape(tau.shape)
    kern = np.asarray(spec.K(tau), dtype=float) * np.asarray(spec.f(u_tau), dtype=float)
    j_hat = (kern * (N * x ** (N - 1.0)) * w).sum(axis=1)
    psi = r_nodes * j_hat ** ((N - 1.0) / N) / (N - 1.0)
    psi[0] = 0.0
    h = r_nodes[-1]
    new_u = u_vals[0] + cheb_cumulative(psi, 0.0, h)
    return new_u, psi


def picard_solve_local(spec, u0, plan, *, tol=None, max_iter=None,
                       max_retries=None):
    """Iterate the integral operator to its fixed point on [0, h].

    Returns a RadialSolution on the planned interval with measured
    contraction diagnostics.  Halves the interval and retries (up to
    ``max_retries`` times) if an iterate escapes the f bracket; raises
    after ``max_iter`` iterations without convergence.
    """
    tol = defaults.get("picard_tol", tol)
    max_iter = defaults.get("picard_max_iter", max_iter)
    max_retries = defaults.get("picard_max_retries", max_retries)
    n = defaults.DEFAULTS["picard_nodes"]
    N = spec.dimension

    h = plan.h
    halvings = 0
    while True:
        r_nodes = cheb_nodes_on(0.0, h, n)
        r_nodes[0] = 0.0
        u = np.full(n + 1, float(u0))
        diffs = []
        escaped = False
        psi = np.zeros_like(u)
        for _ in range(max_iter):
            new_u, psi = apply_integral_operator(spec, r_nodes, u)
            if np.max(np.abs(new_u - u0)) > plan.h_star:
                escaped = True
                break
            diffs.append(float(np.max(np.abs(new_u - u))))
            u = new_u
            if diffs[-1] <= tol:
                break
        if escaped:
            if halvings >= max_retries:
                raise NmagoError("picard stall: iterate escaped the bracket "
                                 f"after {halvings} interval halvings")
            h /= 2.0
            halvings += 1
            continue
        if diffs and diffs[-1] <= tol:
            break
        raise NmagoError(f"picard stall: no convergence in {max_iter} iterations "
                         f"(last diff {diffs[-1]:.3g})")

    _, psi = apply_integral_operator(spec, r_nodes, u)  # u' of the fixed point
    ratio = None
    for d0, d1 in zip(diffs[:-1], diffs[1:]):
        if d0 > tol:
            r01 = d1 / d0
            ratio = r01 if ratio is None else max(ratio, r01)
    stats = PicardStats(iterations=len(diffs), final_diff=diffs[-1],
                        ratio=ratio, halvings=halvings, plan=plan)

    u2_0 = _u2_at_zero(spec, u0)
    ddu = np.empty_like(u)
    ddu[0] = u2_0
    rr = r_nodes[1:]
    ddu[1:] = (np.asarray(spec.K(rr)) * np.asarray(spec.f(u[1:]))
               * ((N - 1.0) / rr * psi[1:]) ** (-1.0 / (N - 1.0))
               - (N - 2.0) / rr * psi[1:])
    return RadialSolution(u0=float(u0), r=r_nodes, u=u, du=psi, ddu=ddu,
                          status=Status("Truncated", reason="local interval"),
                          u2_at_0=u2_0, picard=stats)


# ----------------------------------------------------------------------------
# Dormand-Prince 5(4) continuation
# ----------------------------------------------------------------------------

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4


def _make_rhs(spec):
    N = spec.dimension
    K, f = spec.K, spec.f
    inv = 1.0 / (N - 1.0)

    def rhs(r, y):
        u, v = y
        if v <= 0.0 or u <= 0.0:
            return None
        dv = float(K(r)) * float(f(u)) * (r / ((N - 1.0) * v)) ** inv \
            - (N - 2.0) / r * v
        return np.array([v, dv])

    return rhs


def continue_ode(spec, seed, *, rtol=None, atol=None, max_step=None,
                 blowup=None, reach_eps=None, edge_fraction=None):
    """Extend a local solution toward r = 1 with an adaptive embedded
    Runge-Kutta pair.

    Stops with ReachedOne at r >= 1 - reach_eps, with BlewUpAt(T) when u
    crosses the blow-up surrogate threshold (T extrapolated from the
    shrinking step sequence), or Truncated when the weight's domain ends or
    convexity is lost.  The step is capped by (1 - r)/edge_fraction so the
    weight is never sampled at its boundary singularity.
    """
    rtol = defaults.get("ode_rtol", rtol)
    atol = defaults.get("ode_atol", atol)
    max_step = defaults.get("ode_max_step", max_step)
    blowup = defaults.get("blowup_threshold", blowup)
    reach_eps = defaults.get("reach_one_eps", reach_eps)
    edge = defaults.get("edge_step_fraction", edge_fraction)

    u_cap = min(blowup, spec.f.argument_overflow_cap())
    k_dom = spec.K.domain
    r_end = 1.0 - reach_eps
    domain_limited = False
    if math.isfinite(k_dom.hi):
        k_hi = k_dom.hi - (1e-15 * max(1.0, abs(k_dom.hi)) if k_dom.hi_open else 0.0)
        if k_hi < r_end:
            r_end = k_hi
            domain_limited = True

    rhs = _make_rhs(spec)
    r = seed.end
    y = np.array([seed.u[-1], seed.du[-1]])
    if y[0] <= 0 or y[1] <= 0:
        raise DomainError("seed must end with u > 0 and u' > 0")

    # past the blow-up threshold a short probe tail sharpens the radius
    # extrapolation; the returned grid still stops at the first crossing
    tail_cap = min(u_cap * 1e6, spec.f.argument_overflow_cap())
    crossing = None

    rs, us, vs, dvs = [], [], [], []
    k1 = rhs(r, y)
    if k1 is None:
        raise DomainError("rhs undefined at the seed endpoint")
    status = None
    h = min(1e-3, max_step, (1.0 - r) / edge, r_end - r)
    stages = np.zeros((7, 2))
    while True:
        ceiling = min(max_step, (1.0 - r) / edge, r_end - r)
        if ceiling <= 0:
            status = Status("ReachedOne") if not domain_limited else \
                Status("Truncated", reason=f"weight domain end at r={r_end:.9g}")
            break
        h = min(h, ceiling)
        if h < 1e-14 * max(r, 1.0):
            status = Status("Truncated", reason="step collapse")
            break
        stages[0] = k1
        failed = False
        for i in range(1, 7):
            yi = y + h * (_DP_A[i] @ stages[:i])
            ki = rhs(r + _DP_C[i] * h, yi)
            if ki is None or not np.all(np.isfinite(ki)):
                failed = True
                break
            stages[i] = ki
        if failed:
            h *= 0.5
            continue
        y5 = y + h * (_DP_B5 @ stages)
        err_vec = h * (_DP_E @ stages)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if err > 1.0 or not np.all(np.isfinite(y5)) or y5[1] <= 0:
            if not np.all(np.isfinite(y5)):
                h *= 0.5
            else:
                h *= max(0.2, 0.9 * err ** -0.2)
            if y5[1] <= 0 and err <= 1.0:
                status = Status("Truncated", reason="convexity lost")
                break
            continue
        r += h
        y = y5
        k1 = rhs(r, y)  # FSAL stage doubles as the stored second derivative
        if k1 is None:
            status = Status("Truncated", reason="convexity lost")
            break
        rs.append(r)
        us.append(y[0])
        vs.append(y[1])
        dvs.append(k1[1])
        if y[0] > u_cap and crossing is None:
            crossing = len(rs)
        if crossing is not None and (y[0] > tail_cap
                                     or len(rs) - crossing > 400):
            tail = np.array(rs[-24:])
            T = aitken_limit(tail) if len(tail) >= 3 else float(r)
            T = min(max(T, float(r)), 1.0)
            status = Status("BlewUpAt", T=T)
            break
        if r >= r_end - 1e-15:
            if crossing is not None:
                status = Status("BlewUpAt", T=float(r))
            elif domain_limited:
                status = Status("Truncated",
                                reason=f"weight domain end at r={r_end:.9g}")
            else:
                status = Status("ReachedOne")
            break
        h = min(h * min(5.0, max(0.2, 0.9 * err ** -0.2 if err > 0 else 5.0)),
                max_step)

    if status.kind == "Truncated" and status.reason == "step collapse" \
            and crossing is not None:
        tail = np.array(rs[-24:])
        T = aitken_limit(tail) if len(tail) >= 3 else float(rs[-1])
        status = Status("BlewUpAt", T=min(max(T, float(rs[-1])), 1.0))
    if crossing is not None:
        rs, us, vs, dvs = rs[:crossing], us[:crossing], vs[:crossing], dvs[:crossing]
    r_all = np.concatenate([seed.r, np.asarray(rs)])
    u_all = np.concatenate([seed.u, np.asarray(us)])
    du_all = np.concatenate([seed.du, np.asarray(vs)])
    ddu_all = np.concatenate([seed.ddu, np.asarray(dvs)])
    return RadialSolution(u0=seed.u0, r=r_all, u=u_all, du=du_all,
                          ddu=ddu_all, status=status, u2_at_0=seed.u2_at_0,
                          picard=seed.picard)


def solve_ivp(spec, u0, **kw):
    """Full pipeline: plan the contraction interval, solve locally by Picard
    iteration, continue to the boundary or blow-up."""
    plan = plan_local_interval(spec, u0)
    seed = picard_solve_local(spec, u0, plan)
    return continue_ode(spec, seed, **kw)


# ----------------------------------------------------------------------------
# export
# ----------------------------------------------------------------------------

def _fd_second_derivative(r, du, i):
    hm = r[i] - r[i - 1]
    hp = r[i + 1] - r[i]
    return (du[i - 1] * (-hp / (hm * (hm + hp)))
            + du[i] * ((hp - hm) / (hm * hp))
            + du[i + 1] * (hm / (hp * (hm + hp))))


def write_solution_csv(sol, path, spec=None, digits=None):
    """CSV profile ``r,u,du,residual``.

    The residual column is a grid-consistency diagnostic: it re-derives u''
    from a finite-difference stencil on the stored u' values (independently
    of the solver's own second derivatives) and evaluates the equation
    residual with it.  Blank where not evaluated (endpoints, or no spec).
    """
    digits = defaults.get("csv_digits", digits)
    fmt = f"{{:.{digits}g}}"
    lines = ["r,u,du,residual"]
    n = len(sol.r)
    for i in range(n):
        res = ""
        if spec is not None and 0 < i < n - 1 and 0.0 < sol.r[i] < 1.0:
            ddu_fd = _fd_second_derivative(sol.r, sol.du, i)
            res = fmt.format(eval_pde_residual(
                spec, float(sol.u[i]), float(sol.du[i]), float(ddu_fd),
                float(sol.r[i])))
        lines.append(",".join([fmt.format(sol.r[i]), fmt.format(sol.u[i]),
                               fmt.format(sol.du[i]), res]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def solution_sidecar(sol):
    """Metadata mapping for the sidecar JSON."""
    return {"u0": sol.u0, "status": str(sol.status),
            "T": sol.status.T, "u2_at_0": sol.u2_at_0}
