"""Comparison, convexity, and family demonstrations.

The comparison principle orders solutions by their center values; combined
with a certified sub/super pair it sandwiches every solution started inside
(w1(0), w2(0)), which is how the infinite family of blow-up profiles is
demonstrated at desk scale.  Manufactured weights reverse-engineer K from a
prescribed profile and close the loop on solver correctness.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import defaults
from .errors import DomainError
from .ivp_solver import RadialSolution, solve_ivp, write_solution_csv
from .scalarfn import Tabulated

__all__ = [
    "ComparisonReport", "ConvexityReport", "FamilyMember", "FamilyResult",
    "check_comparison", "verify_convexity", "solve_family",
    "manufacture_weight",
]


# ----------------------------------------------------------------------------
# comparison principle
# ----------------------------------------------------------------------------

@dataclass
class ComparisonReport:
    u0_low: float
    u0_high: float
    radii: np.ndarray
    gap_min: float
    ordered: bool
    low: RadialSolution
    high: RadialSolution


def _common_radii(sol_a, sol_b, cap=None):
    end = min(sol_a.end, sol_b.end)
    if cap is not None:
        end = min(end, cap)
    merged = np.unique(np.concatenate([sol_a.r, sol_b.r]))
    return merged[merged <= end]


def check_comparison(spec, u0_low, u0_high):
    """Solve both IVPs and verify strict pointwise ordering on the union of
    the two grids (up to the shorter existence interval)."""
    if not (0.0 < u0_low < u0_high):
        raise DomainError(
            f"need 0 < u0_low < u0_high, got {u0_low!r}, {u0_high!r}")
    low = solve_ivp(spec, u0_low)
    high = solve_ivp(spec, u0_high)
    radii = _common_radii(low, high)
    gaps = high.eval_u(radii) - low.eval_u(radii)
    return ComparisonReport(u0_low=u0_low, u0_high=u0_high, radii=radii,
                            gap_min=float(np.min(gaps)),
                            ordered=bool(np.all(gaps > 0.0)),
                            low=low, high=high)


# ----------------------------------------------------------------------------
# convexity verification
# ----------------------------------------------------------------------------

@dataclass
class ConvexityReport:
    passed: bool
    min_sigma_radial: float      # min over grid of (N-1)/r u'
    min_sigma_tangent: float     # min over grid of u'' + (N-2)/r u'
    first_violation: int | None  # grid index, or None


def verify_convexity(sol, N):
    """Positivity of both eigenvalue families of the radial profile:
    (N-1)/r u' and u'' + (N-2)/r u' at interior grid points, (N-1) u''(0)
    at the center.

    Second derivatives come from the solver's stored (ODE-consistent) values
    when available, else from a finite-difference proxy.
    """
    if len(sol.r) < 3:
        raise DomainError("need at least 3 grid points")
    r = sol.r[1:]
    du = sol.du[1:]
    if sol.ddu is not None and len(sol.ddu) == len(sol.r):
        ddu = sol.ddu[1:]
    else:
        ddu = np.gradient(sol.du, sol.r)[1:]
    sigma_r = (N - 1.0) / r * du
    sigma_t = ddu + (N - 2.0) / r * du
    center = (N - 1.0) * sol.u2_at_0
    all_vals = np.concatenate([[center], sigma_r, sigma_t])
    passed = bool(np.all(all_vals > 0.0))
    first = None
    if not passed:
        bad = np.where((sigma_r <= 0) | (sigma_t <= 0))[0]
        first = int(bad[0] + 1) if len(bad) else 0
    return ConvexityReport(passed=passed,
                           min_sigma_radial=float(np.min(np.r_[center, sigma_r])),
                           min_sigma_tangent=float(np.min(np.r_[center, sigma_t])),
                           first_violation=first)


# ----------------------------------------------------------------------------
# the family demonstration
# ----------------------------------------------------------------------------

@dataclass
class FamilyMember:
    u0: float
    solution: RadialSolution
    sandwich_ok: bool
    sandwich_detail: list
    blowup_ok: bool
    convexity: ConvexityReport

    @property
    def passed(self):
        return self.sandwich_ok and self.blowup_ok and self.convexity.passed


@dataclass
class FamilyResult:
    bounds: object
    members: list
    ordering_ok: bool
    passed: bool
    failure: str = ""

    def summary_json(self):
        return {
            "count": len(self.members),
            "passed": self.passed,
            "ordering_ok": self.ordering_ok,
            "failure": self.failure,
            "members": [
                {"u0": m.u0, "status": str(m.solution.status),
                 "passed": m.passed, "sandwich_ok": m.sandwich_ok,
                 "blowup_ok": m.blowup_ok, "convex": m.convexity.passed}
                for m in self.members
            ],
        }

    def export(self, directory, digits=None):
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, "family_summary.json")
        with open(path, "w", newline="\n") as fh:
            json.dump(self.summary_json(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        for i, m in enumerate(self.members):
            name = f"member_{i}_u0_{m.u0:.6g}.csv"
            write_solution_csv(m.solution, os.path.join(directory, name))
        return path


def _max_workers():
    env = os.environ.get("NMAGO_THREADS", "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"NMAGO_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def solve_family(spec, bounds, count, *, sample_radii=None, margin=None,
                 growth=None, edge_value=None):
    """Solve ``count`` IVPs with center values spread uniformly inside
    (w1(0), w2(0)) and check, member by member: the sandwich
    w1 < u < w2 at the sample radii, the blow-up proxy, pairwise ordering,
    and radial convexity."""
    if count < 2:
        raise DomainError(f"family needs count >= 2, got {count!r}")
    if count > 10_000:
        raise DomainError("count must stay <= 10000")
    sample_radii = tuple(defaults.get("sandwich_radii", sample_radii))
    margin = defaults.get("family_margin", margin)
    growth = defaults.get("family_growth", growth)
    edge_value = defaults.get("family_edge_value", edge_value)
    edge_r = defaults.DEFAULTS["family_edge_r"]

    lo, hi = bounds.w1.w(0.0), bounds.w2.w(0.0)
    span = hi - lo
    u0s = lo + span * (margin + (1.0 - 2.0 * margin)
                       * np.arange(count) / (count - 1.0))

    workers = min(_max_workers(), count)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sols = list(pool.map(lambda v: solve_ivp(spec, float(v)), u0s))
    else:
        sols = [solve_ivp(spec, float(v)) for v in u0s]

    members = []
    for u0, sol in zip(u0s, sols):
        detail = []
        ok = True
        for rr in sample_radii:
            if rr > sol.end:
                detail.append((rr, math.nan, math.nan, math.nan, False))
                ok = False
                continue
            w1v = bounds.w1.w(rr)
            w2v = bounds.w2.w(rr)
            uv = float(sol.eval_u(rr)) if rr > 0 else sol.u0
            good = w1v < uv < w2v
            ok = ok and good
            detail.append((rr, w1v, uv, w2v, good))
        grew = bool(np.max(sol.u) > growth) and sol.end < 1.0
        edge_ok = (sol.status.reached_one and sol.end >= edge_r
                   and float(sol.eval_u(edge_r)) > edge_value)
        blow_ok = bool(grew or edge_ok or sol.status.blew_up
                       and np.max(sol.u) > growth)
        members.append(FamilyMember(u0=float(u0), solution=sol,
                                    sandwich_ok=ok, sandwich_detail=detail,
                                    blowup_ok=blow_ok,
                                    convexity=verify_convexity(sol, spec.dimension)))

    ordering_ok = True
    for a, b in zip(members[:-1], members[1:]):
        radii = _common_radii(a.solution, b.solution)
        if np.any(b.solution.eval_u(radii) - a.solution.eval_u(radii) <= 0):
            ordering_ok = False
            break

    passed = ordering_ok and all(m.passed for m in members)
    failure = ""
    if not passed:
        if not ordering_ok:
            failure = "pairwise ordering violated"
        else:
            bad = next(i for i, m in enumerate(members) if not m.passed)
            failure = f"member {bad} (u0={members[bad].u0:.6g}) failed"
    return FamilyResult(bounds=bounds, members=members,
                        ordering_ok=ordering_ok, passed=passed,
                        failure=failure)


# ----------------------------------------------------------------------------
# manufactured weights
# ----------------------------------------------------------------------------

def manufacture_weight(target, f, N, *, r_max=None, n=2000):
    """Reverse-engineer the weight that makes ``target`` an exact solution:

        K(r) = ((N-1)/r u')^{1/(N-1)} (u'' + (N-2)/r u') / f(u(r))

    tabulated on [0, r_max].  Feeding the table back into the solver with
    u0 = target(0) must recover the profile.
    """
    r_max = defaults.get("cert_r_max", r_max)
    du0 = float(target.derivative(0.0))
    if abs(du0) > 1e-12:
        raise DomainError(f"target must satisfy u'(0) = 0, got {du0:g}")
    # uniform grid plus geometric refinement where the weight may steepen
    uni = np.linspace(0.0, 0.96, n)
    rho = ((1.0 - r_max) / (1.0 - 0.96)) ** (1.0 / 256)
    geo = 1.0 - (1.0 - 0.96) * rho ** np.arange(1, 257)
    rr = np.unique(np.concatenate([uni, geo]))

    u = np.asarray(target(rr), dtype=float)
    du = np.asarray(target.derivative(rr), dtype=float)
    ddu = np.asarray(target.second_derivative(rr), dtype=float)
    if np.any(du[1:] <= 0) or np.any(ddu <= 0):
        raise DomainError("target must have u' > 0 on (0, r_max] and u'' > 0")
    fu = np.asarray(f(u), dtype=float)
    if np.any(fu == 0.0):
        raise DomainError("f vanishes along the target profile")
    vals = np.empty_like(rr)
    vals[0] = ((N - 1.0) * ddu[0]) ** (N / (N - 1.0)) / fu[0]
    r_pos = rr[1:]
    vals[1:] = ((N - 1.0) / r_pos * du[1:]) ** (1.0 / (N - 1.0)) \
        * (ddu[1:] + (N - 2.0) / r_pos * du[1:]) / fu[1:]
    return Tabulated(tuple(rr), tuple(vals))
