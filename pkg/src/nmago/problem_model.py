"""Problem specifications, the radial operator, and assumption validation.

The equation under study prescribes, on the unit ball, the (N-1)-th root of
det(Laplacian(z) I - Hessian(z)) in terms of a radial weight K and a
nonlinearity f of the unknown.  For radial profiles the operator collapses to
a product of the two eigenvalue families of that matrix, which is what
``eval_radial_operator`` computes; ``full_hessian_oracle`` rebuilds the full
matrix and serves as an independent check of the product formula.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import defaults
from .errors import ConvexityLossError, DomainError
from .scalarfn import ScalarFnSpec, spec_from_json


@dataclass(frozen=True)
class ProblemSpec:
    """Dimension, nonlinearity and weight: the data of one problem."""

    dimension: int
    f: ScalarFnSpec
    K: ScalarFnSpec

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.dimension!r}")
        object.__setattr__(self, "dimension", int(self.dimension))

    def to_json(self):
        return {"dimension": self.dimension,
                "f": self.f.to_json(),
                "K": self.K.to_json()}

    @staticmethod
    def from_json(obj, path="problem"):
        if not isinstance(obj, dict):
            raise DomainError(f"{path}: expected an object")
        allowed = {"dimension", "f", "K"}
        for key in obj:
            if key not in allowed:
                raise DomainError(f"{path}.{key}: unknown key")
        for key in allowed:
            if key not in obj:
                raise DomainError(f"{path}: missing key {key!r}")
        return ProblemSpec(obj["dimension"],
                           spec_from_json(obj["f"], f"{path}.f"),
                           spec_from_json(obj["K"], f"{path}.K"))

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass
class ResidualReport:
    """Sampled values of a differential (in)equality: lhs vs rhs per radius."""

    radii: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.lhs = np.asarray(self.lhs, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        if not (len(self.radii) == len(self.lhs) == len(self.rhs)):
            raise DomainError("residual report arrays must have equal length")
        if len(self.radii) > 1 and np.any(np.diff(self.radii) <= 0):
            raise DomainError("residual report radii must be strictly increasing")

    @property
    def margins(self):
        return self.lhs - self.rhs

    @property
    def max_abs_margin(self):
        return float(np.max(np.abs(self.margins))) if len(self.radii) else 0.0

    @property
    def uniform_sign(self):
        m = self.margins
        return bool(np.all(m <= 0.0) or np.all(m >= 0.0))


def eval_radial_operator(N, dz, ddz, r, root=False):
    """det(Laplacian(z) I - Hessian(z)) for the radial profile with
    first/second derivatives ``dz``/``ddz`` at radius ``r``.

    For r > 0 this is ((N-1)/r dz) * (ddz + (N-2)/r dz)**(N-1); at r = 0 the
    limit ((N-1) ddz)**N applies and ``dz`` is ignored.  With ``root=True``
    the (N-1)-th root of the determinant is returned instead; a negative
    determinant then signals loss of (N-1)-convexity.
    """
    if N < 2 or int(N) != N:
        raise DomainError(f"N must be an integer >= 2, got {N!r}")
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r!r}")
    if r == 0.0:
        det = ((N - 1) * ddz) ** N
    else:
        det = (N - 1) / r * dz * (ddz + (N - 2) / r * dz) ** (N - 1)
    if not root:
        return det
    if det < 0.0:
        raise ConvexityLossError(
            f"negative determinant {det:g} at r={r:g}: profile is not (N-1)-convex")
    return det ** (1.0 / (N - 1))


def full_hessian_oracle(N, dz_fn, ddz_fn, x):
    """Assemble Laplacian(z) I - Hessian(z) at the point ``x`` from the radial
    profile derivatives and return its determinant by dense elimination.

    The Hessian of z(x) = zeta(|x|) is ddz * P + (dz/r) * (I - P) with
    P the projector onto x.  Refuses x = 0; use the r = 0 branch of
    eval_radial_operator there.
    """
    x = np.asarray(x, dtype=float)
    if len(x) != N:
        raise DomainError(f"point has {len(x)} coordinates, expected N={N}")
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise DomainError("oracle undefined at the origin; use the r=0 limit formula")
    xhat = x / r
    proj = np.outer(xhat, xhat)
    dz = float(dz_fn(r))
    ddz = float(ddz_fn(r))
    hess = ddz * proj + dz / r * (np.eye(N) - proj)
    lap = float(np.trace(hess))
    return float(np.linalg.det(lap * np.eye(N) - hess))


def eval_pde_residual(spec, u, du, ddu, r):
    """Residual of the radial equation at one point:

        ((N-1)/r du)**(1/(N-1)) (ddu + (N-2)/r du) - K(r) f(u)
    """
    N = spec.dimension
    if not (0.0 < r < 1.0):
        raise DomainError(f"radius must lie in (0, 1), got {r!r}")
    if du <= 0.0:
        raise ConvexityLossError(f"u'({r:g}) = {du:g} <= 0: radial convexity lost")
    if u <= 0.0:
        raise DomainError(f"u({r:g}) = {u:g} is outside the domain of f")
    lhs = ((N - 1) / r * du) ** (1.0 / (N - 1)) * (ddu + (N - 2) / r * du)
    return lhs - float(spec.K(r)) * float(spec.f(u))


@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class AssumptionReport:
    checks: list
    f_grid: np.ndarray
    k_grid: np.ndarray
    lipschitz: float | None
    notes: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def lines(self):
        out = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}"
               + (f"  ({c.detail})" if c.detail else "") for c in self.checks]
        out += [f"note  {n}" for n in self.notes]
        return out


def validate_assumptions(spec, n_samples=None):
    """Diagnostic sweep of the standing assumptions: K positive and finite on
    [0, 1); f positive, nondecreasing, locally Lipschitz on (0, inf).

    Reports failures instead of raising; never mutates the spec.
    """
    n_f = defaults.get("f_samples", n_samples)
    n_k = 4 * n_f if n_samples is not None else defaults.DEFAULTS["k_samples"]
    if n_f < 2:
        raise DomainError("n_samples must be >= 2")
    checks, notes = [], []

    # f on a log-spaced grid clipped to its domain
    lo = max(defaults.DEFAULTS["f_grid_lo"], _inner_lo(spec.f))
    hi = min(defaults.DEFAULTS["f_grid_hi"], _inner_hi(spec.f))
    f_grid = np.geomspace(lo, hi, n_f)
    lipschitz = None
    try:
        f_vals = np.asarray(spec.f(f_grid), dtype=float)
        finite = np.all(np.isfinite(f_vals))
        checks.append(AssumptionCheck("f finite on sampled grid", bool(finite)))
        checks.append(AssumptionCheck(
            "f positive on sampled grid", bool(finite and np.all(f_vals > 0)),
            "" if np.all(f_vals > 0) else f"min f = {f_vals.min():g}"))
        diffs = np.diff(f_vals)
        mono = bool(np.all(diffs >= -1e-14 * np.maximum(np.abs(f_vals[:-1]), 1.0)))
        checks.append(AssumptionCheck("f nondecreasing", mono,
                                      "" if mono else "decreasing bracket found"))
        slopes = np.abs(diffs) / np.diff(f_grid)
        lipschitz = float(np.max(slopes))
        checks.append(AssumptionCheck(
            "f locally Lipschitz (finite slope estimate)",
            bool(np.isfinite(lipschitz)), f"max slope {lipschitz:.6g}"))
    except DomainError as exc:
        checks.append(AssumptionCheck("f evaluable on sampled grid", False, str(exc)))

    # K on a uniform grid of [0, 1 - margin]
    k_hi = min(1.0 - defaults.DEFAULTS["k_grid_margin"], _inner_hi(spec.K))
    k_lo = max(0.0, _inner_lo(spec.K, closed_ok=True))
    k_grid = np.linspace(k_lo, k_hi, n_k)
    try:
        k_vals = np.asarray(spec.K(k_grid), dtype=float)
        checks.append(AssumptionCheck(
            "K positive on sampled grid", bool(np.all(k_vals > 0)),
            "" if np.all(k_vals > 0) else f"min K = {k_vals.min():g}"))
        checks.append(AssumptionCheck(
            "K finite on [0, 1)", bool(np.all(np.isfinite(k_vals)))))
    except DomainError as exc:
        checks.append(AssumptionCheck("K evaluable on [0, 1)", False, str(exc)))

    sing = spec.K.singularity
    if sing is not None:
        notes.append(f"K has a singularity at {sing:g}"
                     + (" (permitted: on the boundary)" if sing >= 1.0 else ""))
    if k_lo > 0.0 or k_hi < 1.0 - defaults.DEFAULTS["k_grid_margin"]:
        notes.append(f"K sampled on [{k_lo:g}, {k_hi:g}] due to its domain")

    return AssumptionReport(checks, f_grid, k_grid, lipschitz, notes)


def _inner_lo(fn, closed_ok=False):
    lo = fn.domain.lo
    if not math.isfinite(lo):
        return 1e-300
    if fn.domain.lo_open or not closed_ok:
        return lo + max(1e-12, abs(lo) * 1e-12) if fn.domain.lo_open else lo
    return lo


def _inner_hi(fn):
    hi = fn.domain.hi
    if not math.isfinite(hi):
        return 1e300
    return hi - max(1e-12, abs(hi) * 1e-12) if fn.domain.hi_open else hi
