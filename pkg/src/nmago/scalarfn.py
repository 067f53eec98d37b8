"""Symbolic specifications of one-variable functions.

The problem data (nonlinearity f, weight K, boundary weight p, manufactured
targets) are all described by small closed-form families plus a tabulated
fallback.  Keeping them symbolic lets the rest of the package use exact
antiderivatives, derivatives and algebraic rescalings where they exist, and
fall back to quadrature only when they do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, FUndefinedError

_INF = math.inf


@dataclass(frozen=True)
class Domain:
    """A real interval, open or closed at either end."""

    lo: float = -_INF
    hi: float = _INF
    lo_open: bool = True
    hi_open: bool = True

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        lo_ok = x > self.lo if self.lo_open else x >= self.lo
        hi_ok = x < self.hi if self.hi_open else x <= self.hi
        return np.logical_and(lo_ok, hi_ok)

    def __str__(self):
        lb = "(" if self.lo_open else "["
        rb = ")" if self.hi_open else "]"
        return f"{lb}{self.lo:g}, {self.hi:g}{rb}"


def _check_domain(spec, x):
    ok = spec.domain.contains(x)
    if not np.all(ok):
        bad = np.atleast_1d(np.asarray(x, dtype=float))[~np.atleast_1d(ok)]
        raise DomainError(
            f"{spec.kind} spec evaluated at {float(bad[0]):g}, "
            f"outside domain {spec.domain}")


class ScalarFnSpec:
    """Base for all function kinds.  Subclasses are frozen dataclasses."""

    kind = "abstract"

    # -- evaluation ---------------------------------------------------------
    def __call__(self, x):
        _check_domain(self, x)
        return self._eval(np.asarray(x, dtype=float))

    def derivative(self, x):
        _check_domain(self, x)
        return self._deriv(np.asarray(x, dtype=float))

    def second_derivative(self, x):
        _check_domain(self, x)
        return self._deriv2(np.asarray(x, dtype=float))

    # -- calculus -----------------------------------------------------------
    def antiderivative_from_zero(self, tau):
        """F(tau) = integral of this function over (0, tau].

        Raises FUndefinedError when the integral diverges at 0.
        """
        raise NotImplementedError

    def log_antiderivative_from_zero(self, tau):
        """log F(tau), overflow-safe where a closed form permits it."""
        return math.log(self.antiderivative_from_zero(tau))

    def integral(self, lo, hi):
        """Definite integral over [lo, hi] via a closed-form antiderivative."""
        raise NotImplementedError

    @property
    def has_closed_integral(self):
        return True

    # -- rescalings used by the sub/super-solution pipelines -----------------
    def shrink_scale(self, eps):
        """The weight t -> eps * self(2 t)."""
        raise NotImplementedError

    def amplify(self, m):
        """The weight t -> m * self(t)."""
        raise NotImplementedError

    # -- metadata -------------------------------------------------------------
    @property
    def singularity(self):
        """Location of a pole, or None."""
        return None

    def argument_overflow_cap(self):
        """Largest argument this function maps to a representable float."""
        return _INF

    # -- serialization --------------------------------------------------------
    def to_json(self):
        raise NotImplementedError

    @staticmethod
    def from_json(obj, path="f"):
        return spec_from_json(obj, path)


def _require_positive(name, value):
    if not (value > 0):
        raise DomainError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class Constant(ScalarFnSpec):
    value: float
    domain: Domain = field(default_factory=Domain)

    kind = "constant"

    def _eval(self, x):
        return np.full_like(x, self.value, dtype=float)

    def _deriv(self, x):
        return np.zeros_like(x, dtype=float)

    _deriv2 = _deriv

    def antiderivative_from_zero(self, tau):
        return self.value * tau

    def log_antiderivative_from_zero(self, tau):
        return math.log(self.value) + math.log(tau)

    def integral(self, lo, hi):
        return self.value * (hi - lo)

    def shrink_scale(self, eps):
        _require_positive("eps", eps)
        return Constant(eps * self.value, _half_domain(self.domain))

    def amplify(self, m):
        _require_positive("M", m)
        return Constant(m * self.value, self.domain)

    def to_json(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class Affine(ScalarFnSpec):
    slope: float
    intercept: float
    domain: Domain = field(default_factory=Domain)

    kind = "affine"

    def _eval(self, x):
        return self.slope * x + self.intercept

    def _deriv(self, x):
        return np.full_like(x, self.slope, dtype=float)

    def _deriv2(self, x):
        return np.zeros_like(x, dtype=float)

    def antiderivative_from_zero(self, tau):
        return 0.5 * self.slope * tau * tau + self.intercept * tau

    def log_antiderivative_from_zero(self, tau):
        return math.log(tau) + math.log(0.5 * self.slope * tau + self.intercept)

    def integral(self, lo, hi):
        return 0.5 * self.slope * (hi * hi - lo * lo) + self.intercept * (hi - lo)

    def shrink_scale(self, eps):
        _require_positive("eps", eps)
        return Affine(2.0 * eps * self.slope, eps * self.intercept,
                      _half_domain(self.domain))

    def amplify(self, m):
        _require_positive("M", m)
        return Affine(m * self.slope, m * self.intercept, self.domain)

    def to_json(self):
        return {"kind": "affine", "slope": self.slope, "intercept": self.intercept}


@dataclass(frozen=True)
class Power(ScalarFnSpec):
    """scale * s**exponent + shift, with exponent > 0."""

    exponent: float
    scale: float = 1.0
    shift: float = 0.0
    domain: Domain = field(default_factory=lambda: Domain(0.0, _INF, lo_open=False))

    kind = "power"

    def __post_init__(self):
        _require_positive("exponent", self.exponent)

    def _eval(self, x):
        return self.scale * np.power(x, self.exponent) + self.shift

    def _deriv(self, x):
        return self.scale * self.exponent * np.power(x, self.exponent - 1.0)

    def _deriv2(self, x):
        e = self.exponent
        return self.scale * e * (e - 1.0) * np.power(x, e - 2.0)

    def antiderivative_from_zero(self, tau):
        e = self.exponent
        return self.scale * tau ** (e + 1.0) / (e + 1.0) + self.shift * tau

    def log_antiderivative_from_zero(self, tau):
        e = self.exponent
        # factor tau**(e+1) out so the log never overflows
        rest = self.scale / (e + 1.0) + self.shift * tau ** (-e)
        return (e + 1.0) * math.log(tau) + math.log(rest)

    def integral(self, lo, hi):
        e = self.exponent
        return (self.scale * (hi ** (e + 1.0) - lo ** (e + 1.0)) / (e + 1.0)
                + self.shift * (hi - lo))

    def shrink_scale(self, eps):
        _require_positive("eps", eps)
        return Power(self.exponent, eps * self.scale * 2.0 ** self.exponent,
                     eps * self.shift, _half_domain(self.domain))

    def amplify(self, m):
        _require_positive("M", m)
        return Power(self.exponent, m * self.scale, m * self.shift, self.domain)

    def to_json(self):
        return {"kind": "power", "exponent": self.exponent,
                "scale": self.scale, "shift": self.shift}


@dataclass(frozen=True)
class Exponential(ScalarFnSpec):
    """scale * exp(rate * s)."""

    scale: float = 1.0
    rate: float = 1.0
    domain: Domain = field(default_factory=Domain)

    kind = "exponential"

    def __post_init__(self):
        _require_positive("scale", self.scale)
        _require_positive("rate", self.rate)

    def _eval(self, x):
        return self.scale * np.exp(self.rate * x)

    def _deriv(self, x):
        return self.scale * self.rate * np.exp(self.rate * x)

    def _deriv2(self, x):
        return self.scale * self.rate * self.rate * np.exp(self.rate * x)

    def antiderivative_from_zero(self, tau):
        return self.scale * math.expm1(self.rate * tau) / self.rate

    def log_antiderivative_from_zero(self, tau):
        # log(scale (e^{rt} - 1)/r) = rt + log1p(-e^{-rt}) + log(scale/r)
        rt = self.rate * tau
        return rt + math.log1p(-math.exp(-rt)) + math.log(self.scale / self.rate)

    def integral(self, lo, hi):
        return self.scale * (math.exp(self.rate * hi) - math.exp(self.rate * lo)) / self.rate

    def shrink_scale(self, eps):
        _require_positive("eps", eps)
        return Exponential(eps * self.scale, 2.0 * self.rate, _half_domain(self.domain))

    def amplify(self, m):
        _require_positive("M", m)
        return Exponential(m * self.scale, self.rate, self.domain)

    def argument_overflow_cap(self):
        return (690.0 - math.log(max(self.scale, 1.0))) / self.rate

    def to_json(self):
        return {"kind": "exponential", "scale": self.scale, "rate": self.rate}


@dataclass(frozen=True)
class PowerSingular(ScalarFnSpec):
    """scale * s**(-gamma) when center is None, else scale * (center - s)**(-gamma).

    The first form is singular at 0 (boundary weights p); the second at
    ``center`` (weights K singular at the boundary, with center = 1).
    """

    gamma: float
    scale: float = 1.0
    center: float | None = None
    domain: Domain = None

    kind = "power_singular"

    def __post_init__(self):
        _require_positive("gamma", self.gamma)
        _require_positive("scale", self.scale)
        if self.domain is None:
            dom = (Domain(0.0, _INF) if self.center is None
                   else Domain(-_INF, self.center))
            object.__setattr__(self, "domain", dom)

    def _arg(self, x):
        return x if self.center is None else self.center - x

    def _eval(self, x):
        return self.scale * np.power(self._arg(x), -self.gamma)

    def _deriv(self, x):
        sgn = -1.0 if self.center is None else 1.0
        return sgn * self.scale * self.gamma * np.power(self._arg(x), -self.gamma - 1.0)

    def _deriv2(self, x):
        g = self.gamma
        return self.scale * g * (g + 1.0) * np.power(self._arg(x), -g - 2.0)

    def antiderivative_from_zero(self, tau):
        g, s = self.gamma, self.scale
        if self.center is None:
            if g >= 1.0:
                raise FUndefinedError(
                    f"F undefined: s**(-{g:g}) is not integrable at 0")
            return s * tau ** (1.0 - g) / (1.0 - g)
        c = self.center
        if tau >= c:
            raise DomainError(f"antiderivative evaluated at {tau:g} beyond pole {c:g}")
        if g == 1.0:
            return s * math.log(c / (c - tau))
        return s * ((c - tau) ** (1.0 - g) - c ** (1.0 - g)) / (g - 1.0)

    def integral(self, lo, hi):
        g, s = self.gamma, self.scale
        if self.center is None:
            if g == 1.0:
                return s * math.log(hi / lo)
            return s * (hi ** (1.0 - g) - lo ** (1.0 - g)) / (1.0 - g)
        c = self.center
        if g == 1.0:
            return s * math.log((c - lo) / (c - hi))
        return s * ((c - hi) ** (1.0 - g) - (c - lo) ** (1.0 - g)) / (g - 1.0)

    def shrink_scale(self, eps):
        _require_positive("eps", eps)
        new_scale = eps * self.scale * 2.0 ** (-self.gamma)
        if self.center is None:
            return PowerSingular(self.gamma, new_scale, None,
                                 _half_domain(self.domain))
        return PowerSingular(self.gamma, new_scale, self.center / 2.0,
                             _half_domain(self.domain))

    def amplify(self, m):
        _require_positive("M", m)
        return PowerSingular(self.gamma, m * self.scale, self.center, self.domain)

    @property
    def singularity(self):
        return 0.0 if self.center is None else self.center

    def to_json(self):
        return {"kind": "power_singular", "gamma": self.gamma,
                "scale": self.scale, "center": self.center}


@dataclass(frozen=True)
class Tabulated(ScalarFnSpec):
    """Monotone piecewise-cubic interpolation of (xs, ys) samples.

    The abscissae must be strictly increasing; PCHIP interpolation preserves
    the monotonicity of the ordinates, which is what the standing assumption
    on f requires.
    """

    xs: tuple
    ys: tuple
    domain: Domain = None

    kind = "tabulated"

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        ys = tuple(float(v) for v in self.ys)
        if len(xs) != len(ys):
            raise DomainError("tabulated spec needs equally many xs and ys")
        if len(xs) < 2:
            raise DomainError("tabulated spec needs at least two samples")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("tabulated abscissae must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if self.domain is None:
            object.__setattr__(
                self, "domain",
                Domain(xs[0], xs[-1], lo_open=False, hi_open=False))
        interp = PchipInterpolator(np.asarray(xs), np.asarray(ys), extrapolate=False)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_dinterp", interp.derivative())
        object.__setattr__(self, "_d2interp", interp.derivative(2))
        object.__setattr__(self, "_anti", interp.antiderivative())

    def _eval(self, x):
        return self._interp(x)

    def _deriv(self, x):
        return self._dinterp(x)

    def _deriv2(self, x):
        return self._d2interp(x)

    def antiderivative_from_zero(self, tau):
        # below the first sample the function is extended by its first value
        x0 = self.xs[0]
        head = self.ys[0] * min(tau, x0)
        if tau <= x0:
            return head
        return head + float(self._anti(min(tau, self.xs[-1])))

    @property
    def has_closed_integral(self):
        return False

    def integral(self, lo, hi):
        return float(self._anti(hi) - self._anti(lo))

    def shrink_scale(self, eps):
        _require_positive("eps", eps)
        return Tabulated(tuple(x / 2.0 for x in self.xs),
                         tuple(eps * y for y in self.ys))

    def amplify(self, m):
        _require_positive("M", m)
        return Tabulated(self.xs, tuple(m * y for y in self.ys))

    def to_json(self):
        return {"kind": "tabulated", "xs": list(self.xs), "ys": list(self.ys)}

    def __eq__(self, other):
        return (isinstance(other, Tabulated)
                and self.xs == other.xs and self.ys == other.ys)

    __hash__ = None


_KIND_FIELDS = {
    "constant": {"value"},
    "affine": {"slope", "intercept"},
    "power": {"exponent", "scale", "shift"},
    "exponential": {"scale", "rate"},
    "power_singular": {"gamma", "scale", "center"},
    "tabulated": {"xs", "ys"},
}


def spec_from_json(obj, path="f"):
    """Strictly parse a {"kind": ..., params...} mapping into a spec."""
    if not isinstance(obj, dict):
        raise DomainError(f"{path}: expected an object, got {type(obj).__name__}")
    if "kind" not in obj:
        raise DomainError(f"{path}: missing key 'kind'")
    kind = obj["kind"]
    if kind not in _KIND_FIELDS:
        raise DomainError(f"{path}.kind: unknown kind {kind!r}")
    allowed = _KIND_FIELDS[kind]
    for key in obj:
        if key != "kind" and key not in allowed:
            raise DomainError(f"{path}.{key}: unknown key for kind {kind!r}")
    params = {k: v for k, v in obj.items() if k != "kind"}
    builders = {
        "constant": lambda: Constant(float(params["value"])),
        "affine": lambda: Affine(float(params["slope"]), float(params["intercept"])),
        "power": lambda: Power(float(params["exponent"]),
                               float(params.get("scale", 1.0)),
                               float(params.get("shift", 0.0))),
        "exponential": lambda: Exponential(float(params.get("scale", 1.0)),
                                           float(params.get("rate", 1.0))),
        "power_singular": lambda: PowerSingular(
            float(params["gamma"]), float(params.get("scale", 1.0)),
            None if params.get("center") is None else float(params["center"])),
        "tabulated": lambda: Tabulated(tuple(params["xs"]), tuple(params["ys"])),
    }
    try:
        return builders[kind]()
    except KeyError as exc:
        raise DomainError(f"{path}: missing key {exc.args[0]!r} for kind {kind!r}")


def spec_from_string(text, path="f"):
    """Parse compact CLI syntax 'kind:param1,param2,...'.

    Examples: 'power:2', 'power:2,0.5,1', 'constant:8', 'exponential',
    'affine:1,1', 'powsing:3,1,1' (gamma, scale, center).
    """
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    args = [a for a in rest.split(",") if a.strip() != ""] if rest else []

    def num(i, default=None):
        if i < len(args):
            return float(args[i])
        if default is None:
            raise ConfigOrDomain(f"{path}: '{text}' is missing parameter {i + 1}")
        return default

    try:
        if name in ("constant", "const"):
            return Constant(num(0))
        if name in ("affine",):
            return Affine(num(0), num(1))
        if name in ("power", "pow"):
            return Power(num(0), num(1, 1.0), num(2, 0.0))
        if name in ("exponential", "exp"):
            return Exponential(num(0, 1.0), num(1, 1.0))
        if name in ("power_singular", "powsing"):
            center = num(2, math.nan)
            return PowerSingular(num(0), num(1, 1.0),
                                 None if math.isnan(center) else center)
    except ValueError as exc:
        raise ConfigOrDomain(f"{path}: cannot parse '{text}': {exc}")
    raise ConfigOrDomain(f"{path}: unknown function kind {name!r}")


class ConfigOrDomain(DomainError):
    """Raised on unparsable CLI function syntax."""


def _half_domain(dom):
    """Domain of t -> g(2t) given the domain of g."""
    return Domain(dom.lo / 2.0 if math.isfinite(dom.lo) else dom.lo,
                  dom.hi / 2.0 if math.isfinite(dom.hi) else dom.hi,
                  dom.lo_open, dom.hi_open)
