"""Scalar source and absorption laws with their blow-up functionals.

A forcing law ``f`` drives the ODE ``u' = lam * f(u)``.  Its blow-up functional

    Phi(r) = integral_r^inf ds / f(s)

linearizes the singularity: ``Phi(u(t)) = lam * (T - t)``.  An absorption law
``g`` enters elliptic problems; with ``G`` its primitive, the Keller-Osserman
functional

    Psi(delta) = integral_delta^inf ds / sqrt(2 G(s))

gives the universal boundary profile ``Psi^{-1}(dist)`` of large solutions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import InvalidLaw, KellerOssermanFails, NotSuperlinear, OutOfRange

QUAD_ABS_TOL = 1e-12
QUAD_REL_TOL = 1e-10
MAX_DOUBLINGS = 60
# geometric decay factor per doubling below which a tail counts as convergent
DOUBLING_DECAY = 0.9
INV_TOL = 1e-12

_SAMPLE_GRID = np.concatenate([[0.0], np.logspace(-6, 2, 200)])


def _as_float_or_array(x):
    arr = np.asarray(x, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _check_monotone(values: np.ndarray, what: str):
    if not np.all(np.isfinite(values[:-1])):
        raise InvalidLaw(f"{what} is not finite on the sample grid")
    finite = values[np.isfinite(values)]
    if np.any(finite < 0):
        raise InvalidLaw(f"{what} takes negative values")
    drops = np.diff(finite)
    if np.any(drops < -1e-12 * np.maximum(np.abs(finite[1:]), 1.0)):
        raise InvalidLaw(f"{what} is not nondecreasing")


# ---------------------------------------------------------------------------
# quadrature and inversion helpers


def tail_integral(integrand: Callable[[float], float], r: float) -> float:
    """Integral of ``integrand`` over ``[r, inf)``.

    For ``r >= 1`` the substitution ``s = r / (1 - v)`` maps the tail onto
    ``[0, 1)``.  Below 1 the substitution would crowd all the mass against
    ``v = 1``, so ``[r, 1]`` is integrated directly and the rest mapped from 1.
    """
    if r < 1.0:
        head, _ = integrate.quad(integrand, max(r, 0.0), 1.0, epsabs=QUAD_ABS_TOL,
                                 epsrel=QUAD_REL_TOL, limit=200)
        return head + tail_integral(integrand, 1.0)

    def mapped(v):
        s = r / (1.0 - v)
        return integrand(s) * r / (1.0 - v) ** 2

    val, _ = integrate.quad(mapped, 0.0, 1.0, epsabs=QUAD_ABS_TOL,
                            epsrel=QUAD_REL_TOL, limit=400)
    return val


def tail_converges(integrand: Callable[[float], float], r: float) -> bool:
    """Doubling test: the tail is convergent when the contributions of
    ``[2^(k-1) r0, 2^k r0]`` decay at least geometrically."""
    r0 = max(r, 1.0)
    increments = []
    total = 0.0
    for k in range(1, MAX_DOUBLINGS + 1):
        a, b = r0 * 2.0 ** (k - 1), r0 * 2.0 ** k
        inc, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-8, limit=100)
        total += inc
        if inc <= 1e-16 * total or inc < 1e-300:
            return True
        increments.append(inc)
    ratios = np.array(increments[-10:]) / np.array(increments[-11:-1])
    return float(np.median(ratios)) < DOUBLING_DECAY


def invert_decreasing(func: Callable[[float], float], dfunc: Callable[[float], float],
                      z: float, lower: float = 0.0, lower_value: float = math.inf,
                      what: str = "functional") -> float:
    """Solve ``func(x) = z`` for a strictly decreasing ``func`` on ``(lower, inf)``.

    Exponential bracketing, bisection down to a relative width of 1e-6, then a
    safeguarded Newton polish using the analytic derivative ``dfunc``.
    """
    if not (z > 0.0) or not math.isfinite(z):
        raise OutOfRange(f"{what}: target {z!r} outside (0, inf)")
    if math.isfinite(lower_value):
        if z > lower_value * (1.0 + INV_TOL):
            raise OutOfRange(f"{what}: target {z!r} exceeds range bound {lower_value!r}")
        if abs(z - lower_value) <= INV_TOL * lower_value:
            return lower

    width = 1.0
    if func(lower + width) > z:
        lo = lower + width
        while func(lower + 2.0 * width) > z:
            width *= 2.0
            lo = lower + width
            if width > 1e300:
                raise OutOfRange(f"{what}: could not bracket {z!r}")
        hi = lower + 2.0 * width
    else:
        hi = lower + width
        lo = lower
        while width > 1e-300:
            width *= 0.5
            if func(lower + width) > z:
                lo = lower + width
                break
            hi = lower + width

    while (hi - lo) > 1e-6 * max(abs(hi), 1e-300):
        mid = 0.5 * (lo + hi)
        if func(mid) > z:
            lo = mid
        else:
            hi = mid

    x = 0.5 * (lo + hi)
    for _ in range(60):
        resid = func(x) - z
        if abs(resid) <= INV_TOL * z:
            break
        slope = dfunc(x)
        if slope == 0.0 or not math.isfinite(slope):
            break
        step = resid / slope
        x_new = x - step
        if not (lo <= x_new <= hi):
            x_new = 0.5 * (lo + hi)
        if resid > 0:
            lo = max(lo, x)
        else:
            hi = min(hi, x)
        if abs(x_new - x) <= 1e-15 * max(abs(x), 1e-300):
            x = x_new
            break
        x = x_new
    return x


def _power_phi(p: float, base: float) -> float:
    denom = (p - 1.0) * base ** (p - 1.0)
    return math.inf if denom == 0.0 else 1.0 / denom


# ---------------------------------------------------------------------------
# forcing laws


@dataclass(frozen=True)
class ForcingLaw:
    """Source term ``lam * f(u)`` of the scalar ODE.

    Build with :meth:`power`, :meth:`exponential` or :meth:`custom`.
    """

    kind: str
    lam: float = 1.0
    p: float = 2.0
    k: float = 0.0
    func: Callable | None = field(default=None, compare=False, repr=False)
    deriv: Callable | None = field(default=None, compare=False, repr=False)
    phi_exact: Callable | None = field(default=None, compare=False, repr=False)
    phi_inv_exact: Callable | None = field(default=None, compare=False, repr=False)
    monotonicity_exponent: float | None = None

    def __post_init__(self):
        if self.kind not in ("power", "exponential", "custom"):
            raise InvalidLaw(f"unknown forcing kind {self.kind!r}", "forcing.kind")
        if not self.lam > 0:
            raise InvalidLaw("lambda must be positive", "forcing.lam")
        if self.kind == "power":
            if not self.p > 0:
                raise InvalidLaw("power exponent must be positive", "forcing.p")
            if self.k < 0:
                raise InvalidLaw("shift must be nonnegative", "forcing.k")
        if self.kind == "custom" and self.func is None:
            raise InvalidLaw("custom law needs a callable", "forcing.func")
        if self.monotonicity_exponent is not None and not self.monotonicity_exponent > 1:
            raise InvalidLaw("monotonicity exponent must exceed 1",
                             "forcing.monotonicity_exponent")
        values = np.array([float(self(s)) for s in _SAMPLE_GRID])
        _check_monotone(values, "forcing law")

    @classmethod
    def power(cls, p: float, k: float = 0.0, lam: float = 1.0,
              monotonicity_exponent: float | None = None) -> "ForcingLaw":
        return cls("power", lam=lam, p=p, k=k, monotonicity_exponent=monotonicity_exponent)

    @classmethod
    def exponential(cls, lam: float = 1.0) -> "ForcingLaw":
        return cls("exponential", lam=lam)

    @classmethod
    def custom(cls, func, lam: float = 1.0, deriv=None, phi=None, phi_inv=None,
               monotonicity_exponent=None) -> "ForcingLaw":
        return cls("custom", lam=lam, func=func, deriv=deriv, phi_exact=phi,
                   phi_inv_exact=phi_inv, monotonicity_exponent=monotonicity_exponent)

    def with_lambda(self, lam: float) -> "ForcingLaw":
        from dataclasses import replace
        return replace(self, lam=lam)

    # f and f'
    def __call__(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        if self.kind == "power":
            out = (self.k + u) ** self.p
        elif self.kind == "exponential":
            out = np.exp(u)
        else:
            out = np.vectorize(self.func, otypes=[float])(u) if u.ndim else self.func(float(u))
        return _as_float_or_array(out)

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "power":
            base = self.k + np.maximum(u, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(base > 0, self.p * base ** (self.p - 1.0),
                               self.p if self.p == 1 else (0.0 if self.p > 1 else np.inf))
        elif self.kind == "exponential":
            out = np.exp(np.maximum(u, 0.0))
        elif self.deriv is not None:
            out = np.vectorize(self.deriv, otypes=[float])(u)
        else:
            h = 1e-6 * (1.0 + np.abs(u))
            out = (np.asarray(self(u + h)) - np.asarray(self(np.maximum(u - h, 0.0)))) / (
                u + h - np.maximum(u - h, 0.0))
        return _as_float_or_array(out)

    @property
    def superlinear(self) -> bool:
        if self.kind == "power":
            return self.p > 1
        if self.kind == "exponential" or self.phi_exact is not None:
            return True
        return self._tail_ok

    @cached_property
    def _tail_ok(self) -> bool:
        return tail_converges(self._reciprocal, 0.0)

    def _reciprocal(self, s: float) -> float:
        # a user law that overflows contributes nothing to the tail
        try:
            with np.errstate(over="ignore"):
                value = float(self(s))
        except OverflowError:
            return 0.0
        return 1.0 / value

    @property
    def phi_at_zero(self) -> float:
        """Phi(0+); infinite when f(0) = 0."""
        if self.kind == "power":
            return _power_phi(self.p, self.k)
        if self.kind == "exponential":
            return 1.0
        if self(0.0) == 0.0:
            return math.inf
        return self.phi(0.0)

    def phi(self, r: float) -> float:
        if not self.superlinear:
            raise NotSuperlinear(f"integral of 1/f diverges (law {self.kind})", "forcing")
        if r < 0:
            raise OutOfRange("Phi needs r >= 0")
        if self.kind == "power":
            return _power_phi(self.p, self.k + r)
        if self.kind == "exponential":
            return math.exp(-r)
        if self.phi_exact is not None:
            return float(self.phi_exact(r))
        if r == 0.0 and self(0.0) == 0.0:
            return math.inf
        return tail_integral(self._reciprocal, r)

    def phi_inv(self, z: float) -> float:
        if not self.superlinear:
            raise NotSuperlinear(f"integral of 1/f diverges (law {self.kind})", "forcing")
        top = self.phi_at_zero
        if not (z > 0) or (math.isfinite(top) and z > top * (1 + INV_TOL)):
            raise OutOfRange(f"Phi^-1 target {z!r} outside (0, {top!r}]")
        if self.kind == "power":
            r = ((self.p - 1.0) * z) ** (-1.0 / (self.p - 1.0)) - self.k
            return max(r, 0.0)
        if self.kind == "exponential":
            return max(-math.log(z), 0.0)
        if self.phi_inv_exact is not None:
            return float(self.phi_inv_exact(z))
        return invert_decreasing(self.phi, lambda r: -1.0 / float(self(r)), z,
                                 lower=0.0, lower_value=top, what="Phi")


def phi(law: ForcingLaw, r: float) -> float:
    """Phi(r) = integral_r^inf ds/f(s)."""
    return law.phi(r)


def phi_inv(law: ForcingLaw, z: float) -> float:
    return law.phi_inv(z)


# ---------------------------------------------------------------------------
# absorption laws


def _sexp2s_primitive(s):
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 0.05
    big = np.where(small, 0.0, s)
    with np.errstate(over="ignore", invalid="ignore"):
        exact = np.where(big < 20.0,
                         (2.0 * big * np.exp(2.0 * big) - np.expm1(2.0 * big)) / 4.0,
                         np.exp(2.0 * big) * (2.0 * big - 1.0) / 4.0 + 0.25)
    # series  sum_n 2^n s^(n+2) / (n! (n+2))
    series = np.zeros_like(s)
    term_coef = 1.0
    for n in range(25):
        series = series + term_coef * s ** (n + 2) / (n + 2)
        term_coef *= 2.0 / (n + 1)
    return np.where(small, series, exact)


@dataclass(frozen=True)
class AbsorptionLaw:
    """Absorption ``g`` with primitive ``G(s) = integral_0^s g``."""

    kind: str
    m: float = 3.0
    func: Callable | None = field(default=None, compare=False, repr=False)
    primitive_func: Callable | None = field(default=None, compare=False, repr=False)
    deriv: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("power", "exp", "sexp2s", "custom"):
            raise InvalidLaw(f"unknown absorption kind {self.kind!r}", "absorption.kind")
        if self.kind == "power" and not self.m > 0:
            raise InvalidLaw("absorption exponent must be positive", "absorption.m")
        if self.kind == "custom" and self.func is None:
            raise InvalidLaw("custom law needs a callable", "absorption.func")
        values = np.array([float(self(s)) for s in _SAMPLE_GRID])
        _check_monotone(values, "absorption law")
        if abs(float(self.primitive(0.0))) > 1e-14:
            raise InvalidLaw("primitive must vanish at 0", "absorption.primitive")

    @classmethod
    def power(cls, m: float) -> "AbsorptionLaw":
        return cls("power", m=m)

    @classmethod
    def exp(cls) -> "AbsorptionLaw":
        return cls("exp")

    @classmethod
    def sexp2s(cls) -> "AbsorptionLaw":
        return cls("sexp2s")

    @classmethod
    def custom(cls, func, primitive=None, deriv=None) -> "AbsorptionLaw":
        return cls("custom", func=func, primitive_func=primitive, deriv=deriv)

    @classmethod
    def zero(cls) -> "AbsorptionLaw":
        return cls("custom", func=lambda s: 0.0, primitive_func=lambda s: 0.0 * s,
                   deriv=lambda s: 0.0 * s)

    @property
    def is_zero(self) -> bool:
        return self.kind == "custom" and float(np.max(self(_SAMPLE_GRID))) == 0.0

    def __call__(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        if self.kind == "power":
            out = u ** self.m
        elif self.kind == "exp":
            with np.errstate(over="ignore"):
                out = np.exp(u)
        elif self.kind == "sexp2s":
            with np.errstate(over="ignore"):
                out = u * np.exp(2.0 * u)
        else:
            out = np.vectorize(self.func, otypes=[float])(u) if u.ndim else self.func(float(u))
        return _as_float_or_array(out)

    def derivative(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        if self.kind == "power":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(u > 0, self.m * u ** (self.m - 1.0),
                               1.0 if self.m == 1 else (0.0 if self.m > 1 else np.inf))
        elif self.kind == "exp":
            out = np.exp(u)
        elif self.kind == "sexp2s":
            out = (1.0 + 2.0 * u) * np.exp(2.0 * u)
        elif self.deriv is not None:
            out = np.vectorize(self.deriv, otypes=[float])(u) if u.ndim else self.deriv(float(u))
        else:
            h = 1e-6 * (1.0 + u)
            lo = np.maximum(u - h, 0.0)
            out = (np.asarray(self(u + h)) - np.asarray(self(lo))) / (u + h - lo)
        return _as_float_or_array(out)

    def primitive(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        if self.kind == "power":
            out = s ** (self.m + 1.0) / (self.m + 1.0)
        elif self.kind == "exp":
            with np.errstate(over="ignore"):
                out = np.expm1(s)
        elif self.kind == "sexp2s":
            out = _sexp2s_primitive(s)
        elif self.primitive_func is not None:
            out = (np.vectorize(self.primitive_func, otypes=[float])(s) if s.ndim
                   else self.primitive_func(float(s)))
        else:
            def one(x):
                val, _ = integrate.quad(lambda t: float(self(t)), 0.0, x,
                                        epsabs=QUAD_ABS_TOL, epsrel=QUAD_REL_TOL, limit=200)
                return val
            out = np.vectorize(one, otypes=[float])(s) if s.ndim else one(float(s))
        return _as_float_or_array(out)

    def slope_bound(self, u):
        """sqrt(2 G(u)): the largest admissible radial slope at level u."""
        return _as_float_or_array(np.sqrt(2.0 * np.maximum(np.asarray(self.primitive(u)), 0.0)))

    @property
    def keller_osserman(self) -> bool:
        if self.kind == "power":
            return self.m > 1
        if self.kind in ("exp", "sexp2s"):
            return True
        return not self.is_zero and self._tail_ok

    @cached_property
    def _tail_ok(self) -> bool:
        return tail_converges(self._psi_integrand, 1.0)

    def _psi_integrand(self, s):
        with np.errstate(over="ignore"):
            G = float(self.primitive(s))
        if G <= 0:
            return math.inf
        return 0.0 if math.isinf(G) else 1.0 / math.sqrt(2.0 * G)

    @property
    def psi_at_zero(self) -> float:
        if self.kind == "exp":
            return math.pi / math.sqrt(2.0)
        return math.inf

    def psi(self, delta: float) -> float:
        if not self.keller_osserman:
            raise KellerOssermanFails(f"Keller-Osserman integral diverges (law {self.kind})",
                                      "absorption")
        if not delta > 0:
            raise OutOfRange("Psi needs delta > 0")
        if self.kind == "power":
            m = self.m
            return math.sqrt(2.0 * (m + 1.0)) / (m - 1.0) * delta ** (-(m - 1.0) / 2.0)
        if self.kind == "exp":
            # integral of (2(e^s - 1))^(-1/2) = sqrt(2) * arctan(1/sqrt(e^s - 1))
            return math.sqrt(2.0) * math.atan(1.0 / math.sqrt(math.expm1(delta)))
        return tail_integral(self._psi_integrand, delta)

    def psi_inv(self, z: float) -> float:
        if not self.keller_osserman:
            raise KellerOssermanFails(f"Keller-Osserman integral diverges (law {self.kind})",
                                      "absorption")
        if self.kind == "power":
            if not z > 0:
                raise OutOfRange(f"Psi^-1 target {z!r} must be positive")
            m = self.m
            return (z * (m - 1.0) / math.sqrt(2.0 * (m + 1.0))) ** (-2.0 / (m - 1.0))
        if self.kind == "exp":
            if not (0 < z < self.psi_at_zero):
                raise OutOfRange(f"Psi^-1 target {z!r} outside (0, pi/sqrt(2))")
            return -2.0 * math.log(math.sin(z / math.sqrt(2.0)))
        return invert_decreasing(self.psi, lambda s: -self._psi_integrand(s), z,
                                 lower=0.0, lower_value=self.psi_at_zero, what="Psi")


def psi(law: AbsorptionLaw, delta: float) -> float:
    return law.psi(delta)


def psi_inv(law: AbsorptionLaw, z: float) -> float:
    return law.psi_inv(z)


# ---------------------------------------------------------------------------
# truncation


@dataclass(frozen=True)
class TruncatedLaw:
    """``base(min(u, level))``: the law frozen above the knee."""

    base: ForcingLaw | AbsorptionLaw
    level: float

    def __post_init__(self):
        if not self.level > 0:
            raise InvalidLaw("truncation level must be positive", "control.knee")

    @property
    def lam(self) -> float:
        return getattr(self.base, "lam", 1.0)

    def __call__(self, u):
        return self.base(np.minimum(np.asarray(u, dtype=float), self.level))

    def derivative(self, u):
        u = np.asarray(u, dtype=float)
        out = np.where(u < self.level, self.base.derivative(np.minimum(u, self.level)), 0.0)
        return _as_float_or_array(out)

    def primitive(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        capped = np.minimum(s, self.level)
        out = (np.asarray(self.base.primitive(capped))
               + float(self.base(self.level)) * np.maximum(s - self.level, 0.0))
        return _as_float_or_array(out)

    def slope_bound(self, u):
        return _as_float_or_array(np.sqrt(2.0 * np.maximum(np.asarray(self.primitive(u)), 0.0)))

    @property
    def is_zero(self) -> bool:
        return getattr(self.base, "is_zero", False)


def truncate(law, M_eps: float) -> TruncatedLaw:
    return TruncatedLaw(law, M_eps)


# ---------------------------------------------------------------------------
# domination analysis


class Regime(str, Enum):
    STRONG = "StrongDomination"
    WEAK = "WeakDomination"
    NONE = "NoDomination"


@dataclass(frozen=True)
class DominationProbe:
    """Log-spaced probe windows: compact ``[tau_min, tau_split]`` and large
    ``[tau_split, tau_max]``."""

    tau_min: float = 1e-6
    tau_split: float = 1.0
    tau_max: float = 1e8
    n: int = 400

    def __post_init__(self):
        if not (0 < self.tau_min < self.tau_split < self.tau_max):
            raise OutOfRange("probe needs 0 < tau_min < tau_split < tau_max")


@dataclass(frozen=True)
class DominationReport:
    L_at_infinity: float
    L_near_zero: float
    L_star: float
    L_zero: float
    lambda_0: float
    regime: Regime
    slope: float


FLAT_SLOPE = 1e-3


def domination_ratio(f: ForcingLaw, g: AbsorptionLaw, tau):
    """f / sqrt(2G) with the convention x/0 = inf."""
    num = np.asarray(f(tau), dtype=float)
    den = np.sqrt(2.0 * np.maximum(np.asarray(g.primitive(tau), dtype=float), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)


def domination_report(f: ForcingLaw, g: AbsorptionLaw,
                      probe: DominationProbe | None = None) -> DominationReport:
    probe = probe or DominationProbe()
    half = probe.n // 2
    small = np.logspace(math.log10(probe.tau_min), math.log10(probe.tau_split), half)
    large = np.logspace(math.log10(probe.tau_split), math.log10(probe.tau_max), half)
    rho_small = domination_ratio(f, g, small)
    rho_large = domination_ratio(f, g, large)

    if np.all(np.isinf(rho_large)):
        slope = math.inf
    else:
        ok = np.isfinite(rho_large) & (rho_large > 0)
        slope = float(np.polyfit(np.log(large[ok]), np.log(rho_large[ok]), 1)[0])

    if slope > FLAT_SLOPE:
        regime, L_inf = Regime.STRONG, math.inf
    elif slope >= -FLAT_SLOPE:
        regime, L_inf = Regime.WEAK, float(np.min(rho_large))
    else:
        regime, L_inf = Regime.NONE, 0.0

    decade = small <= probe.tau_min * 10.0
    L_near_zero = float(np.min(rho_small[decade]))
    L_star = float(min(np.min(rho_small), np.min(rho_large)))
    L_zero = min(L_inf, L_star)
    lambda_0 = 0.0 if math.isinf(L_zero) else (math.inf if L_zero == 0 else 1.0 / L_zero)
    return DominationReport(L_inf, L_near_zero, L_star, L_zero, lambda_0, regime, slope)


# ---------------------------------------------------------------------------
# assumption probes


def superlinearity_gap(law: ForcingLaw, nu: float, zetas, exponent: float | None = None):
    """``nu * Phi^{-1}(nu^(a-1) zeta) - Phi^{-1}(zeta)`` on a grid of zeta.

    Nonnegative for ``nu > 1`` and nonpositive for ``nu < 1`` when f(s)/s^a is
    increasing; identically zero for pure powers with ``a = p``.
    """
    a = exponent if exponent is not None else law.monotonicity_exponent
    if a is None:
        if law.kind != "power":
            raise InvalidLaw("monotonicity exponent unknown", "forcing.monotonicity_exponent")
        a = law.p
    zetas = np.atleast_1d(np.asarray(zetas, dtype=float))
    return np.array([nu * law.phi_inv(nu ** (a - 1.0) * z) - law.phi_inv(z) for z in zetas])


def psi_ratio_probe(law: AbsorptionLaw, eta: float, s_grid) -> np.ndarray:
    """Psi(eta s) / Psi(s) on a grid; a diagnostic, not a certificate."""
    return np.array([law.psi(eta * s) / law.psi(s) for s in np.atleast_1d(s_grid)])


def g_over_s_increasing(law: AbsorptionLaw, s_grid) -> bool:
    s = np.asarray(s_grid, dtype=float)
    ratio = np.asarray(law(s)) / s
    return bool(np.all(np.diff(ratio) >= -1e-12 * np.abs(ratio[1:])))
