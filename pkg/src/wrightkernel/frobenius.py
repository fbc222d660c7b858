"""Generalized power series and Wright's generalized Bessel function.

A :class:`FrobeniusSeries` is a truncated sum ``sum_k c_k x**(rho + k*delta)``
with exactly stored exponents.  Every special function used by the kernel
(the Wright function, the Meijer-G realizations f~ and g~, the families
phi_i and psi_i) is built as one of these and evaluated through the
accelerated power-sum kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy import special

from . import _accel
from .errors import DomainError, NonConvergent

Exponent = Union[Fraction, float]

MAX_TERMS = 400
DEFAULT_TOL = 1e-17


def as_exponent(value) -> Exponent:
    """Return ``value`` as an exact Fraction when it is a short rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    f = float(value)
    if not math.isfinite(f):
        raise DomainError(f"non-finite exponent {value!r}")
    fr = Fraction(f).limit_denominator(10_000)
    return fr if float(fr) == f else f


def reciprocal_gamma(z):
    """1/Gamma(z); exactly zero at the poles 0, -1, -2, ..."""
    return special.rgamma(z)


@dataclass(frozen=True, eq=False)
class FrobeniusSeries:
    """Truncated generalized power series ``sum_k c_k x**(rho + k*delta)``."""

    rho: Exponent
    delta: Exponent
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "rho", as_exponent(self.rho))
        object.__setattr__(self, "delta", as_exponent(self.delta))
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")
        c = np.array(self.coeffs, dtype=np.float64).reshape(-1)
        if c.size == 0:
            raise DomainError("a series needs at least one coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @cached_property
    def exponents(self) -> np.ndarray:
        # exact rational exponents round once, so a zero exponent stays 0.0
        e = np.array([float(self.rho + k * self.delta) for k in range(self.coeffs.size)])
        e.setflags(write=False)
        return e

    def leading_exponent(self) -> float:
        nz = np.flatnonzero(self.coeffs)
        return float(self.exponents[nz[0]]) if nz.size else math.inf

    def __call__(self, x):
        return eval_series(self, x)

    def scale(self, factor: float) -> "FrobeniusSeries":
        return FrobeniusSeries(self.rho, self.delta, self.coeffs * factor)

    def shift(self, r) -> "FrobeniusSeries":
        """Multiply by ``x**r``."""
        return FrobeniusSeries(self.rho + as_exponent(r), self.delta, self.coeffs)

    def substitute(self, power, scale: float = 1.0) -> "FrobeniusSeries":
        """The series of ``x -> S(scale * x**power)``."""
        power = as_exponent(power)
        factors = np.power(float(scale), self.exponents) if scale != 1.0 else 1.0
        return FrobeniusSeries(self.rho * power, self.delta * power, self.coeffs * factors)

    def weighted(self, weights: Callable[[np.ndarray], np.ndarray]) -> "FrobeniusSeries":
        """Replace ``c_k`` by ``c_k * weights(exponent_k)``."""
        return FrobeniusSeries(self.rho, self.delta, self.coeffs * weights(self.exponents))

    def tail_bound(self, x: float) -> float:
        """Magnitude of the last retained term at ``x``; the truncation error scale."""
        return abs(self.coeffs[-1]) * float(x) ** float(self.exponents[-1])


def delta_pow(series: FrobeniusSeries, j: int) -> FrobeniusSeries:
    """Apply ``(x d/dx)**j`` termwise."""
    if j < 0:
        raise DomainError("delta_pow needs j >= 0")
    if j == 0:
        return series
    return series.weighted(lambda e: e**j)


def eval_series(series: FrobeniusSeries, x):
    """Evaluate a series at scalar or array ``x >= 0``."""
    arr = np.asarray(x, dtype=np.float64)
    flat = arr.reshape(-1)
    if np.any(flat < 0):
        raise DomainError("series evaluated at negative x")
    if np.any(flat == 0) and series.leading_exponent() < 0:
        raise DomainError("series with negative leading exponent evaluated at x = 0")
    out = _accel.powsum(series.coeffs, series.exponents, flat)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def wright_coeffs(a: float, b: float, nterms: int) -> np.ndarray:
    """Coefficients ``(-1)**j / (j! Gamma(a + b j))`` for ``j < nterms``."""
    a, b = float(a), float(b)
    j = np.arange(nterms, dtype=np.float64)
    sign = np.where(j % 2 == 0, 1.0, -1.0)
    return sign * reciprocal_gamma(j + 1.0) * reciprocal_gamma(a + b * j)


def _truncation_index(coeffs: np.ndarray, x_max: float, tol: float, weight_power: int,
                      b: float = 0.0) -> int | None:
    """Smallest index past the peak where two consecutive terms fall below tol/100."""
    j = np.arange(coeffs.size, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logc = np.log(np.abs(coeffs))
    if x_max > 0:
        mags = logc + j * math.log(x_max) + weight_power * np.log1p(j)
    else:
        mags = np.where(j == 0, logc, -np.inf)
    thresh = math.log(tol * 1e-2)
    # terms x^j / (j! Gamma(a + b j)) peak near j ~ x^(1/(1+b))
    peak = x_max ** (1.0 / (1.0 + min(float(b), 0.0))) if x_max > 0 else 0.0
    start = max(2, int(math.ceil(min(peak, float(coeffs.size)))) + 1)
    for k in range(start, coeffs.size):
        if mags[k] < thresh and mags[k - 1] < thresh:
            return k
    return None


def wright_series(a: float, b: float, x_max: float, tol: float = DEFAULT_TOL,
                  weight_power: int = 0, max_terms: int = MAX_TERMS) -> FrobeniusSeries:
    """Series of ``J_{a,b}(x)`` truncated for accuracy ``tol`` on ``[0, x_max]``.

    ``weight_power`` accounts for later ``(x d/dx)**p`` weights, so the
    retained tail stays below ``tol`` after differentiation.
    """
    if not b > -1:
        raise DomainError(f"Wright function needs b > -1, got {b}")
    x_max = float(abs(x_max))
    coeffs = wright_coeffs(a, b, max_terms + 1)
    k = _truncation_index(coeffs, x_max, tol, weight_power, float(b))
    if k is None:
        raise NonConvergent(f"J_{{{a},{b}}} series not converged at x={x_max} within {max_terms} terms")
    return FrobeniusSeries(0, 1, coeffs[: k + 1])


def wright_bessel(a: float, b: float, x: float, tol: float = 1e-15,
                  max_terms: int = MAX_TERMS) -> float:
    """Wright's generalized Bessel function ``sum_j (-x)**j / (j! Gamma(a + b j))``."""
    if not b > -1:
        raise DomainError(f"Wright function needs b > -1, got {b}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    x = float(x)
    if x < 0:
        raise DomainError("wright_bessel is defined here for x >= 0")
    if x == 0:
        return float(reciprocal_gamma(a))
    peak = x ** (1.0 / (1.0 + min(float(b), 0.0)))
    total = 0.0
    prev = math.inf
    stop = tol * 1e-2
    for j in range(max_terms + 1):
        term = (-x) ** j * float(reciprocal_gamma(j + 1.0)) * float(reciprocal_gamma(a + b * j))
        total += term
        if j >= max(2, peak) and abs(term) < stop and abs(prev) < stop:
            return total
        prev = term
    raise NonConvergent(f"J_{{{a},{b}}}({x}) not converged within {max_terms} terms")


def validate_wright_ode(a: float, m: int, n: int, x: float,
                        series: FrobeniusSeries | None = None) -> float:
    """Residual of the order-(m+n) equation satisfied by ``J_{a, m/n}`` at ``x``.

    The operator is ``prod_j (D/n - j/n) prod_i (D/n - 1 + (a+i)/m)`` with
    ``D = x d/dx``; it must reproduce ``(-1)**n x**n / (m**m n**n)`` times the
    function.  Pass ``series`` to test a perturbed or foreign series.
    """
    if math.gcd(m, n) != 1:
        raise DomainError("validate_wright_ode needs gcd(m, n) = 1")
    if x <= 0:
        raise DomainError("validate_wright_ode needs x > 0")
    if series is None:
        series = wright_series(a, Fraction(m, n), x, weight_power=m + n)

    def op(e):
        out = np.ones_like(e)
        for j in range(n):
            out = out * (e / n - j / n)
        for i in range(m):
            out = out * (e / n - 1.0 + (a + i) / m)
        return out

    lhs = series.weighted(op)
    rhs = series.shift(n).scale((-1) ** n / (m**m * n**n))
    return float(lhs(x) - rhs(x))
