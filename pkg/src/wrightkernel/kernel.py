"""Wright's generalized Bessel kernel and its integrable structure.

Three independent evaluations of ``K^(alpha, theta)(x, y)`` live here:

* :func:`kernel_series` sums the double power series termwise;
* :func:`kernel_integral` integrates a product of two Wright functions
  over ``u in (0, 1)`` by adaptive Gauss-Legendre quadrature;
* :func:`kernel_integrable` evaluates the bilinear concomitant divided by
  ``x**m - y**m`` (rational ``theta = m/n`` only).

The scaled kernel ``K~`` and its factor families ``phi_i``, ``psi_i`` are
built as Frobenius series from the same Wright coefficients.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _accel
from .errors import DomainError, InvalidParameters, NearDiagonal, NonConvergent, QuadratureFailure
from .frobenius import Exponent, FrobeniusSeries, as_exponent, delta_pow, wright_series

DIAG_GUARD = 1e-6


@dataclass(frozen=True)
class KernelParams:
    """Kernel parameters ``alpha`` and ``theta = m/n`` with ``gcd(m, n) = 1``."""

    alpha: Exponent
    m: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_exponent(self.alpha))
        for name in ("m", "n"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidParameters(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if math.gcd(self.m, self.n) != 1:
            raise InvalidParameters(f"m and n must be coprime, got m={self.m}, n={self.n}")
        if not self.alpha > -1:
            raise InvalidParameters(f"alpha must exceed -1, got {float(self.alpha)}")

    @property
    def theta(self) -> float:
        return self.m / self.n

    @property
    def size(self) -> int:
        """Number of factor functions, ``m + n``."""
        return self.m + self.n

    @property
    def integrable_bound(self) -> Fraction:
        return Fraction(self.m - 1) - Fraction(self.m, self.n)

    @property
    def is_integrable(self) -> bool:
        return self.alpha > self.integrable_bound

    def require_integrable(self) -> None:
        if not self.is_integrable:
            raise InvalidParameters(
                f"alpha must exceed m-1-m/n = {float(self.integrable_bound):g} "
                f"(got alpha={float(self.alpha):g}, m={self.m}, n={self.n})"
            )

    @property
    def scale(self) -> float:
        """``m n**(n/m)``: maps the scaled variable to the kernel variable."""
        return self.m * self.n ** (self.n / self.m)

    def to_scaled(self, s):
        """Gap-probability variable ``s`` to the scaled endpoint ``s**m / (m**m n**n)``."""
        return np.asarray(s, dtype=float) ** self.m / (self.m**self.m * self.n**self.n)


@dataclass(frozen=True)
class ConcomitantCoeffs:
    """Exponents ``nu_0..nu_{m+n-1}`` and coefficients ``b_0..b_{m+n-1}``.

    ``sum_i b_i x**i == prod_{i>=1} (x - nu_i)``; ``b_{-1}`` is 0.
    """

    nu: tuple
    b: tuple
    b_minus_one: float = 0.0

    @property
    def b_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.b])

    def b_at(self, i: int) -> float:
        if i == -1:
            return self.b_minus_one
        return float(self.b[i])


def nu_vector(params: KernelParams) -> tuple:
    m, n, a = params.m, params.n, params.alpha
    nu = [Fraction(0)] + [Fraction(i, n) for i in range(1, n)]
    nu += [1 - a / m - Fraction(i - n + 1, m) for i in range(n, m + n)]
    if isinstance(a, float):
        nu = [float(v) for v in nu]
    return tuple(nu)


def b_coeffs(nu) -> ConcomitantCoeffs:
    """Expand ``prod_{i>=1} (x - nu_i)`` into ascending monomial coefficients."""
    poly = [Fraction(1) if not isinstance(nu[0], float) else 1.0]
    for r in nu[1:]:
        new = [0 * poly[0]] * (len(poly) + 1)
        for k, c in enumerate(poly):
            new[k + 1] += c
            new[k] -= r * c
        poly = new
    return ConcomitantCoeffs(nu=tuple(nu), b=tuple(poly))


@lru_cache(maxsize=64)
def concomitant_coeffs(params: KernelParams) -> ConcomitantCoeffs:
    return b_coeffs(nu_vector(params))


# ---------------------------------------------------------------------------
# Frobenius series for the factor functions


def _bucket(x_max: float) -> float:
    x_max = float(x_max)
    if not math.isfinite(x_max) or x_max < 0:
        raise DomainError(f"bad evaluation range {x_max!r}")
    return max(1.0, 2.0 ** math.ceil(math.log2(max(x_max, 1e-300))))


@lru_cache(maxsize=256)
def _wright_F(params: KernelParams, x_max: float) -> FrobeniusSeries:
    m, n, a = params.m, params.n, params.alpha
    J = wright_series((a + 1) * n / m, Fraction(n, m), x_max, weight_power=params.size + 2)
    return J.shift(a + 1 - m)


@lru_cache(maxsize=256)
def _wright_G(params: KernelParams, y_max: float) -> FrobeniusSeries:
    m, n, a = params.m, params.n, params.alpha
    J = wright_series(a + 1, Fraction(m, n), y_max ** (m / n), weight_power=params.size + 2)
    return J.substitute(Fraction(m, n))


def wright_F_series(params: KernelParams, x_max: float) -> FrobeniusSeries:
    """``x**(alpha+1-m) J_{(alpha+1)n/m, n/m}(x)``, the x-side argument of the concomitant."""
    return _wright_F(params, _bucket(x_max))


def wright_G_series(params: KernelParams, y_max: float) -> FrobeniusSeries:
    """``J_{alpha+1, m/n}(y**(m/n))``, the y-side argument of the concomitant."""
    return _wright_G(params, _bucket(y_max))


def f_series(params: KernelParams, x_max: float) -> FrobeniusSeries:
    """``f(x) = x**(alpha+1-m) J_{(alpha+1)n/m, n/m}(x) / m``."""
    return wright_F_series(params, x_max).scale(1.0 / params.m)


def g_series(params: KernelParams, y_max: float) -> FrobeniusSeries:
    """``g(y) = (m/n) J_{alpha+1, m/n}(y**(m/n))``."""
    return wright_G_series(params, y_max).scale(params.m / params.n)


def _meijer_constants(params: KernelParams) -> tuple[float, float]:
    # f = C_f G^{m,0}(x^m/(m^m n^n)),  g = C_g G^{n,0}(y^m/(m^m n^n))
    m, n, a = params.m, params.n, float(params.alpha)
    cf = (2 * math.pi) ** ((n - m) / 2) * m ** (0.5 + a - m) * n ** (0.5 - n)
    cg = (2 * math.pi) ** ((m - n) / 2) * m ** (0.5 - a) * n ** (-0.5)
    return cf, cg


@lru_cache(maxsize=256)
def _ftilde(params: KernelParams, x_max: float) -> FrobeniusSeries:
    cf, _ = _meijer_constants(params)
    c = params.scale
    f = f_series(params, c * x_max ** (1.0 / params.m))
    return f.substitute(Fraction(1, params.m), c).scale(1.0 / cf)


@lru_cache(maxsize=256)
def _gtilde(params: KernelParams, y_max: float) -> FrobeniusSeries:
    _, cg = _meijer_constants(params)
    c = params.scale
    g = g_series(params, c * y_max ** (1.0 / params.m))
    return g.substitute(Fraction(1, params.m), c).scale(1.0 / cg)


def ftilde_series(params: KernelParams, x_max: float) -> FrobeniusSeries:
    """Series of the Meijer-G function ``G^{m,0}_{0,m+n}(-nu_{m+n-1},...,-nu_1, nu_0 | x)``."""
    return _ftilde(params, _bucket(x_max))


def gtilde_series(params: KernelParams, y_max: float) -> FrobeniusSeries:
    """Series of the Meijer-G function ``G^{n,0}_{0,m+n}(nu_0, ..., nu_{m+n-1} | y)``."""
    return _gtilde(params, _bucket(y_max))


def _check_index(params: KernelParams, i: int) -> None:
    if not 0 <= i < params.size:
        raise DomainError(f"index {i} outside 0..{params.size - 1}")


def phi_series(params: KernelParams, i: int, x_max: float) -> FrobeniusSeries:
    _check_index(params, i)
    sign = (-1) ** (params.n + 1 - i)
    return delta_pow(ftilde_series(params, x_max), i).scale(sign)


def psi_series(params: KernelParams, i: int, y_max: float,
               coeffs: ConcomitantCoeffs | None = None) -> FrobeniusSeries:
    _check_index(params, i)
    b = (coeffs or concomitant_coeffs(params)).b_float
    weights = b[i:]

    def poly(e):
        out = np.zeros_like(e)
        for j, bj in enumerate(weights):
            out = out + bj * e**j
        return out

    return gtilde_series(params, y_max).weighted(poly)


def _max(x) -> float:
    return float(np.max(np.asarray(x, dtype=float))) if np.size(x) else 0.0


def phi(params: KernelParams, i: int, x):
    """``phi_i(x) = (-1)**(n+1-i) (x d/dx)**i f~(x)``."""
    return phi_series(params, i, _max(x))(x)


def psi(params: KernelParams, i: int, y):
    """``psi_i(y) = sum_j b_{i+j} (y d/dy)**j g~(y)``."""
    return psi_series(params, i, _max(y))(y)


# ---------------------------------------------------------------------------
# kernel representations


def _scalar_pair(x, y) -> tuple[float, float]:
    return float(x), float(y)


def kernel_series_matrix(params: KernelParams, xs, ys) -> np.ndarray:
    """Double-series kernel on the grid ``xs x ys``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if np.any(xs < 0) or np.any(ys < 0):
        raise DomainError("kernel_series needs x, y >= 0")
    if np.any(xs == 0) and params.alpha < 0:
        raise DomainError("kernel_series at x = 0 needs alpha >= 0")
    a, th = params.alpha, Fraction(params.m, params.n)
    # x^alpha J_{(alpha+1)/theta, 1/theta}(x) and J_{alpha+1, theta}(y^theta)
    X = wright_series((a + 1) / th, 1 / th, _bucket(_max(xs))).shift(a)
    Y = wright_series(a + 1, th, _bucket(_max(ys)) ** float(th)).substitute(th)
    return float(th) * _accel.bilinear_series(X.coeffs, X.exponents, Y.coeffs, Y.exponents, 1.0, xs, ys)


def kernel_series(params: KernelParams, x: float, y: float, tol: float = 1e-14) -> float:
    """``K(x, y)`` from the double series, both indices truncated adaptively."""
    x, y = _scalar_pair(x, y)
    return float(kernel_series_matrix(params, [x], [y])[0, 0])


def _smoothing_power(params: KernelParams) -> float:
    """Power p for u = t**p that makes the u-integrand a series in integer powers of t."""
    a1 = params.alpha + 1
    if isinstance(a1, Fraction) and a1.denominator <= 12:
        return float(math.lcm(params.n, a1.denominator))
    return params.n * max(1.0, math.ceil(1.0 / float(a1)))


def adaptive_gauss_legendre(func, a: float, b: float, tol: float, order: int = 20,
                            max_intervals: int = 500) -> float:
    """Globally adaptive Gauss-Legendre quadrature of a vectorized ``func``.

    Each panel is estimated with ``order`` and ``2*order`` points; the panel
    with the largest disagreement is bisected until the summed estimate
    drops below ``tol``.
    """
    x1, w1 = np.polynomial.legendre.leggauss(order)
    x2, w2 = np.polynomial.legendre.leggauss(2 * order)

    def panel(lo, hi):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        coarse = half * np.dot(w1, func(mid + half * x1))
        fine = half * np.dot(w2, func(mid + half * x2))
        return fine, abs(fine - coarse)

    val, err = panel(a, b)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    while total_err > tol:
        if len(heap) >= max_intervals:
            raise QuadratureFailure(f"error estimate {total_err:.3g} above tol {tol:.3g} "
                                    f"after {max_intervals} panels")
        neg_err, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        vl, el = panel(lo, mid)
        vr, er = panel(mid, hi)
        total += vl + vr - v
        total_err += el + er + neg_err
        heapq.heappush(heap, (-el, lo, mid, vl))
        heapq.heappush(heap, (-er, mid, hi, vr))
    return float(sum(item[3] for item in heap))


def kernel_integral(params: KernelParams, x: float, y: float, tol: float = 1e-13) -> float:
    """``theta x**alpha int_0^1 J_{(a+1)/th,1/th}(ux) J_{a+1,th}((uy)**th) u**alpha du``.

    The substitution ``u = t**p`` removes the algebraic endpoint behaviour at
    ``u = 0`` (including ``u**alpha`` for ``alpha in (-1, 0)``).
    """
    x, y = _scalar_pair(x, y)
    if x < 0 or y < 0:
        raise DomainError("kernel_integral needs x, y >= 0")
    a = float(params.alpha)
    if x == 0:
        if a > 0:
            return 0.0
        if a < 0:
            raise DomainError("kernel_integral at x = 0 needs alpha >= 0")
    th = Fraction(params.m, params.n)
    J1 = wright_series((params.alpha + 1) / th, 1 / th, _bucket(x))
    J2 = wright_series(params.alpha + 1, th, _bucket(y) ** float(th))
    p = _smoothing_power(params)
    prefactor = float(th) * (x**a if x > 0 else 1.0) * p

    def integrand(t):
        u = t**p
        return t ** (p * (a + 1) - 1) * J1(u * x) * J2((u * y) ** float(th))

    return prefactor * adaptive_gauss_legendre(integrand, 0.0, 1.0, tol / max(prefactor, 1e-300))


def concomitant_terms(params: KernelParams, x, y, coeffs: ConcomitantCoeffs | None = None):
    """``B(F(x), G(y))`` with ``F, G`` the Wright arguments of the integrable form."""
    coeffs = coeffs or concomitant_coeffs(params)
    b = coeffs.b_float
    m, n, N = params.m, params.n, params.size
    F = wright_F_series(params, _max(x))
    G = wright_G_series(params, _max(y))
    DF = [delta_pow(F, j)(x) for j in range(N)]
    DG = [delta_pow(G, i)(y) for i in range(N)]
    total = 0.0
    for j in range(N):
        inner = 0.0
        for i in range(N - j):
            inner = inner + b[i + j] / float(m) ** (i + j) * DG[i]
        total = total + (-1) ** j * DF[j] * inner
    return (-1) ** (n + 1) * total


def kernel_integrable(params: KernelParams, x: float, y: float,
                      coeffs: ConcomitantCoeffs | None = None,
                      eps_diag: float = DIAG_GUARD) -> float:
    """``m**m n**(n-1) x**(m-1) B(F, G) / (x**m - y**m)``."""
    params.require_integrable()
    x, y = _scalar_pair(x, y)
    if x <= 0 or y < 0:
        raise DomainError("kernel_integrable needs x > 0, y >= 0")
    m, n = params.m, params.n
    gap = x**m - y**m
    if abs(gap) < eps_diag * max(1.0, x**m):
        raise NearDiagonal(f"|x^m - y^m| = {abs(gap):.3g} inside the diagonal guard")
    B = concomitant_terms(params, x, y, coeffs)
    return float(m**m * n ** (n - 1) * x ** (m - 1) * B / gap)


def boundary_concomitant(params: KernelParams, x: float, y: float, t: float) -> float:
    """``B(f(t**(1/m) x), g(t**(1/m) y))``, which must vanish as ``t -> 0+``."""
    r = t ** (1.0 / params.m)
    # f = F/m and g = (m/n) G, so B(f, g) = B(F, G)/n
    return float(concomitant_terms(params, r * x, r * y)) / params.n


# ---------------------------------------------------------------------------
# scaled kernel K~


def kernel_tilde_matrix(params: KernelParams, xs, ys) -> np.ndarray:
    """``K~(x_i, y_j) = int_0^1 f~(t x_i) g~(t y_j) dt`` summed termwise."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    if np.any(xs < 0) or np.any(ys < 0):
        raise DomainError("kernel_tilde needs x, y >= 0")
    f = ftilde_series(params, _max(xs))
    g = gtilde_series(params, _max(ys))
    if np.any(xs == 0) and f.leading_exponent() < 0:
        raise DomainError("kernel_tilde diverges at x = 0 for these parameters")
    out = _accel.bilinear_series(f.coeffs, f.exponents, g.coeffs, g.exponents, 1.0, xs, ys)
    if not np.all(np.isfinite(out)):
        raise NonConvergent(f"kernel series overflowed on [0, {max(_max(xs), _max(ys)):.4g}]")
    return out


def kernel_tilde_dx_matrix(params: KernelParams, xs, ys) -> np.ndarray:
    """``(x d/dx) K~(x_i, y_j)``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    f = delta_pow(ftilde_series(params, _max(xs)), 1)
    g = gtilde_series(params, _max(ys))
    return _accel.bilinear_series(f.coeffs, f.exponents, g.coeffs, g.exponents, 1.0, xs, ys)


def kernel_tilde(params: KernelParams, x: float, y: float, route: str = "auto") -> float:
    """Scaled kernel ``K~(x, y)``.

    ``route`` selects ``"integrable"`` (``sum_i phi_i(x) psi_i(y) / (x - y)``),
    ``"scaling"`` (the unscaled double series at ``m n**(n/m) x**(1/m)``) or
    ``"auto"``, which uses the integrable form off the diagonal.
    """
    x, y = _scalar_pair(x, y)
    if x <= 0 or y <= 0:
        raise DomainError("kernel_tilde needs x, y > 0")
    if route == "auto":
        route = "integrable" if abs(x - y) > DIAG_GUARD * max(1.0, x) and params.is_integrable else "scaling"
    if route == "integrable":
        params.require_integrable()
        N = params.size
        num = sum(phi(params, i, x) * psi(params, i, y) for i in range(N))
        return num / (x - y)
    if route == "scaling":
        m, n, c = params.m, params.n, params.scale
        K = kernel_series(params, c * x ** (1.0 / m), c * y ** (1.0 / m))
        return n ** (n / m) * x ** (1.0 / m - 1.0) * K
    raise ValueError(f"unknown route {route!r}")


# ---------------------------------------------------------------------------
# differential identities used as oracles


def f_ode_residual(params: KernelParams, x: float) -> float:
    """``prod_j (D/m + nu_j) f - (-1)**m x**m/(m**m n**n) f`` at ``x`` (D = x d/dx)."""
    nu = np.array([float(v) for v in concomitant_coeffs(params).nu])
    m, n = params.m, params.n
    f = f_series(params, x)
    lhs = f.weighted(lambda e: np.prod([e / m + v for v in nu], axis=0))
    rhs = f.shift(m).scale((-1) ** m / (m**m * n**n))
    return float(lhs(x) - rhs(x))


def g_ode_residual(params: KernelParams, y: float) -> float:
    """``prod_j (D/m - nu_j) g - (-1)**n y**m/(m**m n**n) g`` at ``y``."""
    nu = np.array([float(v) for v in concomitant_coeffs(params).nu])
    m, n = params.m, params.n
    g = g_series(params, y)
    lhs = g.weighted(lambda e: np.prod([e / m - v for v in nu], axis=0))
    rhs = g.shift(m).scale((-1) ** n / (m**m * n**n))
    return float(lhs(y) - rhs(y))


def ftilde_ode_residual(params: KernelParams, x: float) -> float:
    """``prod_j (D + nu_j) f~ - (-1)**m x f~`` at ``x``."""
    nu = np.array([float(v) for v in concomitant_coeffs(params).nu])
    f = ftilde_series(params, x)
    lhs = f.weighted(lambda e: np.prod([e + v for v in nu], axis=0))
    rhs = f.shift(1).scale((-1) ** params.m)
    return float(lhs(x) - rhs(x))


def gtilde_ode_residual(params: KernelParams, y: float) -> float:
    """``prod_j (D - nu_j) g~ - (-1)**n y g~`` at ``y``."""
    nu = np.array([float(v) for v in concomitant_coeffs(params).nu])
    g = gtilde_series(params, y)
    lhs = g.weighted(lambda e: np.prod([e - v for v in nu], axis=0))
    rhs = g.shift(1).scale((-1) ** params.n)
    return float(lhs(y) - rhs(y))


def boundary_exponent(params: KernelParams) -> float:
    """Predicted decay power ``(alpha+1-m)/m + 1/n`` of the boundary concomitant."""
    return float((params.alpha + 1 - params.m) / params.m + Fraction(1, params.n))


def boundary_decay(params: KernelParams, x: float, y: float, t_values=(1e-4, 1e-6)):
    """Concomitant magnitudes at ``t_values`` and the observed decay exponent between the ends."""
    mags = np.array([abs(boundary_concomitant(params, x, y, t)) for t in t_values])
    observed = math.log(mags[-1] / mags[0]) / math.log(t_values[-1] / t_values[0])
    return mags, observed
