"""Fredholm determinants and resolvents of the scaled kernel on interval unions.

Everything is discretized with Gauss-Legendre panels (Nystrom) using the
square-root weight symmetrization ``I - D K D`` with ``D = diag(sqrt(w))``.
A panel whose left end is 0 is graded by ``x = S t**p``.  The factor
functions carry fractional powers of ``x`` there, and the substitution
turns them into integer powers of ``t``, which keeps convergence spectral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy import linalg, special

from .errors import DomainError, InvalidParameters, SingularSystem
from .frobenius import delta_pow
from .kernel import (
    KernelParams,
    concomitant_coeffs,
    kernel_tilde_dx_matrix,
    kernel_tilde_matrix,
    phi_series,
    psi_series,
)

PIVOT_FLOOR = 1e-13
MAX_GRADING = 24
# intervals (lo, hi) with 0 < lo < GEOMETRIC_RATIO * hi get panels shrinking toward 0
GEOMETRIC_RATIO = 0.15
# beyond this many geometric panels the innermost one is graded instead
MAX_GEOMETRIC = 16


@dataclass(frozen=True)
class IntervalUnion:
    """``(a_1, a_2) U (a_3, a_4) U ...`` with ``0 <= a_1 <= a_2 <= ...``.

    Equal neighbours inside a pair give an empty sub-interval.
    """

    endpoints: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.endpoints)
        if len(a) < 2 or len(a) % 2:
            raise InvalidParameters("an interval union needs an even, positive number of endpoints")
        if any(not math.isfinite(v) for v in a) or a[0] < 0:
            raise InvalidParameters("endpoints must be finite and non-negative")
        for lo, hi in zip(a, a[1:]):
            if hi < lo:
                raise InvalidParameters("endpoints must be non-decreasing")
        for k in range(1, len(a) - 1, 2):
            if a[k] == a[k + 1]:
                raise InvalidParameters("neighbouring intervals must not touch")
        object.__setattr__(self, "endpoints", a)

    @classmethod
    def single(cls, s: float, left: float = 0.0) -> "IntervalUnion":
        return cls((left, s))

    @property
    def pairs(self) -> list[tuple[float, float]]:
        a = self.endpoints
        return [(a[i], a[i + 1]) for i in range(0, len(a), 2)]

    @property
    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.pairs)

    def moved(self, k: int, h: float) -> "IntervalUnion":
        """Copy with the 1-based endpoint ``a_k`` shifted by ``h``."""
        a = list(self.endpoints)
        a[k - 1] += h
        return IntervalUnion(tuple(a))


def grading_power(params: KernelParams) -> int:
    """Smallest p making ``x = t**p`` clear the fractional exponents at 0."""
    p = math.lcm(params.m, params.n)
    r = (params.alpha + 1) / params.m
    if isinstance(r, Fraction) and math.lcm(p, r.denominator) <= MAX_GRADING:
        p = math.lcm(p, r.denominator)
    return p


@dataclass(frozen=True, eq=False)
class NystromSystem:
    """Quadrature nodes and weights for an interval union."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    panel_index: np.ndarray

    @classmethod
    def build(cls, J: IntervalUnion, order: int, grading: int = 1, panels: int = 1) -> "NystromSystem":
        if order < 1:
            raise InvalidParameters("order must be positive")
        t, w = np.polynomial.legendre.leggauss(order)
        t = 0.5 * (t + 1.0)
        w = 0.5 * w
        xs, ws, idx = [], [], []
        for i, (lo, hi) in enumerate(J.pairs):
            if hi <= lo:
                continue
            graded_start = lo == 0.0
            if 0.0 < lo < GEOMETRIC_RATIO * hi:
                k = int(math.ceil(math.log(lo / hi) / math.log(GEOMETRIC_RATIO)))
                graded_start = k > MAX_GEOMETRIC
                k = min(k, MAX_GEOMETRIC)
                cuts = np.concatenate([[lo], hi * GEOMETRIC_RATIO ** np.arange(k - 1, -1, -1)])
            else:
                cuts = np.linspace(lo, hi, panels + 1)
            for j, (a, b) in enumerate(zip(cuts[:-1], cuts[1:])):
                if j == 0 and graded_start and grading > 1:
                    xs.append(a + (b - a) * t**grading)
                    ws.append((b - a) * grading * t ** (grading - 1) * w)
                else:
                    xs.append(a + (b - a) * t)
                    ws.append((b - a) * w)
                idx.append(np.full(order, i))
        if not xs:
            empty = np.zeros(0)
            return cls(empty, empty, order, np.zeros(0, dtype=int))
        return cls(np.concatenate(xs), np.concatenate(ws), order, np.concatenate(idx))

    @property
    def size(self) -> int:
        return self.nodes.size

    @cached_property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)


def _factor(params: KernelParams, sysm: NystromSystem):
    if sysm.size == 0:
        return None, None
    d = sysm.sqrt_weights
    K = kernel_tilde_matrix(params, sysm.nodes, sysm.nodes)
    A = np.eye(sysm.size) - d[:, None] * K * d[None, :]
    lu, piv = linalg.lu_factor(A, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_FLOOR * max(1.0, pivots.max()):
        raise SingularSystem(f"Nystrom matrix pivot {pivots.min():.3g} below floor; "
                             "the determinant is beyond the trustworthy range")
    return (lu, piv), K


def _logdet_from_lu(lu, piv) -> tuple[float, float]:
    diag = np.diag(lu)
    sign = (-1.0) ** np.count_nonzero(piv != np.arange(piv.size))
    sign *= np.prod(np.sign(diag))
    return float(sign), float(np.sum(np.log(np.abs(diag))))


def _check_order(order: int, minimum: int) -> None:
    if int(order) != order or order < minimum:
        raise InvalidParameters(f"order must be an integer >= {minimum}, got {order!r}")


def fredholm_det(params: KernelParams, J: IntervalUnion, order: int = 32, panels: int = 1) -> float:
    """``det(I - K~)`` restricted to ``J``."""
    _check_order(order, 4)
    sysm = NystromSystem.build(J, order, grading_power(params), panels)
    fac, _ = _factor(params, sysm)
    if fac is None:
        return 1.0
    sign, logabs = _logdet_from_lu(*fac)
    return sign * math.exp(logabs)


def fredholm_det_transposed(params: KernelParams, J: IntervalUnion, order: int = 32) -> float:
    """``det(I - K~')`` with the transposed kernel, computed from its own matrix."""
    _check_order(order, 4)
    sysm = NystromSystem.build(J, order, grading_power(params))
    if sysm.size == 0:
        return 1.0
    d = sysm.sqrt_weights
    Kt = kernel_tilde_matrix(params, sysm.nodes, sysm.nodes).T
    return float(np.linalg.det(np.eye(sysm.size) - d[:, None] * Kt * d[None, :]))


def gap_probability(params: KernelParams, s: float, order: int = 32) -> float:
    """``F(s)``: no particles in ``(0, s)``; the determinant over ``(0, s**m/(m**m n**n))``."""
    s = float(s)
    if s < 0 or not math.isfinite(s):
        raise DomainError(f"s must be finite and non-negative, got {s}")
    if s == 0:
        return 1.0
    return fredholm_det(params, IntervalUnion.single(float(params.to_scaled(s))), order)


def small_s_asymptote(params: KernelParams, s: float) -> float:
    """Leading small-s behaviour ``exp(-theta s**(a+1) / (Gamma((a+1)/theta) Gamma(a+1) (a+1)**2))``."""
    a, th = float(params.alpha), params.theta
    log_value = -th * float(s) ** (a + 1) * special.rgamma((a + 1) / th) * special.rgamma(a + 1) / (a + 1) ** 2
    return math.exp(log_value)


@dataclass(frozen=True)
class ResolventQuantities:
    """Endpoint values ``x_{j,k}``, ``y_{j,k}`` and the integrals ``u_j``, ``v_j``, ``w_{i,j}``.

    Columns of ``x_jk``/``y_jk`` follow the endpoints ``a_1..a_{2l}``; a column
    is NaN where the factor functions diverge at ``a_k = 0``.
    """

    endpoints: tuple
    x_jk: np.ndarray
    y_jk: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray


class Resolvent:
    """Solutions ``Q_j = (I - K~)^{-1} phi_j`` and ``P_j = (I - K~')^{-1} psi_j`` on ``J``."""

    def __init__(self, params: KernelParams, J: IntervalUnion, order: int = 32, panels: int = 1):
        _check_order(order, 8)
        params.require_integrable()
        self.params, self.J, self.order = params, J, order
        self.N = params.size
        self.sys = NystromSystem.build(J, order, grading_power(params), panels)
        if self.sys.size == 0:
            raise DomainError("resolvent on an empty interval union")
        self._fac, self._K = _factor(params, self.sys)
        x, d = self.sys.nodes, self.sys.sqrt_weights
        xmax = max(J.endpoints)
        self._phi = [phi_series(params, i, xmax) for i in range(self.N)]
        self._psi = [psi_series(params, i, xmax) for i in range(self.N)]
        Phi = np.column_stack([f(x) for f in self._phi])
        Psi = np.column_stack([g(x) for g in self._psi])
        self._dQ = linalg.lu_solve(self._fac, d[:, None] * Phi)
        self._dP = linalg.lu_solve(self._fac, d[:, None] * Psi, trans=1)
        self._dPhi = d[:, None] * Phi
        self.Q_nodes = self._dQ / d[:, None]
        self.P_nodes = self._dP / d[:, None]

    @cached_property
    def logdet(self) -> float:
        return _logdet_from_lu(*self._fac)[1]

    @cached_property
    def w(self) -> np.ndarray:
        """``w_{i,j} = int_J phi_i P_j``."""
        return self._dPhi.T @ self._dP

    def Q(self, x) -> np.ndarray:
        """``Q_j(x)`` for all j; shape ``(len(x), m+n)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        Kx = kernel_tilde_matrix(self.params, x, self.sys.nodes)
        base = np.column_stack([f(x) for f in self._phi])
        return base + (Kx * self.sys.weights[None, :]) @ self.Q_nodes

    def P(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        Ky = kernel_tilde_matrix(self.params, self.sys.nodes, y).T
        base = np.column_stack([g(y) for g in self._psi])
        return base + (Ky * self.sys.weights[None, :]) @ self.P_nodes

    def dQ(self, x) -> np.ndarray:
        """``d/dx Q_j(x)`` from the differentiated Nystrom interpolant."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x <= 0):
            raise DomainError("dQ needs x > 0")
        Kx = kernel_tilde_dx_matrix(self.params, x, self.sys.nodes)
        base = np.column_stack([delta_pow(f, 1)(x) for f in self._phi])
        return (base + (Kx * self.sys.weights[None, :]) @ self.Q_nodes) / x[:, None]

    def R(self, x: float, y: float) -> float:
        """Resolvent kernel ``sum_j Q_j(x) P_j(y) / (x - y)``; the diagonal uses ``sum_j Q_j'(x) P_j(x)``."""
        x, y = float(x), float(y)
        if x == y:
            return float(self.dQ(x)[0] @ self.P(x)[0])
        return float(self.Q(x)[0] @ self.P(y)[0] / (x - y))

    def R_direct(self, x: float, y: float) -> float:
        """Resolvent from the integral equation ``R = K + K R`` solved on the nodes."""
        nodes, w, d = self.sys.nodes, self.sys.weights, self.sys.sqrt_weights
        ky = kernel_tilde_matrix(self.params, nodes, [y])[:, 0]
        r = linalg.lu_solve(self._fac, d * ky) / d
        kx = kernel_tilde_matrix(self.params, [x], nodes)[0]
        return float(kernel_tilde_matrix(self.params, [x], [y])[0, 0] + np.dot(kx * w, r))

    def quantities(self) -> ResolventQuantities:
        a = np.array(self.J.endpoints)
        n, N = self.params.n, self.N
        xs = np.full((N, a.size), np.nan)
        ys = np.full((N, a.size), np.nan)
        ok = a > 0
        if not ok.all() and ftilde_finite_at_zero(self.params):
            ok[:] = True
        if ok.any():
            xs[:, ok] = self.Q(a[ok]).T
        ys[:, :] = self.P(a).T
        w = self.w
        b = concomitant_coeffs(self.params)
        sign = (-1.0) ** n
        u = sign * w[0, :] + np.array([b.b_at(j - 1) for j in range(N)])
        v = sign * w[:, N - 1]
        return ResolventQuantities(tuple(a), xs, ys, u, v, w)


def ftilde_finite_at_zero(params: KernelParams) -> bool:
    return (params.alpha + 1) / params.m >= 1


def resolvent_quantities(params: KernelParams, J: IntervalUnion, order: int = 32) -> ResolventQuantities:
    return Resolvent(params, J, order).quantities()


def resolvent_kernel(params: KernelParams, J: IntervalUnion, order: int, x: float, y: float) -> float:
    return Resolvent(params, J, order).R(x, y)
