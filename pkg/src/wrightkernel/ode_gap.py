"""Gap probability on ``(0, s)`` from the 4(m+n)-dimensional nonlinear ODE system.

The system is integrated in log-time ``sigma = ln t`` (every x, y equation
carries a ``1/t``) together with three running integrals:

* ``L = int v_0(t)/t dt``, the exponent of the second gap formula;
* ``A = int x_0 y_{m+n-1} dt`` and ``C = int ln(t) x_0 y_{m+n-1} dt``, so the
  log-weighted first formula at any endpoint ``S`` is ``(-1)**n (ln(S) A - C)``.

The integration starts at a small ``s0 > 0``; the contribution of
``(0, s0)`` is added in closed form from the kernel's double series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import DomainError, StepFailure
from .kernel import KernelParams, concomitant_coeffs, ftilde_series, gtilde_series, phi_series, psi_series

S0_HEAD = 1e-9
S0_BOUNDS = (1e-30, 1e-5)


@dataclass(frozen=True)
class GapState:
    """``(x_j, y_j, u_j, v_j)`` at the scaled endpoint ``s``."""

    s: float
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def pack(self) -> np.ndarray:
        return np.concatenate([self.x, self.y, self.u, self.v])

    @classmethod
    def unpack(cls, s: float, z: np.ndarray, nn: int) -> "GapState":
        z = np.asarray(z, dtype=float)
        return cls(float(s), z[:nn].copy(), z[nn:2 * nn].copy(), z[2 * nn:3 * nn].copy(), z[3 * nn:4 * nn].copy())


def ode_rhs(params: KernelParams, state: GapState) -> GapState:
    """``d/ds`` of every component of ``state``."""
    if not state.s > 0:
        raise DomainError("ode_rhs needs s > 0")
    nn = params.size
    z = np.concatenate([state.pack(), np.zeros(3)])
    dz = _accel.gap_rhs_logtime(math.log(state.s), z, nn, float((-1) ** params.n)) / state.s
    return GapState.unpack(state.s, dz, nn)


def default_s0(params: KernelParams, target: float = S0_HEAD) -> float:
    """Start point where ``int_0^s0 K~(t, t) dt`` is about ``target``.

    The corrected initial data are exact to first order in that integral, so
    the neglected remainder is of order ``target**2``.
    """
    lo, hi = math.log(S0_BOUNDS[0]), math.log(S0_BOUNDS[1])
    if abs(head_log_det(params, S0_BOUNDS[1])) <= target:
        return S0_BOUNDS[1]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if abs(head_log_det(params, math.exp(mid))) > target:
            hi = mid
        else:
            lo = mid
    return math.exp(lo)


def _pairwise_integral(a, b, s0: float) -> float:
    """``int_0^s0 a(t) b(t) dt`` for two Frobenius series."""
    c = np.add.outer(a.exponents, b.exponents) + 1.0
    return float(np.sum(np.outer(a.coeffs, b.coeffs) * s0**c / c))


def _kernel_moment(params: KernelParams, fn, s0: float, left: bool) -> float:
    """``int_0^s0 K~(s0, t) fn(t) dt`` (``left``) or ``int_0^s0 K~(t, s0) fn(t) dt``."""
    f = ftilde_series(params, s0)
    g = gtilde_series(params, s0)
    denom = np.add.outer(f.exponents, g.exponents) + 1.0
    M = np.outer(f.coeffs, g.coeffs) / denom
    if left:
        inner = np.add.outer(g.exponents, fn.exponents) + 1.0
        V = (s0**inner / inner) @ fn.coeffs
        return float((s0**f.exponents) @ M @ (s0**g.exponents * V))
    inner = np.add.outer(f.exponents, fn.exponents) + 1.0
    V = (s0**inner / inner) @ fn.coeffs
    return float((s0**f.exponents * V) @ M @ (s0**g.exponents))


def init_state(params: KernelParams, s0: float, corrected: bool = False) -> GapState:
    """Initial data at ``s0``.

    The leading-order data are ``x_j = phi_j(s0)``, ``y_j = psi_j(s0)``,
    ``u_j = b_{j-1}``, ``v_j = 0``.  With ``corrected`` the first Neumann
    term of each resolvent quantity over ``(0, s0)`` is added.
    """
    s0 = float(s0)
    if not s0 > 0:
        raise DomainError(f"s0 must be positive, got {s0}")
    params.require_integrable()
    nn = params.size
    b = concomitant_coeffs(params)
    phis = [phi_series(params, j, s0) for j in range(nn)]
    psis = [psi_series(params, j, s0) for j in range(nn)]
    x = np.array([f(s0) for f in phis])
    y = np.array([g(s0) for g in psis])
    u = np.array([b.b_at(j - 1) for j in range(nn)])
    v = np.zeros(nn)
    if corrected:
        sign = (-1) ** params.n
        x += [_kernel_moment(params, f, s0, left=True) for f in phis]
        y += [_kernel_moment(params, g, s0, left=False) for g in psis]
        u += [sign * _pairwise_integral(phis[0], g, s0) for g in psis]
        v += [sign * _pairwise_integral(f, psis[-1], s0) for f in phis]
    return GapState(s0, x, y, u, v)


def _diag_series(params: KernelParams, s0: float):
    """Coefficients and exponents ``c`` of ``f~(t) g~(t) = sum A_k B_l t**(c-1)``."""
    f = ftilde_series(params, s0)
    g = gtilde_series(params, s0)
    coef = np.outer(f.coeffs, g.coeffs).ravel()
    c = np.add.outer(f.exponents, g.exponents).ravel() + 1.0
    return coef, c


def head_log_det(params: KernelParams, s0: float) -> float:
    """``log det(I - K~)`` on ``(0, s0)`` to first order: ``-int_0^s0 K~(t, t) dt``."""
    coef, c = _diag_series(params, s0)
    return float(-np.sum(coef * s0**c / c**2))


def head_log_weighted(params: KernelParams, s0: float, S: float) -> float:
    """First-order ``(-1)**n int_0^s0 ln(S/t) x_0 y_{m+n-1} dt`` with ``x_0 y_{m+n-1} ~ (-1)**(n+1) f~ g~``."""
    coef, c = _diag_series(params, s0)
    return float(-np.sum(coef * s0**c * (math.log(S / s0) / c + 1.0 / c**2)))


class Trajectory:
    """Dense-output solution of the gap ODE on ``[s0, s1]``."""

    def __init__(self, params, s0, sigmas, hs, states, stages, sign):
        self.params = params
        self.nn = params.size
        self.s0 = s0
        self.sigmas = sigmas
        self.hs = hs
        self.states = states
        self.stages = stages
        self.sign = sign

    @property
    def s1(self) -> float:
        return math.exp(self.sigmas[-1])

    @property
    def n_steps(self) -> int:
        return self.hs.size

    def raw(self, s: float) -> np.ndarray:
        """Full integrator state (including the running integrals) at ``s``."""
        s = float(s)
        if not self.s0 * (1 - 1e-12) <= s <= self.s1 * (1 + 1e-12):
            raise DomainError(f"s={s} outside the integrated range [{self.s0}, {self.s1}]")
        sig = min(max(math.log(s), self.sigmas[0]), self.sigmas[-1])
        i = int(np.searchsorted(self.sigmas, sig, side="right")) - 1
        i = min(max(i, 0), self.n_steps - 1)
        h = self.hs[i]
        th = (sig - self.sigmas[i]) / h
        powers = np.array([th, th**2, th**3, th**4])
        return self.states[i] + h * (_accel.DENSE_P @ powers) @ self.stages[i]

    def at(self, s: float) -> GapState:
        return GapState.unpack(s, self.raw(s), self.nn)

    def log_det_forms(self, S: float) -> tuple[float, float]:
        """``(log-weighted form, v_0/t form)`` of ``log det(I - K~)`` on ``(0, S)``."""
        z = self.raw(S)
        nn = self.nn
        L, A, C = z[4 * nn], z[4 * nn + 1], z[4 * nn + 2]
        form1 = self.sign * (math.log(S) * A - C) + head_log_weighted(self.params, self.s0, S)
        form2 = L + head_log_det(self.params, self.s0)
        return form1, form2


def integrate(params: KernelParams, s0: float, s1: float, tol: float = 1e-11,
              max_steps: int = 20_000) -> Trajectory:
    """Adaptive Dormand-Prince integration from ``init_state(s0)`` to ``s1`` (scaled variable)."""
    if not 0 < s0 < s1:
        raise DomainError(f"need 0 < s0 < s1, got s0={s0}, s1={s1}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    start = init_state(params, s0, corrected=True)
    z0 = np.concatenate([start.pack(), np.zeros(3)])
    sign = float((-1) ** params.n)
    sig0, sig1 = math.log(s0), math.log(s1)
    h0 = min(0.05, sig1 - sig0)
    n, sigmas, hs, states, stages, status = _accel.dopri5_gap(
        z0, sig0, sig1, params.size, sign, tol, tol * 1e-3, h0, max_steps)
    if status == 1:
        raise StepFailure(f"step budget of {max_steps} exhausted at s={math.exp(sigmas[-1]):.6g}")
    if status == 2:
        raise StepFailure(f"step size underflow at s={math.exp(sigmas[-1]):.6g}")
    return Trajectory(params, s0, sigmas, hs, states, stages, sign)


@dataclass(frozen=True)
class GapResult:
    s: float
    value: float
    log_weighted: float
    log_v0: float

    @property
    def discrepancy(self) -> float:
        """Difference of the two formulas for ``log F``."""
        return abs(self.log_weighted - self.log_v0)


def gap_curve_ode(params: KernelParams, s_values, tol: float = 1e-11,
                  s0: float | None = None) -> list[GapResult]:
    """``F(s)`` on a grid of (unscaled) ``s`` from a single trajectory."""
    s_values = np.asarray(s_values, dtype=float)
    if np.any(s_values < 0) or not np.all(np.isfinite(s_values)):
        raise DomainError("s values must be finite and non-negative")
    params.require_integrable()
    s0 = default_s0(params) if s0 is None else float(s0)
    S = params.to_scaled(s_values)
    top = float(S.max()) if S.size else 0.0
    traj = integrate(params, s0, top, tol) if top > s0 else None
    out = []
    for s, Si in zip(s_values, S):
        if s == 0:
            out.append(GapResult(0.0, 1.0, 0.0, 0.0))
            continue
        if Si <= s0:
            one = head_log_det(params, Si)
            out.append(GapResult(float(s), math.exp(one), one, one))
            continue
        f1, f2 = traj.log_det_forms(float(Si))
        out.append(GapResult(float(s), math.exp(f2), f1, f2))
    return out


def gap_forms(params: KernelParams, s: float, tol: float = 1e-11) -> GapResult:
    """Both gap formulas at ``s`` with their discrepancy."""
    return gap_curve_ode(params, [s], tol)[0]


def gap_via_ode(params: KernelParams, s: float, tol: float = 1e-11) -> float:
    """``F(s)`` from the ``v_0/t`` formula along the ODE trajectory."""
    return gap_forms(params, s, tol).value
