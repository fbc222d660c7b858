"""Finite-difference checks of the endpoint PDE system and its Hamiltonian form.

Resolvent data on an interval union are differentiated numerically in the
endpoints ``a_k`` and compared with the right-hand sides built from the
same data.  The Hamiltonians ``H_k`` are explicit polynomials; their partial
derivatives are coded by hand so Poisson brackets sit at roundoff level.

Canonical coordinates use the real parity convention ``q_{j,k} = x_{j,k}``
and ``p_{j,k} = (-1)**(k+1) y_{j,k}`` (``k`` is 1-based), which reproduces
every product ``x_{j,k} y_{i,k} = (-1)**(k+1) q_{j,k} p_{i,k}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .fredholm import IntervalUnion, Resolvent, ResolventQuantities, fredholm_det
from .kernel import KernelParams

FAMILIES = (
    "x_offdiag",
    "y_offdiag",
    "x_diag_inner",
    "x_diag_last",
    "y_diag_inner",
    "y_diag_first",
    "u",
    "v",
    "w",
)


@dataclass(frozen=True)
class CanonicalCoords:
    q: np.ndarray
    p: np.ndarray
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray

    @classmethod
    def from_quantities(cls, rq: ResolventQuantities) -> "CanonicalCoords":
        a = np.asarray(rq.endpoints, dtype=float)
        parity = (-1.0) ** (np.arange(1, a.size + 1) + 1)
        return cls(rq.x_jk.copy(), rq.y_jk * parity[None, :], rq.u.copy(), rq.v.copy(), a)

    @property
    def size(self) -> int:
        return self.q.shape[0]


@dataclass
class Gradient:
    """Partial derivatives of a function of ``(q, p, u, v)``."""

    dq: np.ndarray
    dp: np.ndarray
    du: np.ndarray
    dv: np.ndarray

    @classmethod
    def zeros(cls, coords: CanonicalCoords) -> "Gradient":
        N, L = coords.q.shape
        return cls(np.zeros((N, L)), np.zeros((N, L)), np.zeros(N), np.zeros(N))


def coordinate_gradient(coords: CanonicalCoords, name: str, j: int, k: int | None = None) -> Gradient:
    """Gradient of a single coordinate function (``k`` 1-based for q and p)."""
    g = Gradient.zeros(coords)
    if name in ("q", "p"):
        getattr(g, "d" + name)[j, k - 1] = 1.0
    elif name in ("u", "v"):
        getattr(g, "d" + name)[j] = 1.0
    else:
        raise ValueError(f"unknown coordinate {name!r}")
    return g


def _check_k(coords: CanonicalCoords, k: int) -> None:
    if not 1 <= k <= coords.a.size:
        raise DomainError(f"k must lie in 1..{coords.a.size}, got {k}")


def hamiltonian(params: KernelParams, coords: CanonicalCoords, k: int) -> float:
    """Explicit polynomial ``H_k(q, p, u, v; a)``."""
    _check_k(coords, k)
    q, p, u, v, a = coords.q, coords.p, coords.u, coords.v, coords.a
    c = k - 1
    N = coords.size
    sn = (-1.0) ** (params.n + 1)
    H = (-(v @ p[:, c]) + sn * a[c] * p[N - 1, c]) * q[0, c]
    H += (u @ q[:, c]) * p[N - 1, c]
    H -= q[1:, c] @ p[: N - 1, c]
    for i in range(a.size):
        if i != c:
            H += a[i] / (a[c] - a[i]) * (q[:, c] @ p[:, i]) * (q[:, i] @ p[:, c])
    return float(H)


def hamiltonian_gradient(params: KernelParams, coords: CanonicalCoords, k: int) -> Gradient:
    """Closed-form partial derivatives of ``H_k``."""
    _check_k(coords, k)
    q, p, u, v, a = coords.q, coords.p, coords.u, coords.v, coords.a
    c = k - 1
    N = coords.size
    sn = (-1.0) ** (params.n + 1)
    g = Gradient.zeros(coords)
    g.dq[:, c] = u * p[N - 1, c]
    g.dq[0, c] += -(v @ p[:, c]) + sn * a[c] * p[N - 1, c]
    g.dq[1:, c] -= p[: N - 1, c]
    g.dp[:, c] = -v * q[0, c]
    g.dp[N - 1, c] += sn * a[c] * q[0, c] + u @ q[:, c]
    g.dp[: N - 1, c] -= q[1:, c]
    g.du[:] = q[:, c] * p[N - 1, c]
    g.dv[:] = -p[:, c] * q[0, c]
    for i in range(a.size):
        if i == c:
            continue
        coef = a[i] / (a[c] - a[i])
        A_ki = q[:, c] @ p[:, i]
        A_ik = q[:, i] @ p[:, c]
        g.dq[:, c] += coef * p[:, i] * A_ik
        g.dp[:, c] += coef * A_ki * q[:, i]
        g.dq[:, i] += coef * A_ki * p[:, c]
        g.dp[:, i] += coef * q[:, c] * A_ik
    return g


def poisson_bracket(params: KernelParams, coords: CanonicalCoords, f: Gradient, g: Gradient) -> float:
    """``{f, g}`` from the gradients of ``f`` and ``g``."""
    inv_a = 1.0 / coords.a
    qp = np.sum((f.dq * g.dp - f.dp * g.dq) * inv_a[None, :])
    uv = (-1.0) ** params.n * np.sum(f.du * g.dv - f.dv * g.du)
    return float(qp + uv)


def involution_check(params: KernelParams, coords: CanonicalCoords, i: int, j: int) -> float:
    """``{H_i, H_j}``, which vanishes on solved coordinates."""
    return poisson_bracket(params, coords, hamiltonian_gradient(params, coords, i),
                           hamiltonian_gradient(params, coords, j))


def hamiltonian_scale(params: KernelParams, coords: CanonicalCoords) -> float:
    """Product of the largest gradient norms, the natural size of a bracket."""
    norms = []
    for k in range(1, coords.a.size + 1):
        g = hamiltonian_gradient(params, coords, k)
        norms.append(math.sqrt(np.sum(g.dq**2) + np.sum(g.dp**2) + np.sum(g.du**2) + np.sum(g.dv**2)))
    return max(norms) ** 2 / min(coords.a)


# ---------------------------------------------------------------------------
# finite differences in the endpoints


@dataclass
class EndpointDerivatives:
    """Base quantities and centered differences ``d/da_i`` of each of them."""

    base: ResolventQuantities
    dx: np.ndarray  # (2l, N, 2l): dx[i] = d x_{j,k} / d a_{i+1}
    dy: np.ndarray
    du: np.ndarray  # (2l, N)
    dv: np.ndarray
    dw: np.ndarray  # (2l, N, N)
    h: float


def endpoint_derivatives(params: KernelParams, J: IntervalUnion, order: int, h: float) -> EndpointDerivatives:
    if not h > 0:
        raise DomainError("h must be positive")
    if J.endpoints[0] < h:
        raise DomainError(f"a_1 = {J.endpoints[0]} cannot be moved by h = {h}; centered differences need a_1 >= h")
    base = Resolvent(params, J, order).quantities()
    L = len(J.endpoints)
    dx, dy, du, dv, dw = [], [], [], [], []
    for i in range(1, L + 1):
        plus = Resolvent(params, J.moved(i, h), order).quantities()
        minus = Resolvent(params, J.moved(i, -h), order).quantities()
        dx.append((plus.x_jk - minus.x_jk) / (2 * h))
        dy.append((plus.y_jk - minus.y_jk) / (2 * h))
        du.append((plus.u - minus.u) / (2 * h))
        dv.append((plus.v - minus.v) / (2 * h))
        dw.append((plus.w - minus.w) / (2 * h))
    return EndpointDerivatives(base, np.array(dx), np.array(dy), np.array(du), np.array(dv), np.array(dw), h)


def pde_right_sides(params: KernelParams, rq: ResolventQuantities) -> dict:
    """Right-hand sides of the endpoint equations, keyed like :func:`pde_residuals`.

    Diagonal families are returned as ``a_k d/da_k`` values.
    """
    x, y, u, v = rq.x_jk, rq.y_jk, rq.u, rq.v
    a = np.asarray(rq.endpoints)
    N, L = x.shape
    n = params.n
    sgn = lambda i: (-1.0) ** (i + 1)  # (-1)^i for 1-based i = idx + 1
    # R(a_k, a_i) for k != i
    R = np.full((L, L), np.nan)
    for k in range(L):
        for i in range(L):
            if i != k:
                R[k, i] = (x[:, k] @ y[:, i]) / (a[k] - a[i])
    dx = np.full((L, N, L), np.nan)
    dy = np.full((L, N, L), np.nan)
    for i in range(L):
        for k in range(L):
            if i == k:
                continue
            dx[i, :, k] = sgn(i) * x[:, i] * R[k, i]
            dy[i, :, k] = sgn(i) * y[:, i] * R[i, k]
    ax = np.zeros((N, L))
    ay = np.zeros((N, L))
    for k in range(L):
        cx = np.zeros(N)
        cy = np.zeros(N)
        for i in range(L):
            if i != k:
                cx += sgn(i) * a[i] * R[k, i] * x[:, i]
                cy += sgn(i) * a[i] * R[i, k] * y[:, i]
        ax[: N - 1, k] = -v[: N - 1] * x[0, k] - x[1:, k] - cx[: N - 1]
        ax[N - 1, k] = ((-1.0) ** (n + 1) * a[k] - v[N - 1]) * x[0, k] + u @ x[:, k] - cx[N - 1]
        ay[1:, k] = y[: N - 1, k] - u[1:] * y[N - 1, k] - cy[1:]
        ay[0, k] = v @ y[:, k] + ((-1.0) ** n * a[k] - u[0]) * y[N - 1, k] - cy[0]
    du = np.array([(-1.0) ** (n + k + 1) * x[0, k] * y[:, k] for k in range(L)])
    dv = np.array([(-1.0) ** (n + k + 1) * x[:, k] * y[N - 1, k] for k in range(L)])
    dw = np.array([sgn(k) * np.outer(x[:, k], y[:, k]) for k in range(L)])
    return {"dx": dx, "dy": dy, "a_dx": ax, "a_dy": ay, "du": du, "dv": dv, "dw": dw}


def _max_abs(arr) -> float:
    arr = np.asarray(arr, dtype=float)
    arr = arr[np.isfinite(arr)]
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def pde_residuals(params: KernelParams, J: IntervalUnion, order: int = 32, h: float = 1e-4,
                  derivatives: EndpointDerivatives | None = None) -> dict[str, float]:
    """Max absolute residual of each endpoint-equation family.

    Columns for an endpoint at 0 are skipped when the factor functions
    diverge there (they come back as NaN from the resolvent).
    """
    d = derivatives or endpoint_derivatives(params, J, order, h)
    rhs = pde_right_sides(params, d.base)
    a = np.asarray(d.base.endpoints)
    L = a.size
    N = params.size
    off_x, off_y = [], []
    for i in range(L):
        for k in range(L):
            if i != k:
                off_x.append(d.dx[i, :, k] - rhs["dx"][i, :, k])
                off_y.append(d.dy[i, :, k] - rhs["dy"][i, :, k])
    diag_x = np.array([a[k] * d.dx[k, :, k] for k in range(L)]).T - rhs["a_dx"]
    diag_y = np.array([a[k] * d.dy[k, :, k] for k in range(L)]).T - rhs["a_dy"]
    return {
        "x_offdiag": _max_abs(off_x),
        "y_offdiag": _max_abs(off_y),
        "x_diag_inner": _max_abs(diag_x[: N - 1]),
        "x_diag_last": _max_abs(diag_x[N - 1]),
        "y_diag_inner": _max_abs(diag_y[1:]),
        "y_diag_first": _max_abs(diag_y[0]),
        "u": _max_abs(d.du - rhs["du"]),
        "v": _max_abs(d.dv - rhs["dv"]),
        "w": _max_abs(d.dw - rhs["dw"]),
    }


def convergence_orders(params: KernelParams, J: IntervalUnion, order: int = 32,
                       h: float = 1e-3) -> dict[str, float]:
    """Observed order ``log2(res(h) / res(h/2))`` of every family."""
    r1 = pde_residuals(params, J, order, h)
    r2 = pde_residuals(params, J, order, h / 2)
    return {k: math.log2(r1[k] / r2[k]) if r2[k] > 0 and r1[k] > 0 else math.nan for k in r1}


def hamilton_equation_residuals(params: KernelParams, J: IntervalUnion, order: int = 32,
                                h: float = 1e-4,
                                derivatives: EndpointDerivatives | None = None) -> dict[str, float]:
    """``d/da_i`` of each coordinate against its bracket with ``H_i``."""
    d = derivatives or endpoint_derivatives(params, J, order, h)
    coords = CanonicalCoords.from_quantities(d.base)
    L = coords.a.size
    parity = (-1.0) ** (np.arange(1, L + 1) + 1)
    sign_uv = (-1.0) ** params.n
    res = {"q": 0.0, "p": 0.0, "u": 0.0, "v": 0.0}
    for i in range(1, L + 1):
        g = hamiltonian_gradient(params, coords, i)
        # {q_{j,k}, H} = dH/dp_{j,k} / a_k ; {p_{j,k}, H} = -dH/dq_{j,k} / a_k
        q_rate = g.dp / coords.a[None, :]
        p_rate = -g.dq / coords.a[None, :]
        u_rate = sign_uv * g.dv
        v_rate = -sign_uv * g.du
        res["q"] = max(res["q"], _max_abs(d.dx[i - 1] - q_rate))
        res["p"] = max(res["p"], _max_abs(d.dy[i - 1] * parity[None, :] - p_rate))
        res["u"] = max(res["u"], _max_abs(d.du[i - 1] - u_rate))
        res["v"] = max(res["v"], _max_abs(d.dv[i - 1] - v_rate))
    return res


def log_det_derivatives(params: KernelParams, J: IntervalUnion, order: int = 32, h: float = 1e-5) -> np.ndarray:
    """``a_k d/da_k log det(I - K~)`` by centered differences."""
    a = np.asarray(J.endpoints)
    out = np.empty(a.size)
    for k in range(1, a.size + 1):
        lp = math.log(fredholm_det(params, J.moved(k, h), order))
        lm = math.log(fredholm_det(params, J.moved(k, -h), order))
        out[k - 1] = a[k - 1] * (lp - lm) / (2 * h)
    return out


def resolvent_diagonal_hamiltonians(params: KernelParams, J: IntervalUnion, order: int = 32) -> np.ndarray:
    """``(-1)**(k+1) a_k R(a_k, a_k)`` from the differentiated resolvent."""
    res = Resolvent(params, J, order)
    a = np.asarray(J.endpoints)
    return np.array([(-1.0) ** (k + 1) * a[k - 1] * res.R(a[k - 1], a[k - 1]) if a[k - 1] > 0 else 0.0
                     for k in range(1, a.size + 1)])


@dataclass
class HamiltonianReport:
    hamiltonians: np.ndarray
    log_det_fd: np.ndarray
    resolvent_diag: np.ndarray
    brackets: dict = field(default_factory=dict)
    scale: float = 1.0

    @property
    def max_hamiltonian_error(self) -> float:
        return float(np.max(np.abs(self.hamiltonians - self.log_det_fd)))

    @property
    def max_relative_bracket(self) -> float:
        return max((abs(b) for b in self.brackets.values()), default=0.0) / self.scale


def hamiltonian_report(params: KernelParams, J: IntervalUnion, order: int = 32) -> HamiltonianReport:
    rq = Resolvent(params, J, order).quantities()
    coords = CanonicalCoords.from_quantities(rq)
    L = coords.a.size
    H = np.array([hamiltonian(params, coords, k) for k in range(1, L + 1)])
    brackets = {(i, j): involution_check(params, coords, i, j)
                for i in range(1, L + 1) for j in range(i + 1, L + 1)}
    return HamiltonianReport(H, log_det_derivatives(params, J, order),
                             resolvent_diagonal_hamiltonians(params, J, order),
                             brackets, hamiltonian_scale(params, coords))


def single_interval_consistency(params: KernelParams, s: float, eps: float = 1e-9,
                                order: int = 32, h: float = 1e-5) -> float:
    """Max gap between ``s d/ds`` of the endpoint data on ``(eps, s)`` and the ODE right side."""
    from .ode_gap import GapState, ode_rhs

    J = IntervalUnion((eps, s))
    plus = Resolvent(params, J.moved(2, h), order).quantities()
    minus = Resolvent(params, J.moved(2, -h), order).quantities()
    base = Resolvent(params, J, order).quantities()
    state = GapState(s, base.x_jk[:, 1], base.y_jk[:, 1], base.u, base.v)
    rate = ode_rhs(params, state)
    fd = GapState(s, (plus.x_jk[:, 1] - minus.x_jk[:, 1]) / (2 * h),
                  (plus.y_jk[:, 1] - minus.y_jk[:, 1]) / (2 * h),
                  (plus.u - minus.u) / (2 * h), (plus.v - minus.v) / (2 * h))
    return float(max(np.max(np.abs(fd.pack() - rate.pack())), 0.0))
