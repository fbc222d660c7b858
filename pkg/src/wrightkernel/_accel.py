"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Set ``WRIGHTKERNEL_DISABLE_NUMBA=1`` before import to force the numpy path.
Both paths compute the same quantities; ``benchmarks/bench_backends.py``
times one against the other.
"""

import logging
import math
import os

import numpy as np

logger = logging.getLogger(__name__)

_disabled = os.environ.get("WRIGHTKERNEL_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError("disabled by WRIGHTKERNEL_DISABLE_NUMBA")
    import warnings

    import numba
    from numba.core.errors import NumbaWarning

    # numba falls back to its workqueue layer when TBB is too old; harmless
    warnings.filterwarnings("ignore", message=".*TBB.*", category=NumbaWarning)
    njit = numba.njit
    prange = numba.prange
    USE_NUMBA = True
except ImportError as exc:
    logger.debug("numba unavailable (%s); using numpy kernels", exc)
    USE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return wrap

    prange = range

BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# generalized power sums  sum_k c_k x^(e_k)


def _powsum_numpy(coeffs, exps, x):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        powers = np.power(x[:, None], exps[None, :])
    return powers @ coeffs


@njit(cache=True, parallel=True)
def _powsum_numba(coeffs, exps, x):
    out = np.empty(x.shape[0])
    nterms = coeffs.shape[0]
    for i in prange(x.shape[0]):
        xi = x[i]
        acc = 0.0
        if xi == 0.0:
            for k in range(nterms):
                if exps[k] == 0.0:
                    acc += coeffs[k]
        else:
            lx = math.log(xi)
            for k in range(nterms):
                acc += coeffs[k] * math.exp(exps[k] * lx)
        out[i] = acc
    return out


def powsum(coeffs, exps, x):
    """Evaluate ``sum_k coeffs[k] * x**exps[k]`` for every entry of ``x``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    exps = np.ascontiguousarray(exps, dtype=np.float64)
    if USE_NUMBA:
        return _powsum_numba(coeffs, exps, x)
    return _powsum_numpy(coeffs, exps, x)


# ---------------------------------------------------------------------------
# bilinear double series  M[i, j] = sum_{k,l} A_k B_l x_i^e_k y_j^d_l / (e_k + d_l + shift)


def _bilinear_numpy(A, e, B, d, shift, xs, ys):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        X = np.power(xs[:, None], e[None, :]) * A[None, :]
        Y = np.power(ys[:, None], d[None, :]) * B[None, :]
    W = 1.0 / (e[:, None] + d[None, :] + shift)
    return X @ (W @ Y.T)


@njit(cache=True, parallel=True)
def _power_table(c, e, xs):
    # T[i, k] = c_k xs_i^e_k with 0^0 = 1
    nx, nk = xs.shape[0], c.shape[0]
    T = np.empty((nx, nk))
    for i in prange(nx):
        xi = xs[i]
        lx = math.log(xi) if xi > 0.0 else 0.0
        for k in range(nk):
            if xi == 0.0:
                T[i, k] = c[k] if e[k] == 0.0 else 0.0
            else:
                T[i, k] = c[k] * math.exp(e[k] * lx)
    return T


@njit(cache=True)
def _bilinear_numba(A, e, B, d, shift, xs, ys):
    X = _power_table(A, e, xs)
    Y = _power_table(B, d, ys)
    W = np.empty((e.shape[0], d.shape[0]))
    for k in range(e.shape[0]):
        for l in range(d.shape[0]):
            W[k, l] = 1.0 / (e[k] + d[l] + shift)
    # the two contractions go to BLAS
    return np.dot(X, np.dot(W, np.ascontiguousarray(Y.T)))


def bilinear_series(A, e, B, d, shift, xs, ys):
    """Matrix of the double series ``sum A_k B_l x^e_k y^d_l / (e_k + d_l + shift)``."""
    args = [np.ascontiguousarray(v, dtype=np.float64) for v in (A, e, B, d)]
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    if USE_NUMBA:
        return _bilinear_numba(*args, float(shift), xs, ys)
    return _bilinear_numpy(*args, float(shift), xs, ys)


# ---------------------------------------------------------------------------
# single-interval gap system in log-time sigma = ln s
#
# state layout: x[0:N], y[N:2N], u[2N:3N], v[3N:4N], then three running integrals
#   L  = int v0/t dt,  A = int x0 y_{N-1} dt,  C = int ln(t) x0 y_{N-1} dt


@njit(cache=True)
def gap_rhs_logtime(sigma, z, nn, sign):
    t = math.exp(sigma)
    out = np.empty_like(z)
    x0 = z[0]
    ylast = z[2 * nn - 1]
    for j in range(nn - 1):
        out[j] = -z[3 * nn + j] * x0 - z[j + 1]
    acc = 0.0
    for i in range(nn):
        acc += z[2 * nn + i] * z[i]
    out[nn - 1] = (-sign * t - z[4 * nn - 1]) * x0 + acc
    acc = 0.0
    for i in range(nn):
        acc += z[3 * nn + i] * z[nn + i]
    out[nn] = acc + (sign * t - z[2 * nn]) * ylast
    for j in range(1, nn):
        out[nn + j] = z[nn + j - 1] - z[2 * nn + j] * ylast
    for j in range(nn):
        out[2 * nn + j] = t * sign * x0 * z[nn + j]
        out[3 * nn + j] = t * sign * z[j] * ylast
    out[4 * nn] = z[3 * nn]
    out[4 * nn + 1] = t * x0 * ylast
    out[4 * nn + 2] = sigma * t * x0 * ylast
    return out


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
])
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension: y(t + th*h) = y + h * sum_s K_s * (P[s] . [th, th^2, th^3, th^4])
DENSE_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@njit(cache=True)
def _dopri5_numba(z0, sig0, sig1, nn, sign, rtol, atol, h0, max_steps):
    dim = z0.shape[0]
    sigmas = np.empty(max_steps + 1)
    hs = np.empty(max_steps)
    states = np.empty((max_steps + 1, dim))
    stages = np.empty((max_steps, 7, dim))
    K = np.empty((7, dim))
    t = sig0
    y = z0.copy()
    sigmas[0] = t
    states[0] = y
    f0 = gap_rhs_logtime(t, y, nn, sign)
    h = h0
    n_acc = 0
    status = 0
    span = abs(sig1) if abs(sig1) > 1.0 else 1.0
    while sig1 - t > 1e-14 * span:
        if n_acc >= max_steps:
            status = 1
            break
        if h < 1e-13 * span:
            status = 2
            break
        last = False
        if t + h >= sig1:
            h = sig1 - t
            last = True
        K[0] = f0
        for s in range(1, 6):
            yi = y.copy()
            for r in range(s):
                a = _A[s, r]
                if a != 0.0:
                    for q in range(dim):
                        yi[q] += h * a * K[r, q]
            K[s] = gap_rhs_logtime(t + _C[s] * h, yi, nn, sign)
        ynew = y.copy()
        for r in range(6):
            br = _B[r]
            if br != 0.0:
                for q in range(dim):
                    ynew[q] += h * br * K[r, q]
        tnew = sig1 if last else t + h
        K[6] = gap_rhs_logtime(tnew, ynew, nn, sign)
        err = 0.0
        for q in range(dim):
            ev = 0.0
            for r in range(7):
                ev += _E[r] * K[r, q]
            ev *= h
            scale = atol + rtol * max(abs(y[q]), abs(ynew[q]))
            err += (ev / scale) ** 2
        err = math.sqrt(err / dim)
        if err <= 1.0:
            stages[n_acc] = K
            hs[n_acc] = h
            n_acc += 1
            t = tnew
            y = ynew
            f0 = K[6].copy()
            sigmas[n_acc] = t
            states[n_acc] = y
            if err == 0.0:
                fac = 10.0
            else:
                fac = min(10.0, max(0.2, 0.9 * err ** -0.2))
            if not last:
                h = h * fac
        else:
            h = h * max(0.2, 0.9 * err ** -0.2)
    return n_acc, sigmas[: n_acc + 1], hs[:n_acc], states[: n_acc + 1], stages[:n_acc], status


def _dopri5_numpy(z0, sig0, sig1, nn, sign, rtol, atol, h0, max_steps):
    sigmas = [sig0]
    hs = []
    states = [np.array(z0, dtype=np.float64)]
    stages = []
    t = sig0
    y = states[0].copy()
    f0 = gap_rhs_logtime(t, y, nn, sign)
    h = h0
    status = 0
    span = max(abs(sig1), 1.0)
    K = np.empty((7, y.shape[0]))
    while sig1 - t > 1e-14 * span:
        if len(hs) >= max_steps:
            status = 1
            break
        if h < 1e-13 * span:
            status = 2
            break
        last = t + h >= sig1
        if last:
            h = sig1 - t
        K[0] = f0
        for s in range(1, 6):
            K[s] = gap_rhs_logtime(t + _C[s] * h, y + h * (_A[s, :s] @ K[:s]), nn, sign)
        ynew = y + h * (_B @ K[:6])
        tnew = sig1 if last else t + h
        K[6] = gap_rhs_logtime(tnew, ynew, nn, sign)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = float(np.sqrt(np.mean((h * (_E @ K) / scale) ** 2)))
        if err <= 1.0:
            stages.append(K.copy())
            hs.append(h)
            t, y, f0 = tnew, ynew, K[6].copy()
            sigmas.append(t)
            states.append(y)
            fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
            if not last:
                h *= fac
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
    dim = y.shape[0]
    return (
        len(hs),
        np.asarray(sigmas),
        np.asarray(hs),
        np.asarray(states),
        np.asarray(stages).reshape(len(hs), 7, dim),
        status,
    )


def dopri5_gap(z0, sig0, sig1, nn, sign, rtol, atol, h0, max_steps=20_000):
    """Adaptive Dormand-Prince integration of ``gap_rhs_logtime``.

    Returns ``(n_steps, sigmas, hs, states, stages, status)`` where status is
    0 on success, 1 when the step budget ran out and 2 on step underflow.
    """
    z0 = np.ascontiguousarray(z0, dtype=np.float64)
    impl = _dopri5_numba if USE_NUMBA else _dopri5_numpy
    return impl(z0, float(sig0), float(sig1), int(nn), float(sign),
                float(rtol), float(atol), float(h0), int(max_steps))
