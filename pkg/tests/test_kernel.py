import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wrightkernel import (
    DomainError,
    InvalidParameters,
    KernelParams,
    NearDiagonal,
    b_coeffs,
    kernel_integrable,
    kernel_integral,
    kernel_series,
    kernel_tilde,
    nu_vector,
    phi,
    psi,
)
from wrightkernel.kernel import (
    QuadratureFailure,
    adaptive_gauss_legendre,
    boundary_concomitant,
    boundary_decay,
    boundary_exponent,
    f_ode_residual,
    ftilde_ode_residual,
    ftilde_series,
    g_ode_residual,
    gtilde_ode_residual,
    gtilde_series,
    kernel_tilde_dx_matrix,
    kernel_tilde_matrix,
)

GRID = [(1, 1, 1), (1, 2, 1), (1, 1, 2), (2, 3, 2), (0.5, 1, 2)]


def wright(a, b, x):
    return mpmath.nsum(lambda j: (-x) ** j * mpmath.rgamma(j + 1) * mpmath.rgamma(a + b * j), [0, mpmath.inf])


def kernel_oracle(alpha, theta, x, y):
    """Double-integral form of the hard-edge kernel, evaluated by mpmath."""
    a, th = mpmath.mpf(alpha), mpmath.mpf(theta)
    inner = lambda u: wright((a + 1) / th, 1 / th, u * x) * wright(a + 1, th, (u * y) ** th) * u**a
    return float(th * mpmath.mpf(x) ** a * mpmath.quad(inner, [0, 1]))


def test_params_validation():
    with pytest.raises(InvalidParameters):
        KernelParams(1, 2, 2)
    with pytest.raises(InvalidParameters):
        KernelParams(-1, 1, 1)
    with pytest.raises(InvalidParameters):
        KernelParams(1, 0, 1)
    with pytest.raises(InvalidParameters, match="alpha must exceed"):
        KernelParams(0, 2, 3).require_integrable()


def test_params_derived_quantities():
    p = KernelParams(1, 2, 1)
    assert p.theta == 2.0 and p.size == 3
    assert p.integrable_bound == Fraction(-1)
    assert p.scale == pytest.approx(2.0)
    assert float(p.to_scaled(2.0)) == pytest.approx(1.0)


def test_nu_and_b_for_theta_two():
    p = KernelParams(1, 2, 1)
    assert nu_vector(p) == (0, 0, Fraction(-1, 2))
    b = b_coeffs(nu_vector(p))
    # x (x + 1/2) = x/2 + x^2
    assert b.b == (0, Fraction(1, 2), 1)
    assert b.b_at(-1) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.fractions(Fraction(-1, 2), Fraction(3)), st.floats(-2, 2))
def test_b_expands_the_product(m, n, alpha, x):
    if math.gcd(m, n) != 1:
        return
    nu = nu_vector(KernelParams(alpha, m, n))
    b = b_coeffs(nu)
    poly = sum(float(c) * x**k for k, c in enumerate(b.b))
    assert poly == pytest.approx(math.prod(x - float(v) for v in nu[1:]), abs=1e-9)
    assert b.b[-1] == 1


@pytest.mark.parametrize("alpha,m,n", GRID)
def test_series_matches_double_integral_oracle(alpha, m, n):
    for x, y in [(0.4, 1.3), (2.2, 0.9)]:
        assert kernel_series(KernelParams(alpha, m, n), x, y) == pytest.approx(
            kernel_oracle(alpha, m / n, x, y), rel=1e-10, abs=1e-13)


def test_theta_one_is_the_bessel_kernel():
    alpha, x, y = 1.5, 0.8, 2.1
    sx, sy = 2 * math.sqrt(x), 2 * math.sqrt(y)
    ja, jb = mpmath.besselj(alpha, sx), mpmath.besselj(alpha, sy)
    dja, djb = mpmath.besselj(alpha, sx, 1), mpmath.besselj(alpha, sy, 1)
    bessel = float((ja * sy * djb - jb * sx * dja) / (2 * (x - y)))
    # the x**alpha prefactor conjugates the symmetric Bessel kernel
    bessel *= (x / y) ** (alpha / 2)
    assert kernel_series(KernelParams(alpha, 1, 1), x, y) == pytest.approx(bessel, rel=1e-12)


@pytest.mark.parametrize("alpha,m,n", GRID)
def test_three_representations_agree(alpha, m, n):
    p = KernelParams(alpha, m, n)
    for x, y in [(0.3, 1.1), (2.5, 1.7), (1.0, 0.0)]:
        ks = kernel_series(p, x, y)
        assert kernel_integral(p, x, y) == pytest.approx(ks, abs=1e-12)
        assert kernel_integrable(p, x, y) == pytest.approx(ks, abs=1e-11)


def test_representations_for_non_integrable_alpha():
    # alpha below m-1-m/n: only series and integral are defined
    p = KernelParams(0, 2, 3)
    assert not p.is_integrable
    assert kernel_integral(p, 0.7, 1.4) == pytest.approx(kernel_series(p, 0.7, 1.4), abs=1e-11)
    with pytest.raises(InvalidParameters):
        kernel_integrable(p, 0.7, 1.4)


def test_integrable_guards():
    p = KernelParams(1, 2, 1)
    with pytest.raises(NearDiagonal):
        kernel_integrable(p, 1.0, 1.0 + 1e-9)
    with pytest.raises(DomainError):
        kernel_integrable(p, 0.0, 1.0)


def test_integrable_detects_sign_error():
    p = KernelParams(1, 2, 1)
    good = b_coeffs(nu_vector(p))
    bad = type(good)(good.nu, tuple(-v for v in good.b))
    assert abs(kernel_integrable(p, 0.3, 1.1, coeffs=bad) - kernel_series(p, 0.3, 1.1)) > 1e-3


@pytest.mark.parametrize("alpha,m,n", GRID)
def test_meijer_g_identifications(alpha, m, n):
    p = KernelParams(alpha, m, n)
    nu = [float(v) for v in nu_vector(p)]
    for x in (0.2, 1.4):
        f_oracle = mpmath.meijerg([[], []], [[-v for v in nu[n:]], [-v for v in nu[:n]]], x)
        g_oracle = mpmath.meijerg([[], []], [nu[:n], nu[n:]], x)
        assert ftilde_series(p, x)(x) == pytest.approx(float(f_oracle), rel=1e-11, abs=1e-14)
        assert gtilde_series(p, x)(x) == pytest.approx(float(g_oracle), rel=1e-11, abs=1e-14)


@pytest.mark.parametrize("alpha,m,n", GRID)
def test_differential_equations(alpha, m, n):
    p = KernelParams(alpha, m, n)
    for x in (0.5, 1.5, 3.0):
        assert abs(f_ode_residual(p, x)) < 1e-10
        assert abs(g_ode_residual(p, x)) < 1e-10
        assert abs(ftilde_ode_residual(p, x)) < 1e-10
        assert abs(gtilde_ode_residual(p, x)) < 1e-10


@pytest.mark.parametrize("alpha,m,n", GRID)
def test_scaled_kernel_routes(alpha, m, n):
    p = KernelParams(alpha, m, n)
    x, y = 0.35, 0.8
    a = kernel_tilde(p, x, y, route="integrable")
    b = kernel_tilde(p, x, y, route="scaling")
    c = float(kernel_tilde_matrix(p, [x], [y])[0, 0])
    assert a == pytest.approx(b, rel=1e-11)
    assert c == pytest.approx(b, rel=1e-11)


def test_scaled_kernel_products_vanish_on_diagonal():
    p = KernelParams(1, 2, 1)
    x = 0.6
    assert abs(sum(phi(p, i, x) * psi(p, i, x) for i in range(p.size))) < 1e-13


def test_scaled_kernel_derivative():
    p = KernelParams(2, 3, 2)
    x, y, h = 0.5, 0.9, 1e-5
    fd = x * (kernel_tilde(p, x + h, y, "scaling") - kernel_tilde(p, x - h, y, "scaling")) / (2 * h)
    assert float(kernel_tilde_dx_matrix(p, [x], [y])[0, 0]) == pytest.approx(fd, rel=1e-7)


def test_scaled_kernel_bad_route():
    with pytest.raises(ValueError):
        kernel_tilde(KernelParams(1, 1, 1), 0.2, 0.4, route="nope")
    with pytest.raises(DomainError):
        kernel_tilde(KernelParams(1, 1, 1), 0.0, 0.4)


@pytest.mark.parametrize("alpha,m,n", GRID)
def test_boundary_concomitant_decays(alpha, m, n):
    p = KernelParams(alpha, m, n)
    mags, observed = boundary_decay(p, 1.3, 0.7)
    assert mags[1] < mags[0]
    assert observed >= boundary_exponent(p) - 0.05
    assert abs(boundary_concomitant(p, 1.3, 0.7, 1e-12)) < abs(boundary_concomitant(p, 1.3, 0.7, 1e-6))


def test_adaptive_quadrature():
    assert adaptive_gauss_legendre(np.exp, 0.0, 1.0, 1e-14) == pytest.approx(math.e - 1, abs=1e-14)
    with pytest.raises(QuadratureFailure):
        adaptive_gauss_legendre(lambda t: 1 / np.sqrt(np.abs(t - 0.3)), 0.0, 1.0, 1e-15, max_intervals=5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_series_and_integral_agree_everywhere(x, y):
    p = KernelParams(1, 2, 1)
    assert kernel_integral(p, x, y) == pytest.approx(kernel_series(p, x, y), abs=1e-11)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0))
def test_theta_one_kernel_is_symmetric(x, y):
    # (x/y)**(-alpha/2) K(x, y) is the symmetric Bessel kernel
    p = KernelParams(1, 1, 1)
    assert kernel_series(p, x, y) * y / x == pytest.approx(kernel_series(p, y, x), rel=1e-12, abs=1e-15)
