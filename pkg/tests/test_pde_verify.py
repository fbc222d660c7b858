import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wrightkernel import DomainError, IntervalUnion, KernelParams
from wrightkernel.pde_verify import (
    FAMILIES,
    CanonicalCoords,
    Gradient,
    convergence_orders,
    coordinate_gradient,
    endpoint_derivatives,
    hamilton_equation_residuals,
    hamiltonian,
    hamiltonian_gradient,
    hamiltonian_report,
    involution_check,
    log_det_derivatives,
    pde_residuals,
    poisson_bracket,
    resolvent_diagonal_hamiltonians,
)

P = KernelParams(1, 2, 1)
J = IntervalUnion((0.2, 0.6, 1.0, 1.5))


@pytest.fixture(scope="module")
def derivs():
    return endpoint_derivatives(P, J, 32, 1e-4)


def random_coords(seed, N=3, L=4):
    rng = np.random.default_rng(seed)
    return CanonicalCoords(rng.normal(size=(N, L)), rng.normal(size=(N, L)), rng.normal(size=N),
                           rng.normal(size=N), np.sort(rng.uniform(0.1, 2.0, size=L)) + np.arange(L) * 0.1)


def random_gradient(coords, seed):
    rng = np.random.default_rng(seed)
    N, L = coords.q.shape
    return Gradient(rng.normal(size=(N, L)), rng.normal(size=(N, L)), rng.normal(size=N), rng.normal(size=N))


def test_all_families_small(derivs):
    res = pde_residuals(P, J, derivatives=derivs)
    assert set(res) == set(FAMILIES)
    assert max(res.values()) < 1e-6


def test_residuals_are_second_order():
    orders = convergence_orders(P, J, h=1e-3)
    assert all(1.9 < q < 2.1 for q in orders.values())


def test_other_parameters():
    p = KernelParams(2, 3, 2)
    res = pde_residuals(p, IntervalUnion((0.2, 0.5, 0.9, 1.3)), h=1e-4)
    assert max(res.values()) < 1e-6


def test_endpoint_at_zero_is_rejected():
    with pytest.raises(DomainError):
        pde_residuals(P, IntervalUnion((0.0, 0.5, 0.9, 1.3)))
    with pytest.raises(DomainError):
        endpoint_derivatives(P, J, 32, 0.0)


def test_hamiltonians_three_ways():
    rep = hamiltonian_report(P, J)
    np.testing.assert_allclose(rep.hamiltonians, rep.log_det_fd, atol=1e-8)
    np.testing.assert_allclose(rep.hamiltonians, rep.resolvent_diag, atol=1e-9)
    assert rep.max_relative_bracket < 1e-12


def test_log_det_derivatives_direct():
    np.testing.assert_allclose(log_det_derivatives(P, J), resolvent_diagonal_hamiltonians(P, J), atol=1e-8)


def test_hamilton_equations(derivs):
    res = hamilton_equation_residuals(P, J, derivatives=derivs)
    assert max(res.values()) < 1e-6


def test_canonical_relations():
    c = random_coords(0)
    for k in range(1, 5):
        for j in range(3):
            q = coordinate_gradient(c, "q", j, k)
            p = coordinate_gradient(c, "p", j, k)
            assert poisson_bracket(P, c, q, p) == pytest.approx(1 / c.a[k - 1])
            assert poisson_bracket(P, c, q, coordinate_gradient(c, "p", (j + 1) % 3, k)) == 0
    u = coordinate_gradient(c, "u", 1)
    v = coordinate_gradient(c, "v", 1)
    assert poisson_bracket(P, c, u, v) == (-1) ** P.n
    assert poisson_bracket(P, c, u, coordinate_gradient(c, "v", 2)) == 0


def test_bad_coordinate_names():
    c = random_coords(1)
    with pytest.raises(ValueError):
        coordinate_gradient(c, "z", 0)
    with pytest.raises(DomainError):
        hamiltonian(P, c, 5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_bracket_antisymmetry(s1, s2):
    c = random_coords(s1)
    f, g = random_gradient(c, s2), random_gradient(c, s2 + 1)
    assert poisson_bracket(P, c, f, g) == pytest.approx(-poisson_bracket(P, c, g, f), abs=1e-12)
    assert poisson_bracket(P, c, f, f) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_gradient_matches_finite_differences(seed, k):
    c = random_coords(seed)
    g = hamiltonian_gradient(P, c, k)
    h = 1e-6
    for name in ("q", "p", "u", "v"):
        arr = getattr(c, name)
        for idx in np.ndindex(arr.shape):
            plus, minus = arr.copy(), arr.copy()
            plus[idx] += h
            minus[idx] -= h
            fp = hamiltonian(P, CanonicalCoords(**{**vars(c), name: plus}), k)
            fm = hamiltonian(P, CanonicalCoords(**{**vars(c), name: minus}), k)
            assert getattr(g, "d" + name)[idx] == pytest.approx((fp - fm) / (2 * h), rel=1e-6, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([(1, 2), (1, 3), (2, 4), (3, 4)]))
def test_involution_is_a_polynomial_identity(seed, pair):
    c = random_coords(seed)
    scale = np.max(np.abs(c.q)) ** 2 * np.max(np.abs(c.p)) ** 2 / np.min(c.a)
    assert abs(involution_check(P, c, *pair)) < 1e-12 * max(1.0, scale) * 100


def test_involution_at_solved_coordinates():
    from wrightkernel import Resolvent

    c = CanonicalCoords.from_quantities(Resolvent(P, J).quantities())
    for i in range(1, 5):
        for j in range(i + 1, 5):
            assert abs(involution_check(P, c, i, j)) < 1e-12
    assert math.isfinite(hamiltonian(P, c, 1))
