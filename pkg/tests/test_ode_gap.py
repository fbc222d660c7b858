import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wrightkernel import (
    DomainError,
    GapState,
    IntervalUnion,
    InvalidParameters,
    KernelParams,
    Resolvent,
    StepFailure,
    gap_forms,
    gap_probability,
    gap_via_ode,
    init_state,
    integrate,
    ode_rhs,
    phi,
    psi,
)
from wrightkernel.ode_gap import S0_BOUNDS, default_s0, gap_curve_ode, head_log_det
from wrightkernel.pde_verify import single_interval_consistency

CURVES = [KernelParams(1, 1, 1), KernelParams(1, 2, 1), KernelParams(2, 3, 2), KernelParams(0.5, 1, 2)]


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.floats(1e-3, 10.0))
def test_state_round_trip(nn, s):
    z = np.arange(4 * nn, dtype=float)
    state = GapState.unpack(s, z, nn)
    np.testing.assert_array_equal(state.pack(), z)


def test_leading_order_initial_data():
    p = KernelParams(1, 2, 1)
    st0 = init_state(p, 1e-4)
    for j in range(p.size):
        assert st0.x[j] == pytest.approx(phi(p, j, 1e-4), rel=1e-15)
        assert st0.y[j] == pytest.approx(psi(p, j, 1e-4), rel=1e-15)
    np.testing.assert_array_equal(st0.u, [0.0, 0.0, 0.5])
    np.testing.assert_array_equal(st0.v, 0.0)


def test_corrected_initial_data_matches_resolvent():
    # first-order data over (0, s0) against the Nystrom resolvent on the same interval
    p = KernelParams(1, 2, 1)
    errors = []
    for s0 in (1e-3, 1e-4):
        rq = Resolvent(p, IntervalUnion((0.0, s0))).quantities()
        ref = GapState(s0, rq.x_jk[:, 1], rq.y_jk[:, 1], rq.u, rq.v)
        rel = lambda st: max(np.max(np.abs(st.x / ref.x - 1)), np.max(np.abs(st.y / ref.y - 1)),
                             np.max(np.abs(st.u - ref.u)), np.max(np.abs(st.v - ref.v)))
        errors.append((rel(init_state(p, s0, corrected=True)), rel(init_state(p, s0))))
    for corrected, plain in errors:
        assert corrected < 0.05 * plain
    # plain data are off at order s0, corrected data at a higher order
    assert errors[0][1] / errors[1][1] == pytest.approx(10, rel=0.1)
    assert errors[0][0] / errors[1][0] > 25


def test_initial_data_rejects_bad_input():
    with pytest.raises(DomainError):
        init_state(KernelParams(1, 2, 1), 0.0)
    with pytest.raises(InvalidParameters):
        init_state(KernelParams(0, 2, 3), 1e-6)


@pytest.mark.parametrize("p", CURVES, ids=str)
def test_default_start(p):
    s0 = default_s0(p)
    assert S0_BOUNDS[0] <= s0 <= S0_BOUNDS[1]
    assert abs(head_log_det(p, s0)) <= 1.01e-9


def test_rhs_matches_endpoint_derivative():
    assert single_interval_consistency(KernelParams(1, 2, 1), 0.5) < 1e-6


def test_rhs_rejects_zero():
    p = KernelParams(1, 1, 1)
    with pytest.raises(DomainError):
        ode_rhs(p, GapState(0.0, *([np.zeros(2)] * 4)))


def test_exponential_case():
    p = KernelParams(0, 1, 1)
    for s in (0.3, 1.0, 2.5):
        assert gap_via_ode(p, s) == pytest.approx(math.exp(-s), rel=1e-9)


@pytest.mark.parametrize("p", CURVES, ids=str)
def test_two_routes_agree(p):
    for r in gap_curve_ode(p, [0.0, 0.25, 1.0, 2.0]):
        assert r.value == pytest.approx(gap_probability(p, r.s), abs=1e-8)
        assert r.discrepancy < 1e-9


def test_below_start_uses_head():
    p = KernelParams(1, 2, 1)
    s0 = default_s0(p)
    tiny = (s0 / 10 * 2) ** 0.5  # scaled value s0/10
    res = gap_curve_ode(p, [tiny])[0]
    assert res.value == pytest.approx(gap_probability(p, tiny), rel=1e-12)


def test_forms():
    res = gap_forms(KernelParams(1, 2, 1), 1.0)
    assert res.log_v0 == pytest.approx(math.log(res.value))
    assert res.discrepancy < 1e-9


def test_trajectory():
    p = KernelParams(1, 2, 1)
    traj = integrate(p, 1e-8, 1.0)
    assert traj.s1 == pytest.approx(1.0)
    assert traj.n_steps > 5
    mid = traj.at(0.4)
    assert mid.s == 0.4 and mid.x.shape == (3,)
    with pytest.raises(DomainError):
        traj.raw(2.0)


def test_integrator_errors():
    p = KernelParams(1, 2, 1)
    with pytest.raises(DomainError):
        integrate(p, 1.0, 0.5)
    with pytest.raises(DomainError):
        integrate(p, 1e-6, 1.0, tol=0.0)
    with pytest.raises(StepFailure):
        integrate(p, 1e-6, 1.0, max_steps=3)
    with pytest.raises(DomainError):
        gap_curve_ode(p, [-1.0])


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 2.0))
def test_ode_gap_in_unit_interval(s):
    F = gap_via_ode(KernelParams(1, 2, 1), s)
    assert 0 < F < 1
