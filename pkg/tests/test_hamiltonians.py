"""
Tests for the three Hamiltonian charts. The closed-form gradients are held
against central finite differences of the Hamiltonians.
"""

# Third Party
from hypothesis import given, settings
from hypothesis import strategies as st
import numpy as np
import pytest

# First Party
import alog

# Local
from isomonodromy_check.errors import GaugeZero, PoleError, ZeroTimeError
from isomonodromy_check.flows import integrate
from isomonodromy_check.hamiltonians import (
    NATIVE_CHART,
    Chart,
    Form,
    KnsState,
    RationalState,
    TimePoint,
    eval_hamiltonian,
    form_of,
    hamiltonian_gradient,
    rational_to_polynomial_coordinates,
    rational_to_polynomial_state,
    state_from_array,
    vector_field,
)
from isomonodromy_check.params import make_parameter_set
from tests.conftest import (
    BASE_TIME,
    FREE_PARAMS,
    KNS_STATE,
    POLYNOMIAL_STATE,
    RATIONAL_STATE,
)

log = alog.use_channel("TEST")

FD_STEP = 1e-6

STATES = {
    Form.RATIONAL: RATIONAL_STATE,
    Form.POLYNOMIAL: POLYNOMIAL_STATE,
    Form.KNS: KNS_STATE,
}


def fd_gradient(form, j, time, state, params):
    """Central differences of H in each phase coordinate (u excluded)"""
    values = state.to_array()
    grad = []
    for idx in range(4):
        shift = np.zeros_like(values)
        shift[idx] = FD_STEP
        plus = eval_hamiltonian(form, j, time, state_from_array(form, values + shift), params)
        minus = eval_hamiltonian(form, j, time, state_from_array(form, values - shift), params)
        grad.append((plus - minus) / (2 * FD_STEP))
    return np.array(grad)


## Charts ######################################################################


def test_chart_conversions():
    """Make sure the charts convert with the documented formulas"""
    tau = TimePoint(Chart.TAU, 2.0 + 0j, 0.5 + 0j)
    t = tau.to_chart(Chart.T)
    assert (t.c1, t.c2) == (2.0, 1.0)
    s = tau.to_chart(Chart.S)
    assert (s.c1, s.c2) == (0.5, -0.5)
    back = s.to_chart(Chart.T)
    assert back.c1 == pytest.approx(2.0)
    assert back.c2 == pytest.approx(1.0)


def test_zero_time():
    """Make sure converting through a zero time is refused"""
    with pytest.raises(ZeroTimeError):
        TimePoint(Chart.T, 0j, 1.0).to_chart(Chart.TAU)


def test_with_coordinate():
    """Make sure a single coordinate can be replaced"""
    time = BASE_TIME.with_coordinate(2, 0.7)
    assert time.coordinate(1) == BASE_TIME.c1
    assert time.coordinate(2) == 0.7
    with pytest.raises(ValueError):
        BASE_TIME.coordinate(3)


## Gradients ###################################################################


@pytest.mark.parametrize("form", list(Form))
@pytest.mark.parametrize("j", [1, 2])
def test_gradient_matches_finite_differences(form, j, params):
    """Make sure every closed-form gradient matches a finite difference"""
    state = STATES[form]
    d_coord, d_mom = hamiltonian_gradient(form, j, BASE_TIME, state, params)
    expected = fd_gradient(form, j, BASE_TIME, state, params)
    np.testing.assert_allclose(
        np.concatenate([d_coord, d_mom]), expected, rtol=1e-6, atol=1e-7
    )


_near_base = st.complex_numbers(max_magnitude=0.1, allow_nan=False, allow_infinity=False)


@settings(max_examples=25, deadline=None)
@given(_near_base, _near_base, _near_base, _near_base)
def test_kns_gradient_random_points(dq1, dq2, dp1, dp2):
    """Make sure the KNS gradients hold near the reference point"""
    params_ = make_parameter_set(**FREE_PARAMS)
    state = KnsState(
        KNS_STATE.Q1 + dq1,
        KNS_STATE.Q2 + dq2,
        KNS_STATE.P1 + dp1,
        KNS_STATE.P2 + dp2,
        KNS_STATE.u,
    )
    for j in (1, 2):
        d_coord, d_mom = hamiltonian_gradient(Form.KNS, j, BASE_TIME, state, params_)
        expected = fd_gradient(Form.KNS, j, BASE_TIME, state, params_)
        np.testing.assert_allclose(
            np.concatenate([d_coord, d_mom]), expected, rtol=1e-5, atol=1e-6
        )


@pytest.mark.parametrize("form", list(Form))
def test_vector_field_is_hamiltonian(form, params):
    """Make sure the velocity is (dH/dmom, -dH/dcoord)"""
    state = STATES[form]
    d_coord, d_mom = hamiltonian_gradient(form, 1, BASE_TIME, state, params)
    field = vector_field(form, 1, BASE_TIME, state, params)
    np.testing.assert_allclose(field[:2], d_mom)
    np.testing.assert_allclose(field[2:4], -d_coord)


def test_kns_gauge_velocity(params):
    """Make sure du/dt2 = -u Q2 / t2"""
    field = vector_field(Form.KNS, 2, BASE_TIME, KNS_STATE, params)
    t2 = BASE_TIME.to_chart(Chart.T).c2
    assert field[4] == pytest.approx(-KNS_STATE.u * KNS_STATE.Q2 / t2)


def test_kns_u_only_scales(params):
    """Make sure u never enters the phase velocity and du is linear in u"""
    doubled = KnsState(KNS_STATE.Q1, KNS_STATE.Q2, KNS_STATE.P1, KNS_STATE.P2, 2.0)
    for j in (1, 2):
        base = vector_field(Form.KNS, j, BASE_TIME, KNS_STATE, params)
        other = vector_field(Form.KNS, j, BASE_TIME, doubled, params)
        np.testing.assert_allclose(other[:4], base[:4])
        assert other[4] == pytest.approx(2 * base[4])


## Singular sets ###############################################################


def test_rational_poles(params):
    """Make sure evaluation on a pole of the rational form is refused"""
    on_pole = RationalState(1.0, 0.5, 0.1, 0.1)
    with pytest.raises(PoleError):
        eval_hamiltonian(Form.RATIONAL, 1, BASE_TIME, on_pole, params)
    coincident = RationalState(0.5, 0.5, 0.1, 0.1)
    with pytest.raises(PoleError):
        eval_hamiltonian(Form.RATIONAL, 2, BASE_TIME, coincident, params)


def test_gauge_zero(params):
    """Make sure a vanishing u is refused"""
    state = KnsState(KNS_STATE.Q1, KNS_STATE.Q2, KNS_STATE.P1, KNS_STATE.P2, 0j)
    with pytest.raises(GaugeZero):
        vector_field(Form.KNS, 1, BASE_TIME, state, params)


## Helpers #####################################################################


def test_state_round_trip_and_form():
    """Make sure states rebuild from arrays and report their form"""
    for form, state in STATES.items():
        assert state_from_array(form, state.to_array()) == state
        assert form_of(state) == form
    with pytest.raises(TypeError):
        form_of("not a state")
    assert NATIVE_CHART[Form.POLYNOMIAL] == Chart.S


def test_rational_to_polynomial_coordinates():
    """Make sure the coordinate map matches its formula"""
    state = RationalState(2.0, 3.0, 0.0, 0.0)
    time = TimePoint(Chart.TAU, 2.0, 0.5)
    s_time, q1, q2 = rational_to_polynomial_coordinates(time, state)
    assert q1 == pytest.approx(1.0)
    assert q2 == pytest.approx(6.0)
    assert (s_time.c1, s_time.c2) == (0.5, -0.5)


def test_rational_momenta_map_canonically():
    """Make sure the momenta pull back through the transposed Jacobian"""
    state = RationalState(2.0, 3.0, 0.5, -1.0)
    time = TimePoint(Chart.TAU, 2.0, 0.5)
    _, mapped = rational_to_polynomial_state(time, state)
    # d(q1, q2)/d(lambda1) = ((lambda2 - 1) / tau1, lambda2)
    assert mapped.p1 * 1.0 + mapped.p2 * 3.0 == pytest.approx(0.5)
    assert mapped.p1 * 0.5 + mapped.p2 * 2.0 == pytest.approx(-1.0)
    with pytest.raises(PoleError):
        rational_to_polynomial_state(time, RationalState(2.0, 2.0, 0.5, -1.0))


def test_rational_H2_carries_tau2(params):
    """Make sure the printed H2 is divided by tau2"""
    flat = params.replace(kappa=1.0)
    state = RationalState(2.0, 3.0, 0.0, 0.0)
    time = TimePoint(Chart.TAU, 1.0, 0.5)
    assert eval_hamiltonian(Form.RATIONAL, 2, time, state, flat) == pytest.approx(-12.0)
    assert eval_hamiltonian(Form.RATIONAL, 1, time, state, flat) == pytest.approx(-2.0)


@pytest.mark.parametrize("j,target", [(1, 1.1 + 0.05j), (2, 0.6 - 0.05j)])
def test_rational_and_polynomial_flows_agree(j, target, params):
    """Make sure a rational trajectory maps onto the polynomial trajectory
    started from the mapped point
    """
    rational = integrate(
        Form.RATIONAL, j, BASE_TIME, RATIONAL_STATE, target, params, tol=1e-11
    )
    end_time = BASE_TIME.with_coordinate(j, target)
    start, mapped = rational_to_polynomial_state(BASE_TIME, RATIONAL_STATE)
    polynomial = integrate(
        Form.POLYNOMIAL,
        j,
        start,
        mapped,
        end_time.to_chart(Chart.S).coordinate(j),
        params,
        tol=1e-11,
    )
    _, expected = rational_to_polynomial_state(
        end_time, state_from_array(Form.RATIONAL, rational.end_array)
    )
    np.testing.assert_allclose(
        polynomial.end_array, expected.to_array(), rtol=1e-7, atol=1e-8
    )
