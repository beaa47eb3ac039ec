"""
Tests for the two-time flow integrator
"""

# Third Party
import numpy as np
import pytest

# First Party
import alog

# Local
from isomonodromy_check.errors import PathClearanceError
from isomonodromy_check.flows import (
    FlowPath,
    commute_check,
    integrate,
    integrate_path,
    integrate_segment,
    write_trajectory_csv,
)
from isomonodromy_check.hamiltonians import (
    Chart,
    Form,
    KnsState,
    TimePoint,
    rational_to_polynomial_state,
)
from tests.conftest import KNS_STATE, POLYNOMIAL_STATE, RATIONAL_STATE

log = alog.use_channel("TEST")

TOL = 1e-11

## integrate ###################################################################


def test_zero_length_segment(params, kns_state, base_time):
    """Make sure a segment of zero length returns the initial state"""
    trajectory = integrate(Form.KNS, 1, base_time, kns_state, base_time.c1, params)
    assert trajectory.end_state == kns_state
    assert trajectory.steps == 0


def test_samples_are_equally_spaced(params, kns_state, base_time):
    """Make sure the requested output nodes are produced in the target chart"""
    start = base_time.to_chart(Chart.T)
    trajectory = integrate(
        Form.KNS, 2, start, kns_state, start.c2 + 0.1, params, samples=5
    )
    assert len(trajectory.samples) == 5
    times = [time.c2 for time, _ in trajectory.samples]
    np.testing.assert_allclose(np.diff(times), 0.025)
    assert trajectory.end_time.chart == Chart.T


@pytest.mark.parametrize("j", [1, 2])
def test_reversibility(j, params, kns_state, base_time):
    """Make sure flowing forward and back returns to the start"""
    start = base_time.to_chart(Chart.T)
    target = start.coordinate(j) + 0.1 + 0.05j
    forward = integrate(Form.KNS, j, start, kns_state, target, params, tol=TOL)
    back = integrate(
        Form.KNS,
        j,
        forward.end_time,
        forward.end_state,
        start.coordinate(j),
        params,
        tol=TOL,
    )
    np.testing.assert_allclose(back.end_array, kns_state.to_array(), atol=1e-8)


def test_wrong_state_form(params, rational_state, base_time):
    """Make sure a state of another form is rejected"""
    with pytest.raises(TypeError):
        integrate(Form.KNS, 1, base_time, rational_state, 1.1, params)


def test_unsupported_chart(params, polynomial_state, base_time):
    """Make sure the polynomial form refuses targets in the tau chart"""
    with pytest.raises(ValueError):
        integrate(
            Form.POLYNOMIAL, 1, base_time, polynomial_state, 1.1, params, chart=Chart.TAU
        )


def test_clearance(params, kns_state):
    """Make sure a segment passing next to t1 = 0 is refused"""
    start = TimePoint(Chart.T, -0.5 + 0.01j, 0.5)
    with pytest.raises(PathClearanceError):
        integrate(Form.KNS, 1, start, kns_state, 0.5 + 0.01j, params)


## Paths #######################################################################


def test_tau_chart_matches_t_chart(params, kns_state, base_time):
    """Make sure a tau-chart move lands where the equivalent t-chart move does"""
    via_tau = integrate(
        Form.KNS, 1, base_time, kns_state, 1.1, params, chart=Chart.TAU, tol=TOL
    )
    end = base_time.with_coordinate(1, 1.1)
    via_t = integrate_segment(
        Form.KNS, base_time.to_chart(Chart.T), end.to_chart(Chart.T),
        kns_state.to_array(), params, tol=TOL,
    )
    np.testing.assert_allclose(via_tau.end_array, via_t.end_array, atol=1e-8)


def test_diagonal_matches_staircase(params, kns_state, base_time):
    """Make sure a diagonal segment equals the two-leg staircase"""
    start = base_time.to_chart(Chart.T)
    end = TimePoint(Chart.T, start.c1 + 0.1, start.c2 - 0.05j)
    diagonal = integrate_segment(
        Form.KNS, start, end, kns_state.to_array(), params, tol=TOL
    )
    staircase = integrate_path(
        Form.KNS,
        FlowPath(start, [(1, end.c1), (2, end.c2)]),
        kns_state,
        params,
        tol=TOL,
    )
    np.testing.assert_allclose(diagonal.end_array, staircase.end_array, atol=1e-8)


def test_kns_flows_commute(params, kns_state, base_time):
    """Make sure the two KNS flows commute"""
    deviation = commute_check(
        Form.KNS, base_time, kns_state, 0.1, 0.1, params, tol=TOL
    )
    assert deviation < 1e-8


# Regular KNS points scattered around the reference point
_rng = np.random.default_rng(7)
_OFFSETS = _rng.uniform(-0.1, 0.1, (10, 4)) + 1j * _rng.uniform(-0.1, 0.1, (10, 4))
KNS_STATES = [
    KnsState(*(KNS_STATE.to_array()[:4] + offset), KNS_STATE.u) for offset in _OFFSETS
]


@pytest.mark.parametrize("state", KNS_STATES)
def test_kns_flows_commute_near_reference(state, params, base_time):
    """Make sure the KNS flows commute over 0.1 rectangles around the reference"""
    deviation = commute_check(
        Form.KNS, base_time, state, 0.1, 0.1, params, tol=1e-10, chart=Chart.TAU
    )
    assert deviation < 1e-8


# Every form with a starting point in its native chart
FORM_STATES = [
    (Form.KNS, KNS_STATE),
    (Form.RATIONAL, RATIONAL_STATE),
    (Form.POLYNOMIAL, POLYNOMIAL_STATE),
]


@pytest.mark.parametrize("form,state", FORM_STATES)
@pytest.mark.parametrize("tol", [1e-8, 1e-9, 1e-10])
def test_commutation_follows_tolerance(form, state, tol, params, base_time):
    """Make sure the commutation deviation stays within a fixed multiple of
    the integrator tolerance for every form
    """
    deviation = commute_check(form, base_time, state, 0.1, 0.1, params, tol=tol)
    assert deviation < 100 * tol


@pytest.mark.parametrize("form,state", FORM_STATES)
def test_commutation_shrinks_with_tolerance(form, state, params, base_time):
    """Make sure tightening the tolerance tightens the commutation"""
    loose = commute_check(form, base_time, state, 0.1, 0.1, params, tol=1e-8)
    tight = commute_check(form, base_time, state, 0.1, 0.1, params, tol=1e-10)
    assert tight < loose


def test_mapped_polynomial_flows_commute(params, base_time):
    """Make sure the polynomial flows commute from the image of the rational
    reference point
    """
    start, state = rational_to_polynomial_state(base_time, RATIONAL_STATE)
    deviation = commute_check(
        Form.POLYNOMIAL, start, state, 0.1, 0.1, params, tol=1e-10
    )
    assert deviation < 1e-8


def test_corrupted_field_breaks_commutation(params, kns_state, base_time):
    """Make sure a negated velocity component is detected"""
    deviation = commute_check(
        Form.KNS, base_time, kns_state, 0.1, 0.1, params, tol=TOL, corrupt=1
    )
    assert deviation > 1e-6


def test_u_does_not_feed_back(params, kns_state, base_time):
    """Make sure scaling u scales the end value of u and nothing else"""
    scaled = type(kns_state)(*kns_state.to_array()[:4], 3.0 * kns_state.u)
    end = integrate(Form.KNS, 2, base_time, kns_state, 0.6, params, tol=TOL)
    end_scaled = integrate(Form.KNS, 2, base_time, scaled, 0.6, params, tol=TOL)
    np.testing.assert_allclose(end_scaled.end_array[:4], end.end_array[:4], atol=1e-9)
    assert end_scaled.end_array[4] == pytest.approx(3.0 * end.end_array[4], rel=1e-8)


## Output ######################################################################


def test_trajectory_csv(tmp_path, params, kns_state, base_time):
    """Make sure the CSV carries a schema line and t-chart columns"""
    trajectory = integrate(
        Form.KNS, 1, base_time.to_chart(Chart.T), kns_state, 1.05, params, samples=3
    )
    path = tmp_path / "trajectory.csv"
    write_trajectory_csv(str(path), trajectory)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# schema: trajectory/v1")
    assert lines[1].startswith("t1_re,t1_im,t2_re,t2_im,Q1_re")
    assert len(lines) == 5
