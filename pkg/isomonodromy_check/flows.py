"""
Integration of the two-time Hamiltonian flows along piecewise straight paths
in complex time.

A segment from time a to time b (in the form's native chart) is parametrised
by s in [0, 1], t(s) = a + s (b - a), and the state obeys

    dX/ds = (b1 - a1) V1(t(s), X) + (b2 - a2) V2(t(s), X)

with V_j the Hamiltonian vector field of time j. Segments along a single time
of the tau chart are still straight in the t chart, so the KNS form also
accepts tau-chart targets.
"""

# Standard
from typing import Callable, List, Optional, Sequence, Tuple
import csv
import dataclasses

# Third Party
from scipy.integrate import solve_ivp
import numpy as np

# First Party
import alog

# Local
from .errors import PathClearanceError, StepFailure
from .hamiltonians import (
    NATIVE_CHART,
    AnyState,
    Chart,
    Form,
    TimePoint,
    form_of,
    state_from_array,
    vector_field,
)
from .params import ParameterSet

log = alog.use_channel("FLOWS")

## Globals #####################################################################

DEFAULT_TOL = 1e-10
DEFAULT_CLEARANCE = 0.05
DEFAULT_METHOD = "RK45"

# Schema tag written in the header line of trajectory CSV files
TRAJECTORY_CSV_SCHEMA = "trajectory/v1"

_STATE_LABELS = {
    Form.RATIONAL: ["lambda1", "lambda2", "mu1", "mu2"],
    Form.POLYNOMIAL: ["q1", "q2", "p1", "p2"],
    Form.KNS: ["Q1", "Q2", "P1", "P2", "u"],
}


## Domain Types ################################################################


@dataclasses.dataclass
class FlowPath:
    """Piecewise straight path; each segment moves one time of `chart` to the
    given value
    """

    start: TimePoint
    segments: List[Tuple[int, complex]]
    chart: Optional[Chart] = None

    def nodes(self, form: Form) -> List[TimePoint]:
        """Start and segment end points, in the path's chart"""
        chart = self.chart or NATIVE_CHART[form]
        current = self.start.to_chart(chart)
        points = [current]
        for j, value in self.segments:
            current = current.with_coordinate(j, value)
            points.append(current)
        return points


@dataclasses.dataclass
class Trajectory:
    """Samples of one integration plus integrator statistics"""

    form: Form
    samples: List[Tuple[TimePoint, np.ndarray]]
    steps: int = 0
    nfev: int = 0
    tol: float = DEFAULT_TOL

    @property
    def end_time(self) -> TimePoint:
        return self.samples[-1][0]

    @property
    def end_array(self) -> np.ndarray:
        return self.samples[-1][1]

    @property
    def end_state(self) -> AnyState:
        return state_from_array(self.form, self.end_array)

    def extend(self, other: "Trajectory"):
        """Append a continuation that starts where this one ends"""
        self.samples.extend(other.samples[1:])
        self.steps += other.steps
        self.nfev += other.nfev


## Interface ###################################################################


def integrate(
    form: Form,
    j: int,
    start: TimePoint,
    state: AnyState,
    target: complex,
    params: ParameterSet,
    *,
    tol: float = DEFAULT_TOL,
    chart: Optional[Chart] = None,
    samples: int = 2,
    clearance: float = DEFAULT_CLEARANCE,
    method: str = DEFAULT_METHOD,
    corrupt: Optional[int] = None,
) -> Trajectory:
    """Integrate the flow of time j from `start` until that time equals
    `target`, all other times fixed.

    Args:
        form:  Form
            Which Hamiltonian chart to integrate
        j:  int
            Index of the moving time
        start:  TimePoint
            Initial time (any chart)
        state:  AnyState
            Initial phase state of the matching form
        target:  complex
            Final value of time j in `chart`
        params:  ParameterSet
            The constants of the Hamiltonians

    Kwargs:
        tol:  float
            rtol = atol of the adaptive Runge-Kutta pair
        chart:  Optional[Chart]
            Chart of `target`; defaults to the native chart of the form. The
            KNS form also accepts the TAU chart.
        samples:  int
            Number of equally spaced output nodes along the segment (>= 2)
        clearance:  float
            Minimal distance of every time coordinate from zero on the segment
        method:  str
            solve_ivp method name
        corrupt:  Optional[int]
            Negate this velocity component of the time-1 flow (negative
            control)

    Returns:
        trajectory:  Trajectory
            Samples in `chart`, end state included
    """
    chart = _resolve_chart(form, chart)
    if form_of(state) != form:
        raise TypeError(f"State {type(state).__name__} does not belong to {form}")
    begin = start.to_chart(chart)
    end = begin.with_coordinate(j, target)
    return integrate_segment(
        form,
        begin,
        end,
        state.to_array(),
        params,
        tol=tol,
        samples=samples,
        clearance=clearance,
        method=method,
        corrupt=corrupt,
    )


def integrate_segment(
    form: Form,
    begin: TimePoint,
    end: TimePoint,
    y0: np.ndarray,
    params: ParameterSet,
    *,
    tol: float = DEFAULT_TOL,
    samples: int = 2,
    clearance: float = DEFAULT_CLEARANCE,
    method: str = DEFAULT_METHOD,
    corrupt: Optional[int] = None,
) -> Trajectory:
    """Integrate along the straight native-chart segment between two times.
    Both times may move at once; compatibility makes the result equal to any
    staircase path with the same ends.
    """
    native = NATIVE_CHART[form]
    a = begin.to_chart(native)
    b = end.to_chart(native)
    check_clearance(a, b, clearance)
    if begin.chart != native:
        check_clearance(begin, end.to_chart(begin.chart), clearance)
    y0 = np.asarray(y0, complex)
    delta = (b.c1 - a.c1, b.c2 - a.c2)
    nodes = np.linspace(0.0, 1.0, max(samples, 2))

    def to_output(s: float) -> TimePoint:
        point = TimePoint(native, a.c1 + s * delta[0], a.c2 + s * delta[1])
        return point.to_chart(begin.chart)

    if delta == (0, 0):
        return Trajectory(form, [(begin, y0.copy())], tol=tol)

    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        time = TimePoint(native, a.c1 + s * delta[0], a.c2 + s * delta[1])
        state = state_from_array(form, y)
        velocity = np.zeros_like(y)
        for jj, dj in ((1, delta[0]), (2, delta[1])):
            if dj == 0:
                continue
            field = vector_field(form, jj, time, state, params)
            if corrupt is not None and jj == 1:
                field[corrupt] = -field[corrupt]
            velocity += dj * field
        return velocity

    solution = solve_path(rhs, y0, tol=tol, nodes=nodes, method=method)
    samples_out = [
        (to_output(s), solution.y[:, idx].copy()) for idx, s in enumerate(nodes)
    ]
    samples_out[0] = (begin, y0.copy())
    log.debug3(
        "Integrated %s from %s to %s in %d steps", form.value, a, b, solution.steps
    )
    return Trajectory(
        form, samples_out, steps=solution.steps, nfev=solution.nfev, tol=tol
    )


def integrate_path(
    form: Form,
    path: FlowPath,
    state: AnyState,
    params: ParameterSet,
    **kwargs,
) -> Trajectory:
    """Integrate segment after segment along a FlowPath"""
    chart = _resolve_chart(form, path.chart)
    nodes = path.nodes(form)
    trajectory = Trajectory(form, [(nodes[0], state.to_array())])
    current = state
    for (j, value), node in zip(path.segments, nodes[:-1]):
        piece = integrate(
            form, j, node, current, value, params, chart=chart, **kwargs
        )
        trajectory.extend(piece)
        trajectory.tol = piece.tol
        current = piece.end_state
    return trajectory


def commute_check(
    form: Form,
    start: TimePoint,
    state: AnyState,
    dt1: complex,
    dt2: complex,
    params: ParameterSet,
    *,
    tol: float = DEFAULT_TOL,
    chart: Optional[Chart] = None,
    **kwargs,
) -> float:
    """Deviation between the two staircase paths around the rectangle with
    sides dt1, dt2, relative to max(1, |end state|)
    """
    chart = _resolve_chart(form, chart)
    begin = start.to_chart(chart)
    first = FlowPath(begin, [(1, begin.c1 + dt1), (2, begin.c2 + dt2)], chart)
    second = FlowPath(begin, [(2, begin.c2 + dt2), (1, begin.c1 + dt1)], chart)
    end_a = integrate_path(form, first, state, params, tol=tol, **kwargs).end_array
    end_b = integrate_path(form, second, state, params, tol=tol, **kwargs).end_array
    deviation = float(np.linalg.norm(end_a - end_b) / max(1.0, np.linalg.norm(end_a)))
    log.debug2("Commutation deviation for %s: %.3e", form.value, deviation)
    return deviation


@dataclasses.dataclass
class PathSolution:
    """Dense samples of a solve over s in [0, 1]"""

    y: np.ndarray
    steps: int
    nfev: int


def solve_path(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    *,
    tol: float,
    nodes: Sequence[float] = (0.0, 1.0),
    method: str = DEFAULT_METHOD,
) -> PathSolution:
    """Run solve_ivp over s in [0, 1] on a complex state and raise StepFailure
    when the step size collapses
    """
    result = solve_ivp(
        rhs,
        (0.0, 1.0),
        np.asarray(y0, complex),
        method=method,
        t_eval=np.asarray(nodes, float),
        rtol=tol,
        atol=tol,
    )
    if result.status != 0:
        raise StepFailure(f"Integration failed: {result.message}")
    return PathSolution(y=result.y, steps=max(len(result.t) - 1, 0), nfev=result.nfev)


def check_clearance(a: TimePoint, b: TimePoint, clearance: float):
    """Raise if either time coordinate comes within `clearance` of zero on the
    straight segment from a to b
    """
    for name, za, zb in (("1", a.c1, b.c1), ("2", a.c2, b.c2)):
        if _distance_to_origin(za, zb) < clearance:
            raise PathClearanceError(
                f"Segment {a} -> {b} passes within {clearance} of {a.chart.value}{name} = 0"
            )


def write_trajectory_csv(path: str, trajectory: Trajectory):
    """Columns: time re/im pairs of the sample's chart, then state re/im pairs"""
    labels = _STATE_LABELS[trajectory.form]
    header = ["c1_re", "c1_im", "c2_re", "c2_im"]
    if trajectory.samples and trajectory.samples[0][0].chart == Chart.T:
        header = ["t1_re", "t1_im", "t2_re", "t2_im"]
    for label in labels:
        header += [f"{label}_re", f"{label}_im"]
    with open(path, "w", newline="") as handle:
        handle.write(f"# schema: {TRAJECTORY_CSV_SCHEMA} form={trajectory.form.value}\n")
        writer = csv.writer(handle)
        writer.writerow(header)
        for time, values in trajectory.samples:
            row = [time.c1.real, time.c1.imag, time.c2.real, time.c2.imag]
            for value in values:
                row += [value.real, value.imag]
            writer.writerow([repr(float(entry)) for entry in row])


## Implementation Details ######################################################


def _resolve_chart(form: Form, chart: Optional[Chart]) -> Chart:
    native = NATIVE_CHART[form]
    chart = chart or native
    if chart != native and not (form == Form.KNS and chart == Chart.TAU):
        raise ValueError(f"Form {form.value} cannot integrate in chart {chart.value}")
    return chart


def _distance_to_origin(za: complex, zb: complex) -> float:
    direction = zb - za
    if direction == 0:
        return abs(za)
    s = -(za * direction.conjugate()).real / abs(direction) ** 2
    s = min(max(s, 0.0), 1.0)
    return abs(za + s * direction)
