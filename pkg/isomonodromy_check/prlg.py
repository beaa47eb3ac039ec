"""
Fields of the inhomogeneous complexified PRLG system read off the Lax data of
a KNS trajectory, and finite-difference certification of its first-order
system, the algebraic constraint and the second-order equations for a and b.
"""

# Standard
from typing import Dict, List, Optional, Tuple
import cmath
import dataclasses

# First Party
import alog

# Local
from .errors import BranchAmbiguity
from .flows import DEFAULT_TOL, integrate, integrate_segment
from .hamiltonians import Chart, Form, KnsState, TimePoint, state_from_array
from .lax import STENCIL_METHOD, STENCIL_TOL, build_A, stencil_states
from .params import ParameterSet
from .residuals import normalized_residual, write_csv

log = alog.use_channel("PRLGS")

## Globals #####################################################################

PRLG_CSV_SCHEMA = "prlg/v1"
FIELDS = ["a", "b", "c", "d", "e"]
SYSTEM_EQUATIONS = ["c", "d", "e", "b", "a"]
SECOND_ORDER_EQUATIONS = ["b", "a"]

# A root whose distance to the previous one exceeds this fraction of the gap
# between the two candidates is ambiguous; 0.5 is the midpoint
BRANCH_SEPARATION = 0.45


## Domain Types ################################################################


@dataclasses.dataclass(frozen=True)
class PrlgState:
    """PRLG fields at one time point"""

    time: TimePoint
    a: complex
    b: complex
    c: complex
    d: complex
    e: complex

    @property
    def constraint_residual(self) -> float:
        """|c^2 + d e - 1/4|"""
        return abs(self.c**2 + self.d * self.e - 0.25)

    def to_row(self) -> list:
        tau = self.time.to_chart(Chart.TAU)
        return [tau.c1, tau.c2, self.a, self.b, self.c, self.d, self.e]


@dataclasses.dataclass
class PrlgGrid:
    """KNS states on a rectangular (tau1, tau2) grid; times[i][k] has
    tau1 = base tau1 + i spacing and tau2 = base tau2 + k spacing
    """

    times: List[List[TimePoint]]
    states: List[List[KnsState]]
    spacing: float

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.times), len(self.times[0])

    def nodes(self) -> List[Tuple[TimePoint, KnsState]]:
        """Row-major list of (time, state)"""
        return [
            (time, state)
            for row_t, row_s in zip(self.times, self.states)
            for time, state in zip(row_t, row_s)
        ]


## Extraction ##################################################################


def extract_prlg(
    state: KnsState,
    time: TimePoint,
    params: ParameterSet,
    *,
    flip: Optional[str] = None,
) -> PrlgState:
    """Read a, b from the summed residue matrices and c, d, e from P2 and u

    Kwargs:
        flip:  Optional[str]
            Name of a field whose sign is flipped (negative control)
    """
    family = build_A(time, state, params)
    summed = family.A0_0 + family.A1_0
    values = {
        "a": summed[1, 0],
        "b": summed[0, 1],
        "c": state.P2 - 0.5,
        "d": -state.u * state.P2,
        "e": (state.P2 - 1) / state.u,
    }
    if flip is not None:
        if flip not in values:
            raise ValueError(f"Unknown PRLG field {flip}")
        values[flip] = -values[flip]
    return PrlgState(time=time.to_chart(Chart.TAU), **{k: complex(v) for k, v in values.items()})


def build_prlg_grid(
    base_time: TimePoint,
    base_state: KnsState,
    params: ParameterSet,
    shape: Tuple[int, int],
    spacing: float,
    *,
    tol: float = DEFAULT_TOL,
) -> PrlgGrid:
    """Integrate the KNS flow along tau1 from the base, then along tau2 from
    every tau1 node, sampling on the grid
    """
    n1, n2 = shape
    base = base_time.to_chart(Chart.TAU)
    column = integrate(
        Form.KNS,
        1,
        base,
        base_state,
        base.c1 + (n1 - 1) * spacing,
        params,
        tol=tol,
        chart=Chart.TAU,
        samples=n1,
    )
    times, states = [], []
    for start_time, start_values in column.samples:
        row = integrate(
            Form.KNS,
            2,
            start_time,
            state_from_array(Form.KNS, start_values),
            start_time.c2 + (n2 - 1) * spacing,
            params,
            tol=tol,
            chart=Chart.TAU,
            samples=n2,
        )
        times.append([time for time, _ in row.samples])
        states.append([state_from_array(Form.KNS, values) for _, values in row.samples])
    log.debug("Built a %dx%d PRLG grid with spacing %.3e", n1, n2, spacing)
    return PrlgGrid(times=times, states=states, spacing=spacing)


## Residuals ###################################################################


@dataclasses.dataclass
class PrlgStencil:
    """PRLG fields at a node and at its first-order and mixed neighbours"""

    h: float
    center: PrlgState
    tau1: Tuple[PrlgState, PrlgState]
    tau2: Tuple[PrlgState, PrlgState]
    mixed: Dict[Tuple[int, int], PrlgState]

    def first(self, field: str, j: int) -> complex:
        minus, plus = self.tau1 if j == 1 else self.tau2
        return (getattr(plus, field) - getattr(minus, field)) / (2 * self.h)

    def mixed_partial(self, field: str) -> complex:
        value = sum(
            sign1 * sign2 * getattr(self.mixed[(sign1, sign2)], field)
            for sign1 in (-1, 1)
            for sign2 in (-1, 1)
        )
        return value / (4 * self.h**2)


def prlg_stencil(
    time: TimePoint,
    state: KnsState,
    params: ParameterSet,
    h: float,
    *,
    tol: float = STENCIL_TOL,
    mixed: bool = True,
    flip: Optional[str] = None,
) -> PrlgStencil:
    """Sample the PRLG fields around a node on short arcs of the KNS flow"""
    tau = time.to_chart(Chart.TAU)

    def fields(at_time, at_state):
        return extract_prlg(at_state, at_time, params, flip=flip)

    neighbours = {
        j: tuple(fields(*node) for node in stencil_states(tau, state, j, h, params, tol=tol))
        for j in (1, 2)
    }
    corners = {}
    if mixed:
        for sign1 in (-1, 1):
            for sign2 in (-1, 1):
                corner = TimePoint(Chart.TAU, tau.c1 + sign1 * h, tau.c2 + sign2 * h)
                arc = integrate_segment(
                    Form.KNS,
                    tau,
                    corner,
                    state.to_array(),
                    params,
                    tol=tol,
                    clearance=0.0,
                    method=STENCIL_METHOD,
                )
                corners[(sign1, sign2)] = fields(corner, arc.end_state)
    return PrlgStencil(
        h=h,
        center=fields(tau, state),
        tau1=neighbours[1],
        tau2=neighbours[2],
        mixed=corners,
    )


def system_residuals(stencil: PrlgStencil) -> Dict[str, float]:
    """Normalised residuals of the five first-order equations at one node"""
    s = stencil.center
    tau1 = s.time.c1
    scale = max(abs(s.a), abs(s.b), abs(s.c), abs(s.d), abs(s.e))
    equations = {
        "c": (tau1 * stencil.first("c", 1), s.e * s.b - s.a * s.d),
        "d": (tau1 * stencil.first("d", 1), -2 * s.b * s.c),
        "e": (tau1 * stencil.first("e", 1), 2 * s.a * s.c),
        "b": (stencil.first("b", 2), tau1 * s.d),
        "a": (stencil.first("a", 2), -s.e * tau1),
    }
    return {
        name: normalized_residual(lhs, rhs, scale) for name, (lhs, rhs) in equations.items()
    }


def second_order_residuals(
    stencil: PrlgStencil, root: complex
) -> Dict[str, float]:
    """Residuals of tau1 f_{tau1 tau2} = f_{tau2} - f root for f in (b, a)"""
    s = stencil.center
    tau1 = s.time.c1
    residuals = {}
    for name in SECOND_ORDER_EQUATIONS:
        value = getattr(s, name)
        lhs = tau1 * stencil.mixed_partial(name)
        rhs = stencil.first(name, 2) - value * root
        residuals[name] = normalized_residual(lhs, rhs, max(abs(value), abs(root)))
    return residuals


def radicand(stencil: PrlgStencil) -> complex:
    """tau1^2 + 4 a_{tau2} b_{tau2}"""
    tau1 = stencil.center.time.c1
    return tau1**2 + 4 * stencil.first("a", 2) * stencil.first("b", 2)


def continue_root(value: complex, previous: complex) -> complex:
    """Pick the square root of `value` nearest to `previous`

    Raises BranchAmbiguity when both candidates are about as far from the
    previous root, which happens when the radicand passes near the cut point
    between neighbouring nodes.
    """
    root = cmath.sqrt(value)
    near, far = sorted((root, -root), key=lambda r: abs(r - previous))
    if abs(near - previous) > BRANCH_SEPARATION * abs(far - near):
        raise BranchAmbiguity(
            f"Cannot continue sqrt({value}) from {previous}: candidates {near}, {far}"
        )
    return near


def prlg_system_residual(
    grid: PrlgGrid,
    params: ParameterSet,
    h: float,
    *,
    tol: float = STENCIL_TOL,
    flip: Optional[str] = None,
) -> Dict[str, float]:
    """Largest normalised residual of each first-order equation over the grid"""
    worst = {name: 0.0 for name in SYSTEM_EQUATIONS}
    for time, state in grid.nodes():
        stencil = prlg_stencil(time, state, params, h, tol=tol, mixed=False, flip=flip)
        for name, value in system_residuals(stencil).items():
            worst[name] = max(worst[name], value)
    log.debug2("PRLG system residuals at h=%.1e: %s", h, worst)
    return worst


def prlg_second_order_residual(
    grid: PrlgGrid,
    params: ParameterSet,
    h: float,
    *,
    tol: float = STENCIL_TOL,
    flip: Optional[str] = None,
) -> Dict[str, float]:
    """Largest normalised residual of the b- and a-equations over the grid.

    The square root of the radicand equals 2 tau1 c on a solution; the corner
    node picks the root nearest that value and the choice is continued row by
    row, each row starting from the root of the node above.
    """
    worst = {name: 0.0 for name in SECOND_ORDER_EQUATIONS}
    n1, n2 = grid.shape
    row_start: Optional[complex] = None
    for i in range(n1):
        previous = row_start
        for k in range(n2):
            time, state = grid.times[i][k], grid.states[i][k]
            stencil = prlg_stencil(time, state, params, h, tol=tol, flip=flip)
            if previous is None:
                center = stencil.center
                anchor = 2 * center.time.c1 * center.c
            else:
                anchor = previous
            root = continue_root(radicand(stencil), anchor)
            if k == 0:
                row_start = root
            previous = root
            for name, value in second_order_residuals(stencil, root).items():
                worst[name] = max(worst[name], value)
    log.debug2("PRLG second-order residuals at h=%.1e: %s", h, worst)
    return worst


def constraint_residuals(grid: PrlgGrid, params: ParameterSet) -> List[float]:
    """|c^2 + d e - 1/4| at every grid node"""
    return [
        extract_prlg(state, time, params).constraint_residual
        for time, state in grid.nodes()
    ]


def write_prlg_csv(path: str, grid: PrlgGrid, params: ParameterSet):
    rows = []
    for time, state in grid.nodes():
        sample = extract_prlg(state, time, params)
        rows.append(sample.to_row() + [sample.constraint_residual])
    write_csv(
        path,
        PRLG_CSV_SCHEMA,
        ["tau1", "tau2"] + FIELDS + ["constraint"],
        rows,
    )
