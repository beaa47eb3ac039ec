"""
Joint fundamental solution Z of the gauged linear systems, the two-point
kernel M = Z(eta)^-1 Z(zeta), its gauges W = exp(-S) M and
Psi = exp(-f1 - f2) W, and finite-difference residuals of the scalar evolution
equations they satisfy.
"""

# Standard
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import cmath
import dataclasses

# Third Party
import numpy as np

# First Party
import alog

# Local
from . import evolution
from .errors import (
    CoincidentSpectral,
    ConstraintViolation,
    JacobianSingular,
    PathDependence,
    SingularZ,
    SpectralPole,
)
from .flows import DEFAULT_TOL, solve_path
from .hamiltonians import Chart, Form, KnsState, TimePoint, state_from_array, vector_field
from .lax import (
    STENCIL_METHOD,
    STENCIL_TOL,
    build_B,
    check_spectral_segment,
    integrate_spectral,
    rhs_tau,
)
from .params import ParameterSet, violated_constraints
from .residuals import normalized_residual, write_csv

log = alog.use_channel("PSIKR")

## Globals #####################################################################

DEFAULT_PATH_TOL = 1e-8
DET_TOL = 1e-8
SINGULAR_DET = 1e-12
RESIDUAL_CSV_SCHEMA = "psi-residuals/v1"
VARIANTS = ("printed", "derived", "reconciled")

# Layout of the joint vector: KNS state, S, then 4 entries of Z per point
_STATE = slice(0, 5)
_S_INDEX = 5
_Z_START = 6

# Spectral coordinate families of the residual stencils
SPECTRAL = "spectral"
XY = "xy"


## Joint solution ##############################################################


@dataclasses.dataclass
class JointSolution:
    """KNS state, gauge S and Z at a set of spectral points, at one time"""

    time: TimePoint
    state: KnsState
    S: complex
    Z: Dict[complex, np.ndarray]

    def subset(self, points: Iterable[complex]) -> "JointSolution":
        return JointSolution(
            self.time, self.state, self.S, {lam: self.Z[lam] for lam in points}
        )

    def to_array(self) -> np.ndarray:
        parts = [self.state.to_array(), [self.S]]
        parts.extend(self.Z[lam].ravel() for lam in self.Z)
        return np.concatenate(parts).astype(complex)


class FundamentalSolution:
    """Builds Z(tau, lambda) with Z = I at (base time, base_eta).

    Z at the base time is obtained along straight spectral segments from
    base_eta; the time dependence follows from the tau equations solved jointly
    with the KNS flow and the gauge S (S = 0 at the base time).
    """

    def __init__(
        self,
        params: ParameterSet,
        base_time: TimePoint,
        base_state: KnsState,
        base_eta: complex,
        *,
        tol: float = DEFAULT_TOL,
        method: str = STENCIL_METHOD,
        drop_det: bool = False,
    ):
        violated = violated_constraints(params)
        if violated:
            raise ConstraintViolation(
                f"Parameter set breaks the constraints {violated}; the kernel "
                "equations hold only for constrained sets"
            )
        self.params = params
        self.base_time = base_time.to_chart(Chart.TAU)
        self.base_state = base_state
        self.base_eta = complex(base_eta)
        self.tol = tol
        self.method = method
        self.drop_det = drop_det
        self._base_matrices = build_B(self.base_time, base_state, params)
        self._base_legs: Dict[complex, np.ndarray] = {}

    def base_Z(self, lam: complex, anchor: Optional[complex] = None) -> np.ndarray:
        """Z at the base time. With an anchor, Z(anchor) is carried over the
        short segment anchor -> lam
        """
        lam = complex(lam)
        if anchor is not None and complex(anchor) != lam:
            return integrate_spectral(
                self._base_matrices,
                self.base_Z(anchor),
                complex(anchor),
                lam,
                tol=STENCIL_TOL,
                method=self.method,
            )
        if lam not in self._base_legs:
            self._base_legs[lam] = integrate_spectral(
                self._base_matrices,
                np.eye(2, dtype=complex),
                self.base_eta,
                lam,
                tol=self.tol,
                method=self.method,
            )
        return self._base_legs[lam]

    def at_base(
        self,
        points: Sequence[complex],
        anchors: Optional[Dict[complex, complex]] = None,
    ) -> JointSolution:
        anchors = anchors or {}
        return JointSolution(
            self.base_time,
            self.base_state,
            0j,
            {complex(lam): self.base_Z(lam, anchors.get(lam)) for lam in points},
        )

    def solve(
        self,
        time: TimePoint,
        points: Sequence[complex],
        *,
        order: Tuple[int, int] = (1, 2),
        anchors: Optional[Dict[complex, complex]] = None,
    ) -> JointSolution:
        """Joint solution at `time`: move the tau times one after the other in
        `order`, starting from the base time
        """
        target = time.to_chart(Chart.TAU)
        current = self.at_base(points, anchors)
        for j in order:
            leg_end = current.time.with_coordinate(j, target.coordinate(j))
            current = self.advance(current, leg_end)
        return current

    def advance(
        self,
        start: JointSolution,
        target: TimePoint,
        *,
        tol: Optional[float] = None,
    ) -> JointSolution:
        """Integrate the joint system on the straight tau segment from the
        start time to `target`
        """
        a = start.time.to_chart(Chart.TAU)
        b = target.to_chart(Chart.TAU)
        delta = (b.c1 - a.c1, b.c2 - a.c2)
        if delta == (0, 0):
            return JointSolution(b, start.state, start.S, dict(start.Z))
        points = list(start.Z)
        rhs = self._joint_rhs(a, delta, points)
        solution = solve_path(
            rhs, start.to_array(), tol=tol or self.tol, method=self.method
        )
        end = solution.y[:, -1]
        log.debug4("Advanced %d spectral points from %s to %s", len(points), a, b)
        return self._unpack(b, end, points)

    def _joint_rhs(self, a: TimePoint, delta, points: List[complex]):
        params = self.params
        drop_det = self.drop_det

        def rhs(s: float, y: np.ndarray) -> np.ndarray:
            tau = TimePoint(Chart.TAU, a.c1 + s * delta[0], a.c2 + s * delta[1])
            state = state_from_array(Form.KNS, y[_STATE])
            out = np.zeros_like(y)
            v1 = vector_field(Form.KNS, 1, tau, state, params)
            v2 = vector_field(Form.KNS, 2, tau, state, params)
            # t1 = tau1, t2 = tau1 tau2
            out[_STATE] = delta[0] * (v1 + tau.c2 * v2) + delta[1] * tau.c1 * v2
            out[_S_INDEX] = delta[0] * evolution.s_equation_rhs(
                1, tau, state, params, drop_det=drop_det
            ) / tau.c1 + delta[1] * evolution.s_equation_rhs(
                2, tau, state, params
            ) / tau.c2
            mats = build_B(tau, state, params)
            for idx, lam in enumerate(points):
                block = slice(_Z_START + 4 * idx, _Z_START + 4 * idx + 4)
                coef = delta[0] * rhs_tau(mats, 1, lam, tau) + delta[1] * rhs_tau(
                    mats, 2, lam, tau
                )
                out[block] = (coef @ y[block].reshape(2, 2)).ravel()
            return out

        return rhs

    def _unpack(self, time: TimePoint, y: np.ndarray, points: List[complex]):
        Z = {
            lam: y[_Z_START + 4 * idx : _Z_START + 4 * idx + 4].reshape(2, 2).copy()
            for idx, lam in enumerate(points)
        }
        return JointSolution(
            time, state_from_array(Form.KNS, y[_STATE]), complex(y[_S_INDEX]), Z
        )


## Fundamental solution grid ###################################################


@dataclasses.dataclass
class FundamentalSolutionGrid:
    """Z on a grid of tau nodes times spectral points"""

    times: List[TimePoint]
    points: List[complex]
    solutions: List[JointSolution]
    tol: float

    def Z(self, time_index: int, lam: complex) -> np.ndarray:
        return self.solutions[time_index].Z[complex(lam)]

    def det_residuals(self) -> List[float]:
        """|det Z - 1| at every grid node"""
        return [
            abs(np.linalg.det(Z) - 1)
            for solution in self.solutions
            for Z in solution.Z.values()
        ]


def build_Z_grid(
    solver: FundamentalSolution,
    times: Sequence[TimePoint],
    points: Sequence[complex],
    *,
    path_tol: float = DEFAULT_PATH_TOL,
    verify_paths: bool = True,
) -> FundamentalSolutionGrid:
    """Z at every (time, spectral point) pair. With verify_paths the tau legs
    are also run in the opposite order and PathDependence is raised when the
    two disagree by more than path_tol
    """
    points = [complex(lam) for lam in points]
    for lam in points:
        check_spectral_segment(solver.base_eta, lam)
    solutions = []
    for time in times:
        solution = solver.solve(time, points)
        if verify_paths:
            swapped = solver.solve(time, points, order=(2, 1))
            deviation = max(
                _relative(solution.Z[lam], swapped.Z[lam]) for lam in points
            )
            if deviation > path_tol:
                raise PathDependence(
                    f"Leg order changes Z by {deviation:.3e} at {time}"
                )
        solutions.append(solution)
    log.debug(
        "Built Z on %d times x %d spectral points", len(times), len(points)
    )
    return FundamentalSolutionGrid(
        times=list(times), points=points, solutions=solutions, tol=solver.tol
    )


def loop_deviation(
    solver: FundamentalSolution, time: TimePoint, lam: complex
) -> float:
    """Compare Z(time, lam) reached by (spectral leg at the base time, then tau
    legs) with (tau legs at base_eta, then a spectral leg at `time`)
    """
    direct = solver.solve(time, [lam]).Z[complex(lam)]
    via = solver.solve(time, [solver.base_eta])
    mats = build_B(via.time, via.state, solver.params)
    other = integrate_spectral(
        mats,
        via.Z[solver.base_eta],
        solver.base_eta,
        lam,
        tol=solver.tol,
        method=solver.method,
    )
    return _relative(direct, other)


## Kernel and gauges ###########################################################


def kernel_M(Z_eta: np.ndarray, Z_zeta: np.ndarray) -> np.ndarray:
    """M = Z(eta)^-1 Z(zeta)"""
    det = np.linalg.det(Z_eta)
    if abs(det) < SINGULAR_DET:
        raise SingularZ(f"det Z = {det} is numerically zero")
    return np.linalg.solve(Z_eta, Z_zeta)


def kernel_identities(grid: FundamentalSolutionGrid, time_index: int) -> float:
    """Largest deviation of M(zeta, zeta) = I and M(zeta, eta) M(eta, zeta) = I
    over all point pairs at one time
    """
    worst = 0.0
    eye = np.eye(2)
    points = grid.points
    for zeta in points:
        Zz = grid.Z(time_index, zeta)
        worst = max(worst, float(np.max(np.abs(kernel_M(Zz, Zz) - eye))))
        for eta in points:
            Ze = grid.Z(time_index, eta)
            product = kernel_M(Ze, Zz) @ kernel_M(Zz, Ze)
            worst = max(worst, float(np.max(np.abs(product - eye))))
    return worst


@dataclasses.dataclass
class GaugeSReport:
    """S at the requested times, the leg-order deviation of S and the
    residuals of its two defining equations
    """

    values: List[complex]
    swap_deviation: float
    equation_residuals: Tuple[float, float]


def gauge_S(
    solver: FundamentalSolution, times: Sequence[TimePoint], h: float
) -> GaugeSReport:
    values, swaps, res1, res2 = [], [], 0.0, 0.0
    for time in times:
        first = solver.solve(time, [])
        second = solver.solve(time, [], order=(2, 1))
        values.append(first.S)
        swaps.append(abs(first.S - second.S))
        residuals = []
        for j in (1, 2):
            minus, plus = (
                solver.advance(
                    first,
                    first.time.with_coordinate(j, first.time.coordinate(j) + sign * h),
                    tol=STENCIL_TOL,
                )
                for sign in (-1, 1)
            )
            lhs = first.time.coordinate(j) * (plus.S - minus.S) / (2 * h)
            rhs = evolution.s_equation_rhs(j, first.time, first.state, solver.params)
            residuals.append(normalized_residual(lhs, rhs, rhs))
        res1, res2 = max(res1, residuals[0]), max(res2, residuals[1])
    return GaugeSReport(values, max(swaps, default=0.0), (res1, res2))


def change_vars_xy(zeta: complex, eta: complex, W: np.ndarray):
    """(x, y, W): the change of variables relabels nodes, values stay"""
    return evolution.moebius(zeta), evolution.moebius(eta), W


def change_vars_polynomial(time: TimePoint, x: complex, y: complex, Psi: np.ndarray):
    """(r, rho, s1, s2, Psi) at an (x, y) node"""
    return (*evolution.polynomial_coordinates(time, x, y), Psi)


## Residual stencils ###########################################################


SPECTRAL_CLEARANCE = 0.05


@dataclasses.dataclass(frozen=True)
class KernelNode:
    """A (tau, zeta, eta) node together with its (x, y) image"""

    time: TimePoint
    zeta: complex
    eta: complex

    @property
    def x(self) -> complex:
        return evolution.moebius(self.zeta)

    @property
    def y(self) -> complex:
        return evolution.moebius(self.eta)


def make_node(
    time: TimePoint,
    zeta: complex,
    eta: complex,
    *,
    clearance: float = SPECTRAL_CLEARANCE,
) -> KernelNode:
    """Validate a residual node: zeta, eta away from 0, 1 and each other, x, y
    away from each other
    """
    zeta, eta = complex(zeta), complex(eta)
    for lam in (zeta, eta):
        if abs(lam) < clearance or abs(lam - 1) < clearance:
            raise SpectralPole(f"Spectral node {lam} is too close to a pole")
    if abs(zeta - eta) < clearance:
        raise CoincidentSpectral(
            f"|zeta - eta| = {abs(zeta - eta):.3e} is below {clearance}"
        )
    node = KernelNode(time.to_chart(Chart.TAU), zeta, eta)
    if abs(node.x - node.y) < clearance:
        raise CoincidentSpectral(f"x and y of {node} coincide")
    return node


def spectral_point(
    node: KernelNode, family: str, axis: int, offset: int, h: float
) -> complex:
    """Spectral point behind a stencil offset. In the spectral family offsets
    move zeta (axis 0) or eta (axis 1); in the xy family they move x or y.
    """
    base = node.zeta if axis == 0 else node.eta
    if offset == 0:
        return base
    if family == SPECTRAL:
        return base + offset * h
    coordinate = node.x if axis == 0 else node.y
    return evolution.moebius(coordinate + offset * h)


def xy_coordinate(node: KernelNode, family: str, axis: int, offset: int, h: float):
    coordinate = node.x if axis == 0 else node.y
    return coordinate if family == SPECTRAL else coordinate + offset * h


@dataclasses.dataclass
class NodeSamples:
    """Joint solutions needed by every residual at one node"""

    node: KernelNode
    steps: List[float]
    center: JointSolution
    arcs: Dict[Tuple[float, int, int], JointSolution]


def sample_node(
    solver: FundamentalSolution, node: KernelNode, steps: Sequence[float]
) -> NodeSamples:
    """Solve jointly at the node for all stencil points, then run short tau
    arcs of length h in both directions for each step
    """
    # Stencil points hang off zeta or eta by short spectral legs
    anchors = {node.zeta: node.zeta, node.eta: node.eta}
    for h in steps:
        for family in (SPECTRAL, XY):
            for axis in (0, 1):
                for offset in (-1, 1):
                    point = spectral_point(node, family, axis, offset, h)
                    anchors.setdefault(point, node.zeta if axis == 0 else node.eta)
    for lam in (node.zeta, node.eta):
        check_spectral_segment(solver.base_eta, lam)
    points = sorted(anchors, key=lambda z: (z.real, z.imag))
    center = solver.solve(node.time, points, anchors=anchors)
    core = center.subset([node.zeta, node.eta])
    arcs = {}
    for h in steps:
        for j in (1, 2):
            for sign in (-1, 1):
                target = node.time.with_coordinate(j, node.time.coordinate(j) + sign * h)
                arcs[(h, j, sign)] = solver.advance(core, target, tol=STENCIL_TOL)
    log.debug3("Sampled node %s with %d spectral points", node, len(points))
    return NodeSamples(node=node, steps=list(steps), center=center, arcs=arcs)


def field_value(
    kind: str,
    solution: JointSolution,
    zeta: complex,
    eta: complex,
    x: complex,
    y: complex,
    params: ParameterSet,
    base_time: TimePoint,
) -> np.ndarray:
    """M, W = exp(-S) M or Psi = exp(-F) W from a joint solution"""
    value = kernel_M(solution.Z[eta], solution.Z[zeta])
    if kind == "M":
        return value
    value = cmath.exp(-solution.S) * value
    if kind == "W":
        return value
    if kind == "Psi":
        exponent = evolution.gauge_exponent(solution.time, x, y, params, base_time)
        return cmath.exp(-exponent) * value
    raise ValueError(f"Unknown kernel field {kind}")


def derivative_bundle(
    samples: NodeSamples,
    kind: str,
    family: str,
    h: float,
    params: ParameterSet,
    base_time: TimePoint,
) -> Dict[str, np.ndarray]:
    """Centered differences of a kernel field in the two spectral coordinates
    of `family` and in both tau times
    """
    node = samples.node

    def at(off_u: int, off_v: int, solution: JointSolution = samples.center):
        return field_value(
            kind,
            solution,
            spectral_point(node, family, 0, off_u, h),
            spectral_point(node, family, 1, off_v, h),
            xy_coordinate(node, family, 0, off_u, h),
            xy_coordinate(node, family, 1, off_v, h),
            params,
            base_time,
        )

    value = at(0, 0)
    bundle = {
        "value": value,
        "d_u": (at(1, 0) - at(-1, 0)) / (2 * h),
        "d_v": (at(0, 1) - at(0, -1)) / (2 * h),
        "d_uu": (at(1, 0) - 2 * value + at(-1, 0)) / h**2,
        "d_vv": (at(0, 1) - 2 * value + at(0, -1)) / h**2,
        "d_uv": (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h**2),
    }
    for j in (1, 2):
        plus = at(0, 0, samples.arcs[(h, j, 1)])
        minus = at(0, 0, samples.arcs[(h, j, -1)])
        bundle[f"d_t{j}"] = (plus - minus) / (2 * h)
    return bundle


def polynomial_bundle(
    bundle: Dict[str, np.ndarray], time: TimePoint, x: complex, y: complex
) -> Dict[str, np.ndarray]:
    """Derivatives in (r, rho) from derivatives in (x, y) by the chain rule,
    using r_xy = 1/tau1 and rho_xy = 1
    """
    jac = evolution.polynomial_jacobian(time, x, y)
    if abs(np.linalg.det(jac)) < SINGULAR_DET:
        raise JacobianSingular(f"d(r, rho)/d(x, y) is singular at x={x}, y={y}")
    (r_x, r_y), (rho_x, rho_y) = jac
    tau1 = time.to_chart(Chart.TAU).c1
    first = np.linalg.solve(
        jac.T, np.stack([bundle["d_u"].ravel(), bundle["d_v"].ravel()])
    )
    d_r, d_rho = first[0], first[1]
    second_map = np.array(
        [
            [r_x**2, rho_x**2, 2 * r_x * rho_x],
            [r_y**2, rho_y**2, 2 * r_y * rho_y],
            [r_x * r_y, rho_x * rho_y, r_x * rho_y + r_y * rho_x],
        ],
        complex,
    )
    targets = np.stack(
        [
            bundle["d_uu"].ravel(),
            bundle["d_vv"].ravel(),
            bundle["d_uv"].ravel() - d_r / tau1 - d_rho,
        ]
    )
    second = np.linalg.solve(second_map, targets)
    shape = bundle["value"].shape
    return {
        "value": bundle["value"],
        "d_u": d_r.reshape(shape),
        "d_v": d_rho.reshape(shape),
        "d_uu": second[0].reshape(shape),
        "d_vv": second[1].reshape(shape),
        "d_uv": second[2].reshape(shape),
        "d_t1": bundle["d_t1"],
        "d_t2": bundle["d_t2"],
    }


## Residuals ###################################################################


# Field and coordinate family behind each equation
EQUATION_FIELDS = {
    "28": ("M", SPECTRAL),
    "29": ("M", SPECTRAL),
    "30": ("W", SPECTRAL),
    "31": ("W", SPECTRAL),
    "32": ("W", XY),
    "33": ("W", XY),
    "34": ("Psi", XY),
    "35": ("Psi", XY),
    "poly1": ("Psi", XY),
    "poly2": ("Psi", XY),
}


def equation_residual(
    samples: NodeSamples,
    equation: str,
    h: float,
    params: ParameterSet,
    base_time: TimePoint,
    *,
    variant: str = "derived",
    operator_params: Optional[ParameterSet] = None,
    g_offset: complex = 0,
) -> float:
    """Normalised residual |LHS - op F| / (1 + |F|) of one equation at a node

    Kwargs:
        variant:  str
            "printed", "derived" or "reconciled" operator table; the last
            only exists for the final and polynomial equations
        operator_params:  Optional[ParameterSet]
            Parameters for the operator coefficients only; the data keep
            `params`
        g_offset:  complex
            Added to the potential of the operator (negative control)
    """
    node = samples.node
    kind, family = EQUATION_FIELDS[equation]
    bundle = derivative_bundle(samples, kind, family, h, params, base_time)
    tau = node.time
    j = evolution.TIME_INDEX[equation]
    if equation in evolution.POLYNOMIAL_EQUATIONS:
        bundle = polynomial_bundle(bundle, tau, node.x, node.y)
        r, _, s1, s2 = evolution.polynomial_coordinates(tau, node.x, node.y)
        if j == 1:
            d_s1 = -(tau.c1**2) * bundle["d_t1"] - r * tau.c1 * bundle["d_u"]
            lhs = s1**2 * d_s1
        else:
            lhs = s2 * bundle["d_t2"]
    else:
        lhs = tau.coordinate(j) * bundle[f"d_t{j}"]
    u, v = (node.zeta, node.eta) if family == SPECTRAL else (node.x, node.y)
    op = evolution.operator_for(
        equation,
        variant,
        tau,
        u,
        v,
        operator_params or params,
        samples.center.state,
    )
    if g_offset:
        op = op.replace(g=op.g + g_offset)
    rhs = op.apply(
        bundle["value"],
        bundle["d_u"],
        bundle["d_v"],
        bundle["d_uu"],
        bundle["d_vv"],
        bundle["d_uv"],
    )
    return normalized_residual(lhs, rhs, bundle["value"])


def _pair(equations, samples, h, params, base_time, **kwargs) -> Tuple[float, float]:
    first, second = equations
    return (
        equation_residual(samples, first, h, params, base_time, **kwargs),
        equation_residual(samples, second, h, params, base_time, **kwargs),
    )


def residual_28_29(samples, h, params, base_time, **kwargs) -> Tuple[float, float]:
    return _pair(evolution.KERNEL_EQUATIONS, samples, h, params, base_time, **kwargs)


def residual_30_31(samples, h, params, base_time, **kwargs) -> Tuple[float, float]:
    return _pair(evolution.GAUGED_EQUATIONS, samples, h, params, base_time, **kwargs)


def residual_32_33(samples, h, params, base_time, **kwargs) -> Tuple[float, float]:
    return _pair(evolution.XY_EQUATIONS, samples, h, params, base_time, **kwargs)


def residual_34_35(samples, h, params, base_time, **kwargs) -> Tuple[float, float]:
    return _pair(evolution.FINAL_EQUATIONS, samples, h, params, base_time, **kwargs)


def residual_polynomial_pair(
    samples, h, params, base_time, **kwargs
) -> Tuple[float, float]:
    return _pair(
        evolution.POLYNOMIAL_EQUATIONS, samples, h, params, base_time, **kwargs
    )


def residual_sweep(
    solver: FundamentalSolution,
    nodes: Sequence[KernelNode],
    steps: Sequence[float],
    equations: Sequence[str] = evolution.ALL_EQUATIONS,
    variants: Sequence[str] = VARIANTS,
    *,
    operator_params: Optional[ParameterSet] = None,
    g_offsets: Optional[Dict[str, complex]] = None,
) -> Dict[Tuple[str, str], List[float]]:
    """Largest residual over the nodes for every (equation, variant) and step.
    g_offsets adds a constant to the potential of the named equations.
    """
    g_offsets = g_offsets or {}
    steps = sorted(steps, reverse=True)
    keys = [
        (eq, var)
        for eq in equations
        for var in variants
        if var != "reconciled" or eq in evolution.RECONCILED_EQUATIONS
    ]
    worst = {key: [0.0] * len(steps) for key in keys}
    for node in nodes:
        samples = sample_node(solver, node, steps)
        for idx, h in enumerate(steps):
            for key in keys:
                equation, variant = key
                value = equation_residual(
                    samples,
                    equation,
                    h,
                    solver.params,
                    solver.base_time,
                    variant=variant,
                    operator_params=operator_params,
                    g_offset=g_offsets.get(equation, 0),
                )
                worst[key][idx] = max(worst[key][idx], value)
    return worst


def write_residual_csv(
    path: str, residuals: Dict[Tuple[str, str], List[float]], steps: Sequence[float]
):
    steps = sorted(steps, reverse=True)
    rows = [
        [equation, variant, h, value]
        for (equation, variant), values in sorted(residuals.items())
        for h, value in zip(steps, values)
    ]
    write_csv(path, RESIDUAL_CSV_SCHEMA, ["equation", "variant", "h", "residual"], rows)


## Implementation Details ######################################################


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(a)))))
