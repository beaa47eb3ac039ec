"""
Lax matrices of the isomonodromic linear systems, the scalar gauge that links
the A-family (trace-carrying) to the traceless B-family, and zero-curvature
certification along genuine KNS trajectories.
"""

# Standard
from typing import Dict, List, Optional, Sequence, Tuple, Union
import cmath
import dataclasses

# Third Party
import numpy as np

# First Party
import alog

# Local
from .errors import GaugeZero, SpectralPole
from .flows import integrate_segment, solve_path
from .hamiltonians import POLE_TOL, Chart, Form, KnsState, TimePoint
from .params import ParameterSet

log = alog.use_channel("LAXMT")

## Globals #####################################################################

F2 = np.diag([-0.5, 0.5]).astype(complex)
E2 = np.diag([0.0, 1.0]).astype(complex)

# Tight tolerance for the short arcs that feed finite-difference stencils
STENCIL_TOL = 1e-13
STENCIL_METHOD = "DOP853"

# A spectral variable or one of the two time indices
Variable = Union[str, int]
ETA = "eta"

PAIRS = [(ETA, 1), (ETA, 2), (1, 2)]


## Domain Types ################################################################


@dataclasses.dataclass
class AFamily:
    """Coefficients of the t-chart system before the scalar gauge"""

    A0_m1: np.ndarray
    A0_0: np.ndarray
    A1_0: np.ndarray
    A_inf: np.ndarray
    E2: np.ndarray
    B1: np.ndarray


@dataclasses.dataclass
class LaxMatrices:
    """Traceless coefficients of the gauged system, in either time chart"""

    B0_m1: np.ndarray
    B0_0: np.ndarray
    B1_0: np.ndarray
    B_inf: np.ndarray
    F2: np.ndarray
    B1: np.ndarray
    A: Optional[AFamily] = None

    def traceless_family(self) -> Dict[str, np.ndarray]:
        return {
            "B0_m1": self.B0_m1,
            "B0_0": self.B0_0,
            "B1_0": self.B1_0,
            "B_inf": self.B_inf,
        }


## Builders ####################################################################


def build_A(time: TimePoint, state: KnsState, params: ParameterSet) -> AFamily:
    """Coefficient matrices of the t-chart system, exactly as printed"""
    t = time.to_chart(Chart.T)
    t1, t2 = t.c1, t.c2
    Q1, Q2, P1, P2, u = _unpack(state)
    th1, th1i, th2i = params.theta1, params.theta1_inf, params.theta2_inf
    ratio = t2 / t1
    a0_m1 = ratio * np.array([[1 - P2, u * P2], [(1 - P2) / u, P2]], complex)
    a0_0 = np.array(
        [
            [P1 * Q1 - th1 - th1i, -u * (P1 * Q1 + P2 * Q2 + th2i)],
            [(P1 * Q1 + (1 - P2) * Q2 - th1 - th1i) / u, -P1 * Q1 - th2i],
        ],
        complex,
    )
    a1_0 = np.array(
        [[-P1 * Q1 + th1, u * P1], [(th1 * Q1 - P1 * Q1**2) / u, P1 * Q1]], complex
    )
    return AFamily(
        A0_m1=a0_m1,
        A0_0=a0_0,
        A1_0=a1_0,
        A_inf=np.diag([0.0, t1]).astype(complex),
        E2=E2.copy(),
        B1=_off_diagonal_sum(a0_0, a1_0, t1),
    )


def build_B(time: TimePoint, state: KnsState, params: ParameterSet) -> LaxMatrices:
    """Traceless coefficient matrices. B0_m1 = tau2 [[1/2 - P2, u P2],
    [(1 - P2)/u, P2 - 1/2]]; the diagonals of B0_0, B1_0 are the A-family ones
    shifted by -theta0/2 and -theta1/2.
    """
    tau = time.to_chart(Chart.TAU)
    tau1, tau2 = tau.c1, tau.c2
    Q1, Q2, P1, P2, u = _unpack(state)
    th0, th1, th1i, th2i = (
        params.theta0,
        params.theta1,
        params.theta1_inf,
        params.theta2_inf,
    )
    diag0 = P1 * Q1 + 0.5 * th0 + th2i
    b0_m1 = tau2 * np.array([[0.5 - P2, u * P2], [(1 - P2) / u, P2 - 0.5]], complex)
    b0_0 = np.array(
        [
            [diag0, -u * (P1 * Q1 + P2 * Q2 + th2i)],
            [(P1 * Q1 + (1 - P2) * Q2 - th1 - th1i) / u, -diag0],
        ],
        complex,
    )
    b1_0 = np.array(
        [
            [-P1 * Q1 + 0.5 * th1, u * P1],
            [(th1 * Q1 - P1 * Q1**2) / u, P1 * Q1 - 0.5 * th1],
        ],
        complex,
    )
    family = build_A(time, state, params)
    return LaxMatrices(
        B0_m1=b0_m1,
        B0_0=b0_0,
        B1_0=b1_0,
        B_inf=tau1 * F2,
        F2=F2.copy(),
        B1=family.B1,
        A=family,
    )


## Coefficients ################################################################


def rhs_eta(matrices: LaxMatrices, eta: complex) -> np.ndarray:
    """Coefficient of the spectral equation dZ/deta = (...) Z"""
    check_spectral(eta)
    return (
        matrices.B0_m1 / eta**2
        + matrices.B0_0 / eta
        + matrices.B1_0 / (eta - 1)
        + matrices.B_inf
    )


def rhs_eta_A(family: AFamily, eta: complex) -> np.ndarray:
    check_spectral(eta)
    return (
        family.A0_m1 / eta**2
        + family.A0_0 / eta
        + family.A1_0 / (eta - 1)
        + family.A_inf
    )


def rhs_tau(matrices: LaxMatrices, j: int, eta: complex, time: TimePoint) -> np.ndarray:
    """Coefficient of dZ/dtau_j"""
    check_spectral(eta)
    tau = time.to_chart(Chart.TAU)
    if j == 1:
        return matrices.F2 * eta + matrices.B1
    if j == 2:
        return -matrices.B0_m1 / (tau.c2 * eta)
    raise ValueError(f"Time index must be 1 or 2, got {j}")


def rhs_t(
    matrices: LaxMatrices, j: int, eta: complex, time: TimePoint, *, family: str = "B"
) -> np.ndarray:
    """Coefficient of d/dt_j in the t chart, for the A-family (before the
    gauge) or the B-family (after it)
    """
    check_spectral(eta)
    t = time.to_chart(Chart.T)
    if family == "A":
        pole, linear = matrices.A.A0_m1, matrices.A.E2
    elif family == "B":
        pole, linear = matrices.B0_m1, matrices.F2
    else:
        raise ValueError(f"Unknown Lax family {family}")
    if j == 1:
        return linear * eta + matrices.B1 + pole / (t.c1 * eta)
    if j == 2:
        return -pole / (t.c2 * eta)
    raise ValueError(f"Time index must be 1 or 2, got {j}")


def coefficient(
    var: Variable,
    time: TimePoint,
    state: KnsState,
    eta: complex,
    params: ParameterSet,
    *,
    family: str = "B",
) -> np.ndarray:
    """Coefficient of d/dvar for var in {eta, 1, 2}; the time chart is taken
    from `time`
    """
    matrices = build_B(time, state, params)
    if var == ETA:
        return rhs_eta_A(matrices.A, eta) if family == "A" else rhs_eta(matrices, eta)
    if time.chart == Chart.TAU:
        if family != "B":
            raise ValueError("The A-family is only available in the t chart")
        return rhs_tau(matrices, var, eta, time)
    return rhs_t(matrices, var, eta, time, family=family)


## Gauge #######################################################################


def gauge_exponent(time: TimePoint, eta: complex, params: ParameterSet) -> complex:
    """eta t1/2 - t2/(2 eta t1) + (theta0/2) ln eta + (theta1/2) ln(eta - 1),
    principal logarithms on the plane cut along (-inf, 0]
    """
    check_spectral(eta)
    t = time.to_chart(Chart.T)
    return (
        eta * t.c1 / 2
        - t.c2 / (2 * eta * t.c1)
        + params.theta0 / 2 * cmath.log(eta)
        + params.theta1 / 2 * cmath.log(eta - 1)
    )


def gauge_factor(time: TimePoint, eta: complex, params: ParameterSet) -> complex:
    """The scalar with Y = factor * Z"""
    return cmath.exp(gauge_exponent(time, eta, params))


def gauge_Y_to_Z(
    Y: np.ndarray, time: TimePoint, eta: complex, params: ParameterSet
) -> np.ndarray:
    return np.asarray(Y, complex) / gauge_factor(time, eta, params)


def gauge_Z_to_Y(
    Z: np.ndarray, time: TimePoint, eta: complex, params: ParameterSet
) -> np.ndarray:
    return np.asarray(Z, complex) * gauge_factor(time, eta, params)


def gauge_shift_check(
    time: TimePoint, state: KnsState, eta: complex, params: ParameterSet
) -> float:
    """Largest deviation, over the eta, t1 and t2 equations, between the
    B-family coefficient and the A-family coefficient minus the logarithmic
    derivative of the gauge factor
    """
    t = time.to_chart(Chart.T)
    t1, t2 = t.c1, t.c2
    log_derivatives = {
        ETA: t1 / 2
        + t2 / (2 * eta**2 * t1)
        + params.theta0 / (2 * eta)
        + params.theta1 / (2 * (eta - 1)),
        1: eta / 2 + t2 / (2 * eta * t1**2),
        2: -1 / (2 * eta * t1),
    }
    worst = 0.0
    for var, shift in log_derivatives.items():
        a_coef = coefficient(var, t, state, eta, params, family="A")
        b_coef = coefficient(var, t, state, eta, params, family="B")
        scale = max(1.0, float(np.max(np.abs(a_coef))))
        worst = max(worst, float(np.max(np.abs(a_coef - shift * np.eye(2) - b_coef))) / scale)
    return worst


## Invariants ##################################################################


def trace_residuals(matrices: LaxMatrices) -> Dict[str, float]:
    """|trace| / max(1, max |entry|) for each time-dependent B-matrix"""
    return {
        name: abs(np.trace(mat)) / max(1.0, float(np.max(np.abs(mat))))
        for name, mat in matrices.traceless_family().items()
    }


def det_pole_residual(matrices: LaxMatrices, time: TimePoint) -> float:
    """|det(B0_m1) / tau2^2 + 1/4|"""
    tau2 = time.to_chart(Chart.TAU).c2
    return abs(np.linalg.det(matrices.B0_m1) / tau2**2 + 0.25)


def off_diagonal_residual(matrices: LaxMatrices) -> float:
    """Largest mismatch between off-diagonal entries of the A- and B-families"""
    pairs = [(matrices.A.A0_0, matrices.B0_0), (matrices.A.A1_0, matrices.B1_0)]
    return max(
        max(abs(a_mat[0, 1] - b_mat[0, 1]), abs(a_mat[1, 0] - b_mat[1, 0]))
        for a_mat, b_mat in pairs
    )


## Zero curvature ##############################################################


def stencil_states(
    time: TimePoint,
    state: KnsState,
    j: int,
    h: float,
    params: ParameterSet,
    *,
    tol: float = STENCIL_TOL,
    offsets: Sequence[int] = (-1, 1),
) -> List[Tuple[TimePoint, KnsState]]:
    """States at time +- h along time j of the chart of `time`, by short arcs
    of the KNS flow starting at (time, state)
    """
    points = []
    for offset in offsets:
        target = time.with_coordinate(j, time.coordinate(j) + offset * h)
        trajectory = integrate_segment(
            Form.KNS,
            time,
            target,
            state.to_array(),
            params,
            tol=tol,
            clearance=0.0,
            method=STENCIL_METHOD,
        )
        points.append((target, trajectory.end_state))
    return points


def zero_curvature_residual(
    pair: Tuple[Variable, Variable],
    time: TimePoint,
    state: KnsState,
    eta: complex,
    params: ParameterSet,
    h: float,
    *,
    family: str = "B",
    tol: float = STENCIL_TOL,
    perturb: Optional[Dict[str, complex]] = None,
) -> float:
    """Frobenius norm of d_b M_a - d_a M_b + [M_a, M_b] at (time, eta), where
    M_v is the coefficient of d/dv. Derivatives are central differences of
    step h; time derivatives follow the KNS flow.

    Kwargs:
        perturb:  Optional[Dict[str, complex]]
            Offsets added to state fields before building matrices at every
            stencil node, which takes the data off the trajectory
    """
    var_a, var_b = pair
    if var_a == var_b:
        return 0.0

    def coef(var, at_time, at_state, at_eta):
        return coefficient(
            var, at_time, _perturbed(at_state, perturb), at_eta, params, family=family
        )

    def derivative(of_var, wrt_var):
        if wrt_var == ETA:
            plus = coef(of_var, time, state, eta + h)
            minus = coef(of_var, time, state, eta - h)
        else:
            (t_minus, s_minus), (t_plus, s_plus) = stencil_states(
                time, state, wrt_var, h, params, tol=tol
            )
            plus = coef(of_var, t_plus, s_plus, eta)
            minus = coef(of_var, t_minus, s_minus, eta)
        return (plus - minus) / (2 * h)

    m_a = coef(var_a, time, state, eta)
    m_b = coef(var_b, time, state, eta)
    curvature = derivative(var_a, var_b) - derivative(var_b, var_a) + m_a @ m_b - m_b @ m_a
    residual = float(np.linalg.norm(curvature))
    log.debug3("Curvature %s at h=%.1e: %.3e", pair, h, residual)
    return residual


## Spectral integration ########################################################


def integrate_spectral(
    matrices: LaxMatrices,
    Z0: np.ndarray,
    eta_a: complex,
    eta_b: complex,
    *,
    tol: float = STENCIL_TOL,
    family: str = "B",
    method: str = STENCIL_METHOD,
) -> np.ndarray:
    """Solve the spectral equation on the straight segment eta_a -> eta_b at
    fixed time, starting from the 2x2 value Z0
    """
    check_spectral_segment(eta_a, eta_b)
    delta = eta_b - eta_a
    if delta == 0:
        return np.asarray(Z0, complex).copy()
    coef_fn = (lambda e: rhs_eta_A(matrices.A, e)) if family == "A" else (
        lambda e: rhs_eta(matrices, e)
    )

    def rhs(s, y):
        return (delta * coef_fn(eta_a + s * delta) @ y.reshape(2, 2)).ravel()

    solution = solve_path(rhs, np.asarray(Z0, complex).ravel(), tol=tol, method=method)
    return solution.y[:, -1].reshape(2, 2)


def check_spectral(eta: complex, clearance: float = POLE_TOL):
    if abs(eta) < clearance or abs(eta - 1) < clearance:
        raise SpectralPole(f"eta = {eta} is a pole of the spectral equation")


def check_spectral_segment(eta_a: complex, eta_b: complex, clearance: float = POLE_TOL):
    """Refuse segments that pass through 0 or 1"""
    direction = eta_b - eta_a
    for pole in (0.0, 1.0):
        if direction == 0:
            distance = abs(eta_a - pole)
        else:
            s = ((pole - eta_a) * direction.conjugate()).real / abs(direction) ** 2
            s = min(max(s, 0.0), 1.0)
            distance = abs(eta_a + s * direction - pole)
        if distance < clearance:
            raise SpectralPole(f"Segment {eta_a} -> {eta_b} passes through {pole}")


## Implementation Details ######################################################


def _unpack(state: KnsState):
    if abs(state.u) < POLE_TOL:
        raise GaugeZero(f"u = {state.u} vanished")
    return state.Q1, state.Q2, state.P1, state.P2, state.u


def _off_diagonal_sum(a0_0: np.ndarray, a1_0: np.ndarray, t1: complex) -> np.ndarray:
    return np.array(
        [[0.0, a0_0[0, 1] + a1_0[0, 1]], [a0_0[1, 0] + a1_0[1, 0], 0.0]], complex
    ) / t1


def _perturbed(state: KnsState, perturb: Optional[Dict[str, complex]]) -> KnsState:
    if not perturb:
        return state
    return dataclasses.replace(
        state,
        **{key: getattr(state, key) + value for key, value in perturb.items()},
    )
