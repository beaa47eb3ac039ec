"""
The three Hamiltonian charts of the H^{2+2+1} system and their exact
Hamiltonian vector fields.

* RATIONAL:   coordinates (lambda1, lambda2, mu1, mu2), times (tau1, tau2)
* POLYNOMIAL: coordinates (q1, q2, p1, p2), times (s1, s2)
* KNS:        coordinates (Q1, Q2, P1, P2) plus the gauge scalar u, times
              (t1, t2)

Every vector field is written out in closed form; the tests hold them against
central finite differences of the Hamiltonians.
"""

# Standard
from typing import Tuple, Union
import dataclasses
import enum

# Third Party
import numpy as np

# First Party
import alog

# Local
from .errors import GaugeZero, PoleError, ZeroTimeError
from .params import ParameterSet

log = alog.use_channel("HAMIL")

## Globals #####################################################################

# Distance to the singular set below which evaluation is refused
POLE_TOL = 1e-13


class Chart(enum.Enum):
    """Two-time coordinate charts"""

    T = "T"  # (t1, t2) of the KNS form
    TAU = "TAU"  # (tau1, tau2) = (t1, t2 / t1) of the rational form
    S = "S"  # (s1, s2) = (1 / tau1, -tau2) of the polynomial form


class Form(enum.Enum):
    """Hamiltonian forms"""

    RATIONAL = "RATIONAL"
    POLYNOMIAL = "POLYNOMIAL"
    KNS = "KNS"


# The chart in which each form's times are native
NATIVE_CHART = {
    Form.RATIONAL: Chart.TAU,
    Form.POLYNOMIAL: Chart.S,
    Form.KNS: Chart.T,
}


## Domain Types ################################################################


@dataclasses.dataclass(frozen=True)
class TimePoint:
    """A point of complex two-time space in one of the charts"""

    chart: Chart
    c1: complex
    c2: complex

    def to_chart(self, chart: Chart) -> "TimePoint":
        """Exact conversion to another chart"""
        if chart == self.chart:
            return self
        tau = self._to_tau()
        if chart == Chart.TAU:
            return tau
        if chart == Chart.T:
            return TimePoint(Chart.T, tau.c1, tau.c1 * tau.c2)
        _require_nonzero(tau.c1, "tau1")
        return TimePoint(Chart.S, 1 / tau.c1, -tau.c2)

    def with_coordinate(self, j: int, value: complex) -> "TimePoint":
        """Copy with time j replaced"""
        _check_j(j)
        if j == 1:
            return TimePoint(self.chart, complex(value), self.c2)
        return TimePoint(self.chart, self.c1, complex(value))

    def coordinate(self, j: int) -> complex:
        _check_j(j)
        return self.c1 if j == 1 else self.c2

    def _to_tau(self) -> "TimePoint":
        if self.chart == Chart.TAU:
            return self
        if self.chart == Chart.T:
            _require_nonzero(self.c1, "t1")
            return TimePoint(Chart.TAU, self.c1, self.c2 / self.c1)
        _require_nonzero(self.c1, "s1")
        return TimePoint(Chart.TAU, 1 / self.c1, -self.c2)


@dataclasses.dataclass(frozen=True)
class RationalState:
    lambda1: complex
    lambda2: complex
    mu1: complex
    mu2: complex

    def to_array(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.mu1, self.mu2], complex)


@dataclasses.dataclass(frozen=True)
class PolynomialState:
    q1: complex
    q2: complex
    p1: complex
    p2: complex

    def to_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.p1, self.p2], complex)


@dataclasses.dataclass(frozen=True)
class KnsState:
    """Phase point of the KNS form together with the gauge scalar u"""

    Q1: complex
    Q2: complex
    P1: complex
    P2: complex
    u: complex

    def to_array(self) -> np.ndarray:
        return np.array([self.Q1, self.Q2, self.P1, self.P2, self.u], complex)


AnyState = Union[RationalState, PolynomialState, KnsState]

# Number of complex components of each form's state vector
STATE_SIZE = {Form.RATIONAL: 4, Form.POLYNOMIAL: 4, Form.KNS: 5}

_STATE_TYPES = {
    Form.RATIONAL: RationalState,
    Form.POLYNOMIAL: PolynomialState,
    Form.KNS: KnsState,
}


def state_from_array(form: Form, values: np.ndarray) -> AnyState:
    """Rebuild a typed state from its component vector"""
    return _STATE_TYPES[form](*(complex(val) for val in values))


def state_to_array(state: AnyState) -> np.ndarray:
    return state.to_array()


def form_of(state: AnyState) -> Form:
    for form, state_type in _STATE_TYPES.items():
        if isinstance(state, state_type):
            return form
    raise TypeError(f"Not a phase state: {type(state)}")


## Hamiltonians ################################################################


def eval_H_rational(
    j: int, time: TimePoint, state: RationalState, params: ParameterSet
) -> complex:
    """H_j of the rational chart. The printed tau1 H1 is divided by tau1 and the
    printed H2 by tau2, the normalisation the polynomial chart carries
    through the symplectic map.
    """
    value, _ = _rational_value_and_gradient(j, time, state, params)
    return value


def eval_H_polynomial(
    j: int, time: TimePoint, state: PolynomialState, params: ParameterSet
) -> complex:
    """H_j of the polynomial chart, after removing the s1^2 and -s2 prefactors"""
    value, _ = _polynomial_value_and_gradient(j, time, state, params)
    return value


def eval_K(j: int, time: TimePoint, state: KnsState, params: ParameterSet) -> complex:
    """K_j of the KNS chart, after dividing t_j K_j by t_j"""
    value, _, _ = _kns_value_and_gradient(j, time, state, params)
    return value


def eval_hamiltonian(
    form: Form, j: int, time: TimePoint, state: AnyState, params: ParameterSet
) -> complex:
    """Dispatch to the evaluator of the given form"""
    if form == Form.RATIONAL:
        return eval_H_rational(j, time, state, params)
    if form == Form.POLYNOMIAL:
        return eval_H_polynomial(j, time, state, params)
    if form == Form.KNS:
        return eval_K(j, time, state, params)
    raise ValueError(f"Unknown form {form}")


def vector_field(
    form: Form, j: int, time: TimePoint, state: AnyState, params: ParameterSet
) -> np.ndarray:
    """Velocity of the state along time j of the form's native chart.

    The components follow the state layout: coordinates first, momenta next
    (d coord_k = dH/d mom_k, d mom_k = -dH/d coord_k), then du for KNS.
    """
    if form == Form.RATIONAL:
        _, (d_coord, d_mom) = _rational_value_and_gradient(j, time, state, params)
        return np.concatenate([d_mom, -d_coord])
    if form == Form.POLYNOMIAL:
        _, (d_coord, d_mom) = _polynomial_value_and_gradient(j, time, state, params)
        return np.concatenate([d_mom, -d_coord])
    if form == Form.KNS:
        _, (d_coord, d_mom), du = _kns_value_and_gradient(j, time, state, params)
        return np.concatenate([d_mom, -d_coord, [du]])
    raise ValueError(f"Unknown form {form}")


def hamiltonian_gradient(
    form: Form, j: int, time: TimePoint, state: AnyState, params: ParameterSet
) -> Tuple[np.ndarray, np.ndarray]:
    """(dH/dcoordinates, dH/dmomenta) in closed form"""
    if form == Form.RATIONAL:
        return _rational_value_and_gradient(j, time, state, params)[1]
    if form == Form.POLYNOMIAL:
        return _polynomial_value_and_gradient(j, time, state, params)[1]
    return _kns_value_and_gradient(j, time, state, params)[1]


def rational_to_polynomial_coordinates(
    time: TimePoint, state: RationalState
) -> Tuple[TimePoint, complex, complex]:
    """Coordinate half of the symplectic map between the rational and the
    polynomial charts: q1 = (lambda1 - 1)(lambda2 - 1) / tau1,
    q2 = lambda1 lambda2, with times s1 = 1 / tau1, s2 = -tau2.

    Returns:
        s_time:  TimePoint
            The time in the S chart
        q1:  complex
        q2:  complex
    """
    tau = time.to_chart(Chart.TAU)
    _require_nonzero(tau.c1, "tau1")
    q1 = (state.lambda1 - 1) * (state.lambda2 - 1) / tau.c1
    q2 = state.lambda1 * state.lambda2
    return tau.to_chart(Chart.S), q1, q2


def rational_to_polynomial_state(
    time: TimePoint, state: RationalState
) -> Tuple[TimePoint, PolynomialState]:
    """The full symplectic map: the coordinate map extended canonically to
    the momenta, mu = J^T p with J = d(q1, q2)/d(lambda1, lambda2)
    """
    s_time, q1, q2 = rational_to_polynomial_coordinates(time, state)
    tau1 = time.to_chart(Chart.TAU).c1
    lam1, lam2 = state.lambda1, state.lambda2
    jacobian = np.array([[(lam2 - 1) / tau1, (lam1 - 1) / tau1], [lam2, lam1]], complex)
    if abs(np.linalg.det(jacobian)) < POLE_TOL:
        raise PoleError(f"The symplectic map is singular at lambda = {lam1}, {lam2}")
    p1, p2 = np.linalg.solve(jacobian.T, [state.mu1, state.mu2])
    return s_time, PolynomialState(q1, q2, complex(p1), complex(p2))


## Implementation Details ######################################################


def _check_j(j: int):
    if j not in (1, 2):
        raise ValueError(f"Time index must be 1 or 2, got {j}")


def _require_nonzero(value: complex, name: str):
    if abs(value) < POLE_TOL:
        raise ZeroTimeError(f"{name} = {value} is zero")


def _rational_value_and_gradient(
    j: int, time: TimePoint, state: RationalState, params: ParameterSet
):
    """Both rational Hamiltonians share one shape:

    H = -w1 mu1^2 + w2 mu2^2 + w1 b(lambda1) mu1 - w2 b(lambda2) mu2
        - kappa m(lambda1) m(lambda2)

    with w1 = P(lambda1) m(lambda2) / (lambda1 - lambda2),
    w2 = P(lambda2) m(lambda1) / (lambda1 - lambda2), P(l) = l^2 (l - 1)^2 and
    m(l) = l - 1 for H1, m(l) = l for H2. H_j additionally carries 1 / tau_j.
    """
    _check_j(j)
    tau = time.to_chart(Chart.TAU)
    tau1, tau2 = tau.c1, tau.c2
    _require_nonzero(tau1, "tau1")
    _require_nonzero(tau2, "tau2")
    lam1, lam2, mu1, mu2 = state.lambda1, state.lambda2, state.mu1, state.mu2
    for lam in (lam1, lam2):
        if abs(lam) < POLE_TOL or abs(lam - 1) < POLE_TOL:
            raise PoleError(f"lambda = {lam} sits on a pole of the rational form")
    if abs(lam1 - lam2) < POLE_TOL:
        raise PoleError(f"lambda1 = lambda2 = {lam1}")

    p = params
    if j == 1:
        shift, k0, k1 = -1.0, p.kappa0, p.kappa1 - 1
    else:
        shift, k0, k1 = 0.0, p.kappa0 - 1, p.kappa1
    g1t, g2t = p.gamma1 * tau2, p.gamma2 * tau1

    def bracket(lam):
        return k0 / lam - g1t / lam**2 + k1 / (lam - 1) - g2t / (lam - 1) ** 2

    def bracket_prime(lam):
        return (
            -k0 / lam**2
            + 2 * g1t / lam**3
            - k1 / (lam - 1) ** 2
            + 2 * g2t / (lam - 1) ** 3
        )

    def poly(lam):
        return lam**2 * (lam - 1) ** 2

    def poly_prime(lam):
        return 2 * lam * (lam - 1) * (2 * lam - 1)

    m1, m2 = lam1 + shift, lam2 + shift
    d = lam1 - lam2
    w1 = poly(lam1) * m2 / d
    w2 = poly(lam2) * m1 / d
    dw1_dl1 = poly_prime(lam1) * m2 / d - poly(lam1) * m2 / d**2
    dw1_dl2 = poly(lam1) / d + poly(lam1) * m2 / d**2
    dw2_dl1 = poly(lam2) / d - poly(lam2) * m1 / d**2
    dw2_dl2 = poly_prime(lam2) * m1 / d + poly(lam2) * m1 / d**2
    b1, b2 = bracket(lam1), bracket(lam2)
    mono1 = -(mu1**2) + b1 * mu1
    mono2 = mu2**2 - b2 * mu2

    value = w1 * mono1 + w2 * mono2 - p.kappa * m1 * m2
    d_lam1 = dw1_dl1 * mono1 + w1 * bracket_prime(lam1) * mu1 + dw2_dl1 * mono2
    d_lam1 -= p.kappa * m2
    d_lam2 = dw1_dl2 * mono1 + dw2_dl2 * mono2 - w2 * bracket_prime(lam2) * mu2
    d_lam2 -= p.kappa * m1
    d_mu1 = -2 * w1 * mu1 + w1 * b1
    d_mu2 = 2 * w2 * mu2 - w2 * b2

    scale = 1 / tau1 if j == 1 else 1 / tau2
    return scale * value, (
        scale * np.array([d_lam1, d_lam2], complex),
        scale * np.array([d_mu1, d_mu2], complex),
    )


def _polynomial_value_and_gradient(
    j: int, time: TimePoint, state: PolynomialState, params: ParameterSet
):
    _check_j(j)
    s = time.to_chart(Chart.S)
    s1, s2 = s.c1, s.c2
    _require_nonzero(s1, "s1")
    _require_nonzero(s2, "s2")
    q1, q2, p1, p2 = state.q1, state.q2, state.p1, state.p2
    k0, k1, g1, g2, kap = (
        params.kappa0,
        params.kappa1,
        params.gamma1,
        params.gamma2,
        params.kappa,
    )
    k01 = k0 + k1 - 1
    # Shared p2-coefficient of s1^2 H1 and p1-coefficient of -s2 H2
    lin_shared = k01 * q1 * q2 + g1 * s2 * q1 + g2 * q2

    if j == 1:
        lin1 = (k0 - 1) * q1**2 + k1 * q1 * (q1 - s1) + g2 * (q1 - s1) + g2 * s1 * q2
        value = (
            q1**2 * (q1 - s1) * p1**2
            + 2 * q1**2 * q2 * p1 * p2
            + q1 * q2**2 * p2**2
            - lin1 * p1
            - lin_shared * p2
            + kap * q1
        )
        d_p1 = 2 * q1**2 * (q1 - s1) * p1 + 2 * q1**2 * q2 * p2 - lin1
        d_p2 = 2 * q1**2 * q2 * p1 + 2 * q1 * q2**2 * p2 - lin_shared
        d_q1 = (
            (3 * q1**2 - 2 * q1 * s1) * p1**2
            + 4 * q1 * q2 * p1 * p2
            + q2**2 * p2**2
            - (2 * (k0 - 1) * q1 + k1 * (2 * q1 - s1) + g2) * p1
            - (k01 * q2 + g1 * s2) * p2
            + kap
        )
        d_q2 = (
            2 * q1**2 * p1 * p2
            + 2 * q1 * q2 * p2**2
            - g2 * s1 * p1
            - (k01 * q1 + g2) * p2
        )
        scale = 1 / s1**2
    else:
        lin3 = (
            (k0 - 1) * q2 * (q2 - 1)
            + k1 * q2**2
            + g1 * s2 * q1 / s1
            + g1 * s2 * (q2 - 1)
        )
        value = (
            q1**2 * q2 * p1**2
            + 2 * q1 * q2**2 * p1 * p2
            + q2**2 * (q2 - 1) * p2**2
            - lin_shared * p1
            - lin3 * p2
            + kap * q2
        )
        d_p1 = 2 * q1**2 * q2 * p1 + 2 * q1 * q2**2 * p2 - lin_shared
        d_p2 = 2 * q1 * q2**2 * p1 + 2 * q2**2 * (q2 - 1) * p2 - lin3
        d_q1 = (
            2 * q1 * q2 * p1**2
            + 2 * q2**2 * p1 * p2
            - (k01 * q2 + g1 * s2) * p1
            - (g1 * s2 / s1) * p2
        )
        d_q2 = (
            q1**2 * p1**2
            + 4 * q1 * q2 * p1 * p2
            + (3 * q2**2 - 2 * q2) * p2**2
            - (k01 * q1 + g2) * p1
            - ((k0 - 1) * (2 * q2 - 1) + 2 * k1 * q2 + g1 * s2) * p2
            + kap
        )
        scale = -1 / s2

    return scale * value, (
        scale * np.array([d_q1, d_q2], complex),
        scale * np.array([d_p1, d_p2], complex),
    )


def _kns_value_and_gradient(
    j: int, time: TimePoint, state: KnsState, params: ParameterSet
):
    """Value, gradient and du/dt_j of the KNS Hamiltonian K_j"""
    _check_j(j)
    t = time.to_chart(Chart.T)
    t1, t2 = t.c1, t.c2
    _require_nonzero(t1, "t1")
    _require_nonzero(t2, "t2")
    Q1, Q2, P1, P2, u = state.Q1, state.Q2, state.P1, state.P2, state.u
    if abs(u) < POLE_TOL:
        raise GaugeZero(f"u = {u} vanished")
    th0, th1, th1i, th2i = (
        params.theta0,
        params.theta1,
        params.theta1_inf,
        params.theta2_inf,
    )
    ratio = t2 / t1
    # Coupling factors of the (t2 / t1) term shared by both Hamiltonians
    big_g = P1 * (Q1 - 1) - th1
    big_h = P2 * (Q1 - 1) + 1

    if j == 1:
        lin = (th1 + th1i) * (Q1 - 1) + (th2i - th1) * Q1 * (Q1 - 1) + t1 * Q1
        value = (
            P1**2 * Q1 * (Q1 - 1) ** 2
            + lin * P1
            - th1 * th2i * (Q1 - 1)
            + (P1 * Q1**2 - th1 * Q1 - P1) * P2 * Q2
            + P1 * Q2
            - ratio * big_g * big_h
        )
        d_P1 = (
            2 * P1 * Q1 * (Q1 - 1) ** 2
            + lin
            + (Q1**2 - 1) * P2 * Q2
            + Q2
            - ratio * (Q1 - 1) * big_h
        )
        d_P2 = (P1 * Q1**2 - th1 * Q1 - P1) * Q2 - ratio * big_g * (Q1 - 1)
        d_Q1 = (
            P1**2 * ((Q1 - 1) ** 2 + 2 * Q1 * (Q1 - 1))
            + ((th1 + th1i) + (th2i - th1) * (2 * Q1 - 1) + t1) * P1
            - th1 * th2i
            + (2 * P1 * Q1 - th1) * P2 * Q2
            - ratio * (P1 * big_h + big_g * P2)
        )
        d_Q2 = (P1 * Q1**2 - th1 * Q1 - P1) * P2 + P1
        du = u * (th1 * (1 - Q1) + P1 * (1 - Q1) ** 2 + th1i - th2i)
        scale = 1 / t1
    else:
        value = (
            P2**2 * Q2**2
            - P2 * Q2**2
            - th0 * P2 * Q2
            + t2 * P2
            - th2i * Q2
            - P1 * Q1 * Q2
            + ratio * big_g * big_h
        )
        d_P1 = -Q1 * Q2 + ratio * (Q1 - 1) * big_h
        d_P2 = 2 * P2 * Q2**2 - Q2**2 - th0 * Q2 + t2 + ratio * big_g * (Q1 - 1)
        d_Q1 = -P1 * Q2 + ratio * (P1 * big_h + big_g * P2)
        d_Q2 = 2 * P2**2 * Q2 - 2 * P2 * Q2 - th0 * P2 - th2i - P1 * Q1
        du = -u * Q2
        scale = 1 / t2

    return (
        scale * value,
        (
            scale * np.array([d_Q1, d_Q2], complex),
            scale * np.array([d_P1, d_P2], complex),
        ),
        scale * du,
    )
