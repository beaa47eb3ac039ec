"""
Scalar evolution operators satisfied by the kernel M and its gauges.

Every operator has the shape

    LHS = a F_uu + b F_vv + c F_uv + p F_u + q F_v + g F

in a pair of spectral coordinates (u, v): (zeta, eta) for the kernel
equations, (x, y) after the Moebius change of variables and (r, rho) for the
polynomial pair. The printed tables are kept exactly as written. The derived
tables transport the kernel equations through the time-only gauge exp(S), the
change of variables and the gauge exp(f1 + f2), and are what the numerical
checks certify; `audit_coefficients` lists every printed coefficient that
disagrees with its derived counterpart.
The reconciled tables are the derived final and polynomial operators with
their kappa term taken from the parameter set, so a wrong kappa shows up.
"""

# Standard
from typing import Dict, List, Optional, Sequence, Tuple
import cmath
import dataclasses

# Third Party
import numpy as np

# First Party
import alog

# Local
from .errors import CoincidentSpectral, MapPole
from .hamiltonians import POLE_TOL, Chart, KnsState, TimePoint
from .lax import build_B, rhs_eta
from .params import ParameterSet, kappa_closed_form

log = alog.use_channel("EVOLV")

## Globals #####################################################################

KERNEL_EQUATIONS = ["28", "29"]
GAUGED_EQUATIONS = ["30", "31"]
XY_EQUATIONS = ["32", "33"]
FINAL_EQUATIONS = ["34", "35"]
POLYNOMIAL_EQUATIONS = ["poly1", "poly2"]
ALL_EQUATIONS = (
    KERNEL_EQUATIONS
    + GAUGED_EQUATIONS
    + XY_EQUATIONS
    + FINAL_EQUATIONS
    + POLYNOMIAL_EQUATIONS
)

# Equations whose potentials carry kappa
RECONCILED_EQUATIONS = FINAL_EQUATIONS + POLYNOMIAL_EQUATIONS

# Equations whose coordinates are (zeta, eta); the rest take (x, y)
SPECTRAL_EQUATIONS = KERNEL_EQUATIONS + GAUGED_EQUATIONS

TIME_INDEX = {
    "28": 1, "29": 2, "30": 1, "31": 2, "32": 1,
    "33": 2, "34": 1, "35": 2, "poly1": 1, "poly2": 2,
}

COEFFICIENTS = ["a", "b", "c", "p", "q", "g"]
AUDIT_RTOL = 1e-8


## Domain Types ################################################################


@dataclasses.dataclass(frozen=True)
class EvolutionOperator:
    """Coefficients of a second-order scalar operator at one node"""

    a: complex
    b: complex
    p: complex
    q: complex
    g: complex
    c: complex = 0j

    def apply(
        self,
        value,
        d_u,
        d_v,
        d_uu,
        d_vv,
        d_uv=0.0,
    ):
        """Act on derivative samples; works entrywise on arrays"""
        return (
            self.a * d_uu
            + self.b * d_vv
            + self.c * d_uv
            + self.p * d_u
            + self.q * d_v
            + self.g * value
        )

    def coefficients(self) -> Dict[str, complex]:
        return {name: complex(getattr(self, name)) for name in COEFFICIENTS}

    def replace(self, **kwargs) -> "EvolutionOperator":
        return dataclasses.replace(self, **kwargs)


@dataclasses.dataclass(frozen=True)
class AuditEntry:
    """One printed coefficient compared with its derived value"""

    equation: str
    coefficient: str
    u: complex
    v: complex
    printed: complex
    derived: complex

    @property
    def relative_difference(self) -> float:
        return abs(self.printed - self.derived) / max(
            1.0, abs(self.printed), abs(self.derived)
        )

    @property
    def matches(self) -> bool:
        return self.relative_difference <= AUDIT_RTOL

    def to_json_dict(self) -> dict:
        return {
            "equation": self.equation,
            "coefficient": self.coefficient,
            "node": [[self.u.real, self.u.imag], [self.v.real, self.v.imag]],
            "printed": [self.printed.real, self.printed.imag],
            "derived": [self.derived.real, self.derived.imag],
            "relative_difference": self.relative_difference,
        }


## Coordinates #################################################################


def moebius(value: complex) -> complex:
    """w / (w - 1); the map is its own inverse"""
    if abs(value - 1) < POLE_TOL:
        raise MapPole(f"The change of variables has a pole at {value}")
    return value / (value - 1)


def polynomial_coordinates(
    time: TimePoint, x: complex, y: complex
) -> Tuple[complex, complex, complex, complex]:
    """(r, rho, s1, s2) = ((x-1)(y-1)/tau1, x y, 1/tau1, -tau2)"""
    tau = time.to_chart(Chart.TAU)
    return (x - 1) * (y - 1) / tau.c1, x * y, 1 / tau.c1, -tau.c2


def polynomial_jacobian(time: TimePoint, x: complex, y: complex) -> np.ndarray:
    """d(r, rho)/d(x, y)"""
    tau1 = time.to_chart(Chart.TAU).c1
    return np.array([[(y - 1) / tau1, (x - 1) / tau1], [y, x]], complex)


## Printed tables ##############################################################


def kernel_shape(equation: str, zeta: complex, eta: complex) -> Tuple[complex, ...]:
    """(a, b, p, q) shared by the kernel equations and their S-gauge"""
    _check_pair(zeta, eta)
    diff = zeta - eta
    if TIME_INDEX[equation] == 1:
        return (
            zeta**2 * (zeta - 1) / diff,
            -(eta**2) * (eta - 1) / diff,
            zeta * (zeta**2 - 3 * zeta * eta + 2 * eta) / diff**2,
            eta * (eta**2 - 3 * zeta * eta + 2 * zeta) / diff**2,
        )
    first = zeta * eta * (zeta + eta - 2 * zeta * eta) / diff**2
    return (
        zeta**2 * eta * (zeta - 1) / diff,
        -zeta * eta**2 * (eta - 1) / diff,
        first,
        first,
    )


def xy_shape(equation: str, x: complex, y: complex) -> Tuple[complex, ...]:
    _check_pair(x, y)
    diff = x - y
    if TIME_INDEX[equation] == 1:
        return (
            -(x**2) * (x - 1) ** 2 * (y - 1) / diff,
            y**2 * (y - 1) ** 2 * (x - 1) / diff,
            x * (x - 1) * (y - 1) * (x**2 + x * y - 2 * y) / diff**2,
            y * (y - 1) * (x - 1) * (y**2 + x * y - 2 * x) / diff**2,
        )
    return (
        -(x**2) * (x - 1) ** 2 * y / diff,
        y**2 * (y - 1) ** 2 * x / diff,
        x * y * (x + y) * (x - 1) ** 2 / diff**2,
        x * y * (x + y) * (y - 1) ** 2 / diff**2,
    )


def final_shape(
    equation: str, time: TimePoint, x: complex, y: complex, params: ParameterSet
) -> Tuple[complex, ...]:
    tau = time.to_chart(Chart.TAU)
    k0, k1, g1, g2 = params.kappa0, params.kappa1, params.gamma1, params.gamma2
    diff = x - y
    if TIME_INDEX[equation] == 1:
        a = -(x**2) * (x - 1) ** 2 * (y - 1) / diff
        b = y**2 * (y - 1) ** 2 * (x - 1) / diff
        shift0, shift1 = 0, 1
    else:
        a = -(x**2) * (x - 1) ** 2 * y / diff
        b = y**2 * (y - 1) ** 2 * x / diff
        shift0, shift1 = 1, 0

    def bracket(w):
        return (
            (k0 - shift0) / w
            - g1 * tau.c2 / w**2
            + (k1 - shift1) / (w - 1)
            - g2 * tau.c1 / (w - 1) ** 2
        )

    return a, b, a * bracket(x), b * bracket(y)


def potential(
    equation: str,
    time: TimePoint,
    u: complex,
    v: complex,
    params: ParameterSet,
    state: Optional[KnsState] = None,
) -> complex:
    """The printed g-function of an equation"""
    tau = time.to_chart(Chart.TAU)
    t1, t2 = tau.c1, tau.c2
    th0, th1 = params.theta0, params.theta1
    th_diff = params.theta2_inf - params.theta1_inf
    if equation in KERNEL_EQUATIONS:
        if state is None:
            raise ValueError(f"Equation {equation} needs the phase state")
        return _kernel_potential(equation, tau, u, v, state, params)
    if equation == "30":
        z, e = u, v
        return (
            t2**2 * (z * e - z - e) / (4 * z**2 * e**2)
            - th0 * t2 / (2 * z * e)
            + th1**2 * (z + e - z * e) / (4 * (z - 1) * (e - 1))
            - t1 * (0.5 * th0 + params.theta2_inf)
            + 0.5 * t1 * th_diff * (z + e)
            + 0.25 * t1**2 * (z + e - z**2 - e**2 - z * e)
        )
    if equation == "31":
        z, e = u, v
        return (
            t2**2 * (z * e * (z + e) - z**2 - e**2 - z * e) / (4 * z**2 * e**2)
            + th0 * t2 * (z * e - z - e) / (2 * z * e)
            + th1**2 * z * e / (4 * (z - 1) * (e - 1))
            + 0.5 * t1 * th_diff * z * e
            + 0.25 * t1**2 * z * e * (1 - z - e)
        )
    x, y = u, v
    dx, dy = x - 1, y - 1
    if equation == "32":
        return (
            t2**2 * (x + y - x * y) * dx * dy / (4 * x**2 * y**2)
            - th0 * t2 * dx * dy / (2 * x * y)
            + 0.25 * th1**2 * (x * y - x - y)
            - t1 * (0.5 * th0 + params.theta2_inf)
            + t1 * th_diff * (2 * x * y - x - y) / (2 * dx * dy)
            - t1**2 * (x**2 * y**2 - 3 * x * y + x + y) / (4 * dx**2 * dy**2)
        )
    if equation == "33":
        return (
            t2**2
            * (2 * x**2 * y + 2 * x * y**2 - x**2 * y**2 - x * y - x**2 - y**2)
            / (4 * x**2 * y**2)
            + th0 * t2 * (x + y - x * y) / (2 * x * y)
            + 0.25 * th1**2 * x * y
            + t1 * th_diff * x * y / (2 * dx * dy)
            + t1**2 * x * y * (1 - x * y) / (4 * dx**2 * dy**2)
        )
    kappa, gam1, gam2 = params.kappa, params.gamma1, params.gamma2
    if equation == "34":
        return (
            -kappa * dx * dy
            + (gam1**2 - 1) * t2**2 * dx * dy * (x + y - x * y) / (4 * x**2 * y**2)
            + (gam2**2 - 1)
            * t1**2
            * (x**2 * y**2 - 3 * x * y + x + y)
            / (4 * dx**2 * dy**2)
            + 4 * dx * dy * x * y / (x - y) ** 2
        )
    if equation == "35":
        return (
            -kappa * x * y
            + (gam1**2 - 1)
            * t2**2
            * (x**2 * y**2 + x * y + x**2 + y**2 - 2 * x**2 * y - 2 * x * y**2)
            / (4 * x**2 * y**2)
            + (gam2**2 - 1) * t1**2 * x * y * (x * y - 1) / (4 * dx**2 * dy**2)
            + 2 * x * y * (2 * x * y - x - y) / (x - y) ** 2
        )
    raise ValueError(f"Unknown equation {equation}")


def polynomial_operator(
    equation: str, time: TimePoint, x: complex, y: complex, params: ParameterSet
) -> EvolutionOperator:
    """Printed polynomial-form operators in (r, rho) with s-times; the left
    sides are s1^2 F_s1 and -s2 F_s2
    """
    r, rho, s1, s2 = polynomial_coordinates(time, x, y)
    k0, k1, g1, g2, kappa = (
        params.kappa0,
        params.kappa1,
        params.gamma1,
        params.gamma2,
        params.kappa,
    )
    mixed_first = (k0 + k1 - 1) * r * rho + g1 * s2 * r + g2 * rho
    if equation == "poly1":
        return EvolutionOperator(
            a=r**2 * (r - s1),
            b=r * rho**2,
            c=2 * r**2 * rho,
            p=(k0 - 1) * r**2 + (k1 * r + g2) * (r - s1) + g2 * s1 * rho,
            q=mixed_first,
            g=kappa * r,
        )
    if equation == "poly2":
        return EvolutionOperator(
            a=r**2 * rho,
            b=rho**2 * (rho - 1),
            c=2 * r * rho**2,
            p=mixed_first,
            q=(k0 - 1) * rho * (rho - 1)
            + k1 * rho**2
            + g1 * s2 * r / s1
            + g1 * s2 * (rho - 1),
            g=kappa * rho,
        )
    raise ValueError(f"Unknown polynomial equation {equation}")


def printed_operator(
    equation: str,
    time: TimePoint,
    u: complex,
    v: complex,
    params: ParameterSet,
    state: Optional[KnsState] = None,
) -> EvolutionOperator:
    """The operator of an equation exactly as printed. (u, v) is (zeta, eta)
    for 28-31 and (x, y) otherwise.
    """
    if equation in POLYNOMIAL_EQUATIONS:
        return polynomial_operator(equation, time, u, v, params)
    if equation in SPECTRAL_EQUATIONS:
        shape = kernel_shape(equation, u, v)
    elif equation in XY_EQUATIONS:
        shape = xy_shape(equation, u, v)
    elif equation in FINAL_EQUATIONS:
        shape = final_shape(equation, time, u, v, params)
    else:
        raise ValueError(f"Unknown equation {equation}")
    a, b, p, q = shape
    return EvolutionOperator(
        a=a, b=b, p=p, q=q, g=potential(equation, time, u, v, params, state)
    )


## Gauges ######################################################################


def s_equation_rhs(
    j: int,
    time: TimePoint,
    state: KnsState,
    params: ParameterSet,
    *,
    drop_det: bool = False,
) -> complex:
    """tau_j S_{tau_j} of the scalar gauge M = exp(S) W

    Kwargs:
        drop_det:  bool
            Leave out the det(B0_0) term of the tau1 equation (negative
            control)
    """
    tau = time.to_chart(Chart.TAU)
    mats = build_B(tau, state, params)
    b00, b10, b0m = mats.B0_0, mats.B1_0, mats.B0_m1
    common = tau.c1 * tau.c2 * (0.5 - state.P2) + np.linalg.det(b00)
    if j == 1:
        det_term = np.linalg.det(b00) if drop_det else 0
        return (
            common
            - det_term
            - 2 * b00[0, 0] * b10[0, 0]
            - b00[1, 0] * b10[0, 1]
            - b00[0, 1] * b10[1, 0]
            - tau.c1 * state.P1 * state.Q1
        )
    if j == 2:
        return (
            common
            + 2 * b0m[0, 0] * b10[0, 0]
            + b0m[1, 0] * b10[0, 1]
            + b0m[0, 1] * b10[1, 0]
        )
    raise ValueError(f"Time index must be 1 or 2, got {j}")


def kernel_potentials(
    time: TimePoint,
    zeta: complex,
    eta: complex,
    state: KnsState,
    params: ParameterSet,
) -> Tuple[complex, complex]:
    """Potentials of the two kernel equations from the determinants of the
    spectral coefficient: for traceless A, A^2 = -det(A) I, so the scalar part
    of each equation forces g = a det A(zeta) + b det A(eta)
    """
    mats = build_B(time, state, params)
    det_zeta = np.linalg.det(rhs_eta(mats, zeta))
    det_eta = np.linalg.det(rhs_eta(mats, eta))
    values = []
    for equation in KERNEL_EQUATIONS:
        a, b, _, _ = kernel_shape(equation, zeta, eta)
        values.append(complex(a * det_zeta + b * det_eta))
    return values[0], values[1]


@dataclasses.dataclass(frozen=True)
class GaugeDerivatives:
    """Partial derivatives of F = f1 + f2 at one (x, y, tau) node"""

    fx: complex
    fy: complex
    fxx: complex
    fyy: complex
    fxy: complex
    tau1_ft1: complex
    tau2_ft2: complex

    def time_term(self, j: int) -> complex:
        return self.tau1_ft1 if j == 1 else self.tau2_ft2


def gauge_f1(time: TimePoint, x: complex, y: complex, params: ParameterSet) -> complex:
    """Spectral part of the final gauge, principal logarithms"""
    _check_pair(x, y)
    tau = time.to_chart(Chart.TAU)
    return (
        (0.5 * params.kappa0 - 1) * cmath.log(x * y)
        + 0.5 * params.kappa1 * cmath.log((x - 1) * (y - 1))
        + cmath.log(x - y)
        + params.gamma1 * tau.c2 * (x + y) / (2 * x * y)
        + params.gamma2 * tau.c1 * (x + y - 2) / (2 * (x - 1) * (y - 1))
    )


def gauge_f2(time: TimePoint, params: ParameterSet) -> complex:
    tau = time.to_chart(Chart.TAU)
    k0, k1, g1, g2 = params.kappa0, params.kappa1, params.gamma1, params.gamma2
    th0, th1 = params.theta0, params.theta1
    return (
        ((k1 - 2) ** 2 - th1**2 - 4) * cmath.log(tau.c1) / 4
        + (k0 - 2) ** 2 * cmath.log(tau.c2) / 4
        - ((k0 - 2) * g2 + th0 + 2 * params.theta2_inf) * tau.c1 / 2
        + ((k1 - 2) * g1 + th0) * tau.c2 / 2
        + g1 * g2 * tau.c1 * tau.c2 / 2
    )


def gauge_exponent(
    time: TimePoint,
    x: complex,
    y: complex,
    params: ParameterSet,
    base: Optional[TimePoint] = None,
) -> complex:
    """F = f1 + f2 with f2 shifted to vanish at `base`"""
    offset = gauge_f2(base, params) if base is not None else 0
    return gauge_f1(time, x, y, params) + gauge_f2(time, params) - offset


def gauge_derivatives(
    time: TimePoint, x: complex, y: complex, params: ParameterSet
) -> GaugeDerivatives:
    tau = time.to_chart(Chart.TAU)
    t1, t2 = tau.c1, tau.c2
    k0, k1, g1, g2 = params.kappa0, params.kappa1, params.gamma1, params.gamma2
    th0, th1 = params.theta0, params.theta1
    diff = x - y

    def first(w, sign):
        return (
            (0.5 * k0 - 1) / w
            + 0.5 * k1 / (w - 1)
            + sign / diff
            - g1 * t2 / (2 * w**2)
            - g2 * t1 / (2 * (w - 1) ** 2)
        )

    def second(w):
        return (
            -(0.5 * k0 - 1) / w**2
            - 0.5 * k1 / (w - 1) ** 2
            - 1 / diff**2
            + g1 * t2 / w**3
            + g2 * t1 / (w - 1) ** 3
        )

    tau1_ft1 = (
        t1 * g2 * (x + y - 2) / (2 * (x - 1) * (y - 1))
        + ((k1 - 2) ** 2 - th1**2 - 4) / 4
        - ((k0 - 2) * g2 + th0 + 2 * params.theta2_inf) * t1 / 2
        + g1 * g2 * t1 * t2 / 2
    )
    tau2_ft2 = (
        t2 * g1 * (x + y) / (2 * x * y)
        + (k0 - 2) ** 2 / 4
        + ((k1 - 2) * g1 + th0) * t2 / 2
        + g1 * g2 * t1 * t2 / 2
    )
    return GaugeDerivatives(
        fx=first(x, 1),
        fy=first(y, -1),
        fxx=second(x),
        fyy=second(y),
        fxy=1 / diff**2,
        tau1_ft1=tau1_ft1,
        tau2_ft2=tau2_ft2,
    )


## Transports ##################################################################


def shift_potential(op: EvolutionOperator, shift: complex) -> EvolutionOperator:
    """Operator for W when F = exp(S) W with tau_j S_{tau_j} = shift"""
    return op.replace(g=op.g - shift)


def pull_back(op: EvolutionOperator, x: complex, y: complex) -> EvolutionOperator:
    """Rewrite an operator in (zeta, eta) in the coordinates x = zeta/(zeta-1),
    y = eta/(eta-1). With x' = dx/dzeta = -(x-1)^2 and x'' = 2(x-1)^3,
    F_zeta = x' F_x and F_zetazeta = x'^2 F_xx + x'' F_x.
    """
    if op.c != 0:
        raise ValueError("Pull-back of operators with a mixed term is not supported")
    dx, ddx = -((x - 1) ** 2), 2 * (x - 1) ** 3
    dy, ddy = -((y - 1) ** 2), 2 * (y - 1) ** 3
    return EvolutionOperator(
        a=op.a * dx**2,
        b=op.b * dy**2,
        p=op.a * ddx + op.p * dx,
        q=op.b * ddy + op.q * dy,
        g=op.g,
    )


def exponential_gauge(
    op: EvolutionOperator, derivs: GaugeDerivatives, j: int
) -> EvolutionOperator:
    """Operator for Psi when W = exp(F) Psi and tau_j W_{tau_j} = op W"""
    d = derivs
    return EvolutionOperator(
        a=op.a,
        b=op.b,
        c=op.c,
        p=op.p + 2 * op.a * d.fx + op.c * d.fy,
        q=op.q + 2 * op.b * d.fy + op.c * d.fx,
        g=op.g
        + op.a * (d.fxx + d.fx**2)
        + op.b * (d.fyy + d.fy**2)
        + op.c * (d.fxy + d.fx * d.fy)
        + op.p * d.fx
        + op.q * d.fy
        - d.time_term(j),
    )


def to_polynomial(
    op: EvolutionOperator, j: int, time: TimePoint, x: complex, y: complex
) -> EvolutionOperator:
    """Rewrite tau_j Psi_{tau_j} = op Psi in (r, rho) with left sides s1^2 F_s1
    (j = 1) and -s2 F_s2 (j = 2)
    """
    if op.c != 0:
        raise ValueError("Only operators without a mixed term can be mapped")
    (r_x, r_y), (rho_x, rho_y) = polynomial_jacobian(time, x, y)
    r, _, s1, _ = polynomial_coordinates(time, x, y)
    mapped = EvolutionOperator(
        a=op.a * r_x**2 + op.b * r_y**2,
        b=op.a * rho_x**2 + op.b * rho_y**2,
        c=2 * (op.a * r_x * rho_x + op.b * r_y * rho_y),
        p=op.p * r_x + op.q * r_y,
        q=op.p * rho_x + op.q * rho_y,
        g=op.g,
    )
    if j == 1:
        scaled = EvolutionOperator(
            **{name: -s1 * value for name, value in mapped.coefficients().items()}
        )
        return scaled.replace(p=scaled.p - r * s1)
    return EvolutionOperator(
        **{name: -value for name, value in mapped.coefficients().items()}
    )


def derived_operator(
    equation: str,
    time: TimePoint,
    u: complex,
    v: complex,
    params: ParameterSet,
    state: KnsState,
) -> EvolutionOperator:
    """Operator obtained by transporting the kernel equations; (u, v) as in
    `printed_operator`
    """
    j = TIME_INDEX[equation]
    if equation in KERNEL_EQUATIONS:
        a, b, p, q = kernel_shape(equation, u, v)
        g = kernel_potentials(time, u, v, state, params)[j - 1]
        return EvolutionOperator(a=a, b=b, p=p, q=q, g=g)
    if equation in GAUGED_EQUATIONS:
        kernel = derived_operator(KERNEL_EQUATIONS[j - 1], time, u, v, params, state)
        return shift_potential(kernel, s_equation_rhs(j, time, state, params))
    if equation in XY_EQUATIONS:
        gauged = derived_operator(
            GAUGED_EQUATIONS[j - 1], time, moebius(u), moebius(v), params, state
        )
        return pull_back(gauged, u, v)
    if equation in FINAL_EQUATIONS:
        xy_op = derived_operator(XY_EQUATIONS[j - 1], time, u, v, params, state)
        return exponential_gauge(xy_op, gauge_derivatives(time, u, v, params), j)
    if equation in POLYNOMIAL_EQUATIONS:
        final = derived_operator(FINAL_EQUATIONS[j - 1], time, u, v, params, state)
        return to_polynomial(final, j, time, u, v)
    raise ValueError(f"Unknown equation {equation}")


def kappa_weight(equation: str, x: complex, y: complex) -> complex:
    """Factor multiplying -kappa in the potential of a final equation"""
    if TIME_INDEX[equation] == 1:
        return (x - 1) * (y - 1)
    return x * y


def reconciled_operator(
    equation: str,
    time: TimePoint,
    x: complex,
    y: complex,
    params: ParameterSet,
    state: KnsState,
) -> EvolutionOperator:
    """The derived operator of a final or polynomial equation with its kappa
    term read from params.kappa instead of the closed form the transport
    produces. On a constrained set it equals `derived_operator`.
    """
    if equation not in RECONCILED_EQUATIONS:
        raise ValueError(f"Equation {equation} has no kappa term")
    j = TIME_INDEX[equation]
    final_equation = FINAL_EQUATIONS[j - 1]
    derived = derived_operator(final_equation, time, x, y, params, state)
    closed = kappa_closed_form(params.kappa0, params.kappa1, params.theta1)
    final = derived.replace(
        g=derived.g + (closed - params.kappa) * kappa_weight(final_equation, x, y)
    )
    if equation in POLYNOMIAL_EQUATIONS:
        return to_polynomial(final, j, time, x, y)
    return final


def operator_for(
    equation: str,
    variant: str,
    time: TimePoint,
    u: complex,
    v: complex,
    params: ParameterSet,
    state: KnsState,
) -> EvolutionOperator:
    if variant == "printed":
        return printed_operator(equation, time, u, v, params, state)
    if variant == "derived":
        return derived_operator(equation, time, u, v, params, state)
    if variant == "reconciled":
        return reconciled_operator(equation, time, u, v, params, state)
    raise ValueError(f"Unknown operator variant {variant}")


## Audit #######################################################################


def audit_coefficients(
    time: TimePoint,
    state: KnsState,
    params: ParameterSet,
    nodes: Sequence[Tuple[complex, complex]],
    equations: Sequence[str] = ALL_EQUATIONS,
) -> List[AuditEntry]:
    """Printed against derived coefficients at spectral nodes (zeta, eta);
    equations in (x, y) are compared at the mapped nodes
    """
    entries = []
    for zeta, eta in nodes:
        for equation in equations:
            u, v = (
                (zeta, eta)
                if equation in SPECTRAL_EQUATIONS
                else (moebius(zeta), moebius(eta))
            )
            printed = printed_operator(equation, time, u, v, params, state)
            derived = derived_operator(equation, time, u, v, params, state)
            for name in COEFFICIENTS:
                entries.append(
                    AuditEntry(
                        equation=equation,
                        coefficient=name,
                        u=complex(u),
                        v=complex(v),
                        printed=complex(getattr(printed, name)),
                        derived=complex(getattr(derived, name)),
                    )
                )
    mismatches = sum(not entry.matches for entry in entries)
    log.debug("Audited %d coefficients, %d mismatches", len(entries), mismatches)
    return entries


def mismatched(entries: Sequence[AuditEntry]) -> Dict[str, List[str]]:
    """Equation -> sorted names of coefficients that disagree anywhere"""
    found: Dict[str, set] = {}
    for entry in entries:
        if not entry.matches:
            found.setdefault(entry.equation, set()).add(entry.coefficient)
    return {equation: sorted(names) for equation, names in found.items()}


## Implementation Details ######################################################


def _check_pair(u: complex, v: complex, clearance: float = POLE_TOL):
    if abs(u - v) < clearance:
        raise CoincidentSpectral(f"Coincident spectral nodes {u} and {v}")


def _kernel_potential(
    equation: str,
    tau: TimePoint,
    z: complex,
    e: complex,
    state: KnsState,
    params: ParameterSet,
) -> complex:
    t1, t2 = tau.c1, tau.c2
    th0, th1 = params.theta0, params.theta1
    th_diff = params.theta2_inf - params.theta1_inf
    mats = build_B(tau, state, params)
    b00, b10, b0m = mats.B0_0, mats.B1_0, mats.B0_m1
    common = t1 * t2 * (0.5 - state.P2) + np.linalg.det(b00)
    if equation == "28":
        return (
            t2**2 * (z * e - z - e) / (4 * z**2 * e**2)
            - th0 * t2 / (2 * z * e)
            + common
            + th1**2 * (z + e - z * e) / (4 * (z - 1) * (e - 1))
            - 2 * b00[0, 0] * b10[0, 0]
            - b00[1, 0] * b10[0, 1]
            - b00[0, 1] * b10[1, 0]
            - t1 * (state.P1 * state.Q1 + 0.5 * th0 + params.theta2_inf)
            + 0.5 * t1 * th_diff * (z + e)
            + 0.25 * t1**2 * (z + e - z**2 - e**2 - z * e)
        )
    return (
        t2**2 * (z * e * (z + e) - z**2 - e**2 - z * e) / (4 * z**2 * e**2)
        + th0 * t2 * (z * e - z - e) / (2 * z * e)
        + common
        + th1**2 * z * e / (4 * (z - 1) * (e - 1))
        + 2 * b0m[0, 0] * b10[0, 0]
        + b0m[1, 0] * b10[0, 1]
        + b0m[0, 1] * b10[1, 0]
        + 0.5 * t1 * th_diff * z * e
        + 0.25 * t1**2 * z * e * (1 - z - e)
    )
