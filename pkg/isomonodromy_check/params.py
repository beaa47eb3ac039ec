"""
Parameter constants shared by the Hamiltonians, the Lax matrices and the
evolution equations, together with the linking constraints between them.
"""

# Standard
from typing import Any, Dict, List, Sequence
import dataclasses

# First Party
import alog

log = alog.use_channel("PARMS")

## Globals #####################################################################

# Relative tolerance for a constraint to count as satisfied
CONSTRAINT_RTOL = 1e-12

# Names of the residuals returned by validate, in order
CONSTRAINT_NAMES = ["fuchs", "theta0", "theta_inf", "kappa"]

# Inputs from which a constrained set is derived
FREE_KEYS = ["kappa0", "kappa1", "gamma1", "gamma2", "theta1"]


## Interface ###################################################################


@dataclasses.dataclass(frozen=True)
class ParameterSet:
    """The nine complex constants of the H^{2+2+1} system"""

    kappa0: complex
    kappa1: complex
    gamma1: complex
    gamma2: complex
    kappa: complex
    theta0: complex
    theta1: complex
    theta1_inf: complex
    theta2_inf: complex

    def replace(self, **changes: complex) -> "ParameterSet":
        """Copy of this set with some fields changed (no re-derivation)"""
        return dataclasses.replace(self, **changes)

    def to_json_dict(self) -> Dict[str, List[float]]:
        """All fields, derived ones included, as [re, im] pairs"""
        return {
            field.name: complex_to_pair(getattr(self, field.name))
            for field in dataclasses.fields(self)
        }


def make_parameter_set(
    kappa0: complex,
    kappa1: complex,
    gamma1: complex,
    gamma2: complex,
    theta1: complex,
) -> ParameterSet:
    """Derive the full constrained parameter set from its five free constants.

    theta0 and kappa follow from their closed forms. The pair
    (theta1_inf, theta2_inf) solves the linear system formed by the prescribed
    difference theta2_inf - theta1_inf = (kappa1 - 2) gamma2 and the
    Fuchs-Hukuhara sum.

    Args:
        kappa0:  complex
        kappa1:  complex
        gamma1:  complex
        gamma2:  complex
        theta1:  complex

    Returns:
        params:  ParameterSet
            A set for which every residual of validate vanishes
    """
    kappa0, kappa1, gamma1, gamma2, theta1 = (
        complex(kappa0),
        complex(kappa1),
        complex(gamma1),
        complex(gamma2),
        complex(theta1),
    )
    theta0 = (kappa0 - 2) * gamma1
    inf_difference = (kappa1 - 2) * gamma2
    inf_sum = -theta0 - theta1
    theta2_inf = (inf_sum + inf_difference) / 2
    theta1_inf = (inf_sum - inf_difference) / 2
    kappa = kappa_closed_form(kappa0, kappa1, theta1)
    params = ParameterSet(
        kappa0=kappa0,
        kappa1=kappa1,
        gamma1=gamma1,
        gamma2=gamma2,
        kappa=kappa,
        theta0=theta0,
        theta1=theta1,
        theta1_inf=theta1_inf,
        theta2_inf=theta2_inf,
    )
    log.debug3("Derived parameter set %s", params)
    return params


def kappa_closed_form(kappa0: complex, kappa1: complex, theta1: complex) -> complex:
    """The value of kappa fixed by the other constants"""
    return (
        (kappa0 - 2) ** 2 / 4
        + (kappa1 - 2) ** 2 / 4
        + kappa0 * kappa1 / 2
        - theta1**2 / 4
        - 2
    )


def validate(params: ParameterSet) -> List[float]:
    """Absolute residuals of the Fuchs-Hukuhara relation and of the three
    linking constraints, in the order of CONSTRAINT_NAMES
    """
    return [abs(lhs - rhs) for lhs, rhs, _ in _constraint_terms(params)]


def violated_constraints(
    params: ParameterSet, rtol: float = CONSTRAINT_RTOL
) -> List[str]:
    """Names of the constraints whose residual exceeds rtol relative to the
    magnitude of the terms entering it
    """
    violated = []
    for name, (lhs, rhs, terms) in zip(CONSTRAINT_NAMES, _constraint_terms(params)):
        scale = max([1.0] + [abs(term) for term in terms])
        if abs(lhs - rhs) > rtol * scale:
            violated.append(name)
    return violated


def satisfies_fuchs(params: ParameterSet, rtol: float = CONSTRAINT_RTOL) -> bool:
    """Whether the Fuchs-Hukuhara relation alone holds"""
    return "fuchs" not in violated_constraints(params, rtol)


def is_constrained(params: ParameterSet, rtol: float = CONSTRAINT_RTOL) -> bool:
    """Whether all four relations hold (required for the evolution equations)"""
    return not violated_constraints(params, rtol)


def complex_to_pair(value: complex) -> List[float]:
    value = complex(value)
    return [value.real, value.imag]


def pair_to_complex(pair: Sequence[float]) -> complex:
    if len(pair) != 2:
        raise ValueError(f"Expected an [re, im] pair, got {pair}")
    return complex(float(pair[0]), float(pair[1]))


def parameter_set_from_json(block: Dict[str, Any]) -> ParameterSet:
    """Build a parameter set from a JSON block.

    A block holding only the five free constants is completed with
    make_parameter_set. A block holding all nine constants is taken as is,
    which admits sets violating the linking constraints.
    """
    all_keys = [field.name for field in dataclasses.fields(ParameterSet)]
    if all(key in block for key in all_keys):
        return ParameterSet(**{key: pair_to_complex(block[key]) for key in all_keys})
    missing = [key for key in FREE_KEYS if key not in block]
    if missing:
        raise ValueError(f"Parameter block is missing {missing}")
    return make_parameter_set(*(pair_to_complex(block[key]) for key in FREE_KEYS))


## Implementation Details ######################################################


def _constraint_terms(params: ParameterSet):
    """(lhs, rhs, terms) triples, terms being the summands used for scaling"""
    p = params
    fuchs_terms = [p.theta0, p.theta1, p.theta1_inf, p.theta2_inf]
    kappa_terms = [
        (p.kappa0 - 2) ** 2 / 4,
        (p.kappa1 - 2) ** 2 / 4,
        p.kappa0 * p.kappa1 / 2,
        p.theta1**2 / 4,
        p.kappa,
    ]
    return [
        (sum(fuchs_terms), 0.0, fuchs_terms),
        (p.theta0, (p.kappa0 - 2) * p.gamma1, [p.theta0]),
        (
            p.theta2_inf - p.theta1_inf,
            (p.kappa1 - 2) * p.gamma2,
            [p.theta2_inf, p.theta1_inf],
        ),
        (p.kappa, kappa_closed_form(p.kappa0, p.kappa1, p.theta1), kappa_terms),
    ]
