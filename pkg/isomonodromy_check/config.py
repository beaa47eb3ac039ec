"""
Run configuration: a JSON document checked against a JSON Typedef schema and
turned into typed sections with defaults. Complex numbers are [re, im] pairs.
"""

# Standard
from typing import Any, Dict, List, Optional, Tuple
import dataclasses
import hashlib
import json

# First Party
import alog

# Local
from .errors import ConfigError
from .hamiltonians import Chart, KnsState, PolynomialState, RationalState, TimePoint
from .params import (
    ParameterSet,
    pair_to_complex,
    parameter_set_from_json,
    satisfies_fuchs,
)
from .residuals import DEFAULT_STEPS
from .validation import COMPLEX_TYPE_VALIDATORS, jtd_errors

log = alog.use_channel("CONFG")

## Schema ######################################################################

_COMPLEX = {"type": "complex"}
_COMPLEX_LIST = {"elements": _COMPLEX}

RUN_CONFIG_SCHEMA = {
    "definitions": {
        "time": {"properties": {"tau1": _COMPLEX, "tau2": _COMPLEX}},
    },
    "properties": {
        "params": {
            "properties": {
                "kappa0": _COMPLEX,
                "kappa1": _COMPLEX,
                "gamma1": _COMPLEX,
                "gamma2": _COMPLEX,
                "theta1": _COMPLEX,
            },
            "optionalProperties": {
                "kappa": _COMPLEX,
                "theta0": _COMPLEX,
                "theta1_inf": _COMPLEX,
                "theta2_inf": _COMPLEX,
            },
        },
        "initial_state": {
            "properties": {
                "Q1": _COMPLEX,
                "Q2": _COMPLEX,
                "P1": _COMPLEX,
                "P2": _COMPLEX,
                "u": _COMPLEX,
            }
        },
    },
    "optionalProperties": {
        "base_time": {"ref": "time"},
        "tol": {"type": "float64"},
        "steps": {"elements": {"type": "float64"}},
        "output_dir": {"type": "string"},
        "flow": {
            "optionalProperties": {
                "dt1": _COMPLEX,
                "dt2": _COMPLEX,
                "samples": {"type": "uint32"},
                "rational_state": {
                    "properties": {
                        "lambda1": _COMPLEX,
                        "lambda2": _COMPLEX,
                        "mu1": _COMPLEX,
                        "mu2": _COMPLEX,
                    }
                },
                "polynomial_state": {
                    "properties": {
                        "q1": _COMPLEX,
                        "q2": _COMPLEX,
                        "p1": _COMPLEX,
                        "p2": _COMPLEX,
                    }
                },
            }
        },
        "lax": {
            "optionalProperties": {
                "etas": _COMPLEX_LIST,
                "charts": {"elements": {"enum": ["TAU", "T"]}},
            }
        },
        "prlg": {
            "optionalProperties": {
                "shape": {"elements": {"type": "uint32"}},
                "spacing": {"type": "float64"},
            }
        },
        "psi": {
            "optionalProperties": {
                "base_eta": _COMPLEX,
                "points": _COMPLEX_LIST,
                "grid_shape": {"elements": {"type": "uint32"}},
                "grid_spacing": {"type": "float64"},
                "path_tol": {"type": "float64"},
                "nodes": {
                    "elements": {
                        "properties": {"zeta": _COMPLEX, "eta": _COMPLEX},
                        "optionalProperties": {"time": {"ref": "time"}},
                    }
                },
            }
        },
    },
}

## Defaults ####################################################################

DEFAULT_TOL = 1e-10
DEFAULT_BASE_TIME = TimePoint(Chart.TAU, 1.0 + 0j, 0.5 + 0j)
DEFAULT_OUTPUT_DIR = "results"
DEFAULT_LAX_ETAS = [2.5 + 0.5j, -1.5 + 1.0j]
DEFAULT_PRLG_SHAPE = (4, 4)
DEFAULT_PRLG_SPACING = 0.02
DEFAULT_BASE_ETA = 2.5 + 1.0j
DEFAULT_PSI_POINTS = [2.5 + 0.5j, 3.0 + 0.2j, 2.0 + 1.0j, 3.0 + 1.2j]
DEFAULT_PSI_NODES = [(2.5 + 0.5j, 3.0 + 0.2j)]
DEFAULT_GRID_SHAPE = (2, 2)
DEFAULT_GRID_SPACING = 0.05
DEFAULT_PATH_TOL = 1e-8


## Sections ####################################################################


@dataclasses.dataclass
class FlowConfig:
    dt1: complex = 0.1 + 0j
    dt2: complex = 0.1 + 0j
    samples: int = 11
    rational_state: Optional[RationalState] = None
    polynomial_state: Optional[PolynomialState] = None


@dataclasses.dataclass
class LaxConfig:
    etas: List[complex] = dataclasses.field(
        default_factory=lambda: list(DEFAULT_LAX_ETAS)
    )
    charts: List[Chart] = dataclasses.field(default_factory=lambda: [Chart.TAU, Chart.T])


@dataclasses.dataclass
class PrlgConfig:
    shape: Tuple[int, int] = DEFAULT_PRLG_SHAPE
    spacing: float = DEFAULT_PRLG_SPACING


@dataclasses.dataclass
class PsiConfig:
    base_eta: complex = DEFAULT_BASE_ETA
    points: List[complex] = dataclasses.field(
        default_factory=lambda: list(DEFAULT_PSI_POINTS)
    )
    grid_shape: Tuple[int, int] = DEFAULT_GRID_SHAPE
    grid_spacing: float = DEFAULT_GRID_SPACING
    path_tol: float = DEFAULT_PATH_TOL
    # (time or None for the base time, zeta, eta)
    nodes: List[Tuple[Optional[TimePoint], complex, complex]] = dataclasses.field(
        default_factory=lambda: [(None, z, e) for z, e in DEFAULT_PSI_NODES]
    )


@dataclasses.dataclass
class RunConfig:
    """Typed view of a validated run configuration"""

    params: ParameterSet
    initial_state: KnsState
    base_time: TimePoint = DEFAULT_BASE_TIME
    tol: float = DEFAULT_TOL
    steps: List[float] = dataclasses.field(default_factory=lambda: list(DEFAULT_STEPS))
    output_dir: str = DEFAULT_OUTPUT_DIR
    flow: FlowConfig = dataclasses.field(default_factory=FlowConfig)
    lax: LaxConfig = dataclasses.field(default_factory=LaxConfig)
    prlg: PrlgConfig = dataclasses.field(default_factory=PrlgConfig)
    psi: PsiConfig = dataclasses.field(default_factory=PsiConfig)
    hash: str = ""


## Interface ###################################################################


def load_config(path: str) -> RunConfig:
    """Read, validate and parse a JSON config file"""
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as err:
        raise ConfigError(f"Cannot read config {path}: {err}") from err
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from err
    log.debug("Loaded config from %s", path)
    return parse_config(obj, source=path)


def parse_config(obj: Any, source: str = "<config>") -> RunConfig:
    """Validate a decoded JSON document and build the RunConfig"""
    errors = jtd_errors(obj, RUN_CONFIG_SCHEMA, COMPLEX_TYPE_VALIDATORS)
    if errors:
        details = "; ".join(str(error) for error in errors)
        raise ConfigError(f"{source}: {details}")
    try:
        params = parameter_set_from_json(obj["params"])
        state = KnsState(**_complex_block(obj["initial_state"]))
        config = RunConfig(params=params, initial_state=state, hash=config_hash(obj))
        if "base_time" in obj:
            config.base_time = _time(obj["base_time"])
        config.tol = float(obj.get("tol", DEFAULT_TOL))
        config.steps = sorted(obj.get("steps", DEFAULT_STEPS), reverse=True)
        config.output_dir = obj.get("output_dir", DEFAULT_OUTPUT_DIR)
        config.flow = _flow_section(obj.get("flow", {}))
        config.lax = _lax_section(obj.get("lax", {}))
        config.prlg = _prlg_section(obj.get("prlg", {}))
        config.psi = _psi_section(obj.get("psi", {}))
    except ValueError as err:
        raise ConfigError(f"{source}: {err}") from err
    _check_semantics(config, source)
    return config


def config_hash(obj: Any) -> str:
    """sha256 of the canonical JSON form"""
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


## Implementation Details ######################################################


def _complex_block(block: Dict[str, Any]) -> Dict[str, complex]:
    return {key: pair_to_complex(value) for key, value in block.items()}


def _time(block: Dict[str, Any]) -> TimePoint:
    return TimePoint(Chart.TAU, pair_to_complex(block["tau1"]), pair_to_complex(block["tau2"]))


def _shape(values: List[int], name: str) -> Tuple[int, int]:
    if len(values) != 2 or min(values) < 1:
        raise ValueError(f"{name} must be two positive integers, got {values}")
    return int(values[0]), int(values[1])


def _flow_section(block: Dict[str, Any]) -> FlowConfig:
    section = FlowConfig()
    if "dt1" in block:
        section.dt1 = pair_to_complex(block["dt1"])
    if "dt2" in block:
        section.dt2 = pair_to_complex(block["dt2"])
    section.samples = int(block.get("samples", section.samples))
    if "rational_state" in block:
        section.rational_state = RationalState(**_complex_block(block["rational_state"]))
    if "polynomial_state" in block:
        section.polynomial_state = PolynomialState(
            **_complex_block(block["polynomial_state"])
        )
    return section


def _lax_section(block: Dict[str, Any]) -> LaxConfig:
    section = LaxConfig()
    if "etas" in block:
        section.etas = [pair_to_complex(value) for value in block["etas"]]
    if "charts" in block:
        section.charts = [Chart[name] for name in block["charts"]]
    return section


def _prlg_section(block: Dict[str, Any]) -> PrlgConfig:
    section = PrlgConfig()
    if "shape" in block:
        section.shape = _shape(block["shape"], "prlg.shape")
    section.spacing = float(block.get("spacing", section.spacing))
    return section


def _psi_section(block: Dict[str, Any]) -> PsiConfig:
    section = PsiConfig()
    if "base_eta" in block:
        section.base_eta = pair_to_complex(block["base_eta"])
    if "points" in block:
        section.points = [pair_to_complex(value) for value in block["points"]]
    if "grid_shape" in block:
        section.grid_shape = _shape(block["grid_shape"], "psi.grid_shape")
    section.grid_spacing = float(block.get("grid_spacing", section.grid_spacing))
    section.path_tol = float(block.get("path_tol", section.path_tol))
    if "nodes" in block:
        section.nodes = [
            (
                _time(entry["time"]) if "time" in entry else None,
                pair_to_complex(entry["zeta"]),
                pair_to_complex(entry["eta"]),
            )
            for entry in block["nodes"]
        ]
    return section


def _check_semantics(config: RunConfig, source: str):
    """Reject configs whose grids touch singular sets"""
    if config.tol <= 0:
        raise ConfigError(f"{source}: tol must be positive, got {config.tol}")
    if len(config.steps) < 3 or min(config.steps) <= 0:
        raise ConfigError(f"{source}: steps must hold at least 3 positive values")
    tau = config.base_time
    if min(abs(tau.c1), abs(tau.c2)) < 0.05:
        raise ConfigError(f"{source}: base time {tau} is within 0.05 of a zero time")
    if abs(config.initial_state.u) < 1e-12:
        raise ConfigError(f"{source}: initial u must be nonzero")
    if not satisfies_fuchs(config.params):
        raise ConfigError(
            f"{source}: params break the Fuchs-Hukuhara relation "
            "theta0 + theta1 + theta1_inf + theta2_inf = 0"
        )
    for lam in [config.psi.base_eta] + config.psi.points + config.lax.etas:
        if abs(lam) < 0.05 or abs(lam - 1) < 0.05:
            raise ConfigError(f"{source}: spectral point {lam} is too close to 0 or 1")
    for _, zeta, eta in config.psi.nodes:
        if abs(zeta - eta) < 0.05:
            raise ConfigError(f"{source}: node ({zeta}, {eta}) has |zeta - eta| < 0.05")
    h_min = min(config.steps)
    if config.tol > 0.1 * h_min**2:
        log.warning(
            "tol=%.1e is large for h=%.1e; residual floors may hide the order",
            config.tol,
            h_min,
        )
