"""
Common test helpers
"""

# Standard
import json
import os

# Third Party
import pytest

# First Party
import alog

# Local
from isomonodromy_check.hamiltonians import (
    Chart,
    KnsState,
    PolynomialState,
    RationalState,
    TimePoint,
)
from isomonodromy_check.params import complex_to_pair, make_parameter_set

def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-size runs of the commands")


# Global logging config
alog.configure(
    default_level=os.environ.get("LOG_LEVEL", "info"),
    filters=os.environ.get("LOG_FILTERS", ""),
    formatter="json" if os.environ.get("LOG_JSON", "").lower() == "true" else "pretty",
    thread_id=os.environ.get("LOG_THREAD_ID", "").lower() == "true",
)

# Generic complex constants used across the suite
FREE_PARAMS = {
    "kappa0": 0.3 + 0.1j,
    "kappa1": 0.7 - 0.2j,
    "gamma1": 0.4 + 0.05j,
    "gamma2": -0.25 + 0.15j,
    "theta1": 0.35 - 0.1j,
}

# A regular KNS point
KNS_STATE = KnsState(
    Q1=0.4 + 0.2j,
    Q2=0.6 - 0.1j,
    P1=0.3 + 0.1j,
    P2=0.9 + 0.05j,
    u=1.0 + 0j,
)

RATIONAL_STATE = RationalState(
    lambda1=0.3 + 0.4j,
    lambda2=1.6 - 0.3j,
    mu1=0.2 + 0j,
    mu2=-0.1 + 0.3j,
)

POLYNOMIAL_STATE = PolynomialState(
    q1=0.5 + 0.2j,
    q2=0.7 - 0.3j,
    p1=0.2 + 0.1j,
    p2=-0.3 + 0.2j,
)

BASE_TIME = TimePoint(Chart.TAU, 1.0 + 0j, 0.5 + 0j)


@pytest.fixture
def params():
    """A generic constrained parameter set"""
    return make_parameter_set(**FREE_PARAMS)


@pytest.fixture
def kns_state():
    return KNS_STATE


@pytest.fixture
def rational_state():
    return RATIONAL_STATE


@pytest.fixture
def polynomial_state():
    return POLYNOMIAL_STATE


@pytest.fixture
def base_time():
    return BASE_TIME


@pytest.fixture
def config_dict():
    """A small run config as decoded JSON"""
    return {
        "params": {key: complex_to_pair(val) for key, val in FREE_PARAMS.items()},
        "initial_state": {
            "Q1": complex_to_pair(KNS_STATE.Q1),
            "Q2": complex_to_pair(KNS_STATE.Q2),
            "P1": complex_to_pair(KNS_STATE.P1),
            "P2": complex_to_pair(KNS_STATE.P2),
            "u": complex_to_pair(KNS_STATE.u),
        },
        "base_time": {"tau1": [1.0, 0.0], "tau2": [0.5, 0.0]},
        "flow": {"dt1": [0.05, 0.0], "dt2": [0.05, 0.0], "samples": 5},
        "prlg": {"shape": [3, 3], "spacing": 0.02},
        "psi": {"grid_shape": [1, 1]},
    }


@pytest.fixture
def config_file(tmp_path, config_dict):
    """The small run config written to disk"""
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config_dict))
    return str(path)
