"""
Acceptance-size runs of the prlg and psi commands. Deselect with -m "not slow".
"""

# Standard
import json
import os

# Third Party
import pytest

# First Party
import alog

# Local
from isomonodromy_check.harness import run

log = alog.use_channel("TEST")

pytestmark = pytest.mark.slow

# Eight spectral points clear of 0, 1 and each other
SPECTRAL_POINTS = [
    [2.5, 0.5], [3.0, 0.2], [2.0, 1.0], [3.0, 1.2],
    [2.2, 0.4], [2.8, 0.8], [3.4, 0.6], [2.4, 1.4],
]

# Interior kernel nodes at the base time and inside the time grid
NODES = [
    {"zeta": [2.5, 0.5], "eta": [3.0, 0.2]},
    {
        "zeta": [2.5, 0.5],
        "eta": [3.0, 0.2],
        "time": {"tau1": [1.04, 0.0], "tau2": [0.54, 0.0]},
    },
]


@pytest.fixture
def acceptance_file(tmp_path, config_dict):
    config_dict["prlg"] = {"shape": [20, 20], "spacing": 0.01}
    config_dict["psi"] = {
        "grid_shape": [5, 5],
        "grid_spacing": 0.02,
        "points": SPECTRAL_POINTS,
        "nodes": NODES,
    }
    path = tmp_path / "acceptance.json"
    path.write_text(json.dumps(config_dict))
    return str(path)


def gating_failures(out_dir):
    with open(os.path.join(out_dir, "report.json")) as handle:
        report = json.load(handle)
    return [
        check["check_id"]
        for check in report["checks"]
        if check["gating"] and not check["passed"]
    ]


def test_prlg_on_full_grid(acceptance_file, tmp_path):
    """Make sure the PRLG checks pass on a 20 x 20 time grid"""
    out = str(tmp_path / "prlg")
    assert run("prlg", acceptance_file, out) == 0, gating_failures(out)


def test_psi_on_full_grid(acceptance_file, tmp_path):
    """Make sure the kernel and evolution checks pass on a 5 x 5 time grid
    with eight spectral points and several nodes
    """
    out = str(tmp_path / "psi")
    assert run("psi", acceptance_file, out) == 0, gating_failures(out)


def test_psi_kappa_control_on_full_grid(acceptance_file, tmp_path):
    """Make sure the shifted kappa still fails at acceptance size"""
    out = str(tmp_path / "psi")
    assert run("psi", acceptance_file, out, mutate="kappa") == 1
    assert "psi.34.reconciled" in gating_failures(out)
