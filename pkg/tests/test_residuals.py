"""
Tests for stencils, order fits and the residual report
"""

# Standard
import json
import math

# Third Party
import numpy as np
import pytest

# First Party
import alog

# Local
from isomonodromy_check.residuals import (
    DEFAULT_STEPS,
    ResidualReport,
    central_first,
    central_mixed,
    central_second,
    convergence_check,
    convergence_result,
    fit_order,
    invariant_check,
    normalized_residual,
    write_csv,
)

log = alog.use_channel("TEST")

## Stencils ####################################################################


def test_stencils_on_polynomials():
    """Make sure the stencils are exact on low-degree polynomials"""
    assert central_first(lambda x: 3 * x**2 + 2 * x, 0.1) == pytest.approx(2.0)
    assert central_second(lambda x: 3 * x**2 + 2 * x, 0.1) == pytest.approx(6.0)
    assert central_mixed(lambda x, y: 5 * x * y + x**2, 0.1) == pytest.approx(5.0)


def test_normalized_residual():
    """Make sure the residual is scaled by 1 + |scale|"""
    assert normalized_residual(3.0, 1.0, 1.0) == pytest.approx(1.0)
    assert normalized_residual(np.eye(2), np.zeros((2, 2)), np.array([3.0, -1.0])) == (
        pytest.approx(0.25)
    )


## fit_order ###################################################################


@pytest.mark.parametrize("order", [1.0, 2.0, 4.0])
def test_fit_order_recovers_power(order):
    """Make sure a pure power law gives back its exponent"""
    residuals = [7.0 * h**order for h in DEFAULT_STEPS]
    assert fit_order(DEFAULT_STEPS, residuals) == pytest.approx(order)


def test_fit_order_edge_cases():
    """Make sure degenerate inputs are reported, not fitted"""
    assert math.isnan(fit_order(DEFAULT_STEPS, [0.0, 0.0, 0.0]))
    assert math.isnan(fit_order(DEFAULT_STEPS, [1.0, float("nan"), 1.0]))
    with pytest.raises(ValueError):
        fit_order([1e-3, 5e-4], [1.0, 0.25])
    with pytest.raises(ValueError):
        fit_order(DEFAULT_STEPS, [1.0])


## Pass rule ###################################################################


def test_order_passes():
    """Make sure second-order decay passes above the floor"""
    result = convergence_check("demo", DEFAULT_STEPS, lambda h: h**2, floor=1e-12)
    assert result.passed
    assert result.order == pytest.approx(2.0)
    assert result.steps == sorted(DEFAULT_STEPS, reverse=True)


def test_floor_passes():
    """Make sure residuals at the floor pass even without decay"""
    result = convergence_result("flat", DEFAULT_STEPS, [1e-9] * 3, floor=1e-8)
    assert result.passed


def test_flat_residual_fails():
    """Make sure a residual that does not decay fails"""
    result = convergence_result("flat", DEFAULT_STEPS, [1e-2] * 3, floor=1e-8)
    assert not result.passed
    assert result.order == pytest.approx(0.0, abs=1e-12)


def test_nan_residual_fails():
    """Make sure non-finite residuals never pass"""
    result = convergence_result("nan", DEFAULT_STEPS, [1.0, 1.0, float("nan")], floor=1.0)
    assert not result.passed


def test_invariant_check():
    """Make sure the worst residual decides an invariant check"""
    assert invariant_check("ok", [1e-12, 1e-11]).passed
    failed = invariant_check("bad", [1e-12, 1e-6])
    assert not failed.passed
    assert failed.residuals == [1e-6]
    assert failed.nodes == 2


## Report ######################################################################


def test_report_gating():
    """Make sure only gating checks decide the outcome"""
    report = ResidualReport("demo", "abc")
    report.add(invariant_check("gating", [0.0]))
    report.add(invariant_check("info", [1.0], gating=False))
    assert report.passed
    report.add(invariant_check("broken", [1.0]))
    assert not report.passed
    assert report.failed_checks == ["broken"]


def test_report_is_deterministic():
    """Make sure two identical reports serialise identically"""

    def build():
        report = ResidualReport("demo", "abc", mutation="g1")
        report.add(convergence_result("c", DEFAULT_STEPS, [0.0] * 3, floor=1e-8))
        return report.to_json(timestamp="2020-01-01T00:00:00+00:00")

    text = build()
    assert text == build()
    decoded = json.loads(text)
    assert decoded["mutation"] == "g1"
    assert decoded["checks"][0]["order"] == "nan"
    assert set(decoded["versions"]) == {"numpy", "python", "scipy"}


def test_report_file(tmp_path):
    """Make sure the report is written as JSON"""
    path = tmp_path / "report.json"
    ResidualReport("demo", "abc").write(str(path))
    assert json.loads(path.read_text())["command"] == "demo"


## CSV #########################################################################


def test_write_csv(tmp_path):
    """Make sure complex columns are split and real ones are not"""
    path = tmp_path / "out.csv"
    write_csv(str(path), "demo/v1", ["z", "x"], [[1 + 2j, 0.5], [3j, 1.5]])
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema: demo/v1"
    assert lines[1] == "z_re,z_im,x"
    assert lines[2] == "1.0,2.0,0.5"
