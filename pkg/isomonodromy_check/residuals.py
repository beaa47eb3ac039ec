"""
Finite-difference stencils, convergence-order fits and the machine-readable
report that every verification command writes.
"""

# Standard
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence
import csv
import dataclasses
import datetime
import json
import platform

# Third Party
import numpy as np
import scipy

# First Party
import alog

log = alog.use_channel("RESID")

## Globals #####################################################################

DEFAULT_STEPS = [1e-3, 5e-4, 2.5e-4]
DEFAULT_MIN_ORDER = 1.8
INVARIANT_THRESHOLD = 1e-10
REPORT_SCHEMA = "report/v1"

# Residuals below this are treated as exact zeros in the log-log fit
_LOG_FLOOR = 1e-300


## Stencils ####################################################################


def central_first(f: Callable[[float], Any], h: float) -> Any:
    """(f(h) - f(-h)) / 2h for a function of the offset"""
    return (f(h) - f(-h)) / (2 * h)


def central_second(f: Callable[[float], Any], h: float) -> Any:
    return (f(h) - 2 * f(0.0) + f(-h)) / h**2


def central_mixed(f: Callable[[float, float], Any], h: float) -> Any:
    """Centered 4-point stencil for the mixed partial of f(offset1, offset2)"""
    return (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h**2)


def normalized_residual(lhs: Any, rhs: Any, scale: Any) -> float:
    """|lhs - rhs| / (1 + |scale|), with max-norms for arrays"""
    diff = float(np.max(np.abs(np.asarray(lhs) - np.asarray(rhs))))
    return diff / (1.0 + float(np.max(np.abs(np.asarray(scale)))))


## Order fit ###################################################################


def fit_order(steps: Sequence[float], residuals: Sequence[float]) -> float:
    """Least-squares slope of log(residual) against log(h)

    Args:
        steps:  Sequence[float]
            Step sizes, at least three
        residuals:  Sequence[float]
            Residual norm for each step

    Returns:
        order:  float
            The fitted slope; nan for an all-zero residual sequence
    """
    if len(steps) != len(residuals):
        raise ValueError(
            f"Got {len(steps)} step sizes but {len(residuals)} residuals"
        )
    if len(steps) < 3:
        raise ValueError(f"An order fit needs at least 3 step sizes, got {len(steps)}")
    values = np.asarray(residuals, float)
    if not np.all(np.isfinite(values)):
        return float("nan")
    if np.all(values == 0):
        return float("nan")
    slope, _ = np.polyfit(
        np.log(np.asarray(steps, float)), np.log(np.maximum(values, _LOG_FLOOR)), 1
    )
    return float(slope)


## Check results ###############################################################


@dataclasses.dataclass
class CheckResult:
    """Outcome of a single named check.

    A convergence check carries one residual per step size and passes when the
    fitted order reaches min_order or the smallest-step residual is already at
    or below the floor. An invariant check carries a single residual and passes
    when it is at most the threshold.
    """

    check_id: str
    residuals: List[float]
    steps: Optional[List[float]] = None
    order: Optional[float] = None
    threshold: float = INVARIANT_THRESHOLD
    min_order: Optional[float] = None
    nodes: int = 1
    passed: bool = False
    gating: bool = True
    detail: Dict[str, Any] = dataclasses.field(default_factory=dict)

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "check_id": self.check_id,
            "nodes": self.nodes,
            "steps": self.steps,
            "residuals": [_json_float(value) for value in self.residuals],
            "order": _json_float(self.order),
            "min_order": self.min_order,
            "threshold": self.threshold,
            "passed": self.passed,
            "gating": self.gating,
            "detail": self.detail,
        }


def invariant_check(
    check_id: str,
    residuals: Iterable[float],
    *,
    threshold: float = INVARIANT_THRESHOLD,
    gating: bool = True,
    detail: Optional[Dict[str, Any]] = None,
) -> CheckResult:
    """Check that the largest of a set of per-node residuals is small"""
    values = [float(value) for value in residuals]
    worst = max(values) if values else 0.0
    passed = bool(np.isfinite(worst) and worst <= threshold)
    result = CheckResult(
        check_id=check_id,
        residuals=[worst],
        threshold=threshold,
        nodes=len(values),
        passed=passed,
        gating=gating,
        detail=detail or {},
    )
    _log_result(result)
    return result


def convergence_check(
    check_id: str,
    steps: Sequence[float],
    residual_fn: Callable[[float], float],
    *,
    floor: float,
    min_order: float = DEFAULT_MIN_ORDER,
    nodes: int = 1,
    gating: bool = True,
    detail: Optional[Dict[str, Any]] = None,
) -> CheckResult:
    """Evaluate residual_fn at every step size and fit the decay order"""
    steps = sorted((float(h) for h in steps), reverse=True)
    residuals = [float(residual_fn(h)) for h in steps]
    return convergence_result(
        check_id,
        steps,
        residuals,
        floor=floor,
        min_order=min_order,
        nodes=nodes,
        gating=gating,
        detail=detail,
    )


def convergence_result(
    check_id: str,
    steps: Sequence[float],
    residuals: Sequence[float],
    *,
    floor: float,
    min_order: float = DEFAULT_MIN_ORDER,
    nodes: int = 1,
    gating: bool = True,
    detail: Optional[Dict[str, Any]] = None,
) -> CheckResult:
    """Build a convergence CheckResult from residuals already computed"""
    order = fit_order(steps, residuals)
    smallest = residuals[int(np.argmin(steps))]
    passed = bool(
        np.isfinite(smallest)
        and ((np.isfinite(order) and order >= min_order) or smallest <= floor)
    )
    result = CheckResult(
        check_id=check_id,
        residuals=list(residuals),
        steps=list(steps),
        order=order,
        threshold=floor,
        min_order=min_order,
        nodes=nodes,
        passed=passed,
        gating=gating,
        detail=detail or {},
    )
    _log_result(result)
    return result


## Report ######################################################################


class ResidualReport:
    """Ordered collection of check results plus provenance"""

    def __init__(
        self,
        command: str,
        config_hash: str,
        mutation: Optional[str] = None,
    ):
        self.command = command
        self.config_hash = config_hash
        self.mutation = mutation
        self.checks: List[CheckResult] = []

    def add(self, result: CheckResult) -> CheckResult:
        self.checks.append(result)
        return result

    @property
    def passed(self) -> bool:
        """Only gating checks decide the outcome"""
        return all(check.passed for check in self.checks if check.gating)

    @property
    def failed_checks(self) -> List[str]:
        return [
            check.check_id
            for check in self.checks
            if check.gating and not check.passed
        ]

    def to_json_dict(self, timestamp: Optional[str] = None) -> Dict[str, Any]:
        return {
            "schema": REPORT_SCHEMA,
            "command": self.command,
            "config_hash": self.config_hash,
            "mutation": self.mutation,
            "passed": self.passed,
            "versions": versions(),
            "timestamp": timestamp
            or datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "checks": [check.to_json_dict() for check in self.checks],
        }

    def to_json(self, timestamp: Optional[str] = None) -> str:
        return json.dumps(self.to_json_dict(timestamp), indent=2, sort_keys=True)

    def write(self, path: str, timestamp: Optional[str] = None):
        with open(path, "w") as handle:
            handle.write(self.to_json(timestamp))
            handle.write("\n")
        log.debug("Wrote report with %d checks to %s", len(self.checks), path)


def versions() -> Dict[str, str]:
    return {
        "numpy": np.__version__,
        "python": platform.python_version(),
        "scipy": scipy.__version__,
    }


def write_csv(
    path: str, schema: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]
):
    """Write rows under a '# schema: ...' comment line and a header row.
    Complex cells are split into _re/_im columns.
    """
    rows = [list(row) for row in rows]
    complex_cols = {
        idx
        for idx in range(len(columns))
        if any(isinstance(row[idx], complex) for row in rows)
    }
    header = []
    for idx, name in enumerate(columns):
        header.extend([f"{name}_re", f"{name}_im"] if idx in complex_cols else [name])
    with open(path, "w", newline="") as handle:
        handle.write(f"# schema: {schema}\n")
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            cells = []
            for idx, value in enumerate(row):
                if idx in complex_cols:
                    value = complex(value)
                    cells.extend([repr(value.real), repr(value.imag)])
                else:
                    cells.append(repr(value) if isinstance(value, float) else value)
            writer.writerow(cells)


## Implementation Details ######################################################


def _json_float(value: Optional[float]) -> Optional[Any]:
    """NaN and infinities are not JSON, so they become strings"""
    if value is None:
        return None
    value = float(value)
    if np.isfinite(value):
        return value
    return str(value)


def _log_result(result: CheckResult):
    if result.passed:
        log.debug2("Check %s passed: %s", result.check_id, result.residuals)
    else:
        log.warning(
            "Check %s failed: residuals=%s order=%s",
            result.check_id,
            result.residuals,
            result.order,
        )
