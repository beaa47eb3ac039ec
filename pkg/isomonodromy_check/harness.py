"""
Verification commands. Each command runs a family of checks from a RunConfig,
writes report.json and per-check CSV files into the output directory and
returns the report; `run` maps the outcome to an exit status.
"""

# Standard
from typing import Callable, Dict, List, Optional, Sequence
import json
import os
import sys

# Third Party
import numpy as np

# First Party
import alog

# Local
from . import evolution, lax, prlg, psi
from .config import RunConfig, load_config
from .errors import ConfigError, ConstraintViolation
from .flows import FlowPath, commute_check, integrate_path, write_trajectory_csv
from .hamiltonians import Chart, Form, TimePoint, state_from_array
from .params import is_constrained, validate, violated_constraints
from .residuals import (
    DEFAULT_MIN_ORDER,
    INVARIANT_THRESHOLD,
    ResidualReport,
    convergence_check,
    convergence_result,
    invariant_check,
)

log = alog.use_channel("HRNSS")

## Globals #####################################################################

COMMUTE_THRESHOLD = 1e-8
CURVATURE_FLOOR = 1e-8
PRLG_FLOOR = 1e-7
PSI_FLOOR = 1e-6
DET_THRESHOLD = 1e-8
PERTURBATION = {"P2": 0.1}
KAPPA_SHIFT = 0.1

# Negative controls offered by each command
MUTATIONS = {
    "flow": ["field"],
    "lax-check": ["state"],
    "prlg": ["d"],
    "psi": ["g1", "S", "kappa"],
}

# Printed tables known to disagree with the transported operators; their
# residuals are reported without deciding the exit status
INFORMATIONAL = {
    ("32", "printed"),
    ("33", "printed"),
    ("34", "printed"),
    ("35", "printed"),
    ("poly1", "printed"),
    ("poly2", "printed"),
}


## Commands ####################################################################


def cmd_flow(config: RunConfig, out_dir: str, mutate: Optional[str] = None) -> ResidualReport:
    """Integrate the KNS flow, write its trajectory and check commutativity"""
    report = ResidualReport("flow", config.hash, mutate)
    params, base = config.params, config.base_time
    section = config.flow
    report.add(
        invariant_check(
            "params.constraints",
            [abs(value) for value in validate(params)],
            threshold=INVARIANT_THRESHOLD,
        )
    )
    path = FlowPath(
        base,
        [(1, base.c1 + section.dt1), (2, base.c2 + section.dt2)],
        Chart.TAU,
    )
    trajectory = integrate_path(
        Form.KNS, path, config.initial_state, params, tol=config.tol, samples=section.samples
    )
    write_trajectory_csv(os.path.join(out_dir, "trajectory_kns.csv"), trajectory)
    corrupt = 1 if mutate == "field" else None
    deviation = commute_check(
        Form.KNS,
        base,
        config.initial_state,
        section.dt1,
        section.dt2,
        params,
        tol=config.tol,
        chart=Chart.TAU,
        corrupt=corrupt,
    )
    report.add(
        invariant_check(
            "flow.kns.commute",
            [deviation],
            threshold=COMMUTE_THRESHOLD,
            detail={"dt1": _pair(section.dt1), "dt2": _pair(section.dt2)},
        )
    )
    others = [
        (Form.RATIONAL, section.rational_state),
        (Form.POLYNOMIAL, section.polynomial_state),
    ]
    for form, state in others:
        if state is None:
            continue
        deviation = commute_check(
            form, base, state, section.dt1, section.dt2, params, tol=config.tol
        )
        report.add(
            invariant_check(
                f"flow.{form.value.lower()}.commute",
                [deviation],
                threshold=COMMUTE_THRESHOLD,
            )
        )
    return _finish(report, out_dir)


def cmd_lax_check(
    config: RunConfig, out_dir: str, mutate: Optional[str] = None
) -> ResidualReport:
    """Zero curvature of every pair of the linear systems plus the algebraic
    invariants of the Lax matrices
    """
    report = ResidualReport("lax-check", config.hash, mutate)
    params = config.params
    perturb = PERTURBATION if mutate == "state" else None
    nodes = _trajectory_nodes(config)
    invariants: Dict[str, List[float]] = {"trace": [], "det": [], "offdiag": []}
    for time, state in nodes:
        mats = lax.build_B(time, state, params)
        invariants["trace"].extend(lax.trace_residuals(mats).values())
        invariants["det"].append(lax.det_pole_residual(mats, time))
        invariants["offdiag"].append(lax.off_diagonal_residual(mats))
    for name, values in invariants.items():
        report.add(invariant_check(f"lax.{name}", values))

    time, state = nodes[0]
    shifts, round_trips = [], []
    for eta in config.lax.etas:
        shifts.append(lax.gauge_shift_check(time, state, eta, params))
        sample = np.array([[1.0, 2.0], [3.0, 4.0]], complex)
        back = lax.gauge_Z_to_Y(lax.gauge_Y_to_Z(sample, time, eta, params), time, eta, params)
        round_trips.append(float(np.max(np.abs(back - sample))))
    report.add(invariant_check("lax.gauge_shift", shifts))
    report.add(invariant_check("lax.gauge_round_trip", round_trips, threshold=1e-12))

    for chart in config.lax.charts:
        families = ["B", "A"] if chart == Chart.T else ["B"]
        at = time.to_chart(chart)
        for family in families:
            for eta in config.lax.etas:
                for pair in lax.PAIRS:
                    check_id = f"lax.curvature.{chart.value}.{family}.{pair[0]}-{pair[1]}"
                    report.add(
                        convergence_check(
                            check_id,
                            config.steps,
                            lambda h: lax.zero_curvature_residual(
                                pair, at, state, eta, params, h, family=family, perturb=perturb
                            ),
                            floor=CURVATURE_FLOOR,
                            detail={"eta": _pair(eta)},
                        )
                    )
    return _finish(report, out_dir)


def cmd_prlg(config: RunConfig, out_dir: str, mutate: Optional[str] = None) -> ResidualReport:
    """First-order PRLG system, the quadratic constraint and the second-order
    equations on a (tau1, tau2) grid
    """
    report = ResidualReport("prlg", config.hash, mutate)
    params = config.params
    flip = "d" if mutate == "d" else None
    grid = prlg.build_prlg_grid(
        config.base_time,
        config.initial_state,
        params,
        config.prlg.shape,
        config.prlg.spacing,
        tol=config.tol,
    )
    prlg.write_prlg_csv(os.path.join(out_dir, "prlg_grid.csv"), grid, params)
    report.add(invariant_check("prlg.constraint", prlg.constraint_residuals(grid, params)))
    nodes = len(grid.nodes())
    system = {
        h: prlg.prlg_system_residual(grid, params, h, flip=flip) for h in config.steps
    }
    for name in prlg.SYSTEM_EQUATIONS:
        report.add(
            convergence_result(
                f"prlg.system.{name}",
                config.steps,
                [system[h][name] for h in config.steps],
                floor=PRLG_FLOOR,
                nodes=nodes,
            )
        )
    second = {
        h: prlg.prlg_second_order_residual(grid, params, h, flip=flip)
        for h in config.steps
    }
    for name in prlg.SECOND_ORDER_EQUATIONS:
        report.add(
            convergence_result(
                f"prlg.second_order.{name}",
                config.steps,
                [second[h][name] for h in config.steps],
                floor=PRLG_FLOOR,
                nodes=nodes,
            )
        )
    return _finish(report, out_dir)


def cmd_psi(config: RunConfig, out_dir: str, mutate: Optional[str] = None) -> ResidualReport:
    """Fundamental solution, kernel identities, the gauge S and the residuals
    of every scalar evolution equation, printed and derived
    """
    report = ResidualReport("psi", config.hash, mutate)
    params, section = config.params, config.psi
    solver = psi.FundamentalSolution(
        params,
        config.base_time,
        config.initial_state,
        section.base_eta,
        tol=config.tol,
        drop_det=mutate == "S",
    )
    base = solver.base_time
    n1, n2 = section.grid_shape
    times = [
        TimePoint(
            Chart.TAU,
            base.c1 + i * section.grid_spacing,
            base.c2 + k * section.grid_spacing,
        )
        for i in range(n1)
        for k in range(n2)
    ]
    grid = psi.build_Z_grid(solver, times, section.points, path_tol=section.path_tol)
    report.add(
        invariant_check("psi.det_Z", grid.det_residuals(), threshold=DET_THRESHOLD)
    )
    report.add(
        invariant_check(
            "psi.kernel_identities",
            [psi.kernel_identities(grid, idx) for idx in range(len(times))],
        )
    )
    report.add(
        invariant_check(
            "psi.loop",
            [psi.loop_deviation(solver, times[-1], lam) for lam in section.points],
            threshold=section.path_tol,
        )
    )

    gauge = psi.gauge_S(solver, times[1:] or times, min(config.steps))
    report.add(
        invariant_check("psi.S.leg_order", [gauge.swap_deviation], threshold=section.path_tol)
    )

    nodes = [
        psi.make_node(time or base, zeta, eta) for time, zeta, eta in section.nodes
    ]
    operator_params = (
        params.replace(kappa=params.kappa + KAPPA_SHIFT) if mutate == "kappa" else None
    )
    g_offsets = {"28": 1.0} if mutate == "g1" else None
    sweep = psi.residual_sweep(
        solver,
        nodes,
        config.steps,
        operator_params=operator_params,
        g_offsets=g_offsets,
    )
    steps = sorted(config.steps, reverse=True)
    for (equation, variant), values in sweep.items():
        check_id = f"psi.{equation}.{variant}"
        report.add(
            convergence_result(
                check_id,
                steps,
                values,
                floor=PSI_FLOOR,
                min_order=DEFAULT_MIN_ORDER,
                nodes=len(nodes),
                gating=(equation, variant) not in INFORMATIONAL,
            )
        )
    psi.write_residual_csv(os.path.join(out_dir, "psi_residuals.csv"), sweep, steps)

    audit = evolution.audit_coefficients(
        base, config.initial_state, params, [(zeta, eta) for _, zeta, eta in section.nodes]
    )
    with open(os.path.join(out_dir, "audit.json"), "w") as handle:
        json.dump(
            [entry.to_json_dict() for entry in audit if not entry.matches],
            handle,
            indent=2,
            sort_keys=True,
        )
    report.add(
        invariant_check(
            "psi.audit",
            [entry.relative_difference for entry in audit],
            gating=False,
            detail={"mismatched": evolution.mismatched(audit)},
        )
    )
    return _finish(report, out_dir)


COMMANDS: Dict[str, Callable[[RunConfig, str, Optional[str]], ResidualReport]] = {
    "flow": cmd_flow,
    "lax-check": cmd_lax_check,
    "prlg": cmd_prlg,
    "psi": cmd_psi,
}


def run(
    command: str,
    config_path: str,
    out_dir: Optional[str] = None,
    mutate: Optional[str] = None,
    steps: Optional[Sequence[float]] = None,
) -> int:
    """Run one command; 0 when every gating check passes, 1 when one fails,
    2 for configuration errors
    """
    try:
        config = load_config(config_path)
        if mutate is not None and mutate not in MUTATIONS[command]:
            raise ConfigError(
                f"Command {command} has no mutation {mutate}; "
                f"choose from {MUTATIONS[command]}"
            )
        if steps is not None:
            if len(steps) < 3 or min(steps) <= 0:
                raise ConfigError("--steps needs at least 3 positive values")
            config.steps = sorted(steps, reverse=True)
    except ConfigError as err:
        log.error("%s", err)
        print(f"error: {err}", file=sys.stderr)
        return 2
    if not is_constrained(config.params):
        log.warning(
            "Parameter set breaks the constraints %s",
            violated_constraints(config.params),
        )
    out_dir = out_dir or config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    log.info("Running %s into %s", command, out_dir)
    try:
        report = COMMANDS[command](config, out_dir, mutate)
    except ConstraintViolation as err:
        log.error("%s", err)
        print(f"error: {err}", file=sys.stderr)
        return 2
    if report.passed:
        log.info("All %d gating checks of %s passed", _gating_count(report), command)
        return 0
    log.warning("Failed checks: %s", ", ".join(report.failed_checks))
    return 1


## Implementation Details ######################################################


def _finish(report: ResidualReport, out_dir: str) -> ResidualReport:
    report.write(os.path.join(out_dir, "report.json"))
    return report


def _gating_count(report: ResidualReport) -> int:
    return sum(check.gating for check in report.checks)


def _pair(value: complex) -> List[float]:
    value = complex(value)
    return [value.real, value.imag]


def _trajectory_nodes(config: RunConfig):
    """The base node and the end of a short flow from it"""
    base = config.base_time
    path = FlowPath(
        base,
        [(1, base.c1 + config.flow.dt1 / 2), (2, base.c2 + config.flow.dt2 / 2)],
        Chart.TAU,
    )
    trajectory = integrate_path(
        Form.KNS, path, config.initial_state, config.params, tol=config.tol, samples=3
    )
    return [
        (time, state_from_array(Form.KNS, values))
        for time, values in trajectory.samples
    ]
