"""
End-to-end tests of the verification commands and the command line
"""

# Standard
import json
import os

# Third Party
import pytest

# First Party
import alog

# Local
from isomonodromy_check.__main__ import build_parser, main
from isomonodromy_check.harness import MUTATIONS, run

log = alog.use_channel("TEST")


def read_report(out_dir):
    with open(os.path.join(out_dir, "report.json")) as handle:
        return json.load(handle)


def check_ids(report):
    return [check["check_id"] for check in report["checks"]]


## flow ########################################################################


def test_flow_passes(config_file, tmp_path):
    """Make sure the flow command passes and writes its outputs"""
    out = str(tmp_path / "flow")
    assert run("flow", config_file, out) == 0
    report = read_report(out)
    assert report["command"] == "flow"
    assert report["passed"]
    assert "flow.kns.commute" in check_ids(report)
    assert os.path.exists(os.path.join(out, "trajectory_kns.csv"))


def test_flow_other_forms_gate(config_dict, tmp_path):
    """Make sure the rational and polynomial commutation checks run and gate"""
    config_dict["flow"]["rational_state"] = {
        "lambda1": [0.3, 0.4], "lambda2": [1.6, -0.3], "mu1": [0.2, 0.0], "mu2": [-0.1, 0.3]
    }
    config_dict["flow"]["polynomial_state"] = {
        "q1": [0.5, 0.2], "q2": [0.7, -0.3], "p1": [0.2, 0.1], "p2": [-0.3, 0.2]
    }
    path = tmp_path / "forms.json"
    path.write_text(json.dumps(config_dict))
    out = str(tmp_path / "flow")
    assert run("flow", str(path), out) == 0
    by_id = {check["check_id"]: check for check in read_report(out)["checks"]}
    for check_id in ("flow.rational.commute", "flow.polynomial.commute"):
        assert by_id[check_id]["gating"]
        assert by_id[check_id]["passed"]


def test_flow_mutation_fails(config_file, tmp_path):
    """Make sure the corrupted field is caught"""
    out = str(tmp_path / "flow")
    assert run("flow", config_file, out, mutate="field") == 1
    report = read_report(out)
    assert report["mutation"] == "field"
    assert not report["passed"]


def test_reports_are_deterministic(config_file, tmp_path):
    """Make sure two runs differ in the timestamp only"""
    reports = []
    for name in ("one", "two"):
        out = str(tmp_path / name)
        run("flow", config_file, out)
        report = read_report(out)
        report.pop("timestamp")
        reports.append(report)
    assert reports[0] == reports[1]


## lax-check ###################################################################


def test_lax_check_passes(config_file, tmp_path):
    """Make sure the Lax invariants and zero curvature pass"""
    out = str(tmp_path / "lax")
    assert run("lax-check", config_file, out) == 0
    ids = check_ids(read_report(out))
    assert "lax.gauge_shift" in ids
    assert "lax.curvature.T.A.eta-1" in ids
    assert "lax.curvature.TAU.B.1-2" in ids


def test_lax_check_mutation_fails(config_file, tmp_path):
    """Make sure data moved off the trajectory fails zero curvature"""
    assert run("lax-check", config_file, str(tmp_path / "lax"), mutate="state") == 1


## prlg ########################################################################


def test_prlg_passes(config_file, tmp_path):
    """Make sure the PRLG system and constraint pass"""
    out = str(tmp_path / "prlg")
    assert run("prlg", config_file, out) == 0
    assert os.path.exists(os.path.join(out, "prlg_grid.csv"))


def test_prlg_mutation_fails(config_file, tmp_path):
    """Make sure a sign-flipped d is caught"""
    out = str(tmp_path / "prlg")
    assert run("prlg", config_file, out, mutate="d") == 1
    report = read_report(out)
    failed = [c["check_id"] for c in report["checks"] if not c["passed"]]
    assert "prlg.system.d" in failed


## psi #########################################################################


def test_psi_passes(config_file, tmp_path):
    """Make sure the kernel checks and the gating evolution equations pass"""
    out = str(tmp_path / "psi")
    assert run("psi", config_file, out) == 0
    report = read_report(out)
    by_id = {check["check_id"]: check for check in report["checks"]}
    assert by_id["psi.28.derived"]["gating"]
    assert by_id["psi.34.reconciled"]["gating"]
    assert by_id["psi.34.reconciled"]["passed"]
    assert not by_id["psi.34.printed"]["gating"]
    assert not by_id["psi.32.printed"]["gating"]
    assert not by_id["psi.audit"]["gating"]
    assert os.path.exists(os.path.join(out, "psi_residuals.csv"))
    with open(os.path.join(out, "audit.json")) as handle:
        audit = json.load(handle)
    assert {entry["equation"] for entry in audit} >= {"32"}


def test_psi_potential_mutation_fails(config_file, tmp_path):
    """Make sure a shifted kernel potential is caught"""
    out = str(tmp_path / "psi")
    assert run("psi", config_file, out, mutate="g1") == 1
    report = read_report(out)
    failed = [c["check_id"] for c in report["checks"] if not c["passed"]]
    assert "psi.28.printed" in failed


def test_psi_kappa_mutation_fails(config_file, tmp_path):
    """Make sure a shifted kappa fails the reconciled final equations"""
    out = str(tmp_path / "psi")
    assert run("psi", config_file, out, mutate="kappa") == 1
    report = read_report(out)
    failed = [c["check_id"] for c in report["checks"] if not c["passed"]]
    assert "psi.34.reconciled" in failed
    assert "psi.35.reconciled" in failed
    assert "psi.34.derived" not in failed


def test_psi_unconstrained_params_exit_2(config_dict, tmp_path, params):
    """Make sure a full parameter block off the kappa constraint exits 2"""
    config_dict["params"] = params.replace(kappa=params.kappa + 1).to_json_dict()
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(config_dict))
    assert run("psi", str(path), str(tmp_path / "psi")) == 2


## Errors ######################################################################


def test_bad_config_exits_2(tmp_path):
    """Make sure configuration errors map to exit status 2"""
    path = tmp_path / "bad.json"
    path.write_text('{"params": {}}')
    assert run("flow", str(path), str(tmp_path / "out")) == 2


def test_unknown_mutation_exits_2(config_file, tmp_path):
    """Make sure a mutation of another command is refused"""
    assert run("flow", config_file, str(tmp_path / "out"), mutate="g1") == 2


def test_short_step_list_exits_2(config_file, tmp_path):
    """Make sure fewer than three steps are refused"""
    assert run("flow", config_file, str(tmp_path / "out"), steps=[1e-3, 5e-4]) == 2


## Command line ################################################################


def test_parser_offers_every_mutation():
    """Make sure each subcommand accepts exactly its own mutations"""
    parser = build_parser()
    for command, mutations in MUTATIONS.items():
        for mutation in mutations:
            args = parser.parse_args(
                [command, "--config", "c.json", "--mutate", mutation]
            )
            assert args.mutate == mutation
    with pytest.raises(SystemExit):
        parser.parse_args(["flow", "--config", "c.json", "--mutate", "g1"])


def test_parser_steps():
    """Make sure step lists are parsed from comma separated text"""
    args = build_parser().parse_args(
        ["psi", "--config", "c.json", "--steps", "1e-3,5e-4,2.5e-4"]
    )
    assert args.steps == [1e-3, 5e-4, 2.5e-4]


def test_main(config_file, tmp_path):
    """Make sure main runs a command end to end"""
    out = str(tmp_path / "main")
    assert main(["flow", "--config", config_file, "--out", out]) == 0
    assert read_report(out)["passed"]
