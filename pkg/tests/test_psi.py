"""
Tests for the joint fundamental solution, the kernel M and the residuals of
the scalar evolution equations
"""

# Third Party
import numpy as np
import pytest

# First Party
import alog

# Local
from isomonodromy_check.errors import (
    CoincidentSpectral,
    ConstraintViolation,
    SingularZ,
    SpectralPole,
)
from isomonodromy_check.evolution import (
    ALL_EQUATIONS,
    KERNEL_EQUATIONS,
    RECONCILED_EQUATIONS,
    moebius,
)
from isomonodromy_check.hamiltonians import Chart, TimePoint
from isomonodromy_check.psi import (
    FundamentalSolution,
    build_Z_grid,
    change_vars_polynomial,
    change_vars_xy,
    equation_residual,
    gauge_S,
    kernel_identities,
    kernel_M,
    loop_deviation,
    make_node,
    residual_28_29,
    residual_sweep,
    sample_node,
    write_residual_csv,
)
from isomonodromy_check.residuals import convergence_result

log = alog.use_channel("TEST")

BASE_ETA = 2.5 + 1.0j
POINTS = [2.5 + 0.5j, 3.0 + 0.2j, 2.0 + 1.0j]
NEAR_TIME = TimePoint(Chart.TAU, 1.05 + 0j, 0.55 + 0j)
H = 5e-3


@pytest.fixture
def solver(params, kns_state, base_time):
    return FundamentalSolution(params, base_time, kns_state, BASE_ETA, tol=1e-12)


@pytest.fixture
def node(base_time):
    return make_node(base_time, 2.5 + 0.5j, 3.0 + 0.2j)


## Fundamental solution ########################################################


def test_identity_at_base(solver):
    """Make sure Z is the identity at the base point"""
    np.testing.assert_allclose(solver.base_Z(BASE_ETA), np.eye(2))
    assert solver.at_base(POINTS).S == 0


def test_unconstrained_params_refused(params, kns_state, base_time):
    """Make sure a parameter set off the kappa constraint is refused"""
    broken = params.replace(kappa=params.kappa + 1)
    with pytest.raises(ConstraintViolation, match="kappa"):
        FundamentalSolution(broken, base_time, kns_state, BASE_ETA)


def test_grid_determinants(solver, base_time):
    """Make sure det Z = 1 everywhere and both leg orders agree"""
    grid = build_Z_grid(solver, [base_time, NEAR_TIME], POINTS, path_tol=1e-8)
    assert len(grid.det_residuals()) == 2 * len(POINTS)
    assert max(grid.det_residuals()) < 1e-8


def test_kernel_identities(solver, base_time):
    """Make sure M(z, z) = I and M(z, e) M(e, z) = I"""
    grid = build_Z_grid(solver, [NEAR_TIME], POINTS, verify_paths=False)
    assert kernel_identities(grid, 0) < 1e-9


def test_singular_Z():
    """Make sure a singular Z(eta) is refused"""
    with pytest.raises(SingularZ):
        kernel_M(np.zeros((2, 2)), np.eye(2))


def test_loop(solver):
    """Make sure spectral and time legs commute"""
    assert loop_deviation(solver, NEAR_TIME, POINTS[1]) < 1e-8


def test_state_follows_kns_flow(solver):
    """Make sure the joint solution carries the KNS state along"""
    first = solver.solve(NEAR_TIME, [])
    second = solver.solve(NEAR_TIME, [], order=(2, 1))
    np.testing.assert_allclose(first.state.to_array(), second.state.to_array(), atol=1e-9)


## Gauge S #####################################################################


def test_gauge_S(solver, base_time):
    """Make sure S vanishes at the base and solves its two equations"""
    report = gauge_S(solver, [base_time, NEAR_TIME], 1e-3)
    assert report.values[0] == 0
    assert report.swap_deviation < 1e-8
    assert max(report.equation_residuals) < 1e-5


def test_gauge_S_drop_det(params, kns_state, base_time):
    """Make sure leaving out the determinant term breaks the tau1 equation"""
    broken = FundamentalSolution(
        params, base_time, kns_state, BASE_ETA, tol=1e-12, drop_det=True
    )
    report = gauge_S(broken, [NEAR_TIME], 1e-3)
    assert report.equation_residuals[0] > 1e-4


## Nodes #######################################################################


def test_make_node(node):
    """Make sure nodes carry their Moebius images"""
    assert node.x == pytest.approx(moebius(2.5 + 0.5j))
    assert node.y == pytest.approx(moebius(3.0 + 0.2j))
    x, y, W = change_vars_xy(node.zeta, node.eta, np.eye(2))
    assert (x, y) == (node.x, node.y)
    assert len(change_vars_polynomial(node.time, x, y, W)) == 5


@pytest.mark.parametrize(
    "zeta,eta,error",
    [
        (0.01, 2.0, SpectralPole),
        (2.0, 1.02, SpectralPole),
        (2.0, 2.01, CoincidentSpectral),
    ],
)
def test_bad_nodes(zeta, eta, error, base_time):
    """Make sure nodes near poles or each other are refused"""
    with pytest.raises(error):
        make_node(base_time, zeta, eta)


## Residuals ###################################################################

# Step ladder halving towards the smallest stencil
LADDER = [4e-3, 2e-3, 1e-3]


@pytest.fixture
def samples(solver, node):
    return sample_node(solver, node, [2 * H, H])


@pytest.fixture
def ladder_samples(solver, node):
    return sample_node(solver, node, LADDER)


def ladder_result(equation, ladder_samples, params, base_time, **kwargs):
    residuals = [
        equation_residual(ladder_samples, equation, h, params, base_time, **kwargs)
        for h in LADDER
    ]
    return convergence_result(f"psi.{equation}", LADDER, residuals, floor=1e-6)


@pytest.mark.parametrize("equation", ALL_EQUATIONS)
def test_derived_equations_converge(equation, ladder_samples, params, base_time):
    """Make sure every derived operator annihilates its kernel field at second
    order in the stencil step
    """
    result = ladder_result(equation, ladder_samples, params, base_time)
    assert result.passed, (result.residuals, result.order)


@pytest.mark.parametrize("equation", RECONCILED_EQUATIONS)
def test_reconciled_equations_converge(equation, ladder_samples, params, base_time):
    """Make sure the kappa-carrying operators converge for the true kappa"""
    result = ladder_result(
        equation, ladder_samples, params, base_time, variant="reconciled"
    )
    assert result.passed, (result.residuals, result.order)


@pytest.mark.parametrize("equation", RECONCILED_EQUATIONS)
def test_shifted_kappa_is_detected(equation, ladder_samples, params, base_time):
    """Make sure a shifted kappa leaves a residual that does not shrink"""
    result = ladder_result(
        equation,
        ladder_samples,
        params,
        base_time,
        variant="reconciled",
        operator_params=params.replace(kappa=params.kappa + 0.1),
    )
    assert not result.passed
    assert min(result.residuals) > 1e-4


def test_residual_decays(samples, params, base_time):
    """Make sure the kernel residuals shrink with the step"""
    coarse = residual_28_29(samples, 2 * H, params, base_time)
    fine = residual_28_29(samples, H, params, base_time)
    for big, small in zip(coarse, fine):
        assert small < big


def test_potential_offset_is_detected(samples, params, base_time):
    """Make sure adding 1 to the potential makes the residual large"""
    residual = equation_residual(samples, "28", H, params, base_time, g_offset=1.0)
    assert residual > 1e-2


def test_residual_sweep_and_csv(tmp_path, solver, node):
    """Make sure the sweep reports one value per step and writes rows"""
    steps = [2 * H, H]
    residuals = residual_sweep(
        solver, [node], steps, KERNEL_EQUATIONS, variants=("derived",)
    )
    assert set(residuals) == {("28", "derived"), ("29", "derived")}
    assert all(len(values) == 2 for values in residuals.values())
    path = tmp_path / "psi.csv"
    write_residual_csv(str(path), residuals, steps)
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema: psi-residuals/v1"
    assert lines[1] == "equation,variant,h,residual"
    assert len(lines) == 2 + 4


def test_residual_sweep_reconciled_keys(solver, node):
    """Make sure reconciled residuals exist only for kappa-carrying equations"""
    residuals = residual_sweep(
        solver, [node], [2 * H, H], ["28", "34"], variants=("derived", "reconciled")
    )
    assert set(residuals) == {
        ("28", "derived"),
        ("34", "derived"),
        ("34", "reconciled"),
    }
