"""Test cases for Shrinker Lab inequality checks.

Constant data on the Gaussian line has closed-form sides for the mean
value and localized estimates, which pins the fitted constants exactly.
"""

import math

import numpy as np
import pytest

from src.shrinker_lab import sl_constants as const
from src.shrinker_lab.discrete_operators import (
    CylinderProduct,
    TruncatedLine,
    build_grid,
    laplace_beltrami,
)
from src.shrinker_lab.heat_engine import HeatTrajectory
from src.shrinker_lab.inequality_lab import (
    MoserChainConfig,
    ParabolicCylinder,
    RadialBump,
    caccioppoli_check,
    localized_sweep,
    mean_value_check,
    moser_chain_check,
    random_bumps,
    sobolev_check,
)
from src.shrinker_lab.sl_common import ScopeError, UnsupportedExponentError, ValidationError
from src.shrinker_lab.soliton_models import Point, make_cylinder, make_gaussian


# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
SEED = 451
TIMES = np.linspace(-2.25, 0.0, 145)    # dt = 1/64
RHO_CONST = 0.0625                      # (1/2)^3 / 2


# =========================================================
#          F I X T U R E S   A N D   H E L P E R S
# =========================================================
@pytest.fixture(scope='module')
def model():
    return make_gaussian(1)


@pytest.fixture(scope='module')
def grid(model):
    return build_grid(model, TruncatedLine(4.0, 0.02))


@pytest.fixture(scope='module')
def op(grid):
    return laplace_beltrami(grid)


@pytest.fixture(scope='module')
def const_flow(grid):
    return HeatTrajectory.from_closed_form(grid, 'const', TIMES)


@pytest.fixture(scope='module')
def kernel_flow(grid):
    return HeatTrajectory.from_closed_form(grid, 'kernel:3', TIMES)


@pytest.fixture(scope='module')
def cylinder_setup():
    model = make_cylinder(2, 3, quadNodes=16)
    grid = build_grid(model, CylinderProduct(16, 32, 2.0, 0.1))
    return model, grid, Point(0.5 * math.pi, math.pi, 0.0)


# =========================================================
#                    T E S T   C A S E S
# =========================================================
@pytest.mark.smoke
def test_parabolic_cylinder(model):
    cyl = ParabolicCylinder(model.minimizer(), 0.0, 1.5, 0.5)

    assert cyl.tStart == pytest.approx(-2.25)
    assert cyl.inner.r == pytest.approx(0.75)
    assert cyl.as_dict()['delta'] == 0.5


@pytest.mark.exception
@pytest.mark.parametrize('r', [0.0, 2.0, 2.5])
def test_cylinder_scope(model, r):
    with pytest.raises(ScopeError):
        ParabolicCylinder(model.minimizer(), 0.0, r)


@pytest.mark.exception
@pytest.mark.parametrize('cutoff', [0.0, 1.0, -0.5])
def test_cylinder_bad_cutoff(model, cutoff):
    with pytest.raises(ValidationError):
        ParabolicCylinder(model.minimizer(), 0.0, 1.0, cutoff)


def test_scope_error_is_validation_error(model):
    with pytest.raises(ValidationError):
        ParabolicCylinder(model.minimizer(), 0.0, 2.5)


def test_moser_schedule():
    cfg = MoserChainConfig(1, 0.5, 4, 1.0)

    assert cfg.theta == pytest.approx(3.0)
    assert cfg.sigmas == pytest.approx([1.0, 0.75, 0.625, 0.5625, 0.53125])
    assert cfg.low_sigmas[0] == 0.5
    assert all(a < b < 1.0 for a, b in zip(cfg.low_sigmas, cfg.low_sigmas[1:]))


@pytest.mark.exception
@pytest.mark.parametrize('kwargs', [{'n': 0}, {'n': 1, 'levels': 9}, {'n': 1, 'exponent': 0.0}])
def test_moser_schedule_invalid(kwargs):
    with pytest.raises(ValidationError):
        MoserChainConfig(**kwargs)


@pytest.mark.smoke
def test_mean_value_const(model, op, const_flow):
    cyl = ParabolicCylinder(model.minimizer(), 0.0, 1.0, 0.5)
    report = mean_value_check(const_flow, cyl, 1.0, model, op)

    assert report.passed
    assert report.fittedConstant == pytest.approx(RHO_CONST, abs=1e-9)
    assert report['ball_volume_discrete'] == pytest.approx(report['ball_volume_exact'])
    assert report['R_M'] == 0.0


def test_mean_value_kernel_squared(model, op, kernel_flow):
    v = kernel_flow.squared()
    for m in (1.0, 2.0):
        report = mean_value_check(v, ParabolicCylinder(model.minimizer(), 0.0, 1.5, 0.25), m, model, op)
        assert report.passed
        assert 0.0 < report.fittedConstant < math.inf


@pytest.mark.parametrize('c', [1e-3, 7.0, 1e3])
def test_mean_value_scale_invariant(model, op, kernel_flow, c):
    cyl = ParabolicCylinder(model.minimizer(), 0.0, 1.0, 0.5)
    v = kernel_flow.squared()
    base = mean_value_check(v, cyl, 1.0, model, op)
    scaled = mean_value_check(v.scaled(c), cyl, 1.0, model, op)

    assert scaled.fittedConstant == pytest.approx(base.fittedConstant, rel=1e-12)
    assert scaled['sup_inner'] == pytest.approx(c * base['sup_inner'], rel=1e-12)


@pytest.mark.exception
def test_mean_value_needs_nonnegative(model, op, grid):
    traj = HeatTrajectory.from_closed_form(grid, 'sin', TIMES)
    with pytest.raises(ValidationError):
        mean_value_check(traj, ParabolicCylinder(model.minimizer(), 0.0, 1.0), 1.0, model, op)


@pytest.mark.exception
def test_mean_value_window_not_covered(model, op, grid):
    traj = HeatTrajectory.from_closed_form(grid, 'const', np.linspace(-1.0, 0.0, 65))
    with pytest.raises(ValidationError):
        mean_value_check(traj, ParabolicCylinder(model.minimizer(), 0.0, 1.5), 1.0, model, op)


@pytest.mark.exception
def test_mean_value_grid_too_coarse(model):
    coarse = build_grid(model, TruncatedLine(4.0, 0.2))
    traj = HeatTrajectory.from_closed_form(coarse, 'const', TIMES)
    with pytest.raises(ValidationError):
        mean_value_check(traj, ParabolicCylinder(model.minimizer(), 0.0, 0.5), 1.0, model)


def test_moser_chain_bounded(model, op, const_flow):
    cyl = ParabolicCylinder(model.minimizer(), 0.0, 1.0, 0.5)
    report = moser_chain_check(const_flow, cyl, MoserChainConfig(1, 0.5, 4, 1.0), op)

    assert report.passed
    assert report['level_reached'] == 4
    assert len(report['steps']) == 4
    assert report['max_over_first'] <= const.DEF_CHAIN_BOUND
    assert report['steps'][0]['E_over_first'] == 1.0
    assert len(report['low_exponent_chain']) == 4


def test_moser_chain_kernel(model, op, kernel_flow):
    cyl = ParabolicCylinder(model.minimizer(), 0.0, 1.0, 0.5)
    report = moser_chain_check(kernel_flow.squared(), cyl, MoserChainConfig(1, 0.5, 3, 2.0), op)

    assert report.passed
    assert 'low_exponent_chain' not in report.values
    assert all(step['E'] > 0.0 for step in report['steps'])


def test_moser_chain_composes(model, op, kernel_flow):
    cyl = ParabolicCylinder(model.minimizer(), 0.0, 1.0, 0.5)
    cfg = MoserChainConfig(1, 0.5, 3, 2.0)
    v = kernel_flow.squared()
    report = moser_chain_check(v, cyl, cfg, op)

    # ||v||_{q_(i+1)} = (E_i (kappa_(i+1)^-2 r^-2)^theta)^(1/q_(i+1)) ||v||_{q_i}
    composed = report['norms'][0]
    for step in report['steps']:
        q = 2.0 * cfg.theta ** (step['level'] + 1)
        core = (cfg.kappa(step['level'] + 1) ** -2 * cyl.r**-2) ** cfg.theta
        composed *= (step['E'] * core) ** (1.0 / q)
    assert report['level_reached'] == 3
    assert composed == pytest.approx(report['final_norm'], rel=1e-9)

    # the chain starts from the L^2 mass the mean value bound uses for m = 2
    mean = mean_value_check(v, cyl, 2.0, model, op)
    assert report['norms'][0] ** 2 == pytest.approx(mean['integral'], rel=1e-12)


def test_caccioppoli_kernel(model, op, kernel_flow):
    cyl = ParabolicCylinder(model.minimizer(), 0.0, 1.0, 0.5)
    report = caccioppoli_check(kernel_flow, cyl, 4, op)

    assert report.passed
    assert report.fittedConstant > 0.0
    assert report['time_derivative'] is not None
    assert math.isfinite(report['time_derivative']['fitted_constant'])


@pytest.mark.exception
def test_caccioppoli_bad_k(model, op, kernel_flow):
    with pytest.raises(ValidationError):
        caccioppoli_check(kernel_flow, ParabolicCylinder(model.minimizer()), 0, op)


def test_localized_sweep_const(model, const_flow):
    # sup u^2 = 1 and int_Q u^2 = 2 k^{-3/2} give C2 = 1/2 for every k
    report = localized_sweep(const_flow, model, model.minimizer())

    assert report.passed
    assert list(report['C2'].values()) == pytest.approx([0.5, 0.5, 0.5], rel=1e-6)


@pytest.mark.exception
def test_sobolev_needs_three_dimensions(model, grid):
    bump = RadialBump(model.minimizer(), 0.5)
    with pytest.raises(UnsupportedExponentError):
        sobolev_check(model, grid, [bump])


def test_sobolev_cylinder_scale_invariant(cylinder_setup):
    model, grid, p = cylinder_setup
    bumps = random_bumps(grid, p, 1.5, np.random.default_rng(SEED), 5)

    base = sobolev_check(model, grid, bumps, p, 1.5)
    scaled = sobolev_check(model, grid, [b.scaled(10.0) for b in bumps], p, 1.5)

    assert base.passed
    assert base['count'] == 5
    assert scaled['ratios'] == pytest.approx(base['ratios'], rel=1e-12)


@pytest.mark.exception
def test_sobolev_support_outside_ball(cylinder_setup):
    model, grid, p = cylinder_setup
    far = RadialBump(Point(0.5 * math.pi, math.pi, 1.5), 0.4)
    with pytest.raises(ValidationError):
        sobolev_check(model, grid, [far], p, 0.5)


@pytest.mark.exception
def test_sobolev_scope(cylinder_setup):
    model, grid, p = cylinder_setup
    with pytest.raises(ScopeError):
        sobolev_check(model, grid, [RadialBump(p, 0.5)], p, 2.5)


@pytest.mark.exception
def test_bump_width():
    with pytest.raises(ValidationError):
        RadialBump(Point(0.0), 0.0)


def test_local_constants_resolution_stable(model):
    caccioppoli, localized = [], []
    for h in (0.02, 0.01):
        grid = build_grid(model, TruncatedLine(4.0, h))
        flow = HeatTrajectory.from_closed_form(grid, 'kernel:3', TIMES)
        cyl = ParabolicCylinder(model.minimizer(), 0.0, 1.0, 0.5)
        caccioppoli.append(caccioppoli_check(flow, cyl, 4, laplace_beltrami(grid)).fittedConstant)
        localized.append(localized_sweep(flow, model, model.minimizer())['C2'])

    assert caccioppoli[1] == pytest.approx(caccioppoli[0], rel=0.1)
    for k, fitted in localized[0].items():
        assert localized[1][k] == pytest.approx(fitted, rel=0.1)
