"""Test cases for Shrinker Lab analyticity checks.

Bound fits and criterion checks run on closed-form data where the
outcome is known: sin and x^2 are entire in x and time, the Cauchy
profile 1/(1+x^2) is not, and e^{x^2/4} has a finite time radius.
"""

import math

import numpy as np
import pytest

from src.shrinker_lab import sl_constants as const
from src.shrinker_lab.analyticity import (
    GrowthEnvelope,
    criterion_check,
    growth_classify,
    reconstruct_and_compare,
    verify_coefficient_bound,
)
from src.shrinker_lab.discrete_operators import (
    GridField,
    PeriodicLine,
    TruncatedLine,
    build_grid,
    laplace_beltrami,
    parse_data_spec,
    sample_field,
)
from src.shrinker_lab.heat_engine import (
    HeatTrajectory,
    TimeTaylorSeries,
    solve_forward,
    time_taylor_coefficients,
)
from src.shrinker_lab.sl_common import ValidationError
from src.shrinker_lab.soliton_models import Point, make_gaussian


# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
PRECISION = 60
ORIGIN = Point(0.0)


# =========================================================
#          F I X T U R E S   A N D   H E L P E R S
# =========================================================
@pytest.fixture(scope='module')
def model():
    return make_gaussian(1)


@pytest.fixture(scope='module')
def spectral_op(model):
    grid = build_grid(model, PeriodicLine(2 * math.pi, 2 * math.pi / 64))
    return laplace_beltrami(grid, const.SPACE_SPECTRAL)


@pytest.fixture(scope='module')
def criterion_op(model):
    # |x| <= 6 stays clean after 16 stencil applications
    grid = build_grid(model, TruncatedLine(6.8, 0.05))
    return laplace_beltrami(grid)


def _series(op, spec, J):
    a = sample_field(op.grid, spec, precision=PRECISION)
    return time_taylor_coefficients(op, a, J, precision=PRECISION)


# =========================================================
#                    T E S T   C A S E S
# =========================================================
@pytest.mark.smoke
def test_growth_classify_gaussian_growth(model):
    grid = build_grid(model, TruncatedLine(3.0, 0.05))
    traj = HeatTrajectory.from_closed_form(grid, 'growth:1', np.linspace(-1.0, 0.0, 21))
    env = growth_classify(traj, ORIGIN)

    assert env.A2 == pytest.approx(0.25, rel=1e-6)
    assert env.A1 == pytest.approx(1.0, rel=1e-6)
    assert env.dominates(traj)


def test_growth_classify_bounded(spectral_op):
    traj = HeatTrajectory.from_closed_form(spectral_op.grid, 'sin', np.linspace(-2.0, 0.0, 41))
    env = growth_classify(traj, ORIGIN)

    assert env.A2 == 0.0
    assert env.A1 == pytest.approx(math.e**2, rel=1e-3)
    assert not env.trivial


def test_growth_classify_trivial(spectral_op):
    grid = spectral_op.grid
    zero = sample_field(grid, 'sin').with_values(np.zeros(grid.size))
    traj = HeatTrajectory(grid, [0.0, 1.0], [zero, zero], 'exact', 1.0)
    env = growth_classify(traj, ORIGIN)

    assert env.trivial
    assert env.A1 == const.DEF_A_FLOOR


def test_envelope_dominates_fails_for_small_A1(model):
    grid = build_grid(model, TruncatedLine(3.0, 0.05))
    traj = HeatTrajectory.from_closed_form(grid, 'growth:1', [0.0, 0.5])
    assert not GrowthEnvelope(1.0, 0.1, ORIGIN).dominates(traj)


@pytest.mark.smoke
def test_bound_fit_sin(model, spectral_op):
    traj = HeatTrajectory.from_closed_form(spectral_op.grid, 'sin', np.linspace(-2.0, 0.0, 41))
    env = growth_classify(traj, ORIGIN)
    series = time_taylor_coefficients(spectral_op, sample_field(spectral_op.grid, 'sin'), 12)
    report = verify_coefficient_bound(series, model, ORIGIN, env)

    assert report.feasible
    assert report.A1 == pytest.approx(env.A1)
    assert report.A3 <= 2.0
    assert len(report.residuals) == 13
    assert all(row['lhs'] <= row['rhs'] * (1 + 1e-9) for row in report.residuals)


def test_bound_fit_stable_in_J(model, spectral_op):
    traj = HeatTrajectory.from_closed_form(spectral_op.grid, 'sin', np.linspace(-2.0, 0.0, 41))
    env = growth_classify(traj, ORIGIN)
    a = sample_field(spectral_op.grid, 'sin')
    fits = [
        verify_coefficient_bound(time_taylor_coefficients(spectral_op, a, J), model, ORIGIN, env)
        for J in (8, 12)
    ]
    assert fits[1].A3 == pytest.approx(fits[0].A3, rel=0.15)


@pytest.mark.exception
def test_bound_fit_needs_terms(model, spectral_op):
    series = time_taylor_coefficients(spectral_op, sample_field(spectral_op.grid, 'sin'), 3)
    env = GrowthEnvelope(1.0, 0.0, ORIGIN)
    with pytest.raises(ValidationError):
        verify_coefficient_bound(series, model, ORIGIN, env)


def test_criterion_sin_spectral(model, spectral_op):
    series = time_taylor_coefficients(spectral_op, sample_field(spectral_op.grid, 'sin'), 12)
    report = criterion_check(series, model, ORIGIN)

    assert report.feasible
    assert report.A4 == 0.0
    assert report.A3 <= 2.0
    assert report['growth_factor_per_4'] <= 1.0 + const.DEF_GROWTH_LIMIT


@pytest.mark.parametrize('spec', ['sin', 'x2'])
def test_criterion_entire_data_feasible(model, criterion_op, spec):
    report = criterion_check(_series(criterion_op, spec, 16), model, ORIGIN)
    assert report.feasible
    assert math.isfinite(report.A3)


def test_criterion_cauchy_infeasible(model, criterion_op):
    report = criterion_check(_series(criterion_op, 'cauchy', 16), model, ORIGIN)

    assert not report.feasible
    assert report.A4 == pytest.approx(const.DEF_A4_MAX)
    assert report['growth_factor_per_4'] > 1.0 + const.DEF_GROWTH_LIMIT


def test_criterion_reports_post_hoc(model, criterion_op):
    report = criterion_check(_series(criterion_op, 'sin', 16), model, ORIGIN)
    assert set(report['post_hoc_raised']) == {'0', '1'}
    assert len(report['A3_per_j']) == 17


def test_reconstruction_kernel(model):
    grid = build_grid(model, TruncatedLine(10.0, 0.05))
    op = laplace_beltrami(grid)
    start = sample_field(grid, parse_data_spec('kernel:3').at_time(-2.0))
    traj = solve_forward(op, start, 2.0, dt=1e-3, tStart=-2.0, saveEvery=50)
    series = _series(op, 'kernel:3', 20)

    res = reconstruct_and_compare(traj, series, -0.5)
    assert res.reliable
    assert res.supError < 5e-3


@pytest.mark.exception
def test_reconstruction_grid_mismatch(model, spectral_op):
    grid = build_grid(model, TruncatedLine(3.0, 0.1))
    traj = HeatTrajectory.from_closed_form(grid, 'sin', [0.0, 0.1])
    series = time_taylor_coefficients(spectral_op, sample_field(spectral_op.grid, 'sin'), 8)
    with pytest.raises(ValidationError):
        reconstruct_and_compare(traj, series, 0.1)


@pytest.mark.parametrize('spec', ['cauchy', 'sin', 'x2'])
def test_criterion_scale_covariant(model, criterion_op, spec):
    reports = []
    for c in (1e-6, 1.0, 1e6):
        a = sample_field(criterion_op.grid, spec, precision=PRECISION).scaled(c, PRECISION)
        series = time_taylor_coefficients(criterion_op, a, 16, precision=PRECISION)
        reports.append(criterion_check(series, model, ORIGIN))

    assert len({rpt.feasible for rpt in reports}) == 1
    assert len({rpt.A4 for rpt in reports}) == 1
    assert reports[2]['data_scale'] == pytest.approx(1e12 * reports[0]['data_scale'], rel=1e-9)


def test_fitted_A3_grows_with_sample_set(model, criterion_op):
    series = _series(criterion_op, 'cauchy', 16)
    mask = series.mask
    head = TimeTaylorSeries(
        criterion_op,
        [GridField(c.grid, c.values, mask=mask) for c in series.coefficients[:13]],
        noiseLevel=series.noiseLevel,
        precision=PRECISION,
    )
    env = GrowthEnvelope(1.0, 0.0, ORIGIN)

    assert verify_coefficient_bound(head, model, ORIGIN, env).A3 <= verify_coefficient_bound(
        series, model, ORIGIN, env
    ).A3
    fixedA4 = {'a4Max': 0.0, 'a4Steps': 1}
    small = criterion_check(head, model, ORIGIN, **fixedA4)
    large = criterion_check(series, model, ORIGIN, **fixedA4)
    assert small.A3 <= large.A3
    assert small.feasible or not large.feasible
