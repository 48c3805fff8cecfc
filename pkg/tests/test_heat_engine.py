"""Test cases for Shrinker Lab heat flow solvers and time-Taylor series."""

import math

import numpy as np
import pytest

from src.shrinker_lab import sl_constants as const
from src.shrinker_lab.discrete_operators import (
    GridField,
    PeriodicLine,
    TruncatedLine,
    build_grid,
    laplace_beltrami,
    sample_field,
)
from src.shrinker_lab.heat_engine import (
    HeatTrajectory,
    estimate_radius,
    evaluate_series,
    solve_backward,
    solve_forward,
    time_taylor_coefficients,
)
from src.shrinker_lab.sl_common import CriterionError, ValidationError
from src.shrinker_lab.soliton_models import make_gaussian


# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
PRECISION = 60


# =========================================================
#          F I X T U R E S   A N D   H E L P E R S
# =========================================================
@pytest.fixture(scope='module')
def periodic_op():
    grid = build_grid(make_gaussian(1), PeriodicLine(2 * math.pi, 2 * math.pi / 128))
    return laplace_beltrami(grid, const.SPACE_SPECTRAL)


@pytest.fixture(scope='module')
def truncated_op():
    grid = build_grid(make_gaussian(1), TruncatedLine(3.8, 0.05))
    return laplace_beltrami(grid)


# =========================================================
#                    T E S T   C A S E S
# =========================================================
@pytest.mark.smoke
def test_forward_sin_spectral(periodic_op):
    a = sample_field(periodic_op.grid, 'sin')
    traj = solve_forward(periodic_op, a, 1.0, dt=1e-3, saveEvery=100)

    assert len(traj) == 11
    assert traj.tEnd == pytest.approx(1.0)
    exact = math.exp(-1.0) * np.sin(periodic_op.grid.x)
    assert np.max(np.abs(traj.snapshots[-1].values - exact)) < 1e-7


def test_forward_explicit_matches_cn(truncated_op):
    a = sample_field(truncated_op.grid, 'kernel:1')
    dt = 0.5 * truncated_op.explicit_dt_max
    cn = solve_forward(truncated_op, a, 0.2, const.SCHEME_CN, dt)
    ex = solve_forward(truncated_op, a, 0.2, const.SCHEME_EXPLICIT, dt)

    mask = cn.snapshots[-1].mask
    assert np.max(np.abs(cn.snapshots[-1].values - ex.snapshots[-1].values)[mask]) < 1e-4


@pytest.mark.parametrize('scheme', [const.SCHEME_CN, const.SCHEME_EXPLICIT])
def test_forward_maximum_principle_periodic(scheme):
    grid = build_grid(make_gaussian(1), PeriodicLine(2 * math.pi, 2 * math.pi / 64))
    op = laplace_beltrami(grid, const.SPACE_CENTRAL)
    rng = np.random.default_rng(451)
    a = GridField(grid, rng.uniform(-1.0, 2.0, grid.size))
    traj = solve_forward(op, a, 0.2, scheme, 0.5 * op.explicit_dt_max)

    lo, hi = float(np.min(a.values)), float(np.max(a.values))
    for snap in traj.snapshots:
        assert np.min(snap.values) >= lo - 1e-10
        assert np.max(snap.values) <= hi + 1e-10


@pytest.mark.exception
def test_forward_explicit_unstable(truncated_op):
    a = sample_field(truncated_op.grid, 'sin')
    with pytest.raises(ValidationError):
        solve_forward(truncated_op, a, 0.1, const.SCHEME_EXPLICIT, 4.0 * truncated_op.explicit_dt_max)


@pytest.mark.exception
@pytest.mark.parametrize('tFinal,dt,scheme', [(0.0, 1e-3, 'cn'), (1.0, -1e-3, 'cn'), (1.0, 1e-3, 'rk4')])
def test_forward_bad_args(truncated_op, tFinal, dt, scheme):
    a = sample_field(truncated_op.grid, 'sin')
    with pytest.raises(ValidationError):
        solve_forward(truncated_op, a, tFinal, scheme, dt)


def test_forward_masks_boundary_layer(truncated_op):
    a = sample_field(truncated_op.grid, 'const')
    traj = solve_forward(truncated_op, a, 0.25, dt=0.01)
    mask = traj.snapshots[-1].mask

    assert mask[len(mask) // 2]
    assert not mask[0] and not mask[-1]


def test_closed_form_trajectory(truncated_op):
    times = np.linspace(-1.0, 0.0, 17)
    traj = HeatTrajectory.from_closed_form(truncated_op.grid, 'kernel:2', times)

    assert traj.scheme == 'exact'
    assert traj.index_of(-0.5) == 8
    with pytest.raises(ValidationError):
        traj.index_of(0.5)

    sq = traj.squared()
    assert np.allclose(sq.snapshots[3].values, traj.snapshots[3].values ** 2)


@pytest.mark.exception
def test_closed_form_needs_flow(truncated_op):
    with pytest.raises(ValidationError):
        HeatTrajectory.from_closed_form(truncated_op.grid, 'cauchy', [0.0, 1.0])


def test_subsolution_defect_of_square(truncated_op):
    # (Delta - d_t) u^2 = 2 |grad u|^2 >= 0
    times = np.linspace(-1.0, 0.0, 65)
    traj = HeatTrajectory.from_closed_form(truncated_op.grid, 'kernel:2', times).squared()
    defect = traj.subsolution_defect(truncated_op)
    assert np.nanmin(defect) > -1e-3


def test_trajectory_csv(tmp_path, periodic_op):
    a = sample_field(periodic_op.grid, 'sin')
    traj = solve_forward(periodic_op, a, 0.1, dt=0.05)
    manifestFile = traj.to_csv(tmp_path / 'traj')
    manifest = HeatTrajectory.read_manifest(manifestFile)

    assert manifest['scheme'] == 'cn'
    assert manifest['times'] == pytest.approx([0.0, 0.05, 0.1])
    assert len(manifest['files']) == 3
    assert (tmp_path / 'traj' / manifest['files'][-1]).exists()


def test_taylor_coefficients_spectral(periodic_op):
    a = sample_field(periodic_op.grid, 'sin')
    series = time_taylor_coefficients(periodic_op, a, 12)

    sups = series.sup_norms()
    assert sups == pytest.approx(np.ones(13), rel=1e-10)
    assert series.entire
    assert series.recheck_recursion() < 1e-10


def test_taylor_evaluation(periodic_op):
    a = sample_field(periodic_op.grid, 'sin')
    series = time_taylor_coefficients(periodic_op, a, 20)
    res = evaluate_series(series, 0.5)

    assert res.reliable and res.withinRadius
    exact = math.exp(-0.5) * np.sin(periodic_op.grid.x)
    assert np.max(np.abs(res.field.values - exact)) < 1e-10
    assert res.truncationBound < 1e-15


def test_vanishing_coefficients(truncated_op):
    a = sample_field(truncated_op.grid, 'x2', precision=PRECISION)
    series = time_taylor_coefficients(truncated_op, a, 6, precision=PRECISION)
    vanish = series.vanishing()

    assert not vanish[0] and not vanish[1]
    assert all(vanish[2:])
    assert series.entire


@pytest.mark.parametrize('tau', [0.5, 1.0])
def test_radius_growth_data(truncated_op, tau):
    a = sample_field(truncated_op.grid, f'growth:{tau:g}', precision=PRECISION)
    series = time_taylor_coefficients(truncated_op, a, 16, precision=PRECISION)

    assert not series.entire
    assert 0.8 <= series.radius_estimate / tau <= 1.25


@pytest.mark.exception
def test_radius_needs_enough_terms(periodic_op):
    series = time_taylor_coefficients(periodic_op, sample_field(periodic_op.grid, 'sin'), 2)
    assert series.radius is None
    with pytest.raises(ValidationError):
        estimate_radius(series)


@pytest.mark.exception
def test_truncation_order_capped(periodic_op):
    a = sample_field(periodic_op.grid, 'sin')
    with pytest.raises(ValidationError):
        time_taylor_coefficients(periodic_op, a, const.DEF_J_MAX + 1)


@pytest.mark.smoke
def test_backward_sin(periodic_op):
    a = sample_field(periodic_op.grid, 'sin')
    w = solve_backward(periodic_op, a, 0.5, J=20)

    exact = math.exp(0.5) * np.sin(periodic_op.grid.x)
    assert np.max(np.abs(w.values - exact)) < 1e-6
    assert w.criterion.feasible

    back = solve_forward(periodic_op, w, 0.5, dt=1e-3)
    assert np.max(np.abs(back.snapshots[-1].values - a.values)) < 1e-4


def test_backward_heat_kernel():
    grid = build_grid(make_gaussian(1), TruncatedLine(10.0, 0.05))
    op = laplace_beltrami(grid)
    a = sample_field(grid, 'kernel:1', precision=PRECISION)
    w = solve_backward(op, a, 0.5, J=24, precision=PRECISION)

    exact = sample_field(grid, 'kernel:0.5').values
    assert w.criterion.feasible
    assert np.max(np.abs(w.values - exact)[w.mask]) < 1e-3


@pytest.mark.exception
def test_backward_refuses_cauchy():
    grid = build_grid(make_gaussian(1), TruncatedLine(6.8, 0.05))
    op = laplace_beltrami(grid)
    a = sample_field(grid, 'cauchy', precision=PRECISION)
    with pytest.raises(CriterionError):
        solve_backward(op, a, 0.1, J=16, precision=PRECISION)


@pytest.mark.exception
def test_backward_needs_positive_time(periodic_op):
    with pytest.raises(ValidationError):
        solve_backward(periodic_op, sample_field(periodic_op.grid, 'sin'), 0.0)
