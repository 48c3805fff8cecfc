"""Test cases for Shrinker Lab grids and discrete operators."""

import math

import mpmath
import numpy as np
import pytest

from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from src.shrinker_lab import sl_constants as const
from src.shrinker_lab.discrete_operators import (
    CylinderProduct,
    GridField,
    PeriodicLine,
    TruncatedLine,
    build_grid,
    iterate_laplacian,
    laplace_beltrami,
    make_topology,
    parse_data_spec,
    sample_field,
)
from src.shrinker_lab.sl_common import ValidationError
from src.shrinker_lab.soliton_models import make_cylinder, make_gaussian


# =========================================================
#          F I X T U R E S   A N D   H E L P E R S
# =========================================================
@pytest.fixture(scope='module')
def line_model():
    return make_gaussian(1)


@pytest.fixture(scope='module')
def truncated(line_model):
    return build_grid(line_model, TruncatedLine(4.0, 0.1))


@pytest.fixture(scope='module')
def periodic(line_model):
    return build_grid(line_model, PeriodicLine(2 * math.pi, 2 * math.pi / 64))


@pytest.fixture(scope='module')
def cylinder_grid():
    return build_grid(make_cylinder(2, 3, quadNodes=16), CylinderProduct(8, 16, 1.0, 0.25))


values81 = arrays(np.float64, 81, elements=st.floats(-10.0, 10.0, allow_nan=False))
values64 = arrays(np.float64, 64, elements=st.floats(-10.0, 10.0, allow_nan=False))


# =========================================================
#                    T E S T   C A S E S
# =========================================================
@pytest.mark.smoke
def test_truncated_line_grid(truncated):
    assert truncated.size == 81
    assert truncated.x[0] == pytest.approx(-4.0)
    assert truncated.x[-1] == pytest.approx(4.0)
    assert truncated.volume == pytest.approx(8.0)
    assert truncated.weights[0] == pytest.approx(0.05)


def test_periodic_topology_snaps_spacing():
    topo = make_topology(const.TOPO_PERIODIC, h=0.1, period=2 * math.pi)
    cells = round(2 * math.pi / topo.h)
    assert cells == 63
    assert cells * topo.h == pytest.approx(2 * math.pi)


@pytest.mark.exception
@pytest.mark.parametrize(
    'topo',
    [TruncatedLine(4.0, 0.3), TruncatedLine(1.0, 1.0), PeriodicLine(2 * math.pi, 0.0)],
)
def test_degenerate_grids(line_model, topo):
    with pytest.raises(ValidationError):
        build_grid(line_model, topo)


@pytest.mark.exception
def test_model_topology_mismatch(line_model):
    with pytest.raises(ValidationError):
        build_grid(make_gaussian(2), TruncatedLine(4.0, 0.1))
    with pytest.raises(ValidationError):
        build_grid(line_model, CylinderProduct(8, 16, 1.0, 0.25))


@pytest.mark.exception
def test_spectral_needs_periodic(truncated):
    with pytest.raises(ValidationError):
        laplace_beltrami(truncated, const.SPACE_SPECTRAL)


def test_constants_in_kernel(truncated, periodic, cylinder_grid):
    for grid in (truncated, periodic, cylinder_grid):
        op = laplace_beltrami(grid)
        assert np.max(np.abs(op.row_sums())) < 1e-9


def test_cylinder_weights_sum_to_volume(cylinder_grid):
    # |S^2(sqrt 2)| * axial length
    assert cylinder_grid.volume == pytest.approx(4 * math.pi * 2.0 * 2.0, rel=1e-12)


@given(u=values81, v=values81)
@settings(max_examples=30, deadline=None)
def test_self_adjoint_truncated(u, v):
    grid = build_grid(make_gaussian(1), TruncatedLine(4.0, 0.1))
    op = laplace_beltrami(grid)
    lhs = op.inner(op.apply_values(u), v)
    rhs = op.inner(u, op.apply_values(v))
    scale = 1.0 + np.max(np.abs(u)) * np.max(np.abs(v)) * op.lambda_max * grid.volume
    assert abs(lhs - rhs) <= 1e-10 * scale


@given(u=values64)
@settings(max_examples=30, deadline=None)
@pytest.mark.parametrize('space', [const.SPACE_CENTRAL, const.SPACE_SPECTRAL])
def test_negative_semidefinite_periodic(u, space):
    grid = build_grid(make_gaussian(1), PeriodicLine(2 * math.pi, 2 * math.pi / 64))
    op = laplace_beltrami(grid, space)
    scale = 1.0 + np.max(np.abs(u)) ** 2 * op.lambda_max * grid.volume
    assert op.inner(op.apply_values(u), u) <= 1e-12 * scale


def test_self_adjoint_cylinder(cylinder_grid):
    rng = np.random.default_rng(451)
    op = laplace_beltrami(cylinder_grid)
    u = rng.standard_normal(cylinder_grid.size)
    v = rng.standard_normal(cylinder_grid.size)
    assert op.inner(op.apply_values(u), v) == pytest.approx(op.inner(u, op.apply_values(v)), rel=1e-9)


def test_dirichlet_energy_matches_gradient(cylinder_grid):
    rng = np.random.default_rng(7)
    op = laplace_beltrami(cylinder_grid)
    u = rng.standard_normal(cylinder_grid.size)
    energy = float(np.sum(cylinder_grid.weights * op.gradient_norm2(u)))
    assert energy == pytest.approx(op.dirichlet_energy(u), rel=1e-9)
    assert energy >= 0.0


def test_sphere_eigenfunction(cylinder_grid):
    # cos(theta) on S^2(sqrt 2) has eigenvalue 2 / r^2 = 1
    op = laplace_beltrami(cylinder_grid)
    u = sample_field(cylinder_grid, 'ylm10')
    au = op.apply(u)
    inner = cylinder_grid.interior_mask(1)
    ratio = op.inner(au.values, u.values, inner) / op.inner(u.values, u.values, inner)
    assert ratio == pytest.approx(-1.0, rel=0.08)


def test_central_stencil_second_order(line_model):
    errors = []
    for h in (0.1, 0.05):
        grid = build_grid(line_model, TruncatedLine(3.0, h))
        op = laplace_beltrami(grid)
        au = op.apply(sample_field(grid, 'sin'))
        errors.append(np.max(np.abs(au.values + np.sin(grid.x))[au.mask]))
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.1)


def test_spectral_exact_on_trig(periodic):
    op = laplace_beltrami(periodic, const.SPACE_SPECTRAL)
    au = op.apply_values(np.sin(3 * periodic.x))
    assert np.max(np.abs(au + 9 * np.sin(3 * periodic.x))) < 1e-11


def test_mask_erosion(truncated):
    op = laplace_beltrami(truncated)
    fields = iterate_laplacian(op, sample_field(truncated, 'x2'), 3)

    assert [int(np.sum(~fld.mask)) for fld in fields] == [0, 2, 4, 6]
    # x^2 -> 2 -> 0 away from the boundary
    assert np.allclose(fields[1].values[fields[1].mask], 2.0)
    assert np.allclose(fields[2].values[fields[2].mask], 0.0, atol=1e-9)


def test_extended_precision_iterates(truncated):
    op = laplace_beltrami(truncated)
    a = sample_field(truncated, 'sin', precision=50)
    fields = iterate_laplacian(op, a, 20, precision=50)

    assert fields[-1].mpValues is not None
    lam = (4.0 / truncated.h**2) * math.sin(truncated.h / 2) ** 2
    expected = (-lam) ** 20 * np.sin(truncated.x)
    last = fields[-1]
    assert np.max(np.abs(last.values - expected)[last.mask]) < 1e-20 + 1e-12 * np.max(np.abs(expected))


def test_scaled_keeps_extended_precision(truncated):
    a = sample_field(truncated, 'cauchy', precision=60)
    tripled = a.scaled(3.0, precision=60)

    assert np.allclose(tripled.values, 3.0 * a.values, rtol=1e-15)
    with mpmath.workdps(60):
        worst = max(abs(b - 3 * v) / abs(v) for b, v in zip(tripled.mpValues, a.mpValues))
    assert worst < 1e-50
    assert a.scaled(2.0).mpValues is not None
    assert GridField(truncated, np.ones(truncated.size)).scaled(2.0).mpValues is None


def test_divergence_flagged(truncated):
    op = laplace_beltrami(truncated)
    huge = GridField(truncated, np.full(truncated.size, 1e300))
    huge.values[40] = -1e300
    fields = iterate_laplacian(op, huge, 5)

    assert fields[-1].diverged
    assert fields[-1].firstFailure >= 1


@pytest.mark.parametrize(
    'spec,value',
    [('sin', math.sin(1.0)), ('const', 1.0), ('x2', 1.0), ('cauchy', 0.5), ('kernel:1', math.exp(-0.25) / math.sqrt(4 * math.pi))],
)
def test_data_library(spec, value):
    data = parse_data_spec(spec)
    assert data(np.array([[1.0]]))[0] == pytest.approx(value)


def test_data_flows():
    coords = np.array([[0.0], [1.5]])
    kernel = parse_data_spec('kernel:2')
    assert kernel.at_time(1.0)(coords) == pytest.approx(parse_data_spec('kernel:3')(coords))

    growth = parse_data_spec('growth:1')
    with mpmath.workdps(30):
        assert float(growth.mpFunc(mpmath.mpf(2))) == pytest.approx(math.e)


@pytest.mark.exception
@pytest.mark.parametrize('spec', ['kernel:-1', 'growth:0', 'wave', 'kernel:abc'])
def test_data_library_invalid(spec):
    with pytest.raises(ValidationError):
        parse_data_spec(spec)


@pytest.mark.exception
def test_kernel_singular_time():
    with pytest.raises(ValidationError):
        parse_data_spec('kernel:1').flow(np.array([[0.0]]), -1.5)


def test_field_csv(tmp_path, truncated):
    fld = sample_field(truncated, 'cauchy')
    fld.mask[:3] = False
    fName = tmp_path / 'field.csv'
    fld.to_csv(fName)

    back = GridField.from_csv(truncated, fName)
    assert np.array_equal(back.values, fld.values)
    assert np.array_equal(back.mask, fld.mask)
