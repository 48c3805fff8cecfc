"""Test cases for Shrinker Lab soliton models.

The Gaussian and cylinder shrinkers have closed-form curvature, potential
and entropy, so most checks compare against exact values.
"""

import math

import numpy as np
import pytest

from hypothesis import given, settings
from hypothesis import strategies as st

from src.shrinker_lab.sl_common import ValidationError
from src.shrinker_lab.soliton_models import (
    Point,
    ball_volume,
    check_entropy,
    check_soliton_identities,
    entropy_oracle,
    fit_volume_constant,
    geodesic_distance,
    make_cylinder,
    make_gaussian,
    parse_model_spec,
    potential_bounds_check,
    random_points,
    small_ball_check,
)


# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
SEED = 451
NUM_SAMPLES = 1000
IDENTITY_TOL = 1e-12


# =========================================================
#          F I X T U R E S   A N D   H E L P E R S
# =========================================================
@pytest.fixture(scope='module')
def gaussian3():
    return make_gaussian(3)


@pytest.fixture(scope='module')
def cylinder23():
    return make_cylinder(2, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


coord = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False)
polar = st.floats(min_value=0.0, max_value=math.pi)
azim = st.floats(min_value=0.0, max_value=2 * math.pi)


# =========================================================
#                    T E S T   C A S E S
# =========================================================
@pytest.mark.smoke
def test_parse_model_spec():
    gauss = parse_model_spec('gaussian:2')
    cyl = parse_model_spec('Cylinder:2x4')

    assert gauss.n == 2 and gauss.k == 0
    assert cyl.n == 4 and cyl.k == 2
    assert cyl.spec == 'cylinder:2x4'
    assert cyl.sphereRadius2 == pytest.approx(2.0)


@pytest.mark.exception
@pytest.mark.parametrize('spec', ['gaussian:0', 'cylinder:1x3', 'cylinder:3x3', 'torus:2', 'gaussian:x'])
def test_parse_model_spec_invalid(spec):
    with pytest.raises(ValidationError):
        parse_model_spec(spec)


@pytest.mark.smoke
def test_soliton_identities(gaussian3, cylinder23, rng):
    for model in (gaussian3, cylinder23):
        pts = random_points(model, rng, NUM_SAMPLES)
        report = check_soliton_identities(model, pts)

        assert report.passed
        assert report['soliton_residual'] < IDENTITY_TOL
        assert report['normalization_residual'] < IDENTITY_TOL
        assert report['min_scalar_curvature'] >= 0.0


def test_closed_forms(cylinder23):
    pt = Point(0.3, 1.0, 2.0)
    assert cylinder23.f(pt) == pytest.approx(2.0)     # |y|^2/4 + k/2
    assert cylinder23.R(pt) == pytest.approx(1.0)     # k/2
    assert cylinder23.normalization_constant == pytest.approx(0.0, abs=1e-14)


def test_potential_bounds(gaussian3, cylinder23, rng):
    for model in (gaussian3, cylinder23):
        pts = random_points(model, rng, 200, scale=10.0)
        report = potential_bounds_check(model, model.minimizer(), pts)

        assert report.passed
        assert report['upper_violations'] == 0
        assert report['lower_violations'] == 0
        assert report['inf_f'] <= report['inf_f_bound']


@pytest.mark.parametrize('spec', ['gaussian:1', 'gaussian:2', 'gaussian:3'])
def test_entropy_gaussian(spec):
    report = check_entropy(parse_model_spec(spec), tol=1e-8)
    assert report.passed
    assert report['mu_oracle'] == 0.0


def test_entropy_cylinder(cylinder23):
    report = check_entropy(cylinder23)

    assert entropy_oracle(cylinder23) == pytest.approx(math.log(2.0) - 1.0)
    assert report.passed
    assert report['mu'] == pytest.approx(math.log(2.0) - 1.0, abs=1e-6)
    assert report['quadrature_self_check'] <= 1e-6


@given(a=st.tuples(polar, azim, coord), b=st.tuples(polar, azim, coord), c=st.tuples(polar, azim, coord))
@settings(max_examples=50, deadline=None)
def test_distance_triangle_inequality(a, b, c):
    model = make_cylinder(2, 3, quadNodes=8)
    pa, pb, pc = Point(*a), Point(*b), Point(*c)

    dab = geodesic_distance(model, pa, pb)
    dbc = geodesic_distance(model, pb, pc)
    dac = geodesic_distance(model, pa, pc)

    assert dab >= 0.0
    assert dab == pytest.approx(geodesic_distance(model, pb, pa), abs=1e-12)
    assert dac <= dab + dbc + 1e-9


def test_distance_antipodal(cylinder23):
    north = Point(0.0, 0.0, 0.0)
    south = Point(math.pi, 0.0, 0.0)
    assert geodesic_distance(cylinder23, north, south) == pytest.approx(math.pi * math.sqrt(2.0))


@pytest.mark.exception
def test_distance_invalid_angles(cylinder23):
    with pytest.raises(ValidationError):
        geodesic_distance(cylinder23, Point(4.0, 0.0, 0.0), Point(0.0, 0.0, 0.0))


def test_ball_volume_gaussian():
    model = make_gaussian(2)
    assert ball_volume(model, model.minimizer(), 1.5) == pytest.approx(math.pi * 1.5**2, rel=1e-10)

    model = make_gaussian(3)
    assert ball_volume(model, model.minimizer(), 2.0) == pytest.approx(4.0 / 3.0 * math.pi * 8.0, rel=1e-10)


def test_ball_volume_cylinder_saturates(cylinder23):
    # Past the sphere diameter the ball covers the whole sphere factor
    r = 10.0
    area = 4.0 * math.pi * cylinder23.sphereRadius2
    vol = ball_volume(cylinder23, cylinder23.minimizer(), r)
    assert vol < area * 2.0 * r
    assert vol > area * 2.0 * math.sqrt(r**2 - (math.pi * cylinder23.sphereRadius) ** 2)


def test_small_balls(cylinder23):
    assert small_ball_check(cylinder23).passed


def test_fit_volume_constant(rng):
    model = make_gaussian(2)
    pts = [model.minimizer()] + random_points(model, rng, 100)
    report = fit_volume_constant([model], [pts], (0.5, 1.0, 2.0))

    assert report.passed
    assert report['C(n)'] == pytest.approx(math.pi, rel=1e-10)
    assert report['C(n)_half_sample'] == pytest.approx(report['C(n)'])


@pytest.mark.exception
def test_fit_volume_constant_mixed_dims(rng):
    models = [make_gaussian(2), make_gaussian(3)]
    with pytest.raises(ValidationError):
        fit_volume_constant(models, [[m.minimizer()] for m in models], (1.0,))
