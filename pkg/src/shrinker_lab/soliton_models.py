"""Closed-form gradient shrinking Ricci solitons.

Two model families are supported:

 - Gaussian shrinker: flat R^n with f(x) = |x|^2/4
 - Round cylinder: S^k(sqrt(2(k-1))) x R^(n-k) with f(theta, y) = |y|^2/4 + k/2

Both models carry exact closed forms for f, |grad f|^2, Ric, Hess f and R,
the entropy mu (computed once by weighted quadrature), geodesic distance and
ball volumes. The self-checks in this module verify the soliton equation and
its normalization from these closed forms.

Chart coordinates:
 - Gaussian: Cartesian x in R^n
 - Cylinder: (theta_1, ..., theta_{k-1}, phi, y_1, ..., y_{n-k}) with
   theta_i in [0, pi] and phi in [0, 2*pi]

Dependencies:
 - numpy: arrays and Gauss-Hermite / Gauss-Legendre nodes
 - scipy: special functions and adaptive quadrature for ball volumes
"""

import math

import numpy as np

from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy import integrate, special

from . import sl_constants as const
from .lab_data import LabReport
from .lab_logger import get_logger
from .sl_common import ValidationError

__all__ = [
    'Point',
    'SolitonModel',
    'make_gaussian',
    'make_cylinder',
    'parse_model_spec',
    'geodesic_distance',
    'ball_volume',
    'check_soliton_identities',
    'potential_bounds_check',
    'fit_volume_constant',
    'entropy_oracle',
    'check_entropy',
    'small_ball_check',
    'random_points',
]


# fmt: off
# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
ANGLE_TOL = 1e-12               # Slack on canonical angle ranges
CAO_ZHOU_OFFSET = 4.0 / 3.0     # Constant in the lower potential bound
# fmt: on


# =========================================================
#              H E L P E R   F U N C T I O N S
# =========================================================
def _unit_sphere_area(dim):
    """Area of the unit sphere S^dim in R^(dim+1)."""
    return 2.0 * math.pi ** ((dim + 1) / 2.0) / special.gamma((dim + 1) / 2.0)


def _unit_ball_volume(dim):
    """Volume of the unit ball in R^dim."""
    return math.pi ** (dim / 2.0) / special.gamma(dim / 2.0 + 1.0)


def _sin_power_integral(power, nodes):
    """Integral of sin(t)^power over [0, pi] by Gauss-Legendre."""
    xg, wg = leggauss(nodes)
    theta = 0.5 * math.pi * (xg + 1.0)
    return 0.5 * math.pi * float(np.sum(wg * np.sin(theta) ** power))


def _hermite_gauss_integral(nodes):
    """Integral of exp(-y^2/4) over R by Gauss-Hermite (y = 2z)."""
    _, wg = hermgauss(nodes)
    return 2.0 * float(np.sum(wg))


def _sphere_embedding(angles):
    """Map hyperspherical angles (..., k) to unit vectors (..., k+1)."""
    angles = np.atleast_2d(angles)
    count, k = angles.shape
    out = np.ones((count, k + 1))
    sinProd = np.ones(count)
    for idx in range(k - 1):
        out[:, idx] = sinProd * np.cos(angles[:, idx])
        sinProd = sinProd * np.sin(angles[:, idx])
    out[:, k - 1] = sinProd * np.cos(angles[:, k - 1])
    out[:, k] = sinProd * np.sin(angles[:, k - 1])
    return out


# =========================================================
#                 D O M A I N   T Y P E S
# =========================================================
class Point:
    """Point in a model chart.

    Attributes:
        coords: 'np.ndarray' (read-only) with chart coordinates
    """

    __slots__ = ('coords',)

    def __init__(self, *coords):
        if len(coords) == 1 and np.ndim(coords[0]) == 1:
            coords = coords[0]
        vals = np.array(coords, dtype=float).ravel()
        vals.setflags(write=False)
        self.coords = vals

    def __len__(self):
        return len(self.coords)

    def __eq__(self, other):
        return isinstance(other, Point) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(tuple(self.coords.tolist()))

    def __repr__(self):
        return f'Point({", ".join(f"{c:g}" for c in self.coords)})'

    def as_list(self):
        return self.coords.tolist()


class SolitonModel:
    """Closed-form gradient shrinking Ricci soliton.

    Attributes:
        kind:                  'str' model family ('gaussian' or 'cylinder')
        n:                     'int' manifold dimension
        k:                     'int' sphere dimension (0 for Gaussian)
        sphereRadius2:         'float' squared sphere radius 2(k-1) (cylinder only)
        entropy_mu:            'float' entropy computed by quadrature
        entropyCheck:          'float' |mu(N) - mu(2N)| quadrature self-check
        normalization_constant: 'float' R + |grad f|^2 - f at the base point

    Methods & Properties:
        spec: model spec string (e.g. 'cylinder:2x3')
        axialDim: number of flat factors
        potential, grad_potential_norm2, scalar_curvature: closed forms on coordinate arrays
        ricci, hessian_potential: closed-form tensors in an orthonormal frame
        f: potential at a 'Point'
        distance: geodesic distance on coordinate arrays
        minimizer: 'Point' where f attains its infimum
    """

    def __init__(self, kind, n, k=0, quadNodes=const.DEF_QUAD_NODES):
        self.kind = kind
        self.n = int(n)
        self.k = int(k)
        self.sphereRadius2 = 2.0 * (self.k - 1) if kind == const.MODEL_CYLINDER else None
        self.quadNodes = int(quadNodes)

        self.entropy_mu = self._entropy(self.quadNodes)
        self.entropyCheck = abs(self._entropy(2 * self.quadNodes) - self.entropy_mu)
        if self.entropyCheck > const.DEF_ENTROPY_TOL:
            get_logger().warning(
                f'Entropy quadrature for {self.spec} not converged: {self.entropyCheck:.3e}'
            )

        base = self.minimizer().coords[None, :]
        self.normalization_constant = float(
            self.scalar_curvature(base)[0]
            + self.grad_potential_norm2(base)[0]
            - self.potential(base)[0]
        )

    def __repr__(self):
        return f'SolitonModel({self.spec})'

    @property
    def spec(self):
        if self.kind == const.MODEL_GAUSSIAN:
            return f'{const.MODEL_GAUSSIAN}:{self.n}'
        return f'{const.MODEL_CYLINDER}:{self.k}x{self.n}'

    @property
    def axialDim(self):
        return self.n - self.k

    @property
    def sphereRadius(self):
        return math.sqrt(self.sphereRadius2) if self.sphereRadius2 else None

    # --- chart helpers ---
    def _as_coords(self, coords):
        arr = np.atleast_2d(np.asarray(coords, dtype=float))
        if arr.shape[-1] != self.n:
            raise ValidationError(
                f'{self.spec} expects {self.n} chart coordinates, got {arr.shape[-1]}'
            )
        return arr

    def _split(self, coords):
        """Split coordinate array into (angles, axial) parts."""
        arr = self._as_coords(coords)
        return arr[:, : self.k], arr[:, self.k :]

    def validate_coords(self, coords):
        """Check chart ranges.

        Raises:
            ValidationError: non-finite coords or sphere angles outside canonical ranges
        """
        arr = self._as_coords(coords)
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f'Non-finite chart coordinates for {self.spec}')
        if self.k:
            ang = arr[:, : self.k]
            polar = ang[:, : self.k - 1]
            azim = ang[:, self.k - 1]
            if np.any(polar < -ANGLE_TOL) or np.any(polar > math.pi + ANGLE_TOL):
                raise ValidationError('Polar angles must lie in [0, pi]')
            if np.any(azim < -ANGLE_TOL) or np.any(azim > 2 * math.pi + ANGLE_TOL):
                raise ValidationError('Azimuthal angle must lie in [0, 2*pi]')
        return arr

    # --- closed forms on coordinate arrays ---
    def potential(self, coords):
        _, y = self._split(coords)
        val = np.sum(y**2 / 4.0, axis=1)
        return val + self.k / 2.0 if self.k else val

    def grad_potential_norm2(self, coords):
        _, y = self._split(coords)
        return np.sum((y / 2.0) ** 2, axis=1)

    def scalar_curvature(self, coords):
        arr = self._as_coords(coords)
        if not self.k:
            return np.zeros(len(arr))
        return np.full(len(arr), self.k * (self.k - 1) / self.sphereRadius2)

    def ricci(self, coords):
        """Ricci tensor in an orthonormal frame, shape (count, n, n)."""
        arr = self._as_coords(coords)
        diag = np.zeros(self.n)
        if self.k:
            diag[: self.k] = (self.k - 1) / self.sphereRadius2
        return np.broadcast_to(np.diag(diag), (len(arr), self.n, self.n)).copy()

    def hessian_potential(self, coords):
        """Hessian of f in an orthonormal frame, shape (count, n, n)."""
        arr = self._as_coords(coords)
        diag = np.zeros(self.n)
        diag[self.k :] = 0.5
        return np.broadcast_to(np.diag(diag), (len(arr), self.n, self.n)).copy()

    def metric(self, coords):
        arr = self._as_coords(coords)
        return np.broadcast_to(np.eye(self.n), (len(arr), self.n, self.n)).copy()

    def distance(self, coordsA, coordsB):
        """Geodesic distance between coordinate arrays (broadcast on rows)."""
        angA, yA = self._split(coordsA)
        angB, yB = self._split(coordsB)
        axial2 = np.sum((yA - yB) ** 2, axis=1)
        if not self.k:
            return np.sqrt(axial2)

        uA = _sphere_embedding(angA)
        uB = _sphere_embedding(angB)
        chord = np.sqrt(np.sum((uA - uB) ** 2, axis=1))
        arc = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0)) * self.sphereRadius
        return np.sqrt(arc**2 + axial2)

    # --- point helpers ---
    def f(self, point):
        return float(self.potential(point.coords)[0])

    def R(self, point):
        return float(self.scalar_curvature(point.coords)[0])

    def minimizer(self):
        return Point(np.zeros(self.n))

    def _entropy(self, nodes):
        """Entropy mu from log of the weighted volume of e^{-f}."""
        logVal = -0.5 * self.n * math.log(4.0 * math.pi)
        logVal += self.axialDim * math.log(_hermite_gauss_integral(nodes))
        if self.k:
            sphereVol = 2.0 * math.pi * self.sphereRadius**self.k
            for power in range(1, self.k):
                sphereVol *= _sin_power_integral(power, nodes)
            logVal += math.log(sphereVol) - self.k / 2.0
        return logVal


# =========================================================
#              M O D E L   C O N S T R U C T O R S
# =========================================================
def make_gaussian(n, quadNodes=const.DEF_QUAD_NODES):
    """Create Gaussian shrinker on R^n.

    Args:
        n: 'int' dimension (>= 1)
        quadNodes: 'int' quadrature resolution for entropy

    Returns:
        'SolitonModel'

    Raises:
        ValidationError: n < 1
    """
    if int(n) != n or n < 1:
        raise ValidationError(f'Gaussian shrinker needs n >= 1, got {n}')
    return SolitonModel(const.MODEL_GAUSSIAN, int(n), 0, quadNodes)


def make_cylinder(k, n, quadNodes=const.DEF_QUAD_NODES):
    """Create round cylinder S^k(sqrt(2(k-1))) x R^(n-k).

    Args:
        k: 'int' sphere dimension (>= 2)
        n: 'int' total dimension (> k)
        quadNodes: 'int' quadrature resolution for entropy

    Returns:
        'SolitonModel'

    Raises:
        ValidationError: k < 2 or k >= n
    """
    if int(k) != k or int(n) != n:
        raise ValidationError('Cylinder dimensions must be integers')
    if k < 2:
        raise ValidationError(f'Cylinder needs sphere factor k >= 2, got k={k}')
    if k >= n:
        raise ValidationError(f'Cylinder needs k <= n-1, got k={k}, n={n}')
    return SolitonModel(const.MODEL_CYLINDER, int(n), int(k), quadNodes)


def parse_model_spec(spec, quadNodes=const.DEF_QUAD_NODES):
    """Build model from spec string 'gaussian:<n>' or 'cylinder:<k>x<n>'.

    Raises:
        ValidationError: malformed spec
    """
    try:
        kind, _, params = str(spec).strip().lower().partition(':')
        if kind == const.MODEL_GAUSSIAN:
            return make_gaussian(int(params), quadNodes)
        if kind == const.MODEL_CYLINDER:
            kStr, _, nStr = params.partition('x')
            return make_cylinder(int(kStr), int(nStr), quadNodes)
    except ValueError as e:
        raise ValidationError(f'Invalid model spec: {spec!r}') from e
    raise ValidationError(f'Unknown model spec: {spec!r}')


def random_points(model, rng, count, scale=5.0):
    """Draw random chart points (uniform box on axial part, uniform angles).

    Args:
        model: 'SolitonModel'
        rng: 'np.random.Generator'
        count: 'int' number of points
        scale: 'float' half-width of box for axial coordinates

    Returns:
        'list' of 'Point'
    """
    axial = rng.uniform(-scale, scale, size=(count, model.axialDim))
    if not model.k:
        return [Point(row) for row in axial]

    polar = np.arccos(rng.uniform(-1.0, 1.0, size=(count, model.k - 1)))
    azim = rng.uniform(0.0, 2.0 * math.pi, size=(count, 1))
    return [Point(row) for row in np.hstack([polar, azim, axial])]


# =========================================================
#                   O P E R A T I O N S
# =========================================================
def geodesic_distance(model, a, b):
    """Geodesic distance between two points.

    Raises:
        ValidationError: invalid chart coordinates
    """
    model.validate_coords(a.coords)
    model.validate_coords(b.coords)
    return float(model.distance(a.coords, b.coords)[0])


def ball_volume(model, p, r):
    """Volume of geodesic ball B_p(r) by quadrature against the volume element.

    The models are homogeneous along their symmetry groups, so the volume only
    depends on r: the integrand is the area of distance spheres in polar
    coordinates around p.

    Raises:
        ValidationError: r <= 0 or invalid point
    """
    if not r > 0:
        raise ValidationError(f'Ball radius must be positive, got {r}')
    model.validate_coords(p.coords)

    if not model.k:
        area = _unit_sphere_area(model.n - 1)
        val, _ = integrate.quad(lambda rho: area * rho ** (model.n - 1), 0.0, r)
        return float(val)

    radius = model.sphereRadius
    areaS = _unit_sphere_area(model.k - 1)
    ballY = _unit_ball_volume(model.axialDim)
    half = model.axialDim / 2.0

    def _integrand(rho):
        shell = areaS * (radius * math.sin(rho / radius)) ** (model.k - 1)
        return shell * ballY * max(r * r - rho * rho, 0.0) ** half

    upper = min(r, math.pi * radius)
    val, _ = integrate.quad(_integrand, 0.0, upper, epsabs=0.0, epsrel=1e-12, limit=200)
    return float(val)


def check_soliton_identities(model, samples):
    """Residuals of Ric + Hess f - g/2 = 0 and R + |grad f|^2 - f = 0 on samples.

    Args:
        model: 'SolitonModel'
        samples: non-empty 'list' of 'Point'

    Returns:
        'LabReport' with max residuals and min scalar curvature
    """
    if not samples:
        raise ValidationError('Need at least one sample point')

    coords = model.validate_coords(np.vstack([pt.coords for pt in samples]))
    tensor = model.ricci(coords) + model.hessian_potential(coords) - 0.5 * model.metric(coords)
    solitonRes = float(np.max(np.linalg.norm(tensor, axis=(1, 2))))

    normRes = model.scalar_curvature(coords) + model.grad_potential_norm2(coords)
    normRes = float(np.max(np.abs(normRes - model.potential(coords))))
    minR = float(np.min(model.scalar_curvature(coords)))

    passed = (
        solitonRes < const.DEF_RESIDUAL_TOL
        and normRes < const.DEF_RESIDUAL_TOL
        and minR >= 0.0
    )
    return LabReport(
        'model-check',
        passed,
        values={
            'soliton_residual': solitonRes,
            'normalization_residual': normRes,
            'min_scalar_curvature': minR,
            'normalization_constant': model.normalization_constant,
        },
        params={'model': model.spec, 'samples': len(samples)},
        provenance=['closed-form curvature of flat and round product metrics'],
    )


def potential_bounds_check(model, p, samples):
    """Check distance-like bounds for f and the quadratic bound for R.

    Verifies at every sample x, with d = d(x, p) and a = 2*sqrt(f(p)):

        (d - a - 4n + 4/3)_+^2 / 4 <= f(x) <= (d + a)^2 / 4
        0 <= R(x) <= (d + a)^2 / 4

    and inf f <= n/2 at the model's minimizer.

    Returns:
        'LabReport' with violation counts and worst margins
    """
    if not samples:
        raise ValidationError('Need at least one sample point')

    model.validate_coords(p.coords)
    coords = model.validate_coords(np.vstack([pt.coords for pt in samples]))
    d = model.distance(p.coords[None, :], coords)
    a = 2.0 * math.sqrt(model.f(p))
    fx = model.potential(coords)
    Rx = model.scalar_curvature(coords)

    upper = 0.25 * (d + a) ** 2
    lower = 0.25 * np.maximum(d - a - 4 * model.n + CAO_ZHOU_OFFSET, 0.0) ** 2
    slack = const.DEF_BOUND_RTOL * np.maximum(1.0, upper)

    lowViol = int(np.sum(lower > fx + slack))
    upViol = int(np.sum(fx > upper + slack))
    curvViol = int(np.sum((Rx > upper + slack) | (Rx < 0.0)))
    infF = model.f(model.minimizer())
    infOk = infF <= model.n / 2.0

    return LabReport(
        'potential-bounds',
        (lowViol + upViol + curvViol) == 0 and infOk,
        values={
            'lower_violations': lowViol,
            'upper_violations': upViol,
            'curvature_violations': curvViol,
            'min_upper_margin': float(np.min(upper - fx)),
            'min_lower_margin': float(np.min(fx - lower)),
            'inf_f': infF,
            'inf_f_bound': model.n / 2.0,
        },
        params={'model': model.spec, 'p': p.as_list(), 'samples': len(samples)},
    )


def fit_volume_constant(models, points, radii):
    """Fit C(n) in |B_p(r)| <= C(n) e^{f(p)} r^n over sampled (model, p, r).

    Args:
        models: 'list' of 'SolitonModel' of the same dimension n
        points: 'list' of 'list' of 'Point' (one list per model)
        radii: iterable of positive radii

    Returns:
        'LabReport' with fitted constant 'C(n)' (max ratio), and the same fit
        on the first half of the samples for a stability check
    """
    dims = {model.n for model in models}
    if len(dims) != 1:
        raise ValidationError('Volume constant is fitted per dimension')
    n = dims.pop()

    ratios, halves = [], []
    for model, pts in zip(models, points):
        vols = {float(r): ball_volume(model, model.minimizer(), float(r)) for r in radii}
        for idx, pt in enumerate(pts):
            ef = math.exp(model.f(pt))
            for r, vol in vols.items():
                ratio = vol / (ef * r**n)
                ratios.append(ratio)
                if idx < max(1, len(pts) // 2):
                    halves.append(ratio)

    fitAll = max(ratios)
    fitHalf = max(halves)
    return LabReport(
        'volume-growth',
        math.isfinite(fitAll),
        values={'C(n)': fitAll, 'C(n)_half_sample': fitHalf, 'ratios': len(ratios)},
        params={'models': [m.spec for m in models], 'radii': [float(r) for r in radii]},
    )


def entropy_oracle(model):
    """Closed-form entropy: 0 for Gaussians, log of the normalized sphere volume for cylinders."""
    if not model.k:
        return 0.0
    area = _unit_sphere_area(model.k) * model.sphereRadius**model.k
    return math.log(area) - 0.5 * model.k * math.log(4.0 * math.pi) - 0.5 * model.k


def check_entropy(model, tol=const.DEF_ENTROPY_TOL):
    """Compare quadrature entropy with its closed form."""
    oracle = entropy_oracle(model)
    err = abs(model.entropy_mu - oracle)
    return LabReport(
        'entropy',
        err <= tol,
        values={
            'mu': model.entropy_mu,
            'mu_oracle': oracle,
            'error': err,
            'quadrature_self_check': model.entropyCheck,
        },
        params={'model': model.spec, 'quad_nodes': model.quadNodes, 'tol': tol},
        provenance=['mu = 0 (Gaussian)', 'mu = log(|S^k| r^k (4 pi)^(-k/2) e^(-k/2)) (cylinder)'],
    )


def small_ball_check(model, radii=(0.05, 0.1, 0.2), rtol=0.02):
    """Small geodesic balls against Euclidean volume omega_n r^n."""
    p = model.minimizer()
    omega = _unit_ball_volume(model.n)
    ratios = [ball_volume(model, p, float(r)) / (omega * float(r) ** model.n) for r in radii]
    worst = max(abs(val - 1.0) for val in ratios)
    return LabReport(
        'small-balls',
        worst <= rtol,
        values={'ratios': ratios, 'max_deviation': worst},
        params={'model': model.spec, 'radii': [float(r) for r in radii], 'rtol': rtol},
        provenance=['Euclidean ball volume omega_n r^n'],
    )
