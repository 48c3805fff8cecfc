"""Empirical checks of local inequalities on computed heat flows.

All checks work on space-time regions Q_r(p, s) = B_p(r) x [s - r^2, s].
Space integrals use the grid volume weights restricted to the ball (a node
sitting exactly on the ball boundary of a line grid counts with half its
weight), time integrals use the trapezoid rule over stored snapshots.
Every check returns the left-hand side, the right-hand side without its
constant, and the smallest constant that makes the inequality hold at the
sampled resolution.

Dependencies:
 - numpy: arrays and reductions
 - scipy: trapezoid rule in time
"""

import math

from collections import namedtuple

import numpy as np

from scipy import integrate

from . import sl_constants as const
from .discrete_operators import GridField, laplace_beltrami
from .lab_data import InequalityReport, LabReport
from .lab_logger import get_logger
from .sl_common import ScopeError, UnsupportedExponentError, ValidationError
from .soliton_models import Point, ball_volume

__all__ = [
    'ParabolicCylinder',
    'MoserChainConfig',
    'RadialBump',
    'random_bumps',
    'sobolev_check',
    'caccioppoli_check',
    'mean_value_check',
    'moser_chain_check',
    'localized_estimate_check',
    'localized_sweep',
]


# fmt: off
# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
RADIUS_SCOPE = 2.0              # Mean value inequality holds for r < 2 only
SPACE_TOL = 1e-9                # Relative slack for ball membership
TIME_SLACK = 1e-9               # Slack for snapshot selection in time windows
LOCAL_KS = (1, 4, 16)           # Default localization sweep
LOCAL_GROWTH = 0.25             # Allowed growth of fitted C2 across the sweep
# fmt: on

Region = namedtuple('Region', 'inside weights idx')


# =========================================================
#                 D O M A I N   T Y P E S
# =========================================================
class ParabolicCylinder:
    """Space-time region Q_r(p, s) = B_p(r) x [s - r^2, s] with cutoff delta.

    Attributes:
        p:      'Point' spatial vertex
        s:      'float' top time
        r:      'float' size, 0 < r < 2
        cutoff: 'float' delta in (0, 1), inner cylinder is Q_{delta r}(p, s)

    Raises:
        ScopeError: r outside (0, 2)
        ValidationError: cutoff outside (0, 1)
    """

    def __init__(self, p, s=0.0, r=const.DEF_RADIUS, cutoff=const.DEF_CUTOFF):
        if not 0 < r < RADIUS_SCOPE:
            raise ScopeError(
                f'Cylinder size r={r} outside 0 < r < {RADIUS_SCOPE:g}: the mean value '
                'inequality on shrinkers only holds on local geodesic balls'
            )
        if not 0 < cutoff < 1:
            raise ValidationError(f'Cutoff must lie in (0, 1), got {cutoff}')

        self.p = p if isinstance(p, Point) else Point(p)
        self.s = float(s)
        self.r = float(r)
        self.cutoff = float(cutoff)

    def __repr__(self):
        return f'ParabolicCylinder(p={self.p}, s={self.s:g}, r={self.r:g}, delta={self.cutoff:g})'

    @property
    def tStart(self):
        return self.s - self.r**2

    @property
    def inner(self):
        return ParabolicCylinder(self.p, self.s, self.cutoff * self.r, self.cutoff)

    def as_dict(self):
        return {'p': self.p.as_list(), 's': self.s, 'r': self.r, 'delta': self.cutoff}


class MoserChainConfig:
    """Schedule for the Moser iteration.

    The main chain (exponents 2 theta^i, theta = 1 + 2/n) shrinks from
    sigma_0 = 1 with steps kappa_i = (1 - delta) 2^-i down towards delta.
    The low exponent chain (0 < m < 2) grows from sigma_0 = delta with
    sigma_{i+1} = sigma_i + (1 - sigma_i)/4.

    Attributes:
        n:        'int' dimension
        cutoff:   'float' delta in (0, 1)
        levels:   'int' max level I (0..LEVELS_MAX)
        exponent: 'float' m > 0
        theta:    'float' 1 + 2/n
    """

    def __init__(self, n, cutoff=const.DEF_CUTOFF, levels=const.DEF_LEVELS, exponent=2.0):
        if int(n) != n or n < 1:
            raise ValidationError(f'Dimension must be a positive integer, got {n}')
        if not 0 < cutoff < 1:
            raise ValidationError(f'Cutoff must lie in (0, 1), got {cutoff}')
        if int(levels) != levels or not 0 <= levels <= const.DEF_LEVELS_MAX:
            raise ValidationError(f'Moser levels must lie in 0..{const.DEF_LEVELS_MAX}, got {levels}')
        if not exponent > 0:
            raise ValidationError(f'Exponent must be positive, got {exponent}')

        self.n = int(n)
        self.cutoff = float(cutoff)
        self.levels = int(levels)
        self.exponent = float(exponent)
        self.theta = 1.0 + 2.0 / self.n

    def kappa(self, i):
        return (1.0 - self.cutoff) * 2.0**-i

    @property
    def sigmas(self):
        return [1.0 - (1.0 - self.cutoff) * (1.0 - 2.0**-i) for i in range(self.levels + 1)]

    @property
    def low_sigmas(self):
        out = [self.cutoff]
        for _ in range(self.levels):
            out.append(out[-1] + (1.0 - out[-1]) / 4.0)
        return out

    def as_dict(self):
        return {
            'n': self.n,
            'delta': self.cutoff,
            'levels': self.levels,
            'm': self.exponent,
            'theta': self.theta,
        }


class RadialBump:
    """Smooth radial bump c exp(1 - 1/(1 - (d/width)^2)) around a centre.

    Attributes:
        centre:    'Point'
        width:     'float' support radius
        amplitude: 'float' peak value c
    """

    def __init__(self, centre, width, amplitude=1.0):
        if not width > 0:
            raise ValidationError(f'Bump width must be positive, got {width}')
        self.centre = centre if isinstance(centre, Point) else Point(centre)
        self.width = float(width)
        self.amplitude = float(amplitude)

    def __repr__(self):
        return f'RadialBump({self.centre}, width={self.width:g})'

    def scaled(self, factor):
        return RadialBump(self.centre, self.width, factor * self.amplitude)

    def sample(self, grid):
        s = grid.distance_from(self.centre) / self.width
        vals = np.zeros(grid.size)
        live = s < 1.0
        vals[live] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - s[live] ** 2))
        return GridField(grid, vals, label=f'bump@{self.centre}')


def random_bumps(grid, p, r, rng, count):
    """Random bumps with centres on grid nodes and support inside B_p(r).

    Centres lie in B_p(r/2) and widths in [r/4, r/2].
    """
    d = grid.distance_from(p)
    candidates = np.flatnonzero(d <= 0.5 * r)
    if not len(candidates):
        raise ValidationError(f'No grid nodes within B_p({0.5 * r:g})')

    picks = rng.choice(candidates, size=count, replace=True)
    widths = rng.uniform(0.25 * r, 0.5 * r, size=count)
    return [RadialBump(Point(grid.coords[idx]), width) for idx, width in zip(picks, widths)]


# =========================================================
#              H E L P E R   F U N C T I O N S
# =========================================================
def _ball(grid, p, radius, minNodes=const.DEF_MIN_BALL_NODES):
    """Nodes in B_p(radius) and their volume weights."""
    if radius / grid.h < minNodes:
        raise ValidationError(
            f'Grid too coarse: B_p({radius:g}) spans {radius / grid.h:.1f} cells (< {minNodes})'
        )
    d = grid.distance_from(p)
    inside = d <= radius * (1.0 + SPACE_TOL)
    weights = np.where(inside, grid.weights, 0.0)
    if grid.dim == 1:
        edge = inside & (np.abs(d - radius) <= SPACE_TOL * max(radius, grid.h))
        weights[edge] *= 0.5
    return inside, weights


def _window(traj, tStart, tEnd):
    """Snapshot indices with times in [tStart, tEnd]."""
    if not traj.covers(tStart, tEnd):
        raise ValidationError(
            f'Trajectory on [{traj.tStart:g}, {traj.tEnd:g}] does not cover [{tStart:g}, {tEnd:g}]'
        )
    slack = TIME_SLACK * max(1.0, abs(tStart), abs(tEnd))
    idx = np.flatnonzero((traj.times >= tStart - slack) & (traj.times <= tEnd + slack))
    if len(idx) < 2:
        raise ValidationError(f'Time window [{tStart:g}, {tEnd:g}] holds fewer than 2 snapshots')
    return idx


def _region(traj, p, radius, s, minNodes=const.DEF_MIN_BALL_NODES):
    inside, weights = _ball(traj.grid, p, radius, minNodes)
    idx = _window(traj, s - radius**2, s)
    for i in idx:
        if np.any(inside & ~traj.snapshots[i].mask):
            raise ValidationError(f'B_p({radius:g}) reaches contaminated nodes at t={traj.times[i]:g}')
    return Region(inside, weights, idx)


def _integral(traj, region, values):
    """Space-time integral of per-snapshot node values (rows = region.idx)."""
    spatial = np.asarray(values) @ region.weights
    return float(integrate.trapezoid(spatial, traj.times[region.idx]))


def _sup(region, values):
    sel = np.asarray(values)[:, region.inside]
    return float(np.max(sel)) if sel.size else 0.0


def _ratio(lhs, core):
    # 0/0 counts as 0
    if lhs == 0.0:
        return 0.0
    return lhs / core if core > 0 else math.inf


def _check_subsolution(v, op, region):
    """Require v >= -tol and (Delta - d_t) v >= -tol on the region.

    tol is SUBSOL_FACTOR times the second-order truncation scale
    (h^2 + dt^2) sup|v|.

    Returns:
        ('float' tol, 'float' min defect)
    """
    vals = v.as_array()[region.idx][:, region.inside]
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    tol = const.DEF_SUBSOL_FACTOR * (v.grid.h**2 + v.dt**2) * scale

    if vals.size and np.min(vals) < -tol:
        raise ValidationError(f'Subsolution must be nonnegative, min value {np.min(vals):.3e}')

    rows = [i - 1 for i in region.idx if 0 < i < len(v) - 1]
    worst = 0.0
    if rows:
        sel = v.subsolution_defect(op)[rows][:, region.inside]
        if np.any(np.isfinite(sel)):
            worst = float(np.nanmin(sel))
    if worst < -tol:
        raise ValidationError(f'Not a subsolution: (Delta - d_t) v = {worst:.3e} < -{tol:.3e}')
    return tol, worst


def _provenance(traj):
    src = getattr(traj, 'source', None)
    return [src.provenance] if src is not None and src.provenance else []


def _params(traj, **kwargs):
    return {
        'model': traj.grid.model.spec,
        'grid': traj.grid.resolution,
        'scheme': traj.scheme,
        'dt': traj.dt,
        **kwargs,
    }


# =========================================================
#                   O P E R A T I O N S
# =========================================================
def sobolev_check(model, grid, tests, p=None, r=const.DEF_RADIUS, op=None):
    """Local Sobolev inequality for compactly supported test functions.

    (int u^{2n/(n-2)})^{(n-2)/n} <= C(n) e^{-2 mu/n} int (4 |grad u|^2 + R u^2)

    Args:
        model: 'SolitonModel' with n >= 3
        grid: 'Grid'
        tests: 'list' of 'GridField' (or 'RadialBump') supported in B_p(r)
        p: 'Point' ball centre (model minimizer by default)
        r: 'float' ball radius, 0 < r < 2

    Returns:
        'InequalityReport' with per-function ratios and the max ratio as C(n)

    Raises:
        UnsupportedExponentError: n <= 2
        ScopeError: r outside (0, 2)
        ValidationError: test function not supported in B_p(r)
    """
    if model.n <= 2:
        raise UnsupportedExponentError(
            f'Sobolev exponent 2n/(n-2) needs n >= 3, got n={model.n}'
        )
    if not 0 < r < RADIUS_SCOPE:
        raise ScopeError(f'Ball radius r={r} outside 0 < r < {RADIUS_SCOPE:g}')

    n = model.n
    p = p or model.minimizer()
    op = op or laplace_beltrami(grid)
    outside = grid.distance_from(p) > r * (1.0 + SPACE_TOL)
    curv = model.scalar_curvature(grid.coords)
    power = 2.0 * n / (n - 2)
    weight = math.exp(-2.0 * model.entropy_mu / n)

    ratios, sides = [], []
    for item in tests:
        fld = item.sample(grid) if isinstance(item, RadialBump) else item
        vals = fld.values
        if np.any(vals[outside] != 0.0):
            raise ValidationError(f'Test function {fld.label!r} not supported in B_p({r:g})')

        lhs = float(np.sum(grid.weights * np.abs(vals) ** power)) ** ((n - 2) / n)
        core = weight * float(np.sum(grid.weights * (4.0 * op.gradient_norm2(vals) + curv * vals**2)))
        sides.append((lhs, core))
        ratios.append(_ratio(lhs, core))

    if not ratios:
        raise ValidationError('Sobolev check needs at least one test function')

    worst = int(np.argmax(ratios))
    fitted = ratios[worst]
    return InequalityReport(
        'sobolev',
        sides[worst][0],
        sides[worst][1],
        fitted,
        passed=bool(np.all(np.isfinite(ratios))),
        values={'ratios': ratios, 'C(n)': fitted, 'count': len(ratios)},
        params={'model': model.spec, 'grid': grid.resolution, 'p': p.as_list(), 'r': r},
    )


def caccioppoli_check(u, cyl, k=const.DEF_K_LOCAL, op=None):
    """Energy estimate on nested cylinders of size r/sqrt(k) and delta r/sqrt(k).

    Checks int_inner |grad u|^2 <= C k int_outer u^2 and, from centred time
    differences of the snapshots, int_inner u_t^2 <= C' k int_outer |grad u|^2.

    Returns:
        'InequalityReport' for the gradient estimate; the time derivative
        estimate is stored under values['time_derivative']

    Raises:
        ValidationError: window not covered or grid too coarse
    """
    if int(k) != k or k < 1:
        raise ValidationError(f'Localization parameter must be an integer >= 1, got {k}')

    op = op or laplace_beltrami(u.grid)
    rOut = cyl.r / math.sqrt(k)
    rIn = cyl.cutoff * rOut
    outer = _region(u, cyl.p, rOut, cyl.s)
    inner = _region(u, cyl.p, rIn, cyl.s, minNodes=1)

    for i in inner.idx:
        clean = u.grid.erode_mask(u.snapshots[i].mask, op.stencilRadius)
        if np.any(inner.inside & ~clean):
            raise ValidationError('Inner ball reaches nodes without a clean gradient stencil')

    vals = u.as_array()
    gradIn = np.array([op.gradient_norm2(vals[i]) for i in inner.idx])
    lhs = _integral(u, inner, gradIn)
    core = k * _integral(u, outer, vals[outer.idx] ** 2)
    fitted = _ratio(lhs, core)

    rows = [i for i in inner.idx if 0 < i < len(u) - 1]
    timePart = None
    if len(rows) >= 2:
        sub = Region(inner.inside, inner.weights, np.array(rows))
        ut2 = np.array([u.time_derivative(i) ** 2 for i in rows])
        lhsT = _integral(u, sub, ut2)
        gradOut = np.array([op.gradient_norm2(vals[i]) for i in outer.idx])
        coreT = k * _integral(u, outer, gradOut)
        timePart = {'lhs': lhsT, 'rhs_core': coreT, 'fitted_constant': _ratio(lhsT, coreT)}

    return InequalityReport(
        'caccioppoli',
        lhs,
        core,
        fitted,
        passed=math.isfinite(fitted),
        values={'ratio_over_k': fitted, 'time_derivative': timePart},
        params=_params(u, k=int(k), **cyl.as_dict()),
        provenance=_provenance(u),
    )


def mean_value_check(v, cyl, m=const.DEF_EXPONENT, model=None, op=None):
    """Mean value inequality for a nonnegative subsolution.

    rho = sup_{Q_{delta r}} v^m (1-delta)^{2+n} e^mu r^{2+n}
          / ((R_M + 1)^{n/2} int_{Q_r} v^m)

    is a lower bound for the constant C(n, m).

    Returns:
        'InequalityReport' with rho as fitted constant

    Raises:
        ScopeError: r outside (0, 2) (raised by 'ParabolicCylinder')
        ValidationError: v negative or not a subsolution beyond tolerance
    """
    if not m > 0:
        raise ValidationError(f'Exponent must be positive, got {m}')

    model = model or v.grid.model
    op = op or laplace_beltrami(v.grid)
    n, delta, r = model.n, cyl.cutoff, cyl.r
    outer = _region(v, cyl.p, r, cyl.s)
    inner = _region(v, cyl.p, delta * r, cyl.s, minNodes=1)
    tol, worst = _check_subsolution(v, op, outer)

    vals = np.clip(v.as_array(), 0.0, None) ** m
    supIn = _sup(inner, vals[inner.idx])
    integral = _integral(v, outer, vals[outer.idx])
    curvMax = float(np.max(model.scalar_curvature(v.grid.coords[outer.inside])))
    geom = (curvMax + 1.0) ** (n / 2.0) / (
        (1.0 - delta) ** (2 + n) * math.exp(model.entropy_mu) * r ** (2 + n)
    )
    core = geom * integral
    rho = _ratio(supIn, core)

    return InequalityReport(
        'meanvalue',
        supIn,
        core,
        rho,
        passed=math.isfinite(rho),
        values={
            'rho': rho,
            'sup_inner': supIn,
            'integral': integral,
            'R_M': curvMax,
            'ball_volume_discrete': float(np.sum(outer.weights)),
            'ball_volume_exact': ball_volume(model, cyl.p, r),
            'subsolution_tol': tol,
            'min_defect': worst,
        },
        params=_params(v, m=m, **cyl.as_dict()),
        provenance=_provenance(v),
    )


def _low_exponent_chain(v, cyl, cfg):
    """Per-step G constants of the L-infinity iteration for 0 < m < 2."""
    n, m, r = cfg.n, cfg.exponent, cyl.r
    sigmas = cfg.low_sigmas
    regions = [_region(v, cyl.p, sig * r, cyl.s, minNodes=1) for sig in sigmas]
    vals = np.clip(v.as_array(), 0.0, None)
    sups = [_sup(reg, vals[reg.idx]) for reg in regions]

    steps = []
    for i in range(cfg.levels):
        gap = sigmas[i + 1] - sigmas[i]
        integral = _integral(v, regions[i + 1], vals[regions[i + 1].idx] ** m)
        core = math.sqrt(gap ** -(n + 2) * r ** -(n + 2) * integral) * sups[i + 1] ** ((2.0 - m) / 2.0)
        steps.append({'level': i, 'sigma': sigmas[i], 'sup': sups[i], 'G': _ratio(sups[i], core)})
    return steps


def moser_chain_check(v, cyl, cfg, op=None):
    """Moser iteration chain on nested cylinders Q_{sigma_i r}(p, s).

    Step i checks int_{sigma_{i+1}} w^{2 theta} <= E_i (kappa^-2 r^-2 int_{sigma_i} w^2)^theta
    with w = v^{theta^i}. The data is normalized by its sup over Q_r first;
    E_i is invariant under that scaling. The chain counts as uniformly
    bounded when max_i E_i / E_0 <= CHAIN_BOUND.

    Returns:
        'InequalityReport' with per-step constants in values['steps']
    """
    op = op or laplace_beltrami(v.grid)
    r, theta = cyl.r, cfg.theta
    outer = _region(v, cyl.p, r, cyl.s)
    tol, worst = _check_subsolution(v, op, outer)

    vals = np.clip(v.as_array(), 0.0, None)
    peak = _sup(outer, vals[outer.idx])
    sigmas = cfg.sigmas
    regions = [outer] + [_region(v, cyl.p, sig * r, cyl.s, minNodes=1) for sig in sigmas[1:]]

    values = {
        'sigmas': sigmas,
        'theta': theta,
        'subsolution_tol': tol,
        'min_defect': worst,
        'sup_inner': _sup(regions[-1], vals[regions[-1].idx]),
    }
    if cfg.exponent < 2.0:
        values['low_exponent_chain'] = _low_exponent_chain(v, cyl, cfg)

    if peak <= const.DEF_A_FLOOR:
        values.update(steps=[], norms=[0.0] * len(sigmas), level_reached=cfg.levels, trivial=True)
        return InequalityReport(
            'moser', 0.0, 0.0, 0.0, passed=True, values=values,
            params=_params(v, cylinder=cyl.as_dict(), chain=cfg.as_dict()), provenance=_provenance(v),
        )

    scaled = vals / peak
    norms, steps = [], []
    levelReached = cfg.levels
    for i, reg in enumerate(regions):
        q = 2.0 * theta**i
        norms.append(peak * _integral(v, reg, scaled[reg.idx] ** q) ** (1.0 / q))

    with np.errstate(over='ignore', under='ignore', invalid='ignore'):
        for i in range(cfg.levels):
            w = scaled ** (theta**i)
            lhs = _integral(v, regions[i + 1], w[regions[i + 1].idx] ** (2.0 * theta))
            base = cfg.kappa(i + 1) ** -2 * r**-2 * _integral(v, regions[i], w[regions[i].idx] ** 2)
            core = base**theta
            if not (math.isfinite(core) and core > 0 and math.isfinite(lhs)):
                levelReached = i
                get_logger().warning(f'Moser chain truncated at level {i} (norm out of range)')
                break
            steps.append({'level': i, 'lhs': lhs, 'rhs_core': core, 'E': lhs / core})

    consts = [step['E'] for step in steps]
    first = consts[0] if consts else 0.0
    rel = [val / first if first > 0 else 0.0 for val in consts]
    for step, val in zip(steps, rel):
        step['E_over_first'] = val
    bounded = all(val <= const.DEF_CHAIN_BOUND for val in rel)

    worstIdx = int(np.argmax(consts)) if consts else None
    lhs = steps[worstIdx]['lhs'] if consts else 0.0
    core = steps[worstIdx]['rhs_core'] if consts else 0.0
    values.update(steps=steps, norms=norms, level_reached=levelReached, trivial=False,
                  final_norm=norms[-1], max_over_first=max(rel, default=0.0))

    return InequalityReport(
        'moser',
        lhs,
        core,
        max(consts, default=0.0),
        passed=bounded,
        values=values,
        params=_params(v, cylinder=cyl.as_dict(), chain=cfg.as_dict()),
        provenance=_provenance(v),
    )


def localized_estimate_check(u, model, p, k, s=0.0):
    """Localized L-infinity estimate at scale 1/sqrt(k).

    sup_{Q_{1/(2 sqrt k)}} u^2 <= C2 e^-mu k^{n/2+1} (f(p)+1)^{n/2} int_{Q_{1/sqrt k}} u^2

    Returns:
        'InequalityReport' with fitted C2

    Raises:
        ValidationError: bad k, window not covered, or grid too coarse
    """
    if int(k) != k or k < 1:
        raise ValidationError(f'Localization parameter must be an integer >= 1, got {k}')

    n = model.n
    rOut = 1.0 / math.sqrt(k)
    outer = _region(u, p, rOut, s)
    inner = _region(u, p, 0.5 * rOut, s, minNodes=1)

    vals = u.as_array() ** 2
    supIn = _sup(inner, vals[inner.idx])
    integral = _integral(u, outer, vals[outer.idx])
    core = math.exp(-model.entropy_mu) * k ** (n / 2.0 + 1.0) * (model.f(p) + 1.0) ** (n / 2.0)
    core *= integral
    fitted = _ratio(supIn, core)

    return InequalityReport(
        'localized',
        supIn,
        core,
        fitted,
        passed=math.isfinite(fitted),
        values={'C2': fitted, 'sup_inner': supIn, 'integral': integral},
        params=_params(u, k=int(k), s=s, p=p.as_list()),
        provenance=_provenance(u),
    )


def localized_sweep(u, model, p, ks=LOCAL_KS, s=0.0, growth=LOCAL_GROWTH):
    """Fit C2 for each k and require it not to grow (within 'growth') with k."""
    reports = [localized_estimate_check(u, model, p, k, s) for k in sorted(ks)]
    fits = [rpt.fittedConstant for rpt in reports]
    base = fits[0]
    stable = all(val <= (1.0 + growth) * base for val in fits) if base > 0 else max(fits) == 0.0
    return LabReport(
        'localized-sweep',
        stable and all(rpt.passed for rpt in reports),
        values={'C2': {str(k): val for k, val in zip(sorted(ks), fits)}, 'growth_limit': growth},
        params=_params(u, ks=sorted(ks), s=s, p=p.as_list()),
        provenance=_provenance(u),
    )
