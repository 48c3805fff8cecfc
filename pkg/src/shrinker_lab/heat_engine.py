"""Heat flow solvers and time-Taylor series.

This module holds the forward heat solver (explicit and Crank-Nicolson),
the construction and evaluation of time-Taylor series

    u(x, t) = sum_j a_j(x) t^j / j!,   a_{j+1} = A a_j

the radius-of-convergence estimate for such series, and the series
solver for the backward heat equation (Delta + d_t) u = 0.

Dependencies:
 - numpy: arrays and least squares fits
 - scipy: sparse LU factorization for Crank-Nicolson steps
 - mpmath: extended precision series coefficients and tails
"""

import json
import math

from collections import namedtuple
from pathlib import Path

import mpmath
import numpy as np

from scipy import sparse
from scipy.sparse import linalg as splinalg

from . import sl_constants as const
from .discrete_operators import GridField, laplace_beltrami, parse_data_spec
from .discrete_operators import iterate_laplacian
from .lab_data import dump_json
from .lab_logger import get_logger
from .sl_common import CriterionError, DivergenceError, LabError, ValidationError

__all__ = [
    'HeatTrajectory',
    'TimeTaylorSeries',
    'SeriesEvaluation',
    'RadiusEstimate',
    'solve_forward',
    'time_taylor_coefficients',
    'evaluate_series',
    'estimate_radius',
    'solve_backward',
]


# fmt: off
# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
FORWARD_MARGIN = 4.0            # Diffusion lengths sqrt(t) masked next to truncated ends
FLOAT_NOISE = 1e-13             # Relative rounding level of float64 iterates
TIME_TOL = 1e-9                 # Slack when matching snapshot times
# fmt: on

SeriesEvaluation = namedtuple(
    'SeriesEvaluation', 'field truncationBound reliable withinRadius tailSum'
)
RadiusEstimate = namedtuple('RadiusEstimate', 'delta entire logRatioSlope points')


# =========================================================
#              H E L P E R   F U N C T I O N S
# =========================================================
def _as_operator(opOrGrid):
    if hasattr(opOrGrid, 'apply_values'):
        return opOrGrid
    return laplace_beltrami(opOrGrid)


def _forward_mask(grid, baseMask, elapsed):
    if grid.axialIndex is None or elapsed <= 0:
        return baseMask.copy()
    width = int(math.ceil(FORWARD_MARGIN * math.sqrt(elapsed) / grid.h))
    return baseMask & grid.interior_mask(width)


# =========================================================
#               T R A J E C T O R Y   T Y P E
# =========================================================
class HeatTrajectory:
    """Time series of grid fields u(., t).

    Attributes:
        grid:      'Grid'
        times:     'np.ndarray' strictly increasing snapshot times
        snapshots: 'list' of 'GridField'
        scheme:    'str' scheme tag ('cn', 'explicit', or 'exact')
        dt:        'float' time step
        source:    'ClosedFormData' for closed-form trajectories (or None)

    Methods & Properties:
        from_closed_form: build trajectory from exact heat flow
        snapshot_at: snapshot at given time
        time_derivative: centred difference d_t u at interior snapshot
        squared: trajectory of v = u^2
        subsolution_defect: (Delta - d_t) v at interior snapshots
        to_csv: one CSV per snapshot plus a JSON manifest
    """

    def __init__(self, grid, times, snapshots, scheme, dt, source=None, label=''):
        times = np.asarray(times, dtype=float)
        if len(times) == 0 or len(times) != len(snapshots):
            raise ValidationError('Trajectory needs one snapshot per time')
        if np.any(np.diff(times) <= 0):
            raise ValidationError('Trajectory times must be strictly increasing')

        self.grid = grid
        self.times = times
        self.snapshots = list(snapshots)
        self.scheme = scheme
        self.dt = float(dt)
        self.source = source
        self.label = label

    def __len__(self):
        return len(self.times)

    def __repr__(self):
        return f'HeatTrajectory({self.label or self.scheme}, t=[{self.tStart:g}, {self.tEnd:g}])'

    @property
    def tStart(self):
        return float(self.times[0])

    @property
    def tEnd(self):
        return float(self.times[-1])

    @classmethod
    def from_closed_form(cls, grid, data, times, label=None):
        """Trajectory sampled from the closed-form heat flow of 'data'."""
        data = parse_data_spec(data)
        if data.flow is None:
            raise ValidationError(f'No closed-form heat flow for data {data.name!r}')

        times = np.asarray(times, dtype=float)
        snaps = [
            GridField(grid, data.flow(grid.coords, float(t)), label=f'{data.name}@{t:g}')
            for t in times
        ]
        dt = float(np.min(np.diff(times))) if len(times) > 1 else 0.0
        return cls(grid, times, snaps, 'exact', dt, source=data, label=label or data.name)

    def as_array(self):
        return np.array([snap.values for snap in self.snapshots])

    def common_mask(self):
        mask = np.ones(self.grid.size, dtype=bool)
        for snap in self.snapshots:
            mask &= snap.mask
        return mask

    def index_of(self, t):
        """Index of snapshot at time t (within half a time step)."""
        idx = int(np.argmin(np.abs(self.times - t)))
        slack = max(0.5 * self.dt, TIME_TOL)
        if abs(self.times[idx] - t) > slack:
            raise ValidationError(
                f't={t} not covered by trajectory on [{self.tStart:g}, {self.tEnd:g}]'
            )
        return idx

    def snapshot_at(self, t):
        return self.snapshots[self.index_of(t)]

    def covers(self, tStart, tEnd):
        slack = max(0.5 * self.dt, TIME_TOL)
        return self.tStart <= tStart + slack and self.tEnd >= tEnd - slack

    def time_derivative(self, idx):
        """Centred difference d_t u at interior snapshot index."""
        if idx <= 0 or idx >= len(self.times) - 1:
            raise ValidationError('Time derivative needs an interior snapshot')
        span = self.times[idx + 1] - self.times[idx - 1]
        return (self.snapshots[idx + 1].values - self.snapshots[idx - 1].values) / span

    def squared(self):
        """Trajectory of the subsolution v = u^2."""
        snaps = [
            GridField(self.grid, snap.values**2, mask=snap.mask, label=f'({snap.label})^2')
            for snap in self.snapshots
        ]
        return HeatTrajectory(
            self.grid, self.times, snaps, self.scheme, self.dt, label=f'({self.label})^2'
        )

    def scaled(self, factor):
        snaps = [snap.with_values(factor * snap.values) for snap in self.snapshots]
        return HeatTrajectory(
            self.grid, self.times, snaps, self.scheme, self.dt, label=f'{factor:g}*{self.label}'
        )

    def subsolution_defect(self, op=None):
        """(Delta - d_t) v at interior snapshots, masked values only.

        Returns:
            'np.ndarray' (interior snapshots, nodes) with NaN on masked nodes
        """
        op = _as_operator(op or self.grid)
        rows = []
        for idx in range(1, len(self.times) - 1):
            snap = self.snapshots[idx]
            defect = op.apply_values(snap.values) - self.time_derivative(idx)
            mask = op.grid.erode_mask(snap.mask, op.stencilRadius)
            rows.append(np.where(mask, defect, np.nan))
        return np.array(rows)

    def to_csv(self, outDir, stem='snapshot'):
        """Write one CSV per snapshot plus 'manifest.json'."""
        outDir = Path(outDir)
        try:
            outDir.mkdir(parents=True, exist_ok=True)
            files = []
            for idx, snap in enumerate(self.snapshots):
                fName = f'{stem}_{idx:04d}.csv'
                snap.to_csv(outDir / fName)
                files.append(fName)

            manifest = {
                'model': self.grid.model.spec,
                'topology': type(self.grid.topology).__name__,
                'resolution': self.grid.resolution,
                'scheme': self.scheme,
                'dt': self.dt,
                'times': self.times.tolist(),
                'files': files,
            }
            (outDir / 'manifest.json').write_text(dump_json(manifest), encoding='utf-8')
        except OSError as e:
            raise LabError(f'Cannot write trajectory to {outDir}: {e}') from e
        return outDir / 'manifest.json'

    @classmethod
    def read_manifest(cls, manifestFile):
        try:
            return json.loads(Path(manifestFile).read_text(encoding='utf-8'))
        except (OSError, ValueError) as e:
            raise ValidationError(f'Cannot read trajectory manifest {manifestFile}: {e}') from e


# =========================================================
#                S E R I E S   T Y P E
# =========================================================
class TimeTaylorSeries:
    """Time-Taylor series with coefficients a_0..a_J.

    Attributes:
        op:            'LinearLocalOperator' that generated the coefficients
        coefficients:  'list' of 'GridField'
        t0:            'float' centre time
        radius:        'RadiusEstimate' (None until estimated)
        diverged:      'bool' flag
        firstFailure:  'int' first diverged j (or None)
        noiseLevel:    'float' relative rounding level of the coefficients
    """

    def __init__(self, op, coefficients, t0=0.0, noiseLevel=FLOAT_NOISE,
                 precision=const.DEF_PRECISION):
        self.op = op
        self.coefficients = list(coefficients)
        self.t0 = float(t0)
        self.radius = None
        self.noiseLevel = noiseLevel
        self.precision = int(precision)
        last = self.coefficients[-1]
        self.diverged = bool(last.diverged)
        self.firstFailure = getattr(last, 'firstFailure', None)

    def __len__(self):
        return len(self.coefficients)

    def __repr__(self):
        return f'TimeTaylorSeries(J={self.J}, t0={self.t0:g})'

    @property
    def J(self):
        return len(self.coefficients) - 1

    @property
    def grid(self):
        return self.op.grid

    @property
    def mask(self):
        """Contamination mask of the highest coefficient (applies to all j)."""
        return self.coefficients[-1].mask

    @property
    def radius_estimate(self):
        return None if self.radius is None else self.radius.delta

    @property
    def entire(self):
        return bool(self.radius and self.radius.entire)

    def sup_norms(self):
        mask = self.mask
        return np.array([float(np.max(np.abs(c.values[mask]), initial=0.0)) for c in self.coefficients])

    def noise_floors(self):
        """Level below which sup|a_j| is indistinguishable from rounding noise."""
        base = self.sup_norms()[0]
        growth = 1.0 if self.op.spectral else self.op.lambda_max
        return np.array([self.noiseLevel * base * growth**j for j in range(self.J + 1)])

    def vanishing(self):
        """Boolean per j: coefficient is numerically zero."""
        sups = self.sup_norms()
        return (sups <= self.noise_floors()) | (sups <= const.DEF_ZERO_FLOOR)

    def recheck_recursion(self):
        """Max deviation between A a_j and a_{j+1} (exact arithmetic replayed)."""
        worst = 0.0
        for prev, nxt in zip(self.coefficients[:-1], self.coefficients[1:]):
            if prev.mpValues is not None and nxt.mpValues is not None:
                with mpmath.workdps(self.precision):
                    replay = self.op.apply_mp(prev.mpValues)
                    dev = max(float(abs(a - b)) for a, b in zip(replay, nxt.mpValues))
            else:
                level = const.DEF_FILTER_LEVEL if self.op.spectral else None
                replay = self.op.apply_values(prev.values, level)
                dev = float(np.max(np.abs(replay - nxt.values)))
            worst = max(worst, dev)
        return worst


# =========================================================
#                   O P E R A T I O N S
# =========================================================
def solve_forward(op, a, tFinal, scheme=const.SCHEME_CN, dt=const.DEF_DT, tStart=0.0,
                  saveEvery=1):
    """Solve u_t = A u from u(tStart) = a up to tStart + tFinal.

    Args:
        op: 'LinearLocalOperator' (or 'Grid' for the default central operator)
        a: 'GridField' initial data
        tFinal: 'float' length of the run (> 0)
        scheme: [cn|explicit]
        dt: 'float' time step (shrunk so that it divides tFinal)
        tStart: 'float' initial time
        saveEvery: 'int' store every n-th step

    Returns:
        'HeatTrajectory'

    Raises:
        ValidationError: bad arguments or explicit stability violation
        DivergenceError: non-finite snapshot
    """
    op = _as_operator(op)
    if not tFinal > 0 or not dt > 0:
        raise ValidationError('Forward solve needs t_final > 0 and dt > 0')
    if scheme not in (const.SCHEME_CN, const.SCHEME_EXPLICIT):
        raise ValidationError(f'Unknown time scheme: {scheme!r}')

    steps = max(int(math.ceil(tFinal / dt - 1e-9)), 1)
    dt = tFinal / steps
    if scheme == const.SCHEME_EXPLICIT and dt > op.explicit_dt_max * (1.0 + 1e-12):
        raise ValidationError(
            f'Explicit scheme unstable: dt={dt:.3e} > {op.explicit_dt_max:.3e}'
        )

    if op.spectral:
        ksq = op.wavenumbers**2
        if scheme == const.SCHEME_CN:
            factor = (1.0 - 0.5 * dt * ksq) / (1.0 + 0.5 * dt * ksq)
        else:
            factor = 1.0 - dt * ksq

        def _step(vals):
            return np.real(np.fft.ifft(factor * np.fft.fft(vals)))

    elif scheme == const.SCHEME_CN:
        eye = sparse.identity(op.grid.size, format='csc')
        lhs = (eye - 0.5 * dt * op.matrix).tocsc()
        rhs = (eye + 0.5 * dt * op.matrix).tocsr()
        try:
            solver = splinalg.splu(lhs)
        except RuntimeError as e:
            raise DivergenceError(f'Crank-Nicolson factorization failed: {e}') from e

        def _step(vals):
            return solver.solve(rhs @ vals)

    else:
        matrix = op.matrix

        def _step(vals):
            return vals + dt * (matrix @ vals)

    times = [float(tStart)]
    snaps = [a]
    vals = a.values
    with np.errstate(over='ignore', invalid='ignore'):
        for step in range(1, steps + 1):
            vals = _step(vals)
            if not np.all(np.isfinite(vals)):
                raise DivergenceError(f'Forward solve diverged at step {step}', firstFailure=step)
            if step % saveEvery == 0 or step == steps:
                elapsed = step * dt
                mask = _forward_mask(op.grid, a.mask, elapsed)
                snaps.append(GridField(op.grid, vals, mask=mask, label=f'u@{tStart + elapsed:g}'))
                times.append(tStart + elapsed)

    return HeatTrajectory(op.grid, times, snaps, scheme, dt, label=a.label)


def time_taylor_coefficients(op, a, J=const.DEF_J, precision=const.DEF_PRECISION,
                             deltaMax=const.DEF_DELTA_MAX, t0=0.0):
    """Time-Taylor coefficients a_j = A^j a with radius estimate.

    Args:
        op: 'LinearLocalOperator'
        a: 'GridField' (extended precision values are iterated in extended precision)
        J: 'int' truncation order (capped at J_MAX)
        precision: decimal digits for the extended precision path
        deltaMax: radius cap for entire series
        t0: 'float' centre time

    Returns:
        'TimeTaylorSeries'

    Raises:
        ValidationError: J < 0 or J above J_MAX
    """
    if int(J) != J or J < 0:
        raise ValidationError(f'Truncation order must be >= 0, got {J}')
    if J > const.DEF_J_MAX:
        raise ValidationError(f'Truncation order capped at {const.DEF_J_MAX}, got {J}')

    fields = iterate_laplacian(op, a, int(J), precision=precision)
    # Spectral and cylinder operators iterate in float64 only
    extended = fields[-1].mpValues is not None
    noise = 10.0 ** (10 - int(precision)) if extended else FLOAT_NOISE
    series = TimeTaylorSeries(op, fields, t0=t0, noiseLevel=noise, precision=precision)
    if series.diverged:
        get_logger().warning(f'Time-Taylor coefficients diverged at j={series.firstFailure}')
        return series

    if series.J >= const.DEF_J_MIN_RADIUS:
        series.radius = estimate_radius(series, deltaMax)
    return series


def evaluate_series(series, t):
    """Partial sum sum_{j<=J} a_j (t - t0)^j / j! with truncation bound.

    The sum is evaluated in Horner form. The truncation bound is the last
    term times the geometric tail factor when the last term ratio is below
    one; otherwise the evaluation is flagged unreliable.

    Returns:
        'SeriesEvaluation' (field, truncationBound, reliable, withinRadius, tailSum)
    """
    if series.diverged:
        raise DivergenceError('Cannot evaluate a diverged series', series.firstFailure)

    tau = float(t) - series.t0
    coeffs = series.coefficients
    total = coeffs[-1].values.copy()
    for j in range(series.J - 1, -1, -1):
        total = coeffs[j].values + (tau / (j + 1)) * total

    sups = series.sup_norms()
    vanish = series.vanishing()
    terms = np.array(
        [0.0 if vanish[j] else sups[j] * abs(tau) ** j / math.factorial(j) for j in range(series.J + 1)]
    )
    tailSum = float(np.sum(terms))

    last = terms[-1]
    prev = terms[-2] if series.J >= 1 else 0.0
    if last == 0.0:
        bound, reliable = 0.0, True
    elif prev > 0.0 and last / prev < 1.0:
        ratio = last / prev
        bound, reliable = last * ratio / (1.0 - ratio), True
    else:
        bound, reliable = math.inf, False

    delta = series.radius_estimate
    within = delta is None or abs(tau) < delta
    if not within:
        get_logger().warning(f'Series evaluated at |t - t0|={abs(tau):g} outside radius {delta:g}')

    field = GridField(series.grid, total, mask=series.mask.copy(), label=f'series@{t:g}')
    return SeriesEvaluation(field, bound, reliable, within, tailSum)


def estimate_radius(series, deltaMax=const.DEF_DELTA_MAX):
    """Estimate the time radius of convergence of a series.

    With s_j = sup|a_j| / j!, the roots r_j = log(s_j) / j over the top half
    of j are regressed on (1, j^-1/2, j^-1) and delta = exp(-intercept).
    The series counts as entire (delta = deltaMax) when the top-half
    coefficients vanish or when log(s_{j+1}/s_j) falls against log j with
    slope <= ENTIRE_SLOPE.

    Returns:
        'RadiusEstimate' (delta, entire, logRatioSlope, points)

    Raises:
        ValidationError: J < J_MIN_RADIUS
    """
    if series.J < const.DEF_J_MIN_RADIUS:
        raise ValidationError(f'Radius estimate needs J >= {const.DEF_J_MIN_RADIUS}')

    sups = series.sup_norms()
    vanish = series.vanishing()
    js = np.arange(series.J + 1)
    top = js >= max(series.J // 2, 1)
    live = top & ~vanish

    if not np.any(live):
        return RadiusEstimate(float(deltaMax), True, None, 0)

    logS = np.array([math.log(sups[j]) - math.lgamma(j + 1) if sups[j] > 0 else -math.inf for j in js])

    slope = None
    pairs = [j for j in js[:-1] if live[j] and live[j + 1]]
    if len(pairs) >= 2:
        ratios = np.array([logS[j + 1] - logS[j] for j in pairs])
        slope = float(np.polyfit(np.log(np.array(pairs, dtype=float) + 1.0), ratios, 1)[0])
        if slope <= const.DEF_ENTIRE_SLOPE:
            return RadiusEstimate(float(deltaMax), True, slope, int(np.sum(live)))

    jj = js[live].astype(float)
    roots = logS[live] / jj
    basis = [np.ones_like(jj), jj**-0.5, 1.0 / jj][: max(1, min(3, len(jj) - 1))]
    coef, *_ = np.linalg.lstsq(np.column_stack(basis), roots, rcond=None)
    intercept = float(coef[0])

    delta = math.exp(-intercept) if intercept > -math.log(deltaMax) else deltaMax
    entire = delta >= deltaMax
    return RadiusEstimate(float(min(delta, deltaMax)), entire, slope, int(np.sum(live)))


def solve_backward(op, a, t, J=const.DEF_J, override=False, p=None,
                   precision=const.DEF_PRECISION):
    """Series solution of (Delta + d_t) w = 0 with w(., 0) = a, evaluated at time t.

    The result is sum_j A^j a (-t)^j / j!, i.e. the forward series
    evaluated at -t. The solve is refused unless the coefficient criterion
    is feasible and t lies inside the estimated radius (or 'override').

    Args:
        op: 'LinearLocalOperator'
        a: 'GridField' terminal data
        t: 'float' > 0 backward time
        J: 'int' truncation order
        override: 'bool' skip criterion and radius checks
        p: 'Point' base point for the criterion (model minimizer by default)
        precision: decimal digits for the extended precision path

    Returns:
        'GridField' with attributes 'truncationBound' and 'criterion'

    Raises:
        CriterionError: criterion infeasible or t outside radius (without override)
        DivergenceError: unreliable truncation bound
    """
    # Imported here: analyticity builds on this module
    from .analyticity import criterion_check

    if not t > 0:
        raise ValidationError(f'Backward time must be positive, got {t}')

    series = time_taylor_coefficients(op, a, J, precision=precision)
    if series.diverged:
        raise DivergenceError('Backward series diverged', series.firstFailure)

    report = None
    if not override:
        model = op.grid.model
        report = criterion_check(series, model, p or model.minimizer())
        if not report.feasible:
            raise CriterionError('Backward solve refused: coefficient criterion infeasible')
        delta = series.radius_estimate
        if delta is not None and t >= delta:
            raise CriterionError(f'Backward time t={t} outside estimated radius {delta:g}')

    res = evaluate_series(series, -float(t))
    if not res.reliable:
        raise DivergenceError(f'Backward series truncation unreliable at t={t}, J={J}')

    field = res.field
    field.label = f'backward@{t:g}'
    field.truncationBound = res.truncationBound
    field.tailSum = res.tailSum
    field.criterion = report
    return field
