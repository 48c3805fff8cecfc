#!/usr/bin/env python3
"""Command-line runner for Shrinker Lab experiments.

Each subcommand builds its objects from one 'ExperimentConfig', runs the
experiment, and writes 'report.json' (UTF-8, sorted keys), CSV plot data
and a 'run.json' manifest into the output directory.

To launch this application from terminal:

    $ python -m shrinker_lab <subcommand> [options]

or, once installed via 'pip':

    $ sl_run backward --model gaussian:1 --data sin --t 0.5

Exit codes:
 - 0: all checks passed
 - 1: a verified inequality or criterion failed
 - 2: usage or config error
 - 3: numerical failure (divergence, NaN, unreliable tails)

Dependencies:
 - numpy: arrays and CSV output
 - rich: console output, pretty printing and tracebacks
"""

import argparse
import hashlib
import math
import sys

from collections import namedtuple
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from rich.console import Console
from rich.pretty import pprint
from rich.traceback import install as install_rich_traceback

from . import sl_constants as const
from .analyticity import criterion_check, growth_classify, reconstruct_and_compare
from .analyticity import verify_coefficient_bound
from .counterexamples import demonstrate_sharpness, tychonov_pde_residual, tychonov_profile
from .discrete_operators import CylinderProduct, PeriodicLine, TruncatedLine
from .discrete_operators import build_grid, laplace_beltrami, make_topology
from .discrete_operators import parse_data_spec, sample_field
from .heat_engine import HeatTrajectory, TimeTaylorSeries, evaluate_series
from .heat_engine import solve_backward, solve_forward, time_taylor_coefficients
from .inequality_lab import MoserChainConfig, ParabolicCylinder, caccioppoli_check
from .inequality_lab import localized_estimate_check, localized_sweep, mean_value_check
from .inequality_lab import moser_chain_check, random_bumps, sobolev_check
from .lab_data import LabData, LabReport, dump_json
from .lab_logger import KWD_LOG_LEVEL, LOG_DEBUG, LOG_WARNING, Logger
from .sl_common import LabError, Runtime, ScopeError, ValidationError
from .sl_common import apply_thread_cap, exit_code_for, get_setting, init_cli_parser
from .sl_common import load_settings
from .soliton_models import Point, ball_volume, check_entropy, check_soliton_identities
from .soliton_models import fit_volume_constant, parse_model_spec, potential_bounds_check
from .soliton_models import random_points, small_ball_check

install_rich_traceback(show_locals=False)


# fmt: off
# =========================================================
#          G L O B A L S   A N D   H E L P E R S
# =========================================================
APP_VERSION = '0.3.1'
APP_NAME = 'Shrinker Lab'
APP_NAME_SHORT = 'SL'
APP_LOG = 'shrinker-lab.log'
APP_SETTINGS = 'sl_settings.toml'

REPORT_FILE = 'report.json'
MANIFEST_FILE = 'run.json'

BACKWARD_TOL = 1e-6             # Oracle tolerance for spectral backward solves
ROUNDTRIP_TOL = 1e-4            # forward(backward(a, t), t) vs a
RADIUS_BAND = (0.8, 1.25)       # Accepted delta/oracle band
BOUNDS_WINDOW = 2.0             # Trajectory length for growth envelopes
BOUNDS_STABILITY = 0.15         # Relative A3 change allowed when J grows
MAX_SNAPSHOTS = 50              # Stored snapshots of forward runs
SOBOLEV_BUMPS = 20              # Random test functions per Sobolev check
SCALE_FACTOR = 10.0             # Factor for scale invariance checks
RHO_ORACLE = 0.0625             # Normalized mean value ratio of v = 1 at r=1, delta=1/2, m=1
RHO_TOL = 1e-3
RESOLUTION_RTOL = 0.10          # Relative change allowed under h -> h/2
TYCHONOV_TOL = 1e-9             # Error of v(0, 0.5) against exp(-4)
TYCHONOV_RESIDUAL = 1e-2        # Max discrete (Delta - d_t) v

COMMANDS = (
    'model-check', 'entropy', 'volume', 'forward', 'taylor', 'radius', 'backward',
    'bounds-fit', 'criterion', 'tychonov-demo', 'ineq', 'reproduce-all',
)
INEQ_KINDS = ('sobolev', 'caccioppoli', 'meanvalue', 'moser', 'localized')

# (field, keyword, default, type)
CONFIG_FIELDS = (
    ('model', const.KWD_MODEL, const.DEF_MODEL, str),
    ('data', const.KWD_DATA, const.DEF_DATA, str),
    ('topology', const.KWD_TOPOLOGY, const.DEF_TOPOLOGY, str),
    ('L', const.KWD_L, const.DEF_L, float),
    ('h', const.KWD_H, const.DEF_H, float),
    ('period', const.KWD_PERIOD, const.DEF_PERIOD, float),
    ('nTheta', const.KWD_N_THETA, const.DEF_N_THETA, int),
    ('nPhi', const.KWD_N_PHI, const.DEF_N_PHI, int),
    ('scheme', const.KWD_SCHEME, const.DEF_SCHEME, str),
    ('spaceScheme', const.KWD_SPACE_SCHEME, const.DEF_SPACE_SCHEME, str),
    ('dt', const.KWD_DT, const.DEF_DT, float),
    ('tFinal', const.KWD_T_FINAL, const.DEF_T_FINAL, float),
    ('tStart', const.KWD_T_START, const.DEF_T_START, float),
    ('tEval', const.KWD_T_EVAL, const.DEF_T_EVAL, float),
    ('J', const.KWD_J, const.DEF_J, int),
    ('K', const.KWD_K, const.DEF_K, int),
    ('deltaMax', const.KWD_DELTA_MAX, const.DEF_DELTA_MAX, float),
    ('precision', const.KWD_PRECISION, const.DEF_PRECISION, int),
    ('quadNodes', const.KWD_QUAD_NODES, const.DEF_QUAD_NODES, int),
    ('seed', const.KWD_SEED, const.DEF_SEED, int),
    ('samples', const.KWD_SAMPLES, const.DEF_SAMPLES, int),
    ('outDir', const.KWD_OUTDIR, const.DEF_OUTDIR, str),
    ('a4Max', const.KWD_A4_MAX, const.DEF_A4_MAX, float),
    ('a4Steps', const.KWD_A4_STEPS, const.DEF_A4_STEPS, int),
    ('growthLimit', const.KWD_GROWTH_LIMIT, const.DEF_GROWTH_LIMIT, float),
    ('radius', const.KWD_RADIUS, const.DEF_RADIUS, float),
    ('cutoff', const.KWD_CUTOFF, const.DEF_CUTOFF, float),
    ('exponent', const.KWD_EXPONENT, const.DEF_EXPONENT, float),
    ('levels', const.KWD_LEVELS, const.DEF_LEVELS, int),
    ('kLocal', const.KWD_K_LOCAL, const.DEF_K_LOCAL, int),
)

# (flag, keyword, type, help)
CLI_OVERRIDES = (
    ('--model', const.KWD_MODEL, str, 'model spec: gaussian:<n> or cylinder:<k>x<n>'),
    ('--data', const.KWD_DATA, str, 'initial data spec (sin, const, x2, cauchy, kernel:<c>, ...)'),
    ('--topology', const.KWD_TOPOLOGY, str, 'grid topology [truncated|periodic|cylinder]'),
    ('--L', const.KWD_L, float, 'half-length of truncated domains'),
    ('--h', const.KWD_H, float, 'line or axial grid spacing'),
    ('--period', const.KWD_PERIOD, float, 'period of the periodic harness'),
    ('--n-theta', const.KWD_N_THETA, int, 'polar resolution of the sphere factor'),
    ('--n-phi', const.KWD_N_PHI, int, 'azimuthal resolution of the sphere factor'),
    ('--scheme', const.KWD_SCHEME, str, 'time scheme [cn|explicit]'),
    ('--space', const.KWD_SPACE_SCHEME, str, 'space scheme [auto|central|spectral]'),
    ('--dt', const.KWD_DT, float, 'time step'),
    ('--t-final', const.KWD_T_FINAL, float, 'length of forward runs'),
    ('--t-start', const.KWD_T_START, float, 'start time of forward runs'),
    ('--t', const.KWD_T_EVAL, float, 'evaluation time for series and backward solves'),
    ('--J', const.KWD_J, int, 'truncation order of time series'),
    ('--K', const.KWD_K, int, 'Tychonov truncation order'),
    ('--delta-max', const.KWD_DELTA_MAX, float, 'radius cap for entire series'),
    ('--precision', const.KWD_PRECISION, int, 'decimal digits for extended precision'),
    ('--quad-nodes', const.KWD_QUAD_NODES, int, 'quadrature nodes per factor'),
    ('--seed', const.KWD_SEED, int, 'seed for random sample points'),
    ('--samples', const.KWD_SAMPLES, int, 'number of random sample points'),
    ('--out', const.KWD_OUTDIR, str, 'output directory'),
    ('--a4-max', const.KWD_A4_MAX, float, 'upper end of the A4 search grid'),
    ('--a4-steps', const.KWD_A4_STEPS, int, 'number of A4 grid values'),
    ('--growth-limit', const.KWD_GROWTH_LIMIT, float, 'allowed A3 growth per 4 coefficients'),
    ('--r', const.KWD_RADIUS, float, 'parabolic cylinder size (0 < r < 2)'),
    ('--delta', const.KWD_CUTOFF, float, 'cutoff fraction in (0, 1)'),
    ('--m', const.KWD_EXPONENT, float, 'exponent m > 0'),
    ('--levels', const.KWD_LEVELS, int, 'Moser chain depth'),
    ('--k', const.KWD_K_LOCAL, int, 'localization parameter k >= 1'),
)
# fmt: on

CommandResult = namedtuple('CommandResult', 'data tables')


# =========================================================
#              E X P E R I M E N T   C O N F I G
# =========================================================
@dataclass
class ExperimentConfig:
    """All values that define one experiment.

    Built from the settings file plus CLI overrides. Identical configs
    (apart from the output directory) share the same 'config_hash()'.
    """

    model: str = const.DEF_MODEL
    data: str = const.DEF_DATA
    topology: str = const.DEF_TOPOLOGY
    L: float = const.DEF_L
    h: float = const.DEF_H
    period: float = const.DEF_PERIOD
    nTheta: int = const.DEF_N_THETA
    nPhi: int = const.DEF_N_PHI
    scheme: str = const.DEF_SCHEME
    spaceScheme: str = const.DEF_SPACE_SCHEME
    dt: float = const.DEF_DT
    tFinal: float = const.DEF_T_FINAL
    tStart: float = const.DEF_T_START
    tEval: float = const.DEF_T_EVAL
    J: int = const.DEF_J
    K: int = const.DEF_K
    deltaMax: float = const.DEF_DELTA_MAX
    precision: int = const.DEF_PRECISION
    quadNodes: int = const.DEF_QUAD_NODES
    seed: int = const.DEF_SEED
    samples: int = const.DEF_SAMPLES
    outDir: str = const.DEF_OUTDIR
    a4Max: float = const.DEF_A4_MAX
    a4Steps: int = const.DEF_A4_STEPS
    growthLimit: float = const.DEF_GROWTH_LIMIT
    radius: float = const.DEF_RADIUS
    cutoff: float = const.DEF_CUTOFF
    exponent: float = const.DEF_EXPONENT
    levels: int = const.DEF_LEVELS
    kLocal: int = const.DEF_K_LOCAL

    @classmethod
    def from_settings(cls, settings):
        return cls(
            **{
                name: get_setting(settings, kwd, default, kind)
                for name, kwd, default, kind in CONFIG_FIELDS
            }
        )

    def as_dict(self):
        return asdict(self)

    def experiment_dict(self):
        """Config without the output location."""
        return {key: val for key, val in self.as_dict().items() if key != 'outDir'}

    def config_hash(self):
        return hashlib.sha256(dump_json(self.experiment_dict()).encode('utf-8')).hexdigest()

    def validate(self):
        """Check specs and ranges.

        Raises:
            ValidationError: first invalid value found
        """
        parse_model_spec(self.model, self.quadNodes)
        parse_data_spec(self.data)
        make_topology(self.topology, self.L, self.h, self.period, self.nTheta, self.nPhi)

        if self.scheme not in (const.SCHEME_CN, const.SCHEME_EXPLICIT):
            raise ValidationError(f'Unknown time scheme: {self.scheme!r}')
        if self.spaceScheme not in (const.SPACE_AUTO, const.SPACE_CENTRAL, const.SPACE_SPECTRAL):
            raise ValidationError(f'Unknown space scheme: {self.spaceScheme!r}')
        if not (self.dt > 0 and self.tFinal > 0):
            raise ValidationError('Time step and run length must be positive')
        if not 0 <= self.J <= const.DEF_J_MAX:
            raise ValidationError(f'J must lie in 0..{const.DEF_J_MAX}, got {self.J}')
        if not 1 <= self.K <= const.DEF_K_MAX:
            raise ValidationError(f'K must lie in 1..{const.DEF_K_MAX}, got {self.K}')
        if self.precision < 16:
            raise ValidationError(f'Precision must be at least 16 digits, got {self.precision}')
        if self.samples < 1 or self.quadNodes < 2:
            raise ValidationError('Need at least one sample and two quadrature nodes')
        if self.a4Steps < 2 or not self.a4Max > 0 or not self.growthLimit > 0:
            raise ValidationError('A4 grid needs >= 2 steps, a positive range and growth limit')
        if not 0 < self.cutoff < 1:
            raise ValidationError(f'Cutoff must lie in (0, 1), got {self.cutoff}')
        if not self.exponent > 0 or self.kLocal < 1:
            raise ValidationError('Exponent must be positive and k >= 1')
        if not 0 <= self.levels <= const.DEF_LEVELS_MAX:
            raise ValidationError(f'Levels must lie in 0..{const.DEF_LEVELS_MAX}, got {self.levels}')

        if self.scheme == const.SCHEME_EXPLICIT:
            op = self.build_operator(self.build_grid())
            if self.dt > op.explicit_dt_max:
                raise ValidationError(
                    f'Explicit scheme unstable: dt={self.dt:g} > {op.explicit_dt_max:.3e}'
                )
        return self

    def build_model(self):
        return parse_model_spec(self.model, self.quadNodes)

    def build_grid(self, model=None):
        topo = make_topology(self.topology, self.L, self.h, self.period, self.nTheta, self.nPhi)
        return build_grid(model or self.build_model(), topo)

    def space_kind(self, grid):
        if self.spaceScheme == const.SPACE_AUTO:
            return const.SPACE_SPECTRAL if grid.is_periodic else const.SPACE_CENTRAL
        return self.spaceScheme

    def build_operator(self, grid):
        return laplace_beltrami(grid, self.space_kind(grid))


# =========================================================
#              H E L P E R   F U N C T I O N S
# =========================================================
def _csv_cell(val):
    if isinstance(val, (bool, np.bool_)):
        return 'true' if val else 'false'
    if isinstance(val, (int, np.integer)):
        return str(int(val))
    if isinstance(val, (float, np.floating)):
        return f'{float(val):.17g}'
    text = str(val)
    return f'"{text}"' if ',' in text or '"' in text else text


def write_csv(fName, header, rows):
    """Write header row plus data rows ('.' decimal separator)."""
    cells = np.array([[_csv_cell(val) for val in row] for row in rows], dtype=str)
    cells = cells.reshape(len(rows), len(header))
    np.savetxt(fName, cells, fmt='%s', delimiter=',', header=','.join(header), comments='')


def write_outputs(outDir, command, cfg, result, exitCode):
    """Write 'report.json', CSV tables, and 'run.json' manifest.

    Returns:
        'Path' to the manifest
    """
    outDir = Path(outDir)
    try:
        outDir.mkdir(parents=True, exist_ok=True)
        report = {
            'command': command,
            'version': APP_VERSION,
            'config': cfg.experiment_dict(),
            'config_hash': cfg.config_hash(),
            'pass': result.data.passed,
            'failed': result.data.failed(),
            'reports': result.data.as_list(),
        }
        (outDir / REPORT_FILE).write_text(dump_json(report), encoding='utf-8')

        files = [REPORT_FILE]
        for name, (header, rows) in sorted(result.tables.items()):
            write_csv(outDir / name, header, rows)
            files.append(name)
        files.extend(
            str(path.relative_to(outDir))
            for path in sorted(outDir.glob('trajectory/*'))
        )

        manifest = {
            'command': command,
            'version': APP_VERSION,
            'config_hash': cfg.config_hash(),
            'exit_code': exitCode,
            'files': files,
        }
        (outDir / MANIFEST_FILE).write_text(dump_json(manifest), encoding='utf-8')
    except OSError as e:
        raise LabError(f'Cannot write results to {outDir}: {e}') from e
    return outDir / MANIFEST_FILE


def _sup_error(vals, ref, mask):
    return float(np.max(np.abs(vals - ref)[mask])) if np.any(mask) else 0.0


def _radius_oracle(data):
    """Closed-form time radius (inf for entire flows, None when unknown)."""
    name, _, param = data.name.partition(':')
    if name in ('sin', 'const', 'x2', 'ylm10'):
        return math.inf
    if name in ('kernel', 'growth'):
        return float(param)
    return None


def _series_for(grid, op, data, J, precision, deltaMax=const.DEF_DELTA_MAX):
    a = sample_field(grid, data, precision=precision)
    return a, time_taylor_coefficients(op, a, J, precision=precision, deltaMax=deltaMax)


def _envelope_trajectory(grid, op, data, a, dt):
    """Closed-form trajectory on [-BOUNDS_WINDOW, 0], else a forward run from a."""
    if data.flow is not None:
        try:
            times = np.linspace(-BOUNDS_WINDOW, 0.0, 41)
            return HeatTrajectory.from_closed_form(grid, data, times)
        except ValidationError:
            pass
    return solve_forward(op, a, BOUNDS_WINDOW, dt=dt, saveEvery=max(int(BOUNDS_WINDOW / dt) // 40, 1))


def _time_grid(length, dt):
    return np.linspace(-length, 0.0, max(int(round(length / dt)), 1) + 1)


def _trajectory(grid, op, data, length, dt):
    """Trajectory on [-length, 0] (closed form when available)."""
    data = parse_data_spec(data)
    if data.flow is not None:
        return HeatTrajectory.from_closed_form(grid, data, _time_grid(length, dt))
    a = sample_field(grid, data)
    return solve_forward(op, a, length, dt=dt, tStart=-length)


def backward_report(op, data, t, J, precision, dt, override=False):
    """Backward series solve with oracle error and forward round trip."""
    data = parse_data_spec(data)
    a = sample_field(op.grid, data, precision=precision)
    w = solve_backward(op, a, t, J, override=override, precision=precision)

    values = {'truncation_bound': w.truncationBound, 'tail_sum': w.tailSum}
    passed = True
    if data.flow is not None:
        try:
            ref = data.flow(op.grid.coords, -t)
        except ValidationError:
            ref = None
        if ref is not None:
            err = _sup_error(w.values, ref, w.mask)
            tol = BACKWARD_TOL if op.spectral else op.grid.h**2
            values.update(sup_error=err, oracle_tol=tol)
            passed = err <= tol

    traj = solve_forward(op, w, t, dt=dt)
    last = traj.snapshots[-1]
    roundTrip = _sup_error(last.values, a.values, last.mask & w.mask)
    values['roundtrip_error'] = roundTrip
    passed = passed and roundTrip <= ROUNDTRIP_TOL

    if w.criterion is not None:
        values['criterion'] = {'A3': w.criterion.A3, 'A4': w.criterion.A4, 'feasible': w.criterion.feasible}

    return LabReport(
        'backward',
        passed,
        values=values,
        params={
            'model': op.grid.model.spec,
            'data': data.name,
            't': t,
            'J': J,
            'space': op.kind,
            'grid': op.grid.resolution,
            'override': override,
        },
        provenance=[data.provenance] if data.provenance else [],
    ), w


def radius_report(series, data):
    """Radius estimate against its closed-form oracle."""
    est = series.radius
    oracle = _radius_oracle(data)
    if oracle is None:
        passed = None
    elif math.isinf(oracle):
        passed = est.entire
    else:
        passed = RADIUS_BAND[0] <= est.delta / oracle <= RADIUS_BAND[1]

    return LabReport(
        'radius',
        passed,
        values={
            'delta': est.delta,
            'entire': est.entire,
            'log_ratio_slope': est.logRatioSlope,
            'points': est.points,
            'oracle': oracle,
            'ratio': None if not oracle or math.isinf(oracle) else est.delta / oracle,
        },
        params={'data': data.name, 'J': series.J, 'grid': series.grid.resolution},
        provenance=[data.provenance] if data.provenance else [],
    )


def _coefficient_rows(series):
    sups = series.sup_norms()
    floors = series.noise_floors()
    vanish = series.vanishing()
    rows = []
    for j in range(series.J + 1):
        logS = math.log(sups[j]) - math.lgamma(j + 1) if sups[j] > 0 else -math.inf
        root = logS / j if j else math.nan
        rows.append([j, sups[j], floors[j], bool(vanish[j]), logS, root])
    return rows


COEFF_HEADER = ['j', 'sup_a_j', 'noise_floor', 'vanishing', 'log_s_j', 'root_r_j']


def _truncated(series, J):
    """Series restricted to its first J + 1 coefficients."""
    part = TimeTaylorSeries(
        series.op, series.coefficients[: J + 1], series.t0, series.noiseLevel, series.precision
    )
    part.radius = series.radius
    return part


# =========================================================
#                   S U B C O M M A N D S
# =========================================================
def cmd_model_check(cfg, outDir):
    model = cfg.build_model()
    rng = np.random.default_rng(cfg.seed)
    pts = random_points(model, rng, cfg.samples)
    data = LabData(
        [
            check_soliton_identities(model, pts),
            potential_bounds_check(model, model.minimizer(), pts),
        ]
    )
    coords = np.vstack([pt.coords for pt in pts])
    rows = np.column_stack([coords, model.potential(coords), model.scalar_curvature(coords)])
    header = [f'coord_{i}' for i in range(model.n)] + ['f', 'R']
    return CommandResult(data, {'samples.csv': (header, rows.tolist())})


def cmd_entropy(cfg, outDir):
    model = cfg.build_model()
    rows = []
    for nodes in (8, 16, 32, 64, 128):
        refined = parse_model_spec(cfg.model, nodes)
        rows.append([nodes, refined.entropy_mu])
    return CommandResult(LabData([check_entropy(model)]), {'entropy.csv': (['nodes', 'mu'], rows)})


def cmd_volume(cfg, outDir):
    model = cfg.build_model()
    rng = np.random.default_rng(cfg.seed)
    pts = [model.minimizer()] + random_points(model, rng, cfg.samples)
    radii = (0.25, 0.5, 1.0, 2.0, 4.0)
    data = LabData([fit_volume_constant([model], [pts], radii), small_ball_check(model)])
    rows = [[r, ball_volume(model, model.minimizer(), r)] for r in radii]
    return CommandResult(data, {'volume.csv': (['r', 'ball_volume'], rows)})


def cmd_forward(cfg, outDir):
    grid = cfg.build_grid()
    op = cfg.build_operator(grid)
    data = parse_data_spec(cfg.data)
    a = sample_field(grid, data)
    steps = max(int(math.ceil(cfg.tFinal / cfg.dt)), 1)
    traj = solve_forward(
        op, a, cfg.tFinal, cfg.scheme, cfg.dt, cfg.tStart, saveEvery=max(steps // MAX_SNAPSHOTS, 1)
    )
    traj.to_csv(Path(outDir) / 'trajectory')

    rows = []
    for t, snap in zip(traj.times, traj.snapshots):
        err = math.nan
        if data.flow is not None:
            err = _sup_error(snap.values, data.flow(grid.coords, t - cfg.tStart), snap.mask)
        rows.append([t, snap.sup(), err])

    errors = [row[2] for row in rows if not math.isnan(row[2])]
    report = LabReport(
        'forward',
        True,
        values={
            'snapshots': len(traj),
            'dt': traj.dt,
            'sup_error': max(errors) if errors else None,
            'final_sup': rows[-1][1],
        },
        params={'data': data.name, 'scheme': cfg.scheme, 'space': op.kind, 'grid': grid.resolution},
        provenance=[data.provenance] if data.provenance else [],
    )
    return CommandResult(LabData([report]), {'forward.csv': (['t', 'sup_u', 'sup_error'], rows)})


def cmd_taylor(cfg, outDir):
    grid = cfg.build_grid()
    op = cfg.build_operator(grid)
    data = parse_data_spec(cfg.data)
    _, series = _series_for(grid, op, data, cfg.J, cfg.precision, cfg.deltaMax)
    res = evaluate_series(series, cfg.tEval)

    values = {
        'truncation_bound': res.truncationBound,
        'tail_sum': res.tailSum,
        'reliable': res.reliable,
        'within_radius': res.withinRadius,
        'radius': series.radius_estimate,
        'recursion_recheck': series.recheck_recursion(),
    }
    if data.flow is not None:
        try:
            ref = data.flow(grid.coords, cfg.tEval)
            values['sup_error'] = _sup_error(res.field.values, ref, res.field.mask)
        except ValidationError:
            pass

    report = LabReport(
        'taylor',
        bool(res.reliable and res.withinRadius),
        values=values,
        params={'data': data.name, 'J': cfg.J, 't': cfg.tEval, 'space': op.kind, 'grid': grid.resolution},
        provenance=[data.provenance] if data.provenance else [],
    )
    return CommandResult(LabData([report]), {'coefficients.csv': (COEFF_HEADER, _coefficient_rows(series))})


def cmd_radius(cfg, outDir):
    grid = cfg.build_grid()
    op = cfg.build_operator(grid)
    data = parse_data_spec(cfg.data)
    _, series = _series_for(grid, op, data, cfg.J, cfg.precision, cfg.deltaMax)
    if series.radius is None:
        raise ValidationError(f'Radius estimate needs J >= {const.DEF_J_MIN_RADIUS}')
    return CommandResult(
        LabData([radius_report(series, data)]),
        {'radius.csv': (COEFF_HEADER, _coefficient_rows(series))},
    )


def cmd_backward(cfg, outDir):
    grid = cfg.build_grid()
    op = cfg.build_operator(grid)
    report, w = backward_report(op, cfg.data, cfg.tEval, cfg.J, cfg.precision, cfg.dt)
    header = [f'coord_{i}' for i in range(grid.dim)] + ['value', 'mask']
    rows = [[*coord, val, bool(flag)] for coord, val, flag in zip(grid.coords.tolist(), w.values, w.mask)]
    return CommandResult(LabData([report]), {'backward.csv': (header, rows)})


def _bounds_fit(grid, op, data, J, precision, dt, p=None):
    data = parse_data_spec(data)
    a, series = _series_for(grid, op, data, J, precision)
    model = grid.model
    p = p or model.minimizer()
    envelope = growth_classify(_envelope_trajectory(grid, op, data, a, dt), p)
    return series, envelope, verify_coefficient_bound(series, model, p, envelope)


def cmd_bounds_fit(cfg, outDir):
    grid = cfg.build_grid()
    op = cfg.build_operator(grid)
    series, envelope, report = _bounds_fit(grid, op, cfg.data, cfg.J, cfg.precision, cfg.dt)
    p = grid.model.minimizer()

    shorter = max(const.DEF_J_MIN_RADIUS, (2 * cfg.J) // 3)
    if shorter < series.J:
        early = verify_coefficient_bound(_truncated(series, shorter), grid.model, p, envelope)
        report.values['A3_shorter_J'] = {'J': shorter, 'A3': early.A3}
        report.values['A3_relative_change'] = abs(report.A3 / early.A3 - 1.0)
    report.provenance = [cfg.data]

    rows = [[int(j), val] for j, val in sorted((int(k), v) for k, v in report.values['A3_per_j'].items())]
    return CommandResult(LabData([report]), {'bounds.csv': (['j', 'A3_j'], rows)})


def cmd_criterion(cfg, outDir):
    grid = cfg.build_grid()
    op = cfg.build_operator(grid)
    _, series = _series_for(grid, op, cfg.data, cfg.J, cfg.precision)
    model = grid.model
    report = criterion_check(
        series, model, model.minimizer(), cfg.a4Max, cfg.a4Steps, cfg.growthLimit
    )
    rows = [[int(j), val] for j, val in sorted((int(k), v) for k, v in report.values.get('A3_per_j', {}).items())]
    return CommandResult(LabData([report]), {'criterion.csv': (['j', 'A3_j'], rows)})


def _tychonov_reports(K):
    demo = demonstrate_sharpness(K=K)
    centreOk = demo['v_0_half_error'] <= TYCHONOV_TOL
    demo.passed = bool(demo.passed and centreOk)
    residual = tychonov_pde_residual(K=K)
    pde = LabReport(
        'tychonov-pde',
        residual < TYCHONOV_RESIDUAL,
        values={'max_residual': residual, 'bound': TYCHONOV_RESIDUAL},
        params={'L': 2.0, 't_range': [0.3, 1.0], 'h': 0.01, 'dt': 0.01, 'K': K},
    )
    return [demo, pde]


def cmd_tychonov_demo(cfg, outDir):
    xs = np.arange(-6.0, 6.0 + 1e-9, 0.25)
    rows = np.column_stack(
        [xs, tychonov_profile(xs, 0.5, cfg.K), tychonov_profile(xs, 1.0, cfg.K)]
    )
    return CommandResult(
        LabData(_tychonov_reports(cfg.K)),
        {'tychonov_profile.csv': (['x', 'v_t0.5', 'v_t1'], rows.tolist())},
    )


def cmd_ineq(cfg, outDir, kind):
    model = cfg.build_model()
    grid = cfg.build_grid(model)
    op = cfg.build_operator(grid)
    p = model.minimizer()

    if kind == 'sobolev':
        rng = np.random.default_rng(cfg.seed)
        bumps = random_bumps(grid, p, cfg.radius, rng, SOBOLEV_BUMPS)
        report = sobolev_check(model, grid, bumps, p, cfg.radius, op)
        scaled = sobolev_check(model, grid, [b.scaled(SCALE_FACTOR) for b in bumps], p, cfg.radius, op)
        report.values['scale_invariance_error'] = max(
            abs(x - y) / max(abs(x), 1e-300)
            for x, y in zip(report.values['ratios'], scaled.values['ratios'])
        )
        rows = [[i, ratio] for i, ratio in enumerate(report.values['ratios'])]
        return CommandResult(LabData([report]), {'sobolev.csv': (['bump', 'ratio'], rows)})

    cyl = ParabolicCylinder(p, 0.0, cfg.radius, cfg.cutoff)

    if kind == 'meanvalue':
        v = _trajectory(grid, op, cfg.data, cyl.r**2, cfg.dt).squared()
        report = mean_value_check(v, cyl, cfg.exponent, model, op)
        rows = [[key, val] for key, val in sorted(report.values.items())]
        return CommandResult(LabData([report]), {'meanvalue.csv': (['quantity', 'value'], rows)})

    if kind == 'moser':
        v = _trajectory(grid, op, cfg.data, cyl.r**2, cfg.dt).squared()
        chain = MoserChainConfig(model.n, cfg.cutoff, cfg.levels, cfg.exponent)
        report = moser_chain_check(v, cyl, chain, op)
        rows = [
            [step['level'], step['lhs'], step['rhs_core'], step['E'], step['E_over_first']]
            for step in report.values['steps']
        ]
        return CommandResult(
            LabData([report]),
            {'moser.csv': (['level', 'lhs', 'rhs_core', 'E', 'E_over_first'], rows)},
        )

    if kind == 'caccioppoli':
        u = _trajectory(grid, op, cfg.data, cyl.r**2, cfg.dt)
        report = caccioppoli_check(u, cyl, cfg.kLocal, op)
        rows = [['lhs', report.lhs], ['rhs_core', report.rhsCore], ['constant', report.fittedConstant]]
        return CommandResult(LabData([report]), {'caccioppoli.csv': (['quantity', 'value'], rows)})

    if kind == 'localized':
        u = _trajectory(grid, op, cfg.data, 1.0, cfg.dt)
        reports = [localized_estimate_check(u, model, p, k) for k in (1, 4, 16)]
        sweep = localized_sweep(u, model, p)
        rows = [[int(rpt.params['k']), rpt.fittedConstant] for rpt in reports]
        return CommandResult(LabData(reports + [sweep]), {'localized.csv': (['k', 'C2'], rows)})

    raise ValidationError(f'Unknown inequality: {kind!r}')


# =========================================================
#          A C C E P T A N C E   S U I T E
# =========================================================
def _acc_identities(cfg):
    rng = np.random.default_rng(cfg.seed)
    reports = []
    for spec in ('gaussian:3', 'cylinder:2x3'):
        model = parse_model_spec(spec, cfg.quadNodes)
        pts = random_points(model, rng, 1000)
        reports += [
            check_soliton_identities(model, pts),
            potential_bounds_check(model, model.minimizer(), pts),
        ]
    return reports


def _acc_entropy(cfg):
    reports = []
    for spec in ('gaussian:1', 'gaussian:2', 'gaussian:3', 'cylinder:2x3'):
        model = parse_model_spec(spec, cfg.quadNodes)
        tol = 1e-8 if model.kind == const.MODEL_GAUSSIAN else const.DEF_ENTROPY_TOL
        reports.append(check_entropy(model, tol))
    return reports


def _acc_backward(cfg):
    grid = build_grid(parse_model_spec('gaussian:1'), PeriodicLine(2 * math.pi, 2 * math.pi / 256))
    op = laplace_beltrami(grid, const.SPACE_SPECTRAL)
    report, _ = backward_report(op, 'sin', 0.5, 20, cfg.precision, const.DEF_DT)
    return [report]


def _acc_radius(cfg):
    reports = []
    J, h, window = 16, 0.05, 3.0
    for tau in (0.5, 1.0):
        grid = build_grid(parse_model_spec('gaussian:1'), TruncatedLine(window + J * h, h))
        op = laplace_beltrami(grid)
        data = parse_data_spec(f'growth:{tau:g}')
        _, series = _series_for(grid, op, data, J, cfg.precision)
        reports.append(radius_report(series, data))
    return reports


def _acc_reconstruction(cfg):
    grid = build_grid(parse_model_spec('gaussian:1'), TruncatedLine(10.0, 0.05))
    op = laplace_beltrami(grid)
    data = parse_data_spec('kernel:3')
    start = sample_field(grid, data.at_time(-2.0))
    traj = solve_forward(op, start, 2.0, const.SCHEME_CN, 1e-3, tStart=-2.0, saveEvery=50)
    _, series = _series_for(grid, op, data, 20, cfg.precision)
    res = reconstruct_and_compare(traj, series, -0.5)
    return [
        LabReport(
            'reconstruction',
            res.supError < 5e-3,
            values={
                'sup_error': res.supError,
                'truncation_bound': res.truncationBound,
                'reliable': res.reliable,
            },
            params={'data': data.name, 't': -0.5, 'J': 20, 'grid': grid.resolution, 'dt': 1e-3},
            provenance=[data.provenance],
        )
    ]


def _acc_bounds(cfg):
    grid = build_grid(parse_model_spec('gaussian:1'), PeriodicLine(2 * math.pi, 2 * math.pi / 64))
    op = laplace_beltrami(grid, const.SPACE_SPECTRAL)
    p = grid.model.minimizer()
    series, envelope, fit12 = _bounds_fit(grid, op, 'sin', 12, cfg.precision, const.DEF_DT)
    fit8 = verify_coefficient_bound(_truncated(series, 8), grid.model, p, envelope)
    crit = criterion_check(series, grid.model, p)
    change = abs(fit12.A3 / fit8.A3 - 1.0)
    summary = LabReport(
        'bounds-sin',
        bool(fit12.feasible and crit.feasible and fit12.A3 <= 2.0 and crit.A4 == 0.0
             and change <= BOUNDS_STABILITY),
        values={
            'A3_J8': fit8.A3,
            'A3_J12': fit12.A3,
            'A3_relative_change': change,
            'criterion_A3': crit.A3,
            'criterion_A4': crit.A4,
            'envelope': envelope.as_dict(),
        },
        params={'data': 'sin', 'grid': grid.resolution},
    )

    # e^{x^2/4} data: recorded only
    h, window = 0.05, 3.0
    gGrid = build_grid(parse_model_spec('gaussian:1'), TruncatedLine(window + 12 * h, h))
    gOp = laplace_beltrami(gGrid)
    gSeries, gEnv, gFit12 = _bounds_fit(gGrid, gOp, 'growth:1', 12, cfg.precision, const.DEF_DT)
    gFit8 = verify_coefficient_bound(_truncated(gSeries, 8), gGrid.model, p, gEnv)
    growth = LabReport(
        'bounds-growth',
        None,
        values={
            'feasible': gFit12.feasible,
            'A3_J8': gFit8.A3,
            'A3_J12': gFit12.A3,
            'A3_relative_change': abs(gFit12.A3 / gFit8.A3 - 1.0),
            'envelope': gEnv.as_dict(),
        },
        params={'data': 'growth:1', 'grid': gGrid.resolution},
    )
    return [summary, growth]


def _acc_criterion(cfg):
    J, h, window = 16, 0.05, 6.0
    grid = build_grid(parse_model_spec('gaussian:1'), TruncatedLine(window + J * h, h))
    op = laplace_beltrami(grid)
    p = grid.model.minimizer()
    expected = {'sin': True, 'x2': True, 'cauchy': False, 'tychonov:0.5': None}

    reports = []
    for spec, feasible in expected.items():
        _, series = _series_for(grid, op, spec, J, cfg.precision)
        crit = criterion_check(series, grid.model, p)
        reports.append(
            LabReport(
                f'criterion-{spec}',
                None if feasible is None else crit.feasible == feasible,
                values={
                    'feasible': crit.feasible,
                    'expected_feasible': feasible,
                    'A3': crit.A3,
                    'A4': crit.A4,
                    'growth_factor_per_4': crit.values.get('growth_factor_per_4'),
                },
                params={'data': spec, 'J': J, 'grid': grid.resolution},
            )
        )
    return reports


def _acc_tychonov(cfg):
    return _tychonov_reports(cfg.K)


def _ensemble(grid, op, length, dt):
    return {
        spec: _trajectory(grid, op, spec, length, dt).squared()
        for spec in ('const', 'sin', 'kernel:3')
    }


def _acc_meanvalue(cfg):
    model = parse_model_spec('gaussian:1')
    p = model.minimizer()
    rs, deltas, ms = (0.5, 1.0, 1.5), (0.25, 0.5, 0.75), (1.0, 2.0)
    dt = 1.0 / 64

    maxRho, rhoOracle, finite = {}, None, True
    for h in (0.02, 0.01):
        grid = build_grid(model, TruncatedLine(4.0, h))
        op = laplace_beltrami(grid)
        best = 0.0
        for spec, v in _ensemble(grid, op, max(rs) ** 2, dt).items():
            for r in rs:
                for delta in deltas:
                    for m in ms:
                        rpt = mean_value_check(v, ParabolicCylinder(p, 0.0, r, delta), m, model, op)
                        finite = finite and rpt.passed
                        best = max(best, rpt.fittedConstant)
                        if spec == 'const' and (r, delta, m) == (1.0, 0.5, 1.0) and h == 0.02:
                            rhoOracle = rpt.fittedConstant
        maxRho[h] = best

    change = abs(maxRho[0.01] / maxRho[0.02] - 1.0)
    ensemble = LabReport(
        'meanvalue-ensemble',
        bool(finite and change <= RESOLUTION_RTOL and abs(rhoOracle - RHO_ORACLE) <= RHO_TOL),
        values={
            'max_rho': {f'{h:g}': val for h, val in maxRho.items()},
            'resolution_change': change,
            'rho_const': rhoOracle,
            'rho_const_oracle': RHO_ORACLE,
        },
        params={'r': list(rs), 'delta': list(deltas), 'm': list(ms), 'data': ['const', 'sin', 'kernel:3']},
        provenance=['rho(v = 1, r = 1, delta = 1/2, m = 1) = (1/2)^3 / 2'],
    )

    try:
        ParabolicCylinder(p, 0.0, 2.5, 0.5)
        scopeCode = const.EXIT_OK
    except ScopeError as e:
        scopeCode = exit_code_for(e)
    scope = LabReport(
        'meanvalue-scope',
        scopeCode == const.EXIT_USAGE,
        values={'exit_code': scopeCode},
        params={'r': 2.5},
    )
    return [ensemble, scope]


def _acc_moser(cfg):
    model = parse_model_spec('gaussian:1')
    p = model.minimizer()
    grid = build_grid(model, TruncatedLine(4.0, 0.02))
    op = laplace_beltrami(grid)
    cyl = ParabolicCylinder(p, 0.0, 1.0, 0.5)

    reports = []
    for spec, v in _ensemble(grid, op, cyl.r**2, 1.0 / 64).items():
        chain = MoserChainConfig(model.n, cyl.cutoff, 4, 1.0)
        rpt = moser_chain_check(v, cyl, chain, op)
        rpt.name = f'moser-{spec}'
        reports.append(rpt)
    return reports


def _acc_sobolev(cfg):
    model = parse_model_spec('cylinder:2x3', cfg.quadNodes)
    p = Point(0.5 * math.pi, math.pi, 0.0)
    r = 1.5
    coarse = build_grid(model, CylinderProduct(32, 64, 2.0, 0.05))
    fine = build_grid(model, CylinderProduct(64, 128, 2.0, 0.025))
    rng = np.random.default_rng(cfg.seed)
    bumps = random_bumps(coarse, p, r, rng, SOBOLEV_BUMPS)

    base = sobolev_check(model, coarse, bumps, p, r)
    scaled = sobolev_check(model, coarse, [b.scaled(SCALE_FACTOR) for b in bumps], p, r)
    refined = sobolev_check(model, fine, bumps, p, r)
    scaleErr = max(
        abs(x - y) / max(abs(x), 1e-300)
        for x, y in zip(base.values['ratios'], scaled.values['ratios'])
    )
    change = abs(refined.fittedConstant / base.fittedConstant - 1.0)
    return [
        LabReport(
            'sobolev-cylinder',
            bool(base.passed and change <= RESOLUTION_RTOL and scaleErr <= 1e-12),
            values={
                'C(n)': base.fittedConstant,
                'C(n)_refined': refined.fittedConstant,
                'resolution_change': change,
                'scale_invariance_error': scaleErr,
            },
            params={'model': model.spec, 'r': r, 'bumps': SOBOLEV_BUMPS, 'grid': coarse.resolution},
        )
    ]


def _acc_volume(cfg):
    model = parse_model_spec('gaussian:2', cfg.quadNodes)
    rng = np.random.default_rng(cfg.seed)
    pts = [model.minimizer()] + random_points(model, rng, 2 * cfg.samples)
    radii = (0.5, 1.0, 2.0)
    fit = fit_volume_constant([model], [pts], radii)
    fitHalf = fit['C(n)_half_sample']
    fit.passed = bool(
        fit['C(n)'] >= math.pi * (1 - 1e-12) and abs(fit['C(n)'] / fitHalf - 1.0) <= RESOLUTION_RTOL
    )
    return [fit, small_ball_check(parse_model_spec('cylinder:2x3', cfg.quadNodes))]


ACCEPTANCE = {
    'identities': _acc_identities,
    'entropy': _acc_entropy,
    'backward': _acc_backward,
    'radius': _acc_radius,
    'reconstruction': _acc_reconstruction,
    'bounds': _acc_bounds,
    'criterion': _acc_criterion,
    'tychonov': _acc_tychonov,
    'meanvalue': _acc_meanvalue,
    'moser': _acc_moser,
    'sobolev': _acc_sobolev,
    'volume': _acc_volume,
}


def cmd_reproduce_all(cfg, outDir, items=None):
    names = list(ACCEPTANCE) if not items else items
    unknown = [name for name in names if name not in ACCEPTANCE]
    if unknown:
        raise ValidationError(f'Unknown acceptance items: {unknown}')

    data = LabData()
    rows = []
    for name in names:
        for rpt in ACCEPTANCE[name](cfg):
            data.add(rpt)
            rows.append([name, rpt.name, 'none' if rpt.passed is None else rpt.passed])
    return CommandResult(data, {'acceptance.csv': (['item', 'report', 'pass'], rows)})


# =========================================================
#                 A P P   R U N T I M E
# =========================================================
class AppRT(Runtime):
    """Application runtime object.

    Holds settings, logger and console so that the subcommands can share
    them without a series of globals.
    """

    def __init__(self, appName, appVersion, appNameShort=None, appLog=None, appSettings=None):
        super().__init__(
            appName,
            appVersion,
            appNameShort,
            appLog,
            appSettings,
            Path(__file__).parent,
        )

    def _init_log_settings(self, cliArgs):
        """Helper for setting logger settings"""
        if cliArgs.debug:
            self.logLvl = LOG_DEBUG
            self.debugMode = True
        else:
            self.logLvl = self.config.get(KWD_LOG_LEVEL, LOG_WARNING)
            self.debugMode = self.logLvl == LOG_DEBUG

        self.logger.set_log_level(self.logLvl)

        if cliArgs.log is not None:
            self.logger.set_log_file(self.logLvl, cliArgs.log)

    def init_runtime(self, cliArgs):
        """Load settings, apply CLI overrides, and set up logger and console.

        Returns:
            validated 'ExperimentConfig'
        """
        self.config = load_settings(self.settings_path(cliArgs.config))
        self.logger = Logger(self.config, LOGFILE=self.appLog)
        self._init_log_settings(cliArgs)
        self.console = Console()

        settings = dict(self.config)
        for _, kwd, _, _ in CLI_OVERRIDES:
            val = getattr(cliArgs, kwd, None)
            if val is not None:
                settings[kwd] = val
        return ExperimentConfig.from_settings(settings).validate()

    def show_summary(self, command, cfg, data, exitCode):
        """Display summary info before we exit the application."""
        console = self.console or Console()
        console.rule(f'{self.appName} (v{self.appVersion}) - {command}', style='grey50')
        for rpt in data or []:
            tag = {True: '[green]PASS[/]', False: '[red]FAIL[/]', None: '[yellow]INFO[/]'}[rpt.passed]
            console.print(f'{tag}  {rpt.name}')
        console.print(f'Output:    {cfg.outDir}')
        console.print(f'Exit code: {exitCode}')

        if self.debugMode:
            console.rule('CONFIG', style='grey50')
            pprint(cfg.as_dict(), expand_all=True)
        console.rule(style='grey50')


appRT = AppRT(APP_NAME, APP_VERSION, APP_NAME_SHORT, APP_LOG, APP_SETTINGS)


# =========================================================
#      M A I N   F U N C T I O N    /   A C T I O N S
# =========================================================
def build_cli_parser(appName, appVersion, setDefaults=True):
    """Initialize CLI parser with subcommands and config overrides.

    Returns:
        ArgParse parser instance
    """
    parser = init_cli_parser(appName, appVersion, setDefaults)

    overrides = argparse.ArgumentParser(add_help=False)
    for flag, kwd, kind, helpText in CLI_OVERRIDES:
        overrides.add_argument(flag, dest=kwd, type=kind, default=None, help=helpText)

    subs = parser.add_subparsers(dest='cmd', metavar='<subcommand>')
    for name in COMMANDS:
        sub = subs.add_parser(name, parents=[overrides], help=f'run {name}')
        if name == 'ineq':
            sub.add_argument('kind', choices=INEQ_KINDS, help='inequality to check')
        if name == 'reproduce-all':
            sub.add_argument(
                '--items',
                type=lambda text: [item.strip() for item in text.split(',') if item.strip()],
                default=None,
                help=f'comma-separated subset of {",".join(ACCEPTANCE)}',
            )
    return parser


def run(command, cfg, kind=None, items=None):
    """Run one subcommand and write its outputs.

    Returns:
        ('int' exit code, 'LabData' or None)
    """
    handlers = {
        'model-check': cmd_model_check,
        'entropy': cmd_entropy,
        'volume': cmd_volume,
        'forward': cmd_forward,
        'taylor': cmd_taylor,
        'radius': cmd_radius,
        'backward': cmd_backward,
        'bounds-fit': cmd_bounds_fit,
        'criterion': cmd_criterion,
        'tychonov-demo': cmd_tychonov_demo,
    }
    outDir = Path(cfg.outDir)
    if command == 'ineq':
        result = cmd_ineq(cfg, outDir, kind)
    elif command == 'reproduce-all':
        result = cmd_reproduce_all(cfg, outDir, items)
    elif command in handlers:
        result = handlers[command](cfg, outDir)
    else:
        raise ValidationError(f'Unknown subcommand: {command!r}')

    exitCode = const.EXIT_OK if result.data.passed else const.EXIT_FAILED
    write_outputs(outDir, command, cfg, result, exitCode)
    return exitCode, result.data


def main(cliArgs=None):
    """Main function.

    Parses the CLI, loads settings, runs the subcommand and exits with its
    exit code.

    NOTE: Application exits with 0 if no arguments are given, or with
          '-V' / '--version'.
    """
    apply_thread_cap()
    cli = build_cli_parser(APP_NAME, APP_VERSION, True)
    cliArgs, _ = cli.parse_known_args(cliArgs)

    if cliArgs.version:
        print(f'{APP_NAME} (v{APP_VERSION})')
        sys.exit(const.EXIT_OK)

    if not cliArgs.cmd:
        cli.print_help(sys.stdout)
        sys.exit(const.EXIT_OK)

    cfg, data = None, None
    try:
        cfg = appRT.init_runtime(cliArgs)
        appRT.logger.log_info(f'-- START {cliArgs.cmd} --')
        exitCode, data = run(
            cliArgs.cmd,
            cfg,
            kind=getattr(cliArgs, 'kind', None),
            items=getattr(cliArgs, 'items', None),
        )
        appRT.logger.log_info(f'-- END {cliArgs.cmd} --')

    except LabError as e:
        exitCode = exit_code_for(e)
        if appRT.logger:
            appRT.logger.log_error(str(e))
        else:
            print(f'{APP_NAME}: {e}', file=sys.stderr)

    except (ArithmeticError, FloatingPointError) as e:
        exitCode = const.EXIT_NUMERIC
        if appRT.logger:
            appRT.logger.log_exception(f'Numerical failure: {e}')

    if cfg is not None:
        appRT.show_summary(cliArgs.cmd, cfg, data, exitCode)
    sys.exit(exitCode)


# =========================================================
#            G L O B A L   C A T C H - A L L
# =========================================================
if __name__ == '__main__':
    main()  # pragma: no cover
