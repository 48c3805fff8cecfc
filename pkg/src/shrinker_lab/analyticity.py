"""Quantitative checks of time analyticity.

This module classifies the spatial growth of heat solutions, fits the
constants in the coefficient bound

    |a_j(x)| <= A1 e^{-mu/2} e^{f(x)/2} (f(x)+1)^{n/4} A3^{j+1} j^j e^{2 A2 d^2(x,p)}

checks the backward solvability criterion

    |Delta^j a(x)| <= e^{-mu/2} e^{f(x)/2} (f(x)+1)^{n/4} A3^{j+1} j^j e^{A4 d^2(x,p)}

and measures how well a truncated time series reproduces a trajectory.
All fits run in the log domain: for fixed A4 the smallest A3 has a closed
form, and A4 is swept over a coarse grid.

Dependencies:
 - numpy: vectorized log-domain fits
"""

import math

from collections import namedtuple

import numpy as np

from . import sl_constants as const
from .heat_engine import evaluate_series
from .lab_data import BoundFitReport
from .sl_common import DivergenceError, ValidationError

__all__ = [
    'GrowthEnvelope',
    'ReconstructionResult',
    'growth_classify',
    'verify_coefficient_bound',
    'criterion_check',
    'reconstruct_and_compare',
]


# fmt: off
# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
ENVELOPE_BINS = 2               # Distance bins for the upper-envelope slope
RECHECK_RTOL = 1e-12            # Relative slack when substituting fitted constants
# fmt: on

ReconstructionResult = namedtuple(
    'ReconstructionResult', 'errorField supError truncationBound reliable'
)


# =========================================================
#              H E L P E R   F U N C T I O N S
# =========================================================
def _log_weight(model, grid, mask):
    """log(e^{-mu/2} e^{f/2} (f+1)^{n/4}) on masked nodes."""
    f = model.potential(grid.coords[mask])
    return -0.5 * model.entropy_mu + 0.5 * f + 0.25 * model.n * np.log1p(f)


def _j_log_j(j):
    # 0^0 = 1
    return 0.0 if j == 0 else j * math.log(j)


def _log_abs(values):
    with np.errstate(divide='ignore'):
        return np.log(np.abs(values))


def _growth_slope(js, logA3):
    """Slope of log A3_j against j (None with fewer than two points)."""
    if len(js) < 2:
        return None
    return float(np.polyfit(np.asarray(js, dtype=float), np.asarray(logA3), 1)[0])


class GrowthEnvelope:
    """Quadratic exponential envelope |u(x,t)| <= A1 e^{A2 d^2(x,p)}.

    Attributes:
        A1:      'float' > 0
        A2:      'float' >= 0
        p:       'Point' base point
        trivial: 'bool' flag for u = 0
    """

    def __init__(self, A1, A2, p, trivial=False):
        self.A1 = float(A1)
        self.A2 = float(A2)
        self.p = p
        self.trivial = trivial

    def __repr__(self):
        return f'GrowthEnvelope(A1={self.A1:.6g}, A2={self.A2:.6g})'

    def bound(self, d2):
        return self.A1 * np.exp(self.A2 * np.asarray(d2))

    def dominates(self, traj):
        d2 = traj.grid.distance_from(self.p) ** 2
        limit = self.bound(d2) * (1.0 + RECHECK_RTOL)
        return all(np.all(np.abs(s.values[s.mask]) <= limit[s.mask]) for s in traj.snapshots)

    def as_dict(self):
        return {'A1': self.A1, 'A2': self.A2, 'p': self.p.as_list(), 'trivial': self.trivial}


# =========================================================
#                   O P E R A T I O N S
# =========================================================
def growth_classify(u, p):
    """Fit the minimal quadratic exponential envelope of a trajectory.

    A2 is the slope of the upper envelope of log|u| against d^2(x,p),
    taken between the maxima over the inner and the outer half of the
    sampled d^2 range (clipped at 0). A1 is then inflated so that the
    envelope dominates every sample.

    Returns:
        'GrowthEnvelope'
    """
    if len(u) == 0:
        raise ValidationError('Cannot classify an empty trajectory')

    d2 = u.grid.distance_from(p) ** 2
    mask = u.common_mask()
    vals = np.abs(u.as_array()[:, mask])
    d2 = d2[mask]
    peak = np.max(vals, axis=0) if vals.size else np.zeros(0)

    if not peak.size or np.max(peak) <= const.DEF_A_FLOOR:
        return GrowthEnvelope(const.DEF_A_FLOOR, 0.0, p, trivial=True)

    edges = np.linspace(np.min(d2), np.max(d2), ENVELOPE_BINS + 1)
    binIdx = np.clip(np.searchsorted(edges, d2, side='right') - 1, 0, ENVELOPE_BINS - 1)
    logPeak = _log_abs(peak)
    hull = []
    for b in range(ENVELOPE_BINS):
        sel = np.flatnonzero(binIdx == b)
        if len(sel):
            best = sel[np.argmax(logPeak[sel])]
            hull.append((d2[best], logPeak[best]))

    A2 = 0.0
    if len(hull) >= 2 and hull[-1][0] > hull[0][0]:
        A2 = max((hull[-1][1] - hull[0][1]) / (hull[-1][0] - hull[0][0]), 0.0)

    A1 = float(np.max(peak * np.exp(-A2 * d2)))
    return GrowthEnvelope(max(A1, const.DEF_A_FLOOR), A2, p)


def _a3_per_j(series, model, p, A4, jMin, extraLogWeight=0.0):
    """Smallest A3 per j (log) and the (x, lhs) of the binding node."""
    grid = series.grid
    mask = series.mask
    logW = _log_weight(model, grid, mask) + extraLogWeight
    d2 = (grid.distance_from(p) ** 2)[mask]
    vanish = series.vanishing()

    rows = {}
    for j in range(jMin, series.J + 1):
        if vanish[j]:
            rows[j] = (math.log(const.DEF_A_FLOOR), None)
            continue
        logA = _log_abs(series.coefficients[j].values[mask])
        need = (logA - logW - A4 * d2 - _j_log_j(j)) / (j + 1)
        idx = int(np.argmax(need))
        rows[j] = (float(need[idx]), idx)
    return rows, logW, d2


def _residual_table(series, model, p, logA3, A4, logW, d2, js):
    """Per-j binding node with lhs and rhs of the fitted bound."""
    grid = series.grid
    coords = grid.coords[series.mask]
    table = []
    for j in js:
        vals = np.abs(series.coefficients[j].values[series.mask])
        logRhs = logW + A4 * d2 + (j + 1) * logA3 + _j_log_j(j)
        idx = int(np.argmax(_log_abs(vals) - logRhs))
        table.append(
            {
                'j': int(j),
                'x': coords[idx].tolist(),
                'lhs': float(vals[idx]),
                'rhs': float(math.exp(logRhs[idx])),
            }
        )
    return table


def _holds(series, logA3, A4, logW, d2, js):
    for j in js:
        vals = np.abs(series.coefficients[j].values[series.mask])
        rhs = np.exp(logW + A4 * d2 + (j + 1) * logA3 + _j_log_j(j))
        if np.any(vals > rhs * (1.0 + RECHECK_RTOL)):
            return False
    return True


def verify_coefficient_bound(series, model, p, envelope):
    """Fit the smallest A3 for the coefficient bound at all sampled (j, x).

    The fit runs over j >= 1; j = 0 (with 0^0 = 1) is checked afterwards and
    A3 is raised if needed.

    Returns:
        'BoundFitReport' with A1, A2 from the envelope and fitted A3

    Raises:
        DivergenceError: diverged series
        ValidationError: J < J_MIN_RADIUS
    """
    if series.diverged:
        raise DivergenceError('Cannot fit bounds on a diverged series', series.firstFailure)
    if series.J < const.DEF_J_MIN_RADIUS:
        raise ValidationError(f'Bound fit needs J >= {const.DEF_J_MIN_RADIUS}')

    A4 = 2.0 * envelope.A2
    extra = math.log(envelope.A1)
    rows, logW, d2 = _a3_per_j(series, model, p, A4, 0, extra)

    logA3 = max(need for j, (need, _) in rows.items() if j >= 1)
    j0Adjusted = rows[0][0] > logA3
    logA3 = max(logA3, rows[0][0], math.log(const.DEF_A_FLOOR))

    js = list(range(series.J + 1))
    A3 = math.exp(logA3)
    feasible = math.isfinite(A3)
    return BoundFitReport(
        'bounds-fit',
        A3,
        feasible and _holds(series, logA3, A4, logW, d2, js),
        mu=model.entropy_mu,
        A1=envelope.A1,
        A2=envelope.A2,
        residuals=_residual_table(series, model, p, logA3, A4, logW, d2, js),
        values={
            'A3_per_j': {str(j): math.exp(need) for j, (need, _) in rows.items()},
            'j0_adjusted': j0Adjusted,
            'J': series.J,
        },
        params={'model': model.spec, 'p': p.as_list(), 'grid': series.grid.resolution},
    )


def criterion_check(series, model, p, a4Max=const.DEF_A4_MAX, a4Steps=const.DEF_A4_STEPS,
                    growthLimit=const.DEF_GROWTH_LIMIT):
    """Joint (A3, A4) fit of the backward solvability criterion.

    For each A4 on a grid over [0, a4Max] (ascending) the smallest A3_j per j
    (j >= 2) is computed in closed form. The first A4 whose A3_j sequence
    passes the growth test is reported. The growth test fits the slope of
    log A3_j against j over the top half of j and fails when
    exp(4 * slope) > 1 + growthLimit. It runs on the data divided by
    sup|a_0|, so feasibility and A4 do not change under a -> c a.
    j = 0, 1 are checked after fitting.

    Returns:
        'BoundFitReport' with A3, A4, feasible flag and growth diagnostics
    """
    if series.diverged:
        return BoundFitReport(
            'criterion',
            math.inf,
            False,
            mu=model.entropy_mu,
            values={'diverged_at': series.firstFailure},
            params={'model': model.spec, 'p': p.as_list()},
        )
    if series.J < const.DEF_J_MIN_RADIUS:
        raise ValidationError(f'Criterion check needs J >= {const.DEF_J_MIN_RADIUS}')

    jMin = 2
    topStart = max(series.J // 2, jMin)
    vanish = series.vanishing()
    base = series.sup_norms()[0]
    logScale = math.log(base) if base > const.DEF_ZERO_FLOOR else 0.0
    chosen = None
    lastRows, lastSlope = None, None
    for A4 in np.linspace(0.0, a4Max, int(a4Steps)):
        rows, logW, d2 = _a3_per_j(series, model, p, float(A4), 0)
        js = [j for j in range(topStart, series.J + 1) if not vanish[j]]
        slope = _growth_slope(js, [rows[j][0] - logScale / (j + 1) for j in js])
        lastRows, lastSlope = rows, slope
        if slope is None or math.exp(4.0 * slope) <= 1.0 + growthLimit:
            chosen = (float(A4), rows, logW, d2, slope)
            break

    feasible = chosen is not None
    if feasible:
        A4, rows, logW, d2, slope = chosen
    else:
        A4, rows, slope = float(a4Max), lastRows, lastSlope
        _, logW, d2 = _a3_per_j(series, model, p, A4, 0)

    logA3 = max(rows[j][0] for j in range(jMin, series.J + 1))
    postHoc = {j: rows[j][0] > logA3 for j in (0, 1)}
    logA3 = max(logA3, rows[0][0], rows[1][0], math.log(const.DEF_A_FLOOR))
    A3 = math.exp(logA3)

    js = list(range(series.J + 1))
    if feasible:
        feasible = _holds(series, logA3, A4, logW, d2, js)

    return BoundFitReport(
        'criterion',
        A3,
        feasible,
        mu=model.entropy_mu,
        A4=A4,
        residuals=_residual_table(series, model, p, logA3, A4, logW, d2, js),
        values={
            'A3_per_j': {str(j): math.exp(rows[j][0]) for j in range(series.J + 1)},
            'growth_slope': slope,
            'data_scale': base,
            'growth_factor_per_4': None if slope is None else math.exp(4.0 * slope),
            'post_hoc_raised': {str(j): bool(flag) for j, flag in postHoc.items()},
            'J': series.J,
        },
        params={
            'model': model.spec,
            'p': p.as_list(),
            'grid': series.grid.resolution,
            'a4_max': a4Max,
            'a4_steps': int(a4Steps),
            'growth_limit': growthLimit,
        },
    )


def reconstruct_and_compare(u, series, t):
    """Compare the truncated series at time t with the trajectory snapshot.

    Returns:
        'ReconstructionResult' (errorField, supError, truncationBound, reliable)

    Raises:
        ValidationError: grid mismatch or t outside the trajectory
    """
    if u.grid is not series.grid and not (
        u.grid.size == series.grid.size and np.array_equal(u.grid.coords, series.grid.coords)
    ):
        raise ValidationError('Trajectory and series live on different grids')

    snap = u.snapshot_at(t)
    res = evaluate_series(series, t)
    mask = series.mask & snap.mask
    err = np.abs(res.field.values - snap.values)
    errField = res.field.with_values(err, label=f'error@{t:g}', mask=mask)
    sup = float(np.max(err[mask])) if np.any(mask) else 0.0
    return ReconstructionResult(errField, sup, res.truncationBound, res.reliable)
