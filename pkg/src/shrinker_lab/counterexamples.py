"""Tychonov's non-analytic heat solution.

The solution is built from the gauge g(t) = exp(-1/t^2) (zero for t <= 0):

    v(x, t) = sum_k g^(k)(t) x^(2k) / (2k)!

with g^(k)(t) = Q_k(1/t) exp(-1/t^2) and integer polynomials

    Q_0 = 1,  Q_{k+1}(s) = 2 s^3 Q_k(s) - s^2 Q_k'(s)

The table of Q_k is kept exactly (sympy integer polynomials). Evaluation
happens in extended precision (mpmath) with enough digits to absorb the
cancellation between the large integer coefficients.

Dependencies:
 - sympy: exact polynomial recurrence and symbolic checks
 - mpmath: extended precision evaluation
 - numpy: vectorized profiles and growth fits
"""

import math

from collections import namedtuple
from functools import lru_cache

import mpmath
import numpy as np
import sympy

from . import sl_constants as const
from .lab_data import LabReport
from .lab_logger import get_logger
from .sl_common import DivergenceError, ValidationError

__all__ = [
    'TychonovPolynomialTable',
    'TychonovEval',
    'tychonov_derivative_table',
    'tychonov_value',
    'tychonov_eval',
    'tychonov_profile',
    'tychonov_pde_residual',
    'demonstrate_sharpness',
]


# fmt: off
# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
SHARP_T = 0.5                   # Time slice where v(0, t) = exp(-4)
SHARP_ORDER = 20                # Taylor order checked at the zero past
NEAR_ZERO_T = 1e-2              # Time where all h^(k) must be negligible
NEAR_ZERO_BOUND = 1e-100        # Bound for |h^(k)(NEAR_ZERO_T)|
GROWTH_T = 1.0                  # Time slice for growth fits
GROWTH_WINDOW = (5.0, 12.0)     # Sampled ray for growth fits
GROWTH_SAMPLES = 15             # Number of samples on the ray
GROWTH_EPS = 0.5                # Exponent excess in the (2+eps)-envelope
GROWTH_CS = (0.25, 0.5, 1.0, 2.0, 4.0)  # Tested quadratic rates
# fmt: on

TychonovEval = namedtuple('TychonovEval', 'value tail reliable K')

_S = sympy.Symbol('s')


# =========================================================
#              H E L P E R   F U N C T I O N S
# =========================================================
def _tail_estimate(absTerms):
    """Geometric tail estimate from the last terms of a series.

    Returns:
        (tail, reliable) where 'tail' bounds the omitted terms when the
        terms decay by at least TAIL_RATIO per index
    """
    absTerms = np.asarray(absTerms, dtype=float)
    if len(absTerms) < 2:
        return 0.0, True

    last = float(np.sum(absTerms[-2:]))
    prev = float(np.sum(absTerms[-4:-2])) if len(absTerms) >= 4 else float(absTerms[0])
    if last == 0.0:
        return 0.0, True
    if prev == 0.0 or not math.isfinite(last):
        return math.inf, False

    ratio = math.sqrt(last / prev)
    if ratio >= const.DEF_TAIL_RATIO:
        return math.inf, False
    return last * ratio / (1.0 - ratio), True


@lru_cache(maxsize=64)
def _series_coeffs(t, K):
    """Coefficients c_k = g^(k)(t) / (2k)! as 'mpmath.mpf' (t > 0)."""
    table = tychonov_derivative_table(K)
    with mpmath.workdps(table.working_dps):
        derivs = table.derivatives(t)
        return tuple(d / mpmath.factorial(2 * k) for k, d in enumerate(derivs))


# =========================================================
#                     M A I N   C L A S S
# =========================================================
class TychonovPolynomialTable:
    """Exact table of Q_0..Q_K with g^(k)(t) = Q_k(1/t) exp(-1/t^2).

    Attributes:
        K:     'int' highest order
        polys: 'list' of 'sympy.Poly' in s with integer coefficients

    Methods & Properties:
        coefficient_digits: decimal digits of the largest coefficient
        working_dps: precision used for evaluation
        derivative: g^(k)(t) in extended precision
        derivatives: g^(0..K)(t) in extended precision
        check_recurrence: symbolic check of the recurrence for k <= kMax
        check_finite_differences: numeric check at sample times
    """

    def __init__(self, K):
        self.K = int(K)
        q = sympy.Poly(1, _S, domain='ZZ')
        polys = [q]
        lift = sympy.Poly(2 * _S**3, _S, domain='ZZ')
        shift = sympy.Poly(_S**2, _S, domain='ZZ')
        for _ in range(self.K):
            q = lift * q - shift * q.diff(_S)
            polys.append(q)
        self.polys = polys
        self._coeffs = [[int(c) for c in p.all_coeffs()] for p in polys]

    def __len__(self):
        return len(self.polys)

    def __getitem__(self, k):
        return self.polys[k]

    @property
    def coefficient_digits(self):
        biggest = max(abs(c) for coeffs in self._coeffs for c in coeffs)
        return len(str(biggest))

    @property
    def working_dps(self):
        return const.DEF_TYCHONOV_DPS + self.coefficient_digits

    def as_expr(self, k):
        return self.polys[k].as_expr()

    def derivative(self, k, t):
        """g^(k)(t) with g = exp(-1/t^2); exactly 0 for t <= 0."""
        if t <= 0:
            return mpmath.mpf(0)
        with mpmath.workdps(self.working_dps):
            s = 1 / mpmath.mpf(t)
            return mpmath.polyval(self._coeffs[k], s) * mpmath.exp(-s * s)

    def derivatives(self, t):
        if t <= 0:
            return [mpmath.mpf(0)] * len(self.polys)
        with mpmath.workdps(self.working_dps):
            s = 1 / mpmath.mpf(t)
            gauge = mpmath.exp(-s * s)
            return [mpmath.polyval(coeffs, s) * gauge for coeffs in self._coeffs]

    def check_recurrence(self, kMax=10):
        """Symbolically differentiate Q_k(1/t) exp(-1/t^2) and compare with Q_{k+1}."""
        t = sympy.Symbol('t', positive=True)
        gauge = sympy.exp(-1 / t**2)
        for k in range(min(int(kMax), self.K)):
            lhs = sympy.diff(self.as_expr(k).subs(_S, 1 / t) * gauge, t) / gauge
            rhs = self.as_expr(k + 1).subs(_S, 1 / t)
            if sympy.simplify(lhs - rhs) != 0:
                return False
        return True

    def check_finite_differences(self, times, step=1e-5, kMax=None):
        """Max relative error between central differences of g^(k) and g^(k+1)."""
        kMax = self.K - 1 if kMax is None else min(int(kMax), self.K - 1)
        worst = 0.0
        with mpmath.workdps(self.working_dps + 20):
            hMp = mpmath.mpf(step)
            for t in times:
                for k in range(kMax + 1):
                    fd = (self.derivative(k, t + hMp) - self.derivative(k, t - hMp)) / (2 * hMp)
                    exact = self.derivative(k + 1, t)
                    if exact != 0:
                        worst = max(worst, float(abs(fd - exact) / abs(exact)))
        return worst


# =========================================================
#                   O P E R A T I O N S
# =========================================================
@lru_cache(maxsize=8)
def tychonov_derivative_table(K=const.DEF_K):
    """Build exact table Q_0..Q_K.

    Raises:
        ValidationError: K < 1 or K above the configured cap
    """
    if int(K) != K or K < 1:
        raise ValidationError(f'Tychonov table needs K >= 1, got {K}')
    if K > const.DEF_K_MAX:
        raise ValidationError(f'Tychonov table capped at K={const.DEF_K_MAX}, got {K}')
    return TychonovPolynomialTable(int(K))


def tychonov_eval(x, t, K=const.DEF_K, asMp=False):
    """Evaluate truncated Tychonov series at (x, t) with tail estimate.

    Returns:
        'TychonovEval' (value, tail, reliable, K)
    """
    if int(K) != K or K < 1:
        raise ValidationError(f'Tychonov series needs K >= 1, got {K}')
    if t <= 0:
        zero = mpmath.mpf(0) if asMp else 0.0
        return TychonovEval(zero, 0.0, True, int(K))

    coeffs = _series_coeffs(float(t), int(K))
    with mpmath.workdps(tychonov_derivative_table(int(K)).working_dps):
        x2 = mpmath.mpf(x) ** 2
        terms = [c * x2**k for k, c in enumerate(coeffs)]
        value = mpmath.fsum(terms)
        absTerms = [float(abs(term)) for term in terms]

    tail, reliable = _tail_estimate(absTerms)
    return TychonovEval(value if asMp else float(value), tail, reliable, int(K))


def tychonov_value(x, t, K=const.DEF_K):
    """Value of v(x, t) from the first K+1 series terms.

    Returns 0.0 exactly for t <= 0. Logs a warning when the tail
    estimate is unreliable (increase K or shrink |x|).
    """
    res = tychonov_eval(x, t, K)
    if not res.reliable:
        get_logger().warning(f'Tychonov tail unreliable at x={x}, t={t}, K={K}: increase K')
    return res.value


def tychonov_profile(xs, t, K=const.DEF_K, asMp=False, kMax=const.DEF_K_MAX):
    """Evaluate v(., t) on many points, doubling K until every tail is reliable.

    Returns:
        'np.ndarray' of floats, or 'list' of 'mpmath.mpf' when 'asMp'

    Raises:
        DivergenceError: tails still unreliable at 'kMax'
    """
    xs = list(xs)
    if t <= 0:
        return [mpmath.mpf(0)] * len(xs) if asMp else np.zeros(len(xs))

    order = int(K)
    while True:
        if asMp:
            evals = [tychonov_eval(x, t, order, asMp=True) for x in xs]
            vals = [ev.value for ev in evals]
            reliable = np.array([ev.reliable for ev in evals])
        else:
            vals, reliable = _float_profile(np.asarray(xs, dtype=float), float(t), order)

        if np.all(reliable):
            return vals
        if order >= kMax:
            bad = xs[int(np.argmin(reliable))]
            raise DivergenceError(
                f'Tychonov tail unreliable at x={float(bad):g}, t={t}: increase K beyond {kMax}'
            )
        order = min(2 * order, int(kMax))


def _float_profile(xs, t, K):
    """Vectorized float64 evaluation with per-point tail flags."""
    coeffs = _series_coeffs(t, K)
    logC = np.array([float(mpmath.log(abs(c))) if c != 0 else -np.inf for c in coeffs])
    signs = np.array([float(mpmath.sign(c)) for c in coeffs])

    ks = np.arange(K + 1)
    with np.errstate(divide='ignore', invalid='ignore'):
        logX2 = np.log(xs**2)
        logTerms = logC[None, :] + np.where(ks[None, :] == 0, 0.0, ks[None, :] * logX2[:, None])
        absTerms = np.exp(logTerms)

    vals = np.sum(signs[None, :] * absTerms, axis=1)
    reliable = np.array([_tail_estimate(row)[1] for row in absTerms])
    return vals, reliable & np.isfinite(vals)


def tychonov_pde_residual(L=2.0, tRange=(0.3, 1.0), h=0.01, dt=0.01, K=const.DEF_K):
    """Max of central-difference (Delta - d_t) v on [-L, L] x tRange."""
    xs = np.linspace(-L - h, L + h, int(round(2 * (L + h) / h)) + 1)
    ts = np.arange(tRange[0] - dt, tRange[1] + 1.5 * dt, dt)
    table = np.array([tychonov_profile(xs, t, K) for t in ts])

    lap = (table[1:-1, 2:] - 2 * table[1:-1, 1:-1] + table[1:-1, :-2]) / h**2
    dvdt = (table[2:, 1:-1] - table[:-2, 1:-1]) / (2 * dt)
    return float(np.max(np.abs(lap - dvdt)))


def demonstrate_sharpness(L=6.0, K=const.DEF_K, h=0.5, order=SHARP_ORDER):
    """Finite-window evidence that quadratic exponential growth is sharp.

    Checks:
        (i)   v(., 0) = 0 exactly on the window |x| <= L
        (ii)  v(0, 0.5) = exp(-4) > 0.018
        (iii) time-Taylor coefficients of v at t = 0 vanish through 'order'
              (and are below 1e-100 at t = 0.01) while v(., 1) is nonzero
        (iv)  growth along x in [5, 12] at t = 1 against c x^2 for tested c,
              plus a fitted envelope c1 + c2 |x|^(2.5)

    Raises:
        DivergenceError: series tails unreliable up to the K cap
    """
    xs = np.arange(-L, L + 0.5 * h, h)

    # (i) zero past
    past = tychonov_profile(xs, 0.0, K)
    zeroPast = float(np.max(np.abs(past)))

    # (ii) nontrivial at t = 0.5
    centre = tychonov_eval(0.0, SHARP_T, K)
    oracle = math.exp(-1.0 / SHARP_T**2)

    # (iii) Taylor coefficients d_t^j v(x, t) = sum_k g^(k+j)(t) x^2k / (2k)!
    table = tychonov_derivative_table(max(int(K), order + 1))
    coeffAtZero = 0.0
    coeffNearZero = 0.0
    derivsNear = table.derivatives(NEAR_ZERO_T)
    with mpmath.workdps(table.working_dps):
        for j in range(order + 1):
            for x in xs:
                x2 = mpmath.mpf(float(x)) ** 2
                near = mpmath.fsum(
                    derivsNear[k + j] * x2**k / mpmath.factorial(2 * k)
                    for k in range(len(derivsNear) - j)
                )
                coeffNearZero = max(coeffNearZero, float(abs(near)))
        coeffAtZero = max(float(abs(d)) for d in table.derivatives(0.0))
    nearZeroDerivs = max(float(abs(d)) for d in derivsNear[: order + 1])
    future = tychonov_profile(xs, GROWTH_T, K)

    # (iv) growth along a ray
    ray = np.linspace(*GROWTH_WINDOW, GROWTH_SAMPLES)
    profile = tychonov_profile(ray, GROWTH_T, K)
    logAbs = np.log(np.maximum(np.abs(profile), np.finfo(float).tiny))
    exceeds = {f'{c:g}': bool(np.any(logAbs > c * ray**2)) for c in GROWTH_CS}

    design = np.column_stack([np.ones_like(ray), ray ** (2 + GROWTH_EPS)])
    (c1, c2), *_ = np.linalg.lstsq(design, logAbs, rcond=None)
    c2 = max(float(c2), 0.0)
    c1 = float(np.max(logAbs - c2 * ray ** (2 + GROWTH_EPS)))

    passed = (
        zeroPast == 0.0
        and centre.value > 0.018
        and coeffAtZero == 0.0
        and nearZeroDerivs < NEAR_ZERO_BOUND
        and bool(np.any(future != 0.0))
    )
    return LabReport(
        'tychonov-demo',
        passed,
        values={
            'zero_past_max': zeroPast,
            'v_0_half': centre.value,
            'v_0_half_oracle': oracle,
            'v_0_half_error': abs(centre.value - oracle),
            'taylor_coeff_max_at_zero': coeffAtZero,
            'taylor_coeff_max_near_zero': coeffNearZero,
            'derivative_max_near_zero': nearZeroDerivs,
            'future_max': float(np.max(np.abs(future))),
            'quadratic_rate_exceeded': exceeds,
            'envelope_c1': c1,
            'envelope_c2': c2,
            'envelope_eps': GROWTH_EPS,
            'growth_note': 'finite-window numerical evidence, not a proof',
        },
        params={'L': L, 'K': int(K), 'h': h, 'order': order},
        provenance=['v(0, t) = exp(-1/t^2)', 'v(x, t) = 0 for t <= 0'],
    )
