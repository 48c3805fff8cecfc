"""Spatial discretization for Shrinker Lab.

This module builds grids with Riemannian volume weights, the discrete
Laplace-Beltrami operator on them, and iterated application of that
operator. It also holds the library of closed-form initial data used by
the experiments.

Supported topologies:
 - TruncatedLine(L, h): nodes -L, -L+h, ..., L with trapezoid weights
 - PeriodicLine(period, h): operator self-test harness (not a shrinker)
 - CylinderProduct(nTheta, nPhi, L, h): cell-centred lat-long grid on the
   sphere factor times a truncated axial line

All operators are written as A = W^-1 S where W holds the volume weights
and S is a symmetric coupling matrix with zero row sums. This makes A
self-adjoint in the weighted inner product and kills constants.

Dependencies:
 - numpy: arrays, FFT, CSV I/O
 - scipy: sparse matrices
 - mpmath: extended precision sampling and stencil application
"""

import math

from collections import namedtuple
from pathlib import Path

import mpmath
import numpy as np

from scipy import sparse

from . import sl_constants as const
from .lab_logger import get_logger
from .sl_common import DivergenceError, ValidationError
from .soliton_models import Point

__all__ = [
    'TruncatedLine',
    'PeriodicLine',
    'CylinderProduct',
    'make_topology',
    'Grid',
    'GridField',
    'LinearLocalOperator',
    'ClosedFormData',
    'build_grid',
    'laplace_beltrami',
    'iterate_laplacian',
    'parse_data_spec',
    'sample_field',
]


# fmt: off
# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
MIN_RESOLUTION = 4              # Min number of cells per direction
DIVIDE_TOL = 1e-9               # Relative slack when checking that h divides the domain
# fmt: on

TruncatedLine = namedtuple('TruncatedLine', 'L h')
PeriodicLine = namedtuple('PeriodicLine', 'period h')
CylinderProduct = namedtuple('CylinderProduct', 'nTheta nPhi L h')


# =========================================================
#              H E L P E R   F U N C T I O N S
# =========================================================
def make_topology(kind, L=const.DEF_L, h=const.DEF_H, period=const.DEF_PERIOD,
                  nTheta=const.DEF_N_THETA, nPhi=const.DEF_N_PHI):
    """Create topology spec from config values.

    Raises:
        ValidationError: unknown topology kind
    """
    if kind == const.TOPO_TRUNCATED:
        return TruncatedLine(float(L), float(h))
    if kind == const.TOPO_PERIODIC:
        # Snap h to the nearest spacing that divides the period
        if not (period > 0 and h > 0):
            raise ValidationError('PeriodicLine: period and spacing must be positive')
        cells = max(int(round(float(period) / float(h))), 1)
        return PeriodicLine(float(period), float(period) / cells)
    if kind == const.TOPO_CYLINDER:
        return CylinderProduct(int(nTheta), int(nPhi), float(L), float(h))
    raise ValidationError(f'Unknown topology: {kind!r}')


def _cell_count(length, h, what):
    """Number of cells of size h in length. Raises if h does not divide evenly."""
    if not (length > 0 and h > 0):
        raise ValidationError(f'{what}: domain size and spacing must be positive')
    count = length / h
    if abs(count - round(count)) > DIVIDE_TOL * max(count, 1.0):
        raise ValidationError(f'{what}: h={h} does not divide domain of size {length}')
    count = int(round(count))
    if count < MIN_RESOLUTION:
        raise ValidationError(f'{what}: resolution {count} < {MIN_RESOLUTION}')
    return count


def _mp_period(period):
    # Periods are read in units of 2*pi so that trig data stays exactly periodic
    return mpmath.mpf(period / (2.0 * math.pi)) * 2 * mpmath.pi


def _line_coupling(count, h, periodic):
    """Symmetric 1-D coupling (S = W A) and weights for a line of `count` nodes."""
    idx = np.arange(count)
    if periodic:
        rows = np.concatenate([idx, idx])
        cols = np.concatenate([(idx + 1) % count, (idx - 1) % count])
        weights = np.full(count, h)
    else:
        rows = np.concatenate([idx[:-1], idx[1:]])
        cols = np.concatenate([idx[1:], idx[:-1]])
        weights = np.full(count, h)
        weights[[0, -1]] = h / 2.0

    vals = np.full(len(rows), 1.0 / h)
    offdiag = sparse.csr_matrix((vals, (rows, cols)), shape=(count, count))
    diag = sparse.diags(-np.asarray(offdiag.sum(axis=1)).ravel())
    return (offdiag + diag).tocsr(), weights


def _sphere_coupling(nTheta, nPhi, radius2):
    """Finite-volume coupling and cell areas on a cell-centred lat-long grid.

    Cells touching a pole exchange no flux through the pole vertex, which
    takes the place of pole-ring averaging.
    """
    dTheta = math.pi / nTheta
    dPhi = 2.0 * math.pi / nPhi
    edges = np.arange(nTheta + 1) * dTheta
    centres = 0.5 * (edges[:-1] + edges[1:])

    areas = radius2 * (np.cos(edges[:-1]) - np.cos(edges[1:])) * dPhi
    cTheta = np.sin(edges[1:-1]) * dPhi / dTheta
    cPhi = dTheta / (np.sin(centres) * dPhi)

    node = np.arange(nTheta * nPhi).reshape(nTheta, nPhi)

    # Neighbours across latitude edges
    north, south = node[:-1, :].ravel(), node[1:, :].ravel()
    coupleTheta = np.repeat(cTheta, nPhi)

    # Neighbours across longitude edges (periodic)
    east = np.roll(node, -1, axis=1).ravel()
    couplePhi = np.repeat(cPhi, nPhi)

    rows = [north, south, node.ravel(), east]
    cols = [south, north, east, node.ravel()]
    vals = [coupleTheta, coupleTheta, couplePhi, couplePhi]

    size = nTheta * nPhi
    offdiag = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )
    diag = sparse.diags(-np.asarray(offdiag.sum(axis=1)).ravel())
    return (offdiag + diag).tocsr(), np.repeat(areas, nPhi), centres, np.arange(nPhi) * dPhi


# =========================================================
#                     G R I D   T Y P E S
# =========================================================
class Grid:
    """Discretized spatial domain with volume weights.

    Attributes:
        model:       'SolitonModel' this grid discretizes
        topology:    topology spec ('TruncatedLine', 'PeriodicLine', 'CylinderProduct')
        coords:      'np.ndarray' (size, dim) chart coordinates per node
        weights:     'np.ndarray' volume weight dv per node
        h:           'float' line or axial spacing
        axialIndex:  'np.ndarray' axial node index (None on periodic lines)
        axialCount:  'int' number of axial nodes
    """

    def __init__(self, model, topology, coords, weights, h, axialIndex=None, axialCount=0,
                 couplingParts=None):
        self.model = model
        self.topology = topology
        self.coords = coords
        self.weights = weights
        self.h = h
        self.axialIndex = axialIndex
        self.axialCount = axialCount
        self._couplingParts = couplingParts

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return f'Grid({self.model.spec}, {self.topology})'

    @property
    def size(self):
        return len(self.weights)

    @property
    def dim(self):
        return self.coords.shape[1]

    @property
    def is_line(self):
        return isinstance(self.topology, (TruncatedLine, PeriodicLine))

    @property
    def is_periodic(self):
        return isinstance(self.topology, PeriodicLine)

    @property
    def x(self):
        """Line coordinate (line topologies) or axial coordinate (cylinder)."""
        return self.coords[:, -1]

    @property
    def volume(self):
        return float(np.sum(self.weights))

    @property
    def points(self):
        return [Point(row) for row in self.coords]

    @property
    def resolution(self):
        """Plain description of the grid resolution for reports."""
        if isinstance(self.topology, CylinderProduct):
            return {
                'n_theta': self.topology.nTheta,
                'n_phi': self.topology.nPhi,
                'L': self.topology.L,
                'h': self.h,
                'nodes': self.size,
            }
        return {**self.topology._asdict(), 'nodes': self.size}

    def interior_mask(self, width):
        """Nodes at least `width` axial cells away from a truncated boundary."""
        if self.axialIndex is None or width <= 0:
            return np.ones(self.size, dtype=bool)
        return (self.axialIndex >= width) & (self.axialIndex <= self.axialCount - 1 - width)

    def erode_mask(self, mask, width=1):
        """Shrink mask by `width` axial cells (neighbours along the axis and boundary)."""
        out = mask & self.interior_mask(width)
        if self.axialIndex is None:
            return out

        # Axial index runs fastest, so flat neighbours are axial neighbours
        for shift in range(1, int(width) + 1):
            out[shift:] &= mask[:-shift]
            out[:-shift] &= mask[shift:]
        return out

    def mp_coords(self):
        """Line nodes in extended precision with exactly uniform spacing."""
        if not self.is_line:
            raise ValidationError('Extended precision nodes exist only on line grids')
        if self.is_periodic:
            hMp = _mp_period(self.topology.period) / self.size
            return [i * hMp for i in range(self.size)], hMp

        hMp = 2 * mpmath.mpf(self.topology.L) / (self.size - 1)
        start = -mpmath.mpf(self.topology.L)
        return [start + i * hMp for i in range(self.size)], hMp

    def distance_from(self, p):
        """Geodesic distance from 'Point' p to every node."""
        return self.model.distance(p.coords[None, :], self.coords)


class GridField:
    """Real-valued function sampled on a grid.

    Attributes:
        grid:      'Grid' the field lives on
        values:    'np.ndarray' value per node
        mask:      'np.ndarray' of 'bool' (True = uncontaminated node)
        source:    'ClosedFormData' the field was sampled from (or None)
        mpValues:  'list' of 'mpmath.mpf' when sampled in extended precision
        diverged:  'bool' flag for fields with non-finite values
        label:     'str' short description
    """

    def __init__(self, grid, values, mask=None, source=None, mpValues=None, diverged=False,
                 label=''):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.size,):
            raise ValidationError(f'Field needs {grid.size} values, got {values.shape}')
        if not diverged and not np.all(np.isfinite(values)):
            raise DivergenceError('Non-finite values in grid field')

        self.grid = grid
        self.values = values
        self.mask = np.ones(grid.size, dtype=bool) if mask is None else np.asarray(mask, bool)
        self.source = source
        self.mpValues = mpValues
        self.diverged = diverged
        self.label = label

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return f'GridField({self.label or "field"}, nodes={len(self.values)})'

    @property
    def masked_values(self):
        return self.values[self.mask]

    def sup(self, masked=True):
        vals = self.values[self.mask] if masked else self.values
        return float(np.max(np.abs(vals))) if len(vals) else 0.0

    def with_values(self, values, label=None, mask=None):
        """New field on the same grid and mask with other values."""
        return GridField(
            self.grid,
            values,
            mask=self.mask.copy() if mask is None else mask,
            label=self.label if label is None else label,
        )

    def scaled(self, factor, precision=const.DEF_PRECISION):
        """Field times a constant (extended precision column kept at 'precision' digits)."""
        mpVals = None
        if self.mpValues is not None:
            with mpmath.workdps(int(precision)):
                mpFactor = mpmath.mpf(factor)
                mpVals = [mpFactor * v for v in self.mpValues]
        field = self.with_values(factor * self.values)
        field.mpValues = mpVals
        return field

    def to_csv(self, fName):
        """Write CSV with columns coord_0..coord_{d-1}, value, mask."""
        dim = self.grid.dim
        header = ','.join([f'coord_{i}' for i in range(dim)] + ['value', 'mask'])
        table = np.column_stack([self.grid.coords, self.values, self.mask.astype(int)])
        fmt = ['%.17g'] * (dim + 1) + ['%d']
        np.savetxt(Path(fName), table, delimiter=',', header=header, comments='', fmt=fmt)

    @classmethod
    def from_csv(cls, grid, fName):
        """Read field written by 'to_csv' back onto a matching grid."""
        try:
            table = np.loadtxt(Path(fName), delimiter=',', skiprows=1, ndmin=2)
        except (OSError, ValueError) as e:
            raise ValidationError(f'Cannot read grid field from {fName}: {e}') from e

        if table.shape != (grid.size, grid.dim + 2):
            raise ValidationError(f'CSV shape {table.shape} does not match {grid}')
        if not np.allclose(table[:, : grid.dim], grid.coords, rtol=0.0, atol=1e-12):
            raise ValidationError('CSV coordinates do not match grid nodes')
        return cls(grid, table[:, grid.dim], mask=table[:, grid.dim + 1].astype(bool))


# =========================================================
#                     O P E R A T O R S
# =========================================================
class LinearLocalOperator:
    """Discrete Laplace-Beltrami operator A = W^-1 S on a grid.

    Attributes:
        grid:          'Grid'
        coupling:      'scipy.sparse.csr_matrix' symmetric S (None for spectral)
        kind:          'str' [central|spectral]
        boundary:      'str' boundary treatment tag
        stencilRadius: 'int' cells of contamination added per application
    """

    def __init__(self, grid, coupling=None, kind=const.SPACE_CENTRAL,
                 boundary=const.BOUNDARY_MASKED):
        self.grid = grid
        self.coupling = coupling
        self.kind = kind
        self.boundary = boundary
        self.stencilRadius = 0 if grid.axialIndex is None else 1
        self._matrix = None
        self._mpInvH2 = None

        if self.spectral:
            count = grid.size
            self.wavenumbers = 2 * math.pi / grid.topology.period * np.fft.fftfreq(count, 1 / count)
        else:
            self.wavenumbers = None

    def __repr__(self):
        return f'LinearLocalOperator({self.kind}, {self.grid})'

    @property
    def spectral(self):
        return self.kind == const.SPACE_SPECTRAL

    @property
    def matrix(self):
        """Sparse matrix of A (central stencils only)."""
        if self.spectral:
            raise ValidationError('Spectral operator has no sparse stencil matrix')
        if self._matrix is None:
            self._matrix = sparse.diags(1.0 / self.grid.weights) @ self.coupling
            self._matrix = self._matrix.tocsr()
        return self._matrix

    @property
    def lambda_max(self):
        """Upper bound for the spectral radius of A."""
        if self.spectral:
            return float(np.max(self.wavenumbers**2))
        return 2.0 * float(np.max(np.abs(self.matrix.diagonal())))

    @property
    def explicit_dt_max(self):
        return 2.0 / self.lambda_max

    def row_sums(self):
        if self.spectral:
            return self.apply_values(np.ones(self.grid.size))
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def apply_values(self, values, filterLevel=None):
        """Apply A to raw node values.

        Args:
            values: 'np.ndarray' node values
            filterLevel: relative Fourier amplitude filter (spectral only)
        """
        if not self.spectral:
            return self.matrix @ values

        coeffs = np.fft.fft(values)
        if filterLevel:
            amps = np.abs(coeffs)
            coeffs[amps < filterLevel * np.max(amps)] = 0.0
        return np.real(np.fft.ifft(-(self.wavenumbers**2) * coeffs))

    def apply(self, field):
        """Apply A to a 'GridField'; mask shrinks by the stencil radius."""
        mask = self.grid.erode_mask(field.mask, self.stencilRadius)
        return GridField(self.grid, self.apply_values(field.values), mask=mask, label='A u')

    def apply_mp(self, vals):
        """Apply the central line stencil to a list of 'mpmath.mpf' values."""
        if self.spectral or not self.grid.is_line:
            raise ValidationError('Extended precision stencil exists only for central line grids')
        if self._mpInvH2 is None:
            _, hMp = self.grid.mp_coords()
            self._mpInvH2 = 1 / (hMp * hMp)

        invH2 = self._mpInvH2
        count = len(vals)
        if self.grid.is_periodic:
            return [
                (vals[i - 1] - 2 * vals[i] + vals[(i + 1) % count]) * invH2 for i in range(count)
            ]

        out = [(vals[i - 1] - 2 * vals[i] + vals[i + 1]) * invH2 for i in range(1, count - 1)]
        return [2 * (vals[1] - vals[0]) * invH2] + out + [2 * (vals[-2] - vals[-1]) * invH2]

    def inner(self, u, v, mask=None):
        """Volume-weighted inner product <u, v>."""
        uVals = getattr(u, 'values', u)
        vVals = getattr(v, 'values', v)
        prod = self.grid.weights * uVals * vVals
        return float(np.sum(prod if mask is None else prod[mask]))

    def gradient_norm2(self, values):
        """Per-node |grad u|^2 consistent with the Dirichlet energy -<Au, u>."""
        values = getattr(values, 'values', values)
        if self.spectral:
            deriv = np.real(np.fft.ifft(1j * self.wavenumbers * np.fft.fft(values)))
            return deriv**2

        coo = self.coupling.tocoo()
        off = coo.row != coo.col
        rows, cols, couple = coo.row[off], coo.col[off], coo.data[off]
        edgeEnergy = couple * (values[cols] - values[rows]) ** 2
        perNode = np.bincount(rows, weights=edgeEnergy, minlength=self.grid.size)
        return perNode / (2.0 * self.grid.weights)

    def dirichlet_energy(self, values):
        values = getattr(values, 'values', values)
        return -self.inner(self.apply_values(values), values)


# =========================================================
#              C L O S E D - F O R M   D A T A
# =========================================================
class ClosedFormData:
    """Closed-form initial datum with optional closed-form heat flow.

    Attributes:
        name:       'str' data spec (e.g. 'kernel:2')
        func:       callable (coords array) -> values
        mpFunc:     callable (mpf x) -> mpf for line grids (or None)
        flow:       callable (coords array, t) -> values of the exact heat flow (or None)
        provenance: 'str' closed-form oracle description
    """

    def __init__(self, name, func, mpFunc=None, flow=None, provenance=''):
        self.name = name
        self.func = func
        self.mpFunc = mpFunc
        self.flow = flow
        self.provenance = provenance

    def __repr__(self):
        return f'ClosedFormData({self.name})'

    def __call__(self, coords):
        return self.func(np.atleast_2d(coords))

    def at_time(self, t):
        """Closed-form data for u(., t) when the heat flow is known."""
        if self.flow is None:
            raise ValidationError(f'No closed-form heat flow for data {self.name!r}')
        return ClosedFormData(
            f'{self.name}@t={t:g}',
            lambda coords: self.flow(np.atleast_2d(coords), t),
            provenance=self.provenance,
        )


def _kernel_data(c):
    if not c > 0:
        raise ValidationError(f'Kernel singular time offset must be positive, got {c}')

    def _flow(coords, t):
        s = t + c
        if s <= 0:
            raise ValidationError(f'Heat kernel is singular at t={t} (offset {c})')
        x = coords[:, -1]
        return np.exp(-(x**2) / (4.0 * s)) / np.sqrt(4.0 * math.pi * s)

    def _mp(x):
        s = mpmath.mpf(c)
        return mpmath.exp(-(x**2) / (4 * s)) / mpmath.sqrt(4 * mpmath.pi * s)

    return ClosedFormData(
        f'kernel:{c:g}',
        lambda coords: _flow(coords, 0.0),
        _mp,
        _flow,
        f'heat kernel (4 pi (t+{c:g}))^(-1/2) exp(-x^2/(4 (t+{c:g})))',
    )


def _growth_data(tau):
    if not tau > 0:
        raise ValidationError(f'Blow-up time must be positive, got {tau}')

    def _flow(coords, t):
        s = tau - t
        if s <= 0:
            raise ValidationError(f'Growth data blows up at t={tau}')
        x = coords[:, -1]
        return np.sqrt(tau / s) * np.exp(x**2 / (4.0 * s))

    def _mp(x):
        return mpmath.exp(x**2 / (4 * mpmath.mpf(tau)))

    return ClosedFormData(
        f'growth:{tau:g}',
        lambda coords: _flow(coords, 0.0),
        _mp,
        _flow,
        f'flow (tau/(tau-t))^(1/2) exp(x^2/(4 (tau-t))) blows up at t={tau:g}',
    )


def _tychonov_data(t0):
    # Imported here: counterexamples does not depend on grids
    from .counterexamples import tychonov_profile

    def _flow(coords, t):
        return np.array([float(val) for val in tychonov_profile(coords[:, -1], t0 + t)])

    return ClosedFormData(
        f'tychonov:{t0:g}',
        lambda coords: _flow(coords, 0.0),
        lambda x: tychonov_profile([x], t0, asMp=True)[0],
        _flow,
        'Tychonov series with gauge exp(-1/t^2)',
    )


def parse_data_spec(spec):
    """Build closed-form data from spec string.

    Known specs: sin, const, x2, kernel:<c>, growth:<tau>, cauchy,
    tychonov:<t>, ylm10

    Raises:
        ValidationError: unknown or malformed spec
    """
    if isinstance(spec, ClosedFormData):
        return spec

    name, _, param = str(spec).strip().lower().partition(':')
    try:
        if name == 'sin':
            return ClosedFormData(
                'sin',
                lambda coords: np.sin(coords[:, -1]),
                mpmath.sin,
                lambda coords, t: math.exp(-t) * np.sin(coords[:, -1]),
                'exp(-t) sin x',
            )
        if name == 'const':
            return ClosedFormData(
                'const',
                lambda coords: np.ones(len(coords)),
                lambda x: mpmath.mpf(1),
                lambda coords, t: np.ones(len(coords)),
                'constant equilibrium',
            )
        if name == 'x2':
            return ClosedFormData(
                'x2',
                lambda coords: coords[:, -1] ** 2,
                lambda x: x * x,
                lambda coords, t: coords[:, -1] ** 2 + 2.0 * t,
                'x^2 + 2t',
            )
        if name == 'cauchy':
            return ClosedFormData(
                'cauchy',
                lambda coords: 1.0 / (1.0 + coords[:, -1] ** 2),
                lambda x: 1 / (1 + x * x),
                provenance='1/(1+x^2), not entire in x',
            )
        if name == 'ylm10':
            return ClosedFormData(
                'ylm10',
                lambda coords: np.cos(coords[:, 0]),
                flow=lambda coords, t: math.exp(-t) * np.cos(coords[:, 0]),
                provenance='cos(theta), eigenvalue 2/r^2 = 1 on S^2(sqrt 2)',
            )
        if name == 'kernel':
            return _kernel_data(float(param) if param else 2.0)
        if name == 'growth':
            return _growth_data(float(param) if param else 1.0)
        if name == 'tychonov':
            return _tychonov_data(float(param) if param else 0.5)
    except ValueError as e:
        raise ValidationError(f'Invalid data spec: {spec!r}') from e

    raise ValidationError(f'Unknown data spec: {spec!r}')


# =========================================================
#                   O P E R A T I O N S
# =========================================================
def build_grid(model, topology):
    """Build grid with nodes and volume weights.

    Args:
        model: 'SolitonModel'
        topology: 'TruncatedLine', 'PeriodicLine', or 'CylinderProduct'

    Returns:
        'Grid'

    Raises:
        ValidationError: degenerate spec or model/topology mismatch
    """
    if isinstance(topology, (TruncatedLine, PeriodicLine)):
        if model.n != 1:
            raise ValidationError(f'Line topologies discretize 1-D models, not {model.spec}')

        if isinstance(topology, PeriodicLine):
            count = _cell_count(topology.period, topology.h, 'PeriodicLine')
            h = topology.period / count
            coords = (np.arange(count) * h)[:, None]
            coupling, weights = _line_coupling(count, h, periodic=True)
            return Grid(model, topology, coords, weights, h, couplingParts=(coupling,))

        count = _cell_count(2.0 * topology.L, topology.h, 'TruncatedLine')
        coords = np.linspace(-topology.L, topology.L, count + 1)[:, None]
        h = 2.0 * topology.L / count
        coupling, weights = _line_coupling(count + 1, h, periodic=False)
        return Grid(
            model,
            topology,
            coords,
            weights,
            h,
            axialIndex=np.arange(count + 1),
            axialCount=count + 1,
            couplingParts=(coupling,),
        )

    if isinstance(topology, CylinderProduct):
        if model.kind != const.MODEL_CYLINDER or model.k != 2 or model.n != 3:
            raise ValidationError(f'CylinderProduct grids discretize cylinder:2x3, not {model.spec}')
        if topology.nTheta < MIN_RESOLUTION or topology.nPhi < MIN_RESOLUTION:
            raise ValidationError('Sphere resolution must be at least 4 x 4')

        count = _cell_count(2.0 * topology.L, topology.h, 'CylinderProduct axis')
        h = 2.0 * topology.L / count
        axial = np.linspace(-topology.L, topology.L, count + 1)
        axCoupling, axWeights = _line_coupling(count + 1, h, periodic=False)
        sCoupling, sWeights, thetas, phis = _sphere_coupling(
            topology.nTheta, topology.nPhi, model.sphereRadius2
        )

        # Axial index runs fastest
        theta, phi, y = np.meshgrid(thetas, phis, axial, indexing='ij')
        coords = np.column_stack([theta.ravel(), phi.ravel(), y.ravel()])
        weights = np.kron(sWeights, axWeights)
        axialIndex = np.tile(np.arange(count + 1), topology.nTheta * topology.nPhi)
        coupling = sparse.kron(sCoupling, sparse.diags(axWeights)) + sparse.kron(
            sparse.diags(sWeights), axCoupling
        )
        return Grid(
            model,
            topology,
            coords,
            weights,
            h,
            axialIndex=axialIndex,
            axialCount=count + 1,
            couplingParts=(coupling.tocsr(),),
        )

    raise ValidationError(f'Unknown topology spec: {topology!r}')


def laplace_beltrami(grid, kind=const.SPACE_CENTRAL):
    """Discrete Laplace-Beltrami operator for the model metric.

    Args:
        grid: 'Grid'
        kind: [central|spectral], spectral only on periodic lines

    Returns:
        'LinearLocalOperator'

    Raises:
        ValidationError: spectral operator requested on a non-periodic grid
    """
    if kind == const.SPACE_SPECTRAL:
        if not grid.is_periodic:
            raise ValidationError('Spectral Laplacian needs a periodic grid')
        return LinearLocalOperator(grid, kind=kind, boundary=const.BOUNDARY_PERIODIC)

    if kind != const.SPACE_CENTRAL:
        raise ValidationError(f'Unknown space scheme: {kind!r}')

    boundary = const.BOUNDARY_PERIODIC if grid.is_periodic else const.BOUNDARY_MASKED
    return LinearLocalOperator(grid, grid._couplingParts[0], kind, boundary)


def sample_field(grid, data, precision=None):
    """Sample closed-form data on a grid.

    When 'precision' is given and the grid is a line, the data is also
    sampled in extended precision ('mpValues') so that iterated Laplacians
    do not amplify float64 rounding noise.

    Args:
        grid: 'Grid'
        data: 'ClosedFormData' or data spec 'str'
        precision: decimal digits for extended precision sampling (or None)

    Returns:
        'GridField'
    """
    data = parse_data_spec(data)
    mpVals = None
    if precision and grid.is_line and data.mpFunc is not None:
        with mpmath.workdps(int(precision)):
            nodes, _ = grid.mp_coords()
            mpVals = [data.mpFunc(x) for x in nodes]
        values = np.array([float(v) for v in mpVals])
    else:
        values = np.asarray(data(grid.coords), dtype=float)

    return GridField(grid, values, source=data, mpValues=mpVals, label=data.name)


def iterate_laplacian(op, a, J, precision=const.DEF_PRECISION,
                      filterLevel=const.DEF_FILTER_LEVEL):
    """Compute a_0 = a, a_{j+1} = A a_j for j < J.

    Extended precision values on 'a' are iterated in extended precision.
    Spectral operators filter Fourier amplitudes below 'filterLevel' times
    the largest amplitude before every application. The contamination mask
    grows by the stencil radius per application.

    Args:
        op: 'LinearLocalOperator'
        a: 'GridField'
        J: 'int' number of applications
        precision: decimal digits for the extended precision path
        filterLevel: relative amplitude filter for spectral operators

    Returns:
        'list' of 'GridField' a_0..a_J; on divergence the last field is
        flagged 'diverged' and carries 'firstFailure' = j
    """
    if int(J) != J or J < 0:
        raise ValidationError(f'Number of Laplacian applications must be >= 0, got {J}')
    if a.grid is not op.grid:
        raise ValidationError('Field and operator live on different grids')

    useMp = a.mpValues is not None and not op.spectral and op.grid.is_line
    fields = [a]
    current = a
    with mpmath.workdps(int(precision or const.DEF_PRECISION)):
        for j in range(1, int(J) + 1):
            mask = op.grid.erode_mask(current.mask, op.stencilRadius)
            mpVals = None
            if useMp:
                mpVals = op.apply_mp(current.mpValues)
                values = np.array([float(v) for v in mpVals])
            else:
                level = filterLevel if op.spectral else None
                with np.errstate(over='ignore', invalid='ignore'):
                    values = op.apply_values(current.values, level)

            if not np.all(np.isfinite(values)):
                get_logger().warning(f'Iterated Laplacian diverged at j={j}')
                failed = GridField(op.grid, values, mask, diverged=True, label=f'a_{j}')
                failed.firstFailure = j
                fields.append(failed)
                return fields

            current = GridField(op.grid, values, mask, mpValues=mpVals, label=f'a_{j}')
            fields.append(current)

    return fields
