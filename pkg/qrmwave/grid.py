# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

"""Space-time grids, boundary segments and discrete norms.

Design notes:
- Arrays are indexed (k, m, n): time level, x2 row, x1 column.
  Spatial arrays drop the k axis.
- Every discrete integral uses the full cell weight at every node, edges included.
- Nothing here does I/O or keeps state, all functions are pure.
- This is the bottom module: the exception hierarchy lives here too.
"""

import dataclasses
import enum
import logging
import typing as t

import numpy as np

log = logging.getLogger(__name__)

# Relative tolerance for "extent is an integer multiple of step"
COMMENSURATE_RTOL = 1e-9


class Error(Exception):
    """Base class for all qrmwave errors. Subclasses set the process exit code."""
    exitcode = 1


class ConfigError(Error):
    exitcode = 2


class DataError(Error):
    exitcode = 3


class NumericError(Error):
    exitcode = 4


class NonCommensurate(ConfigError):
    pass


class CflViolation(NumericError):
    pass


class GridMismatch(DataError):
    pass


class IndexOutOfInterior(Error, IndexError):
    pass


class SEGMENT(enum.Enum):
    """Lateral boundary segments of a rectangle.

    Corners belong to the lower-indexed segment: G1 takes both bottom corners,
    G2 the top-left one, G3 the top-right one and G4 none.
    """
    G1 = 1  # x2 = x2_min
    G2 = 2  # x1 = x1_min
    G3 = 3  # x1 = x1_max
    G4 = 4  # x2 = x2_max

    @property
    def outward(self) -> t.Tuple[int, int]:
        """Outward normal as a (row, column) index step."""
        return {
            SEGMENT.G1: (-1,  0),
            SEGMENT.G2: ( 0, -1),
            SEGMENT.G3: ( 0,  1),
            SEGMENT.G4: ( 1,  0),
        }[self]


@dataclasses.dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform grid over [x1_min, x1_max] x [x2_min, x2_max] x [0, T]."""
    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float
    T: float
    h_x1: float
    h_x2: float
    h_t: float
    nx: int
    ny: int
    nt: int
    a: float = 1.0  # side of the support square SQ(a)

    @property
    def lam_x(self) -> float:
        return self.h_t ** 2 / self.h_x1 ** 2

    @property
    def lam_y(self) -> float:
        return self.h_t ** 2 / self.h_x2 ** 2

    @property
    def lam_t(self) -> float:
        return 2 * (1 - self.lam_x - self.lam_y)

    @property
    def cfl_ok(self) -> bool:
        return self.lam_x + self.lam_y <= 1 + 1e-12

    @property
    def shape(self) -> t.Tuple[int, int, int]:
        return self.nt + 1, self.ny + 1, self.nx + 1

    @property
    def spatial_shape(self) -> t.Tuple[int, int]:
        return self.ny + 1, self.nx + 1

    @property
    def x1(self) -> np.ndarray:
        return self.x1_min + self.h_x1 * np.arange(self.nx + 1)

    @property
    def x2(self) -> np.ndarray:
        return self.x2_min + self.h_x2 * np.arange(self.ny + 1)

    @property
    def times(self) -> np.ndarray:
        return self.h_t * np.arange(self.nt + 1)

    @property
    def cell(self) -> float:
        """Space-time cell weight."""
        return self.h_t * self.h_x1 * self.h_x2

    @property
    def area(self) -> float:
        """Spatial cell weight."""
        return self.h_x1 * self.h_x2

    def meshgrid(self) -> t.Tuple[np.ndarray, np.ndarray]:
        """(X1, X2) coordinate arrays in spatial (m, n) layout."""
        return np.meshgrid(self.x1, self.x2)

    def column(self, x1_value: float) -> int:
        """Index n of the grid column at x1 = <x1_value>, or NodeMisaligned."""
        return _node_index(x1_value, self.x1_min, self.h_x1, self.nx, 'x1')

    def row(self, x2_value: float) -> int:
        return _node_index(x2_value, self.x2_min, self.h_x2, self.ny, 'x2')

    def describe(self) -> str:
        return ("[{0.x1_min:g}, {0.x1_max:g}] x [{0.x2_min:g}, {0.x2_max:g}] x [0, {0.T:g}],"
                " h=({0.h_x1:g}, {0.h_x2:g}), h_t={0.h_t:g}, N=({0.nx}, {0.ny}, {0.nt})"
                .format(self))


class NodeMisaligned(ConfigError):
    pass


def _node_index(value, origin, step, count, axis):
    ratio = (value - origin) / step
    index = int(round(ratio))
    if abs(ratio - index) > 1e-6 or not 0 <= index <= count:
        raise NodeMisaligned("{} = {!r} is not a grid node".format(axis, value))
    return index


def _intervals(length, step, axis):
    if not step > 0:
        raise NonCommensurate("step along {} must be positive, got {!r}".format(axis, step))
    if not length > 0:
        raise NonCommensurate("extent along {} must be positive, got {!r}".format(axis, length))
    ratio = length / step
    count = int(round(ratio))
    if count < 1 or abs(ratio - count) > COMMENSURATE_RTOL * max(1.0, ratio):
        raise NonCommensurate("extent {!r} along {} is not a multiple of step {!r}".format(
            length, axis, step))
    return count


def make_grid(extent, steps, a=1.0) -> SpaceTimeGrid:
    """Build a grid from <extent> and <steps>.

    <extent> is ((x1_min, x1_max), (x2_min, x2_max), (0, T)), a bare T is also
    accepted as the last item. <steps> is (h_x1, h_x2, h_t).
    CFL violation is only logged here, the forward solver rejects it.
    """
    (x1_min, x1_max), (x2_min, x2_max), time = extent
    T = time[1] if isinstance(time, (tuple, list)) else time
    h_x1, h_x2, h_t = (float(_) for _ in steps)
    grid = SpaceTimeGrid(
        x1_min=float(x1_min), x1_max=float(x1_max),
        x2_min=float(x2_min), x2_max=float(x2_max),
        T=float(T), h_x1=h_x1, h_x2=h_x2, h_t=h_t,
        nx=_intervals(x1_max - x1_min, h_x1, 'x1'),
        ny=_intervals(x2_max - x2_min, h_x2, 'x2'),
        nt=_intervals(T, h_t, 't'),
        a=float(a),
    )
    if not grid.cfl_ok:
        log.warning("Grid violates CFL: lambda_x + lambda_y = %g > 1",
                    grid.lam_x + grid.lam_y)
    return grid


def square_grid(lo, hi, T, h, h_t, a=1.0) -> SpaceTimeGrid:
    """Shortcut for square domains [lo, hi]^2 with equal spatial steps."""
    return make_grid(((lo, hi), (lo, hi), (0, T)), (h, h, h_t), a=a)


###############################################################################
# Field containers

class Field(object):
    """Space-time grid function u_kmn."""

    def __init__(self, grid: SpaceTimeGrid, values=None):
        self.grid = grid
        if values is None:
            values = np.zeros(grid.shape)
        self.values = check_shape(values, grid.shape, "field")


def check_shape(values, shape, what="array"):
    values = np.asarray(values, dtype=float)
    if values.shape != tuple(shape):
        raise GridMismatch("{} shape {} does not match grid {}".format(
            what, values.shape, tuple(shape)))
    if not np.all(np.isfinite(values)):
        raise NumericError("{} has non-finite entries".format(what))
    return values


def _values(field):
    return np.asarray(getattr(field, 'values', field), dtype=float)


###############################################################################
# Boundary segments

@dataclasses.dataclass(frozen=True)
class SegmentNodes:
    """Node indices of one boundary segment and its geometry."""
    segment: SEGMENT
    rows: np.ndarray
    cols: np.ndarray
    h_normal: float
    h_edge: float

    def __len__(self):
        return len(self.rows)

    def shifted(self, steps) -> t.Tuple[np.ndarray, np.ndarray]:
        """Indices moved <steps> nodes along the outward normal."""
        dm, dn = self.segment.outward
        return self.rows + steps * dm, self.cols + steps * dn


def segment_nodes(grid: SpaceTimeGrid, segment: SEGMENT) -> SegmentNodes:
    nx, ny = grid.nx, grid.ny
    if segment is SEGMENT.G1:
        cols = np.arange(0, nx + 1)
        rows = np.zeros_like(cols)
        h_normal, h_edge = grid.h_x2, grid.h_x1
    elif segment is SEGMENT.G2:
        rows = np.arange(1, ny + 1)
        cols = np.zeros_like(rows)
        h_normal, h_edge = grid.h_x1, grid.h_x2
    elif segment is SEGMENT.G3:
        rows = np.arange(1, ny + 1)
        cols = np.full_like(rows, nx)
        h_normal, h_edge = grid.h_x1, grid.h_x2
    else:
        cols = np.arange(1, nx)
        rows = np.full_like(cols, ny)
        h_normal, h_edge = grid.h_x2, grid.h_x1
    return SegmentNodes(segment, rows, cols, h_normal, h_edge)


def segment_coords(grid: SpaceTimeGrid, segment: SEGMENT) -> np.ndarray:
    """(x1, x2) coordinates of the segment nodes, shape (nodes, 2)."""
    nodes = segment_nodes(grid, segment)
    return np.column_stack((grid.x1[nodes.cols], grid.x2[nodes.rows]))


class CauchyData(object):
    """Traces f and outward normal derivatives g on the four lateral segments.

    Each of f[seg] and g[seg] has shape (N_t + 1, nodes on seg).
    """

    def __init__(self, grid: SpaceTimeGrid, f=None, g=None):
        self.grid = grid
        self.f = {}
        self.g = {}
        for seg in SEGMENT:
            shape = (grid.nt + 1, len(segment_nodes(grid, seg)))
            self.f[seg] = check_shape(f[seg] if f else np.zeros(shape), shape,
                                      "trace on {}".format(seg.name))
            self.g[seg] = check_shape(g[seg] if g else np.zeros(shape), shape,
                                      "normal derivative on {}".format(seg.name))

    @classmethod
    def zeros(cls, grid):
        return cls(grid)

    def items(self):
        """Yield (segment, function name, array) for every stored array."""
        for seg in SEGMENT:
            yield seg, 'f', self.f[seg]
            yield seg, 'g', self.g[seg]

    def map(self, func) -> 'CauchyData':
        """New data with <func>(segment, name, array) applied to every array."""
        f = {seg: func(seg, 'f', self.f[seg]) for seg in SEGMENT}
        g = {seg: func(seg, 'g', self.g[seg]) for seg in SEGMENT}
        return CauchyData(self.grid, f, g)

    def max_abs(self, segments=tuple(SEGMENT)) -> float:
        return max(max(np.max(np.abs(self.f[s]), initial=0.0),
                       np.max(np.abs(self.g[s]), initial=0.0)) for s in segments)

    def check_grid(self, grid):
        if grid != self.grid:
            raise GridMismatch("Cauchy data grid {} does not match {}".format(
                self.grid.describe(), grid.describe()))


###############################################################################
# Difference operators and their transposes

def _sl(ndim, axis, s):
    index = [slice(None)] * ndim
    index[axis] = s
    return tuple(index)


def diff1(u, axis, h):
    """Forward difference along <axis>, one node shorter."""
    return np.diff(u, axis=axis) / h


def diff1_t(r, axis, h, size):
    """Transpose of diff1() for an axis of <size> nodes."""
    shape = list(r.shape)
    shape[axis] = size
    out = np.zeros(shape)
    out[_sl(out.ndim, axis, slice(1, None))] += r
    out[_sl(out.ndim, axis, slice(None, -1))] -= r
    return out / h


def diff2(u, axis, h):
    """Pure second difference along <axis> at interior nodes, two nodes shorter."""
    nd = u.ndim
    return (u[_sl(nd, axis, slice(2, None))]
            - 2 * u[_sl(nd, axis, slice(1, -1))]
            + u[_sl(nd, axis, slice(None, -2))]) / h ** 2


def diff2_t(r, axis, h, size):
    shape = list(r.shape)
    shape[axis] = size
    out = np.zeros(shape)
    nd = out.ndim
    r = r / h ** 2
    out[_sl(nd, axis, slice(2, None))] += r
    out[_sl(nd, axis, slice(1, -1))] -= 2 * r
    out[_sl(nd, axis, slice(None, -2))] += r
    return out


def laplacian(u, grid: SpaceTimeGrid) -> np.ndarray:
    """Five-point Laplacian of a spatial array at interior nodes, shape (ny-1, nx-1)."""
    return diff2(u[1:-1, :], 1, grid.h_x1) + diff2(u[:, 1:-1], 0, grid.h_x2)


def laplacian_t(r, grid: SpaceTimeGrid) -> np.ndarray:
    """Transpose of laplacian(), back to the full spatial shape."""
    ny, nx = grid.spatial_shape
    out = np.zeros((ny, nx))
    out[1:-1, :] += diff2_t(r, 1, grid.h_x1, nx)
    out[:, 1:-1] += diff2_t(r, 0, grid.h_x2, ny)
    return out


###############################################################################
# Discrete norms

def discrete_l2_sq(field, grid: SpaceTimeGrid) -> float:
    u = check_shape(_values(field), grid.spatial_shape)
    return grid.area * float(np.sum(u * u))


def discrete_h1_sq(field, grid: SpaceTimeGrid) -> float:
    """L2 part plus forward-difference gradient parts, all cell-weighted."""
    u = check_shape(_values(field), grid.spatial_shape)
    d1 = diff1(u, 1, grid.h_x1)
    d2 = diff1(u, 0, grid.h_x2)
    return grid.area * float(np.sum(u * u) + np.sum(d1 * d1) + np.sum(d2 * d2))


def h1_sq_gradient(u, grid: SpaceTimeGrid) -> np.ndarray:
    """Gradient of discrete_h1_sq() with respect to the nodal values."""
    ny, nx = grid.spatial_shape
    d1 = diff1(u, 1, grid.h_x1)
    d2 = diff1(u, 0, grid.h_x2)
    return 2 * grid.area * (u + diff1_t(d1, 1, grid.h_x1, nx) + diff1_t(d2, 0, grid.h_x2, ny))


# (axis, step attribute) of each space-time direction, axis 0 is time
_AXES = ((0, 'h_t'), (1, 'h_x2'), (2, 'h_x1'))


def h2_terms(field, grid: SpaceTimeGrid) -> t.Dict[str, float]:
    """Each part of discrete_h2_sq(), keyed by derivative name."""
    u = check_shape(_values(field), grid.shape)
    w = grid.cell
    terms = {'u': w * float(np.sum(u * u))}
    names = {0: 't', 1: 'x2', 2: 'x1'}
    for axis, step in _AXES:
        h = getattr(grid, step)
        d = diff1(u, axis, h)
        terms['d' + names[axis]] = w * float(np.sum(d * d))
        if u.shape[axis] > 2:
            d = diff2(u, axis, h)
            terms['d' + names[axis] * 2] = w * float(np.sum(d * d))
        else:
            terms['d' + names[axis] * 2] = 0.0
    return terms


def discrete_h2_sq(field, grid: SpaceTimeGrid) -> float:
    """Value, first differences and pure second differences, no mixed terms."""
    return sum(h2_terms(field, grid).values())


def h2_sq_gradient(u, grid: SpaceTimeGrid) -> np.ndarray:
    w = grid.cell
    grad = 2 * w * u
    for axis, step in _AXES:
        h = getattr(grid, step)
        size = u.shape[axis]
        grad += 2 * w * diff1_t(diff1(u, axis, h), axis, h, size)
        if size > 2:
            grad += 2 * w * diff2_t(diff2(u, axis, h), axis, h, size)
    return grad
