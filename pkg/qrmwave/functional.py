# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

"""Discrete Tikhonov functional of the quasi-reversibility method.

    J(u) = scale * sum M_kmn^2                         (wave residual)
         + w_trace * sum_seg h_t h_edge (u - f)^2      (lateral traces)
         + w_flux  * sum_seg h_t h_edge (u_nu - g)^2   (normal derivatives)
         + w_init  * initial condition penalty
         + epsilon * |u|^2_{H^2}

Design notes:
- J is an exact quadratic in the nodal values; gradient() is its exact
  gradient, assembled by transposing every stencil.
- u_nu uses the interior two-point difference, the stencil
  forward.extract_cauchy() measures the data with.
- Initial penalty: phi-problem |v - psi|^2 in L2, psi-problem |u^0 - phi|^2
  in discrete H1. v = (u^1 - u^0)/h_t - h_t/2 Lap(u^0) is the initial velocity
  matching the Taylor start of the leapfrog scheme, so a forward solution
  gives v = psi exactly at interior nodes.
"""

import dataclasses
import enum
import logging
import typing as t

import numpy as np

from . import grid as grid_

log = logging.getLogger(__name__)

EPSILON = 1e-6
W_TRACE_PHI = 1000.0
W_INIT_PSI = 100.0


class KIND(enum.Enum):
    """Which initial condition is unknown."""
    PHI = 'phi'  # u(x, 0) unknown, u_t(x, 0) known
    PSI = 'psi'  # u_t(x, 0) unknown, u(x, 0) known

    @property
    def chi_phi(self):
        return int(self is KIND.PHI)

    @property
    def chi_psi(self):
        return int(self is KIND.PSI)


@dataclasses.dataclass(frozen=True)
class Weights:
    epsilon: float = EPSILON
    w_trace: float = 1.0
    w_flux: float = 1.0
    w_init: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise grid_.ConfigError("epsilon must be positive, got {!r}".format(self.epsilon))
        for name in ('w_trace', 'w_flux', 'w_init'):
            if not getattr(self, name) >= 0:
                raise grid_.ConfigError("{} must be >= 0, got {!r}".format(
                    name, getattr(self, name)))

    @classmethod
    def balanced(cls, kind: KIND, epsilon=EPSILON) -> 'Weights':
        """Balancing coefficients used for all reported reconstructions."""
        if kind is KIND.PHI:
            return cls(epsilon=epsilon, w_trace=W_TRACE_PHI)
        return cls(epsilon=epsilon, w_init=W_INIT_PSI)

    def replace(self, **changes) -> 'Weights':
        return dataclasses.replace(self, **changes)


class FunctionalSpec(object):
    """Everything J needs besides the unknown field."""

    def __init__(self, grid: grid_.SpaceTimeGrid, kind: KIND, weights: Weights,
                 data: grid_.CauchyData, known_init=None):
        data.check_grid(grid)
        self.grid = grid
        self.kind = kind
        self.weights = weights
        self.data = data
        self.known_init = grid_.check_shape(
            np.zeros(grid.spatial_shape) if known_init is None else known_init,
            grid.spatial_shape, "known initial condition")
        self.segments = [grid_.segment_nodes(grid, seg) for seg in grid_.SEGMENT]


@dataclasses.dataclass(frozen=True)
class FunctionalBreakdown:
    """Unweighted parts of J and the weighted total."""
    residual: float
    trace_misfit: float
    flux_misfit: float
    init_penalty: float
    regularization: float
    total: float

    def as_dict(self) -> t.Dict[str, float]:
        return dataclasses.asdict(self)


###############################################################################
# Wave residual

def residual_scale(grid: grid_.SpaceTimeGrid) -> float:
    return grid.h_t * grid.h_x2 * grid.h_x1 / grid.h_t ** 4


def residual_stencil(u, grid: grid_.SpaceTimeGrid, k, m, n) -> float:
    """M_kmn at a single interior node."""
    if not (1 <= k <= grid.nt - 1 and 1 <= m <= grid.ny - 1 and 1 <= n <= grid.nx - 1):
        raise grid_.IndexOutOfInterior("({}, {}, {}) is not an interior node".format(k, m, n))
    u = getattr(u, 'values', u)
    return float((u[k + 1, m, n] + u[k - 1, m, n])
                 - grid.lam_y * (u[k, m + 1, n] + u[k, m - 1, n])
                 - grid.lam_x * (u[k, m, n + 1] + u[k, m, n - 1])
                 - grid.lam_t * u[k, m, n])


def residual_field(u, grid: grid_.SpaceTimeGrid) -> np.ndarray:
    """M_kmn at all interior nodes, shape (nt-1, ny-1, nx-1)."""
    c = u[1:-1, 1:-1, 1:-1]
    return ((u[2:, 1:-1, 1:-1] + u[:-2, 1:-1, 1:-1])
            - grid.lam_y * (u[1:-1, 2:, 1:-1] + u[1:-1, :-2, 1:-1])
            - grid.lam_x * (u[1:-1, 1:-1, 2:] + u[1:-1, 1:-1, :-2])
            - grid.lam_t * c)


def residual_field_t(r, grid: grid_.SpaceTimeGrid) -> np.ndarray:
    """Transpose of residual_field()."""
    out = np.zeros(grid.shape)
    out[2:, 1:-1, 1:-1] += r
    out[:-2, 1:-1, 1:-1] += r
    out[1:-1, 2:, 1:-1] -= grid.lam_y * r
    out[1:-1, :-2, 1:-1] -= grid.lam_y * r
    out[1:-1, 1:-1, 2:] -= grid.lam_x * r
    out[1:-1, 1:-1, :-2] -= grid.lam_x * r
    out[1:-1, 1:-1, 1:-1] -= grid.lam_t * r
    return out


def residual_term(u, grid: grid_.SpaceTimeGrid) -> float:
    u = getattr(u, 'values', u)
    m = residual_field(u, grid)
    return residual_scale(grid) * float(np.sum(m * m))


###############################################################################
# Boundary misfits

def _normal(u, nodes: grid_.SegmentNodes) -> np.ndarray:
    """Outward normal derivative by the interior two-point difference."""
    inner_rows, inner_cols = nodes.shifted(-1)
    return (u[:, nodes.rows, nodes.cols] - u[:, inner_rows, inner_cols]) / nodes.h_normal


def _boundary_residuals(u, spec: FunctionalSpec):
    for nodes in spec.segments:
        seg = nodes.segment
        yield (nodes,
               u[:, nodes.rows, nodes.cols] - spec.data.f[seg],
               _normal(u, nodes) - spec.data.g[seg])


def boundary_misfit(u, data: grid_.CauchyData, weights=None) -> t.Tuple[float, float]:
    """Unweighted (trace, flux) misfits against <data>.

    <weights> is ignored, both misfits are returned unweighted.
    """
    grid = data.grid
    u = grid_.check_shape(getattr(u, 'values', u), grid.shape, "field")
    trace = flux = 0.0
    for seg in grid_.SEGMENT:
        nodes = grid_.segment_nodes(grid, seg)
        w = grid.h_t * nodes.h_edge
        rf = u[:, nodes.rows, nodes.cols] - data.f[seg]
        rg = _normal(u, nodes) - data.g[seg]
        trace += w * float(np.sum(rf * rf))
        flux += w * float(np.sum(rg * rg))
    return trace, flux


###############################################################################
# Initial condition penalty

def initial_velocity(u, grid: grid_.SpaceTimeGrid) -> np.ndarray:
    """u_t at t = 0, inverting the Taylor start u^1 = u^0 + h_t v + h_t^2/2 Lap(u^0).

    The Laplacian term is only subtracted at interior nodes, boundary nodes
    keep the plain forward difference.
    """
    v = (u[1] - u[0]) / grid.h_t
    v[1:-1, 1:-1] -= 0.5 * grid.h_t * grid_.laplacian(u[0], grid)
    return v


def _init_residual(u, spec: FunctionalSpec) -> np.ndarray:
    if spec.kind is KIND.PHI:
        return initial_velocity(u, spec.grid) - spec.known_init
    return u[0] - spec.known_init


def init_penalty(u, spec: FunctionalSpec) -> float:
    u = getattr(u, 'values', u)
    r = _init_residual(u, spec)
    if spec.kind is KIND.PHI:
        return grid_.discrete_l2_sq(r, spec.grid)
    return grid_.discrete_h1_sq(r, spec.grid)


###############################################################################
# J and its gradient

def evaluate(u, spec: FunctionalSpec) -> FunctionalBreakdown:
    grid, w = spec.grid, spec.weights
    u = grid_.check_shape(getattr(u, 'values', u), grid.shape, "field")
    residual = residual_term(u, grid)
    trace, flux = boundary_misfit(u, spec.data)
    init = init_penalty(u, spec)
    reg = grid_.discrete_h2_sq(u, grid)
    total = (residual + w.w_trace * trace + w.w_flux * flux
             + w.w_init * init + w.epsilon * reg)
    return FunctionalBreakdown(residual, trace, flux, init, reg, total)


def value(u, spec: FunctionalSpec) -> float:
    return evaluate(u, spec).total


def gradient(u, spec: FunctionalSpec) -> np.ndarray:
    """Exact gradient of evaluate(u, spec).total with respect to every u_kmn."""
    grid, w = spec.grid, spec.weights
    u = grid_.check_shape(getattr(u, 'values', u), grid.shape, "field")

    grad = residual_field_t(2 * residual_scale(grid) * residual_field(u, grid), grid)

    for nodes, rf, rg in _boundary_residuals(u, spec):
        c = 2 * grid.h_t * nodes.h_edge
        inner_rows, inner_cols = nodes.shifted(-1)
        grad[:, nodes.rows, nodes.cols] += c * (w.w_trace * rf + w.w_flux * rg / nodes.h_normal)
        grad[:, inner_rows, inner_cols] -= c * w.w_flux * rg / nodes.h_normal

    if w.w_init:
        r = _init_residual(u, spec)
        if spec.kind is KIND.PHI:
            d = 2 * w.w_init * grid.area * r
            grad[1] += d / grid.h_t
            grad[0] -= d / grid.h_t
            grad[0] -= 0.5 * grid.h_t * grid_.laplacian_t(d[1:-1, 1:-1], grid)
        else:
            grad[0] += w.w_init * grid_.h1_sq_gradient(r, grid)

    grad += w.epsilon * grid_.h2_sq_gradient(u, grid)
    return grad
