# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

"""Forward wave solver and lateral Cauchy data extraction.

Solves u_tt = Laplacian(u) in a rectangle with zero Dirichlet walls by the
explicit leapfrog scheme, then reads traces and outward normal derivatives off
the boundary of a smaller, nested inverse domain.
"""

import logging
import typing as t

import numpy as np

from . import grid as grid_

log = logging.getLogger(__name__)

# Nodes with |x - SQ(a)| below this are considered inside the support square
SUPPORT_TOL = 1e-9


class SupportViolation(grid_.DataError):
    pass


def support_mask(grid: grid_.SpaceTimeGrid, a=None) -> np.ndarray:
    """Boolean spatial mask of nodes inside the closed square [0, a]^2."""
    a = grid.a if a is None else a
    x1, x2 = grid.meshgrid()
    tol = SUPPORT_TOL * max(1.0, a)
    return ((x1 >= -tol) & (x1 <= a + tol) &
            (x2 >= -tol) & (x2 <= a + tol))


class ForwardProblem(object):
    """Cauchy problem data on a (usually enlarged) forward grid."""

    def __init__(self, grid: grid_.SpaceTimeGrid, phi=None, psi=None):
        self.grid = grid
        self.phi = grid_.check_shape(np.zeros(grid.spatial_shape) if phi is None else phi,
                                     grid.spatial_shape, "phi")
        self.psi = grid_.check_shape(np.zeros(grid.spatial_shape) if psi is None else psi,
                                     grid.spatial_shape, "psi")

        outside = ~support_mask(grid)
        for name, values in (('phi', self.phi), ('psi', self.psi)):
            if np.any(values[outside] != 0):
                raise SupportViolation("{} is nonzero outside SQ({:g})".format(name, grid.a))
            walls = np.concatenate((values[0], values[-1], values[:, 0], values[:, -1]))
            if np.any(walls != 0):
                raise SupportViolation("{} is nonzero on the Dirichlet wall".format(name))


def leapfrog_step(prev, cur, grid: grid_.SpaceTimeGrid) -> np.ndarray:
    """Next time level from the two previous ones, zero on the walls.

    The scheme is symmetric in time: passing (next, cur) yields prev.
    """
    new = np.zeros_like(cur)
    new[1:-1, 1:-1] = (2 * cur[1:-1, 1:-1] - prev[1:-1, 1:-1]
                       + grid.h_t ** 2 * grid_.laplacian(cur, grid))
    return new


def solve_forward(problem: ForwardProblem) -> grid_.Field:
    """Leapfrog solution with a second-order Taylor start.

    u^0 = phi, u^1 = phi + h_t psi + h_t^2/2 Lap(phi),
    u^{k+1} = 2u^k - u^{k-1} + h_t^2 Lap(u^k).
    """
    grid = problem.grid
    if not grid.cfl_ok:
        raise grid_.CflViolation("lambda_x + lambda_y = {:g} > 1 on forward grid {}".format(
            grid.lam_x + grid.lam_y, grid.describe()))

    u = np.zeros(grid.shape)
    u[0] = problem.phi
    if grid.nt >= 1:
        u[1, 1:-1, 1:-1] = (problem.phi[1:-1, 1:-1] + grid.h_t * problem.psi[1:-1, 1:-1]
                            + 0.5 * grid.h_t ** 2 * grid_.laplacian(problem.phi, grid))
    for k in range(1, grid.nt):
        u[k + 1] = leapfrog_step(u[k - 1], u[k], grid)

    if not np.all(np.isfinite(u)):
        raise grid_.NumericError("forward solution has non-finite values")
    log.debug("Forward solve on %s: max |u| = %g", grid.describe(), np.max(np.abs(u)))
    return grid_.Field(grid, u)


def discrete_energy(field, grid: grid_.SpaceTimeGrid) -> np.ndarray:
    """Leapfrog-conserved energy between consecutive levels, N_t values."""
    u = np.asarray(getattr(field, 'values', field))
    kinetic = np.sum(((u[1:] - u[:-1]) / grid.h_t) ** 2, axis=(1, 2))
    d1 = grid_.diff1(u, 2, grid.h_x1)
    d2 = grid_.diff1(u, 1, grid.h_x2)
    potential = (np.sum(d1[1:] * d1[:-1], axis=(1, 2))
                 + np.sum(d2[1:] * d2[:-1], axis=(1, 2)))
    return grid.area * (kinetic + potential)


###############################################################################
# Inverse domain plumbing

def _offsets(forward_grid: grid_.SpaceTimeGrid,
             inverse_grid: grid_.SpaceTimeGrid) -> t.Tuple[int, int]:
    """Index of the inverse grid origin inside the forward grid.

    Requires identical steps and time axis, aligned nodes and the whole
    inverse domain inside the forward one.
    """
    fg, ig = forward_grid, inverse_grid
    same = all(abs(getattr(fg, _) - getattr(ig, _)) <= 1e-12 * getattr(fg, _)
               for _ in ('h_x1', 'h_x2', 'h_t', 'T'))
    if not same or fg.nt != ig.nt:
        raise grid_.GridMismatch("inverse grid {} does not share steps with forward grid {}".format(
            ig.describe(), fg.describe()))
    try:
        n0 = fg.column(ig.x1_min)
        m0 = fg.row(ig.x2_min)
    except grid_.NodeMisaligned as e:
        raise grid_.GridMismatch("inverse grid is not aligned with forward grid: {}".format(e))
    if n0 + ig.nx > fg.nx or m0 + ig.ny > fg.ny:
        raise grid_.GridMismatch("inverse grid {} does not fit inside forward grid {}".format(
            ig.describe(), fg.describe()))
    return m0, n0


def restrict(field, forward_grid, inverse_grid) -> grid_.Field:
    """Cut a forward-domain field down to the inverse domain."""
    u = np.asarray(getattr(field, 'values', field))
    m0, n0 = _offsets(forward_grid, inverse_grid)
    return grid_.Field(inverse_grid, u[:, m0:m0 + inverse_grid.ny + 1,
                                       n0:n0 + inverse_grid.nx + 1].copy())


def restrict_spatial(values, forward_grid, inverse_grid) -> np.ndarray:
    m0, n0 = _offsets(forward_grid, inverse_grid)
    return np.asarray(values)[m0:m0 + inverse_grid.ny + 1, n0:n0 + inverse_grid.nx + 1].copy()


def extract_cauchy(field, forward_grid, inverse_grid,
                   far_sides_zero=True) -> grid_.CauchyData:
    """Traces and outward normal derivatives on the inverse domain boundary.

    The normal derivative is read from inside the inverse domain by the
    two-point difference (u_0 - u_1) / h, u_1 being the next node inward,
    the same stencil the functional applies to its unknown. An initial
    condition meeting the boundary with nonzero slope makes the derivative
    jump across it.
    With <far_sides_zero> G3 and G4 are set to exact zeros.
    """
    u = np.asarray(getattr(field, 'values', field))
    far = (grid_.SEGMENT.G3, grid_.SEGMENT.G4)
    m0, n0 = _offsets(forward_grid, inverse_grid)
    f, g = {}, {}
    for seg in grid_.SEGMENT:
        nodes = grid_.segment_nodes(inverse_grid, seg)
        if far_sides_zero and seg in far:
            f[seg] = np.zeros((inverse_grid.nt + 1, len(nodes)))
            g[seg] = np.zeros((inverse_grid.nt + 1, len(nodes)))
            continue
        inner_rows, inner_cols = nodes.shifted(-1)
        f[seg] = u[:, nodes.rows + m0, nodes.cols + n0]
        g[seg] = (f[seg] - u[:, inner_rows + m0, inner_cols + n0]) / nodes.h_normal

    return grid_.CauchyData(inverse_grid, f, g)


if __name__ == '__main__':
    # Standing wave sanity check: cos(sqrt(2) pi t) sin(pi x1) sin(pi x2)
    logging.basicConfig(level=logging.DEBUG)
    for h in (0.1, 0.05, 0.025):
        g = grid_.square_grid(0, 1, 0.5, h, h / 2)
        x1, x2 = g.meshgrid()
        phi = np.sin(np.pi * x1) * np.sin(np.pi * x2)
        phi[[0, -1], :] = phi[:, [0, -1]] = 0  # sin(pi) roundoff on the walls
        sol = solve_forward(ForwardProblem(g, phi))
        exact = (np.cos(np.sqrt(2) * np.pi * g.times)[:, None, None]
                 * (np.sin(np.pi * x1) * np.sin(np.pi * x2))[None])
        print(h, np.max(np.abs(sol.values - exact)))
