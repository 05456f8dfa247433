# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

"""Exact initial conditions used to generate test data.

All phantoms vanish outside the closed unit square [0, 1]^2 (the support SQ(1)),
whatever grid they are sampled on.
"""

import logging
import typing as t

import numpy as np

from . import grid as grid_
from . import forward

log = logging.getLogger(__name__)

SUPPORT = 1.0
DELTA_CENTERS = ((0.4, 0.4), (0.7, 0.7))


def _masked(grid, values):
    return np.where(forward.support_mask(grid, SUPPORT), values, 0.0)


def zero(grid: grid_.SpaceTimeGrid) -> np.ndarray:
    return np.zeros(grid.spatial_shape)


def sine_full(grid: grid_.SpaceTimeGrid) -> np.ndarray:
    """sin(2 pi x1) sin(2 pi x2) on SQ(1)."""
    x1, x2 = grid.meshgrid()
    return _masked(grid, np.sin(2 * np.pi * x1) * np.sin(2 * np.pi * x2))


def sine_shifted(grid: grid_.SpaceTimeGrid) -> np.ndarray:
    """sin(pi/2 (x1 - 0.5)) sin(pi/2 (x2 - 0.5)) on SQ(1).

    Does not vanish on the edges of SQ(1), so it jumps there.
    """
    x1, x2 = grid.meshgrid()
    return _masked(grid, np.sin(np.pi / 2 * (x1 - 0.5)) * np.sin(np.pi / 2 * (x2 - 0.5)))


def delta_height(grid: grid_.SpaceTimeGrid) -> float:
    """Spike height whose pyramid over the 2h x 2h patch has unit volume."""
    return 3 / (4 * grid.h_x1 * grid.h_x2)


def delta_pair(grid: grid_.SpaceTimeGrid) -> np.ndarray:
    """Discrete delta functions at (0.4, 0.4) and (0.7, 0.7)."""
    values = zero(grid)
    for x1, x2 in DELTA_CENTERS:
        values[grid.row(x2), grid.column(x1)] = delta_height(grid)
    return values


def pyramid_volume(values, grid: grid_.SpaceTimeGrid) -> float:
    """Integral over the grid rectangle of the pyramid interpolant of <values>.

    Every node carries a square pyramid with its base corners on the four
    diagonal neighbours. Inside a cell the sum of pyramids is linear on each
    of the four triangles cut by the cell diagonals and equals half the
    corner sum at the cell centre. Pyramids of edge nodes are clipped.
    """
    v = np.asarray(values, dtype=float)
    low, high = v[:-1], v[1:]
    sides = (low[:, :-1] + low[:, 1:],    # bottom edge of each cell
             high[:, :-1] + high[:, 1:],  # top
             low[:, :-1] + high[:, :-1],  # left
             low[:, 1:] + high[:, 1:])    # right
    centre = 0.5 * (sides[0] + sides[1])
    triangle = grid.area / 4
    return float(sum(np.sum(side + centre) for side in sides) * triangle / 3)


PHANTOMS: t.Dict[str, t.Callable[[grid_.SpaceTimeGrid], np.ndarray]] = {
    'sine-full': sine_full,
    'sine-shifted': sine_shifted,
    'delta-pair': delta_pair,
    'zero': zero,
}


def make_phantom(name: str, grid: grid_.SpaceTimeGrid) -> np.ndarray:
    try:
        func = PHANTOMS[name]
    except KeyError:
        raise grid_.ConfigError("unknown phantom '{}', valid names: {}".format(
            name, ", ".join(sorted(PHANTOMS))))
    return func(grid)
