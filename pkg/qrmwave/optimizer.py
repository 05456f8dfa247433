# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

"""Nonlinear conjugate gradient for the quadratic QRM functional.

Polak-Ribiere+ directions with periodic restarts and an exact line search:
J is quadratic, so d.Hd = (grad J(u + d) - grad J(u)).d costs one extra
gradient evaluation and gives the exact minimizing step.
The iteration count is the regularization knob, early stopping is off by default.
"""

import dataclasses
import logging
import typing as t

import numpy as np

from . import grid as grid_
from . import functional

log = logging.getLogger(__name__)

ITERS = 300
RESTART = 50


class NonDescentDirection(grid_.NumericError):
    pass


class NonFiniteEncountered(grid_.NumericError):
    pass


class DegenerateCurvature(grid_.NumericError):
    pass


@dataclasses.dataclass(frozen=True)
class CgConfig:
    max_iters: int = ITERS
    grad_tol: t.Optional[float] = None
    restart_period: int = RESTART
    log_every: int = 50
    line_search: str = 'exact-quadratic'  # the only one there is

    def __post_init__(self):
        if self.max_iters < 1:
            raise grid_.ConfigError("max_iters must be >= 1, got {!r}".format(self.max_iters))
        if self.restart_period < 1:
            raise grid_.ConfigError("restart_period must be >= 1, got {!r}".format(
                self.restart_period))


class ConvergenceHistory(object):
    """Per-iterate J, squared gradient norm and the step that led there.

    Row 0 is the starting point, with a zero step.
    """
    columns = ('iter', 'J', 'grad_norm_sq', 'alpha')

    def __init__(self):
        self.j_value: t.List[float] = []
        self.grad_norm_sq: t.List[float] = []
        self.step_alpha: t.List[float] = []

    def append(self, j_value, grad_norm_sq, alpha):
        self.j_value.append(float(j_value))
        self.grad_norm_sq.append(float(grad_norm_sq))
        self.step_alpha.append(float(alpha))

    def __len__(self):
        return len(self.j_value)

    @property
    def iterations(self):
        return len(self) - 1

    def rows(self):
        for i, row in enumerate(zip(self.j_value, self.grad_norm_sq, self.step_alpha)):
            yield (i,) + row


def _dot(a, b) -> float:
    # Fixed-order reduction, numpy's pairwise summation on a contiguous copy
    return float(np.dot(a.ravel(), b.ravel()))


def exact_step(g, d, spec: functional.FunctionalSpec, u) -> float:
    """Step minimizing J(u + alpha d), <g> being the gradient at <u>."""
    hd = functional.gradient(u + d, spec) - g
    curvature = _dot(hd, d)
    if not np.isfinite(curvature):
        raise NonFiniteEncountered("curvature along search direction is {}".format(curvature))
    if curvature <= 0:
        raise DegenerateCurvature("d.Hd = {!r} <= 0 along a nonzero direction".format(curvature))
    return -_dot(g, d) / curvature


def minimize(spec: functional.FunctionalSpec, config: CgConfig = None,
             callback: t.Optional[t.Callable] = None
             ) -> t.Tuple[np.ndarray, ConvergenceHistory]:
    """Minimize J from u = 0. Return the final field and the history.

    <callback>, if given, is called as callback(iteration, u, history) after
    every step.
    """
    config = config or CgConfig()
    history = ConvergenceHistory()

    u = np.zeros(spec.grid.shape)
    g = functional.gradient(u, spec)
    gg = _dot(g, g)
    history.append(functional.value(u, spec), gg, 0.0)
    d = -g

    for it in range(1, config.max_iters + 1):
        if gg == 0 or (config.grad_tol is not None and gg <= config.grad_tol):
            log.debug("Converged at iteration %d, |g|^2 = %g", it - 1, gg)
            break

        gd = _dot(g, d)
        if gd >= 0:
            if gd > 1e-6 * gg:
                raise NonDescentDirection("g.d = {!r} > 0 at iteration {}".format(gd, it))
            log.warning("Restarting CG at iteration %d: g.d = %g", it, gd)
            d = -g
            gd = -gg

        alpha = exact_step(g, d, spec, u)
        u = u + alpha * d
        g_new = functional.gradient(u, spec)
        j = functional.value(u, spec)
        gg_new = _dot(g_new, g_new)
        if not (np.isfinite(j) and np.isfinite(gg_new)):
            raise NonFiniteEncountered("J = {}, |g|^2 = {} at iteration {}".format(j, gg_new, it))
        history.append(j, gg_new, alpha)

        if config.log_every and it % config.log_every == 0:
            log.debug("CG %4d: J = %.6e, |g|^2 = %.6e, alpha = %.3e", it, j, gg_new, alpha)
        if callback is not None:
            callback(it, u, history)

        beta = max(0.0, _dot(g_new, g_new - g) / gg)
        if it % config.restart_period == 0 or beta == 0:
            d = -g_new
        else:
            d = -g_new + beta * d
        g, gg = g_new, gg_new

    return u, history
