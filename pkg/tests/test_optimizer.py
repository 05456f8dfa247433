# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

import numpy as np
import pytest

from qrmwave import functional
from qrmwave import grid as grid_
from qrmwave import optimizer
from qrmwave.functional import KIND


@pytest.mark.parametrize('options', [dict(max_iters=0), dict(restart_period=0)])
def test_config_rejects_bad_values(options):
    with pytest.raises(grid_.ConfigError):
        optimizer.CgConfig(**options)


def test_defaults():
    config = optimizer.CgConfig()
    assert config.max_iters == 300
    assert config.restart_period == 50
    assert config.grad_tol is None


def test_monotone_descent(tiny_grid, make_spec):
    spec = make_spec(tiny_grid, KIND.PHI)
    u, history = optimizer.minimize(spec, optimizer.CgConfig(max_iters=30, restart_period=7))
    j = history.j_value
    assert history.iterations == 30
    assert u.shape == tiny_grid.shape
    for before, after in zip(j, j[1:]):
        assert after <= before + 1e-12 * abs(before)
    assert j[-1] < j[0]
    assert j[-1] == pytest.approx(functional.value(u, spec))


def test_history_rows(tiny_grid, make_spec):
    spec = make_spec(tiny_grid, KIND.PSI)
    _, history = optimizer.minimize(spec, optimizer.CgConfig(max_iters=5))
    rows = list(history.rows())
    assert len(rows) == len(history) == 6
    assert rows[0][0] == 0 and rows[0][3] == 0.0
    assert rows[0][1] == pytest.approx(functional.value(np.zeros(tiny_grid.shape), spec))
    assert [r[0] for r in rows] == list(range(6))
    assert all(r[3] > 0 for r in rows[1:])
    assert optimizer.ConvergenceHistory.columns == ('iter', 'J', 'grad_norm_sq', 'alpha')


def test_callback(tiny_grid, make_spec):
    seen = []

    def callback(it, u, history):
        seen.append((it, len(history)))

    optimizer.minimize(make_spec(tiny_grid), optimizer.CgConfig(max_iters=4), callback)
    assert seen == [(1, 2), (2, 3), (3, 4), (4, 5)]


def test_zero_gradient_stops_immediately(tiny_grid):
    data = grid_.CauchyData.zeros(tiny_grid)
    spec = functional.FunctionalSpec(tiny_grid, KIND.PHI, functional.Weights(), data)
    u, history = optimizer.minimize(spec)
    assert history.iterations == 0
    assert not np.any(u)


def test_exact_step_minimizes_along_direction(tiny_grid, make_spec, rng):
    spec = make_spec(tiny_grid)
    u = rng.standard_normal(tiny_grid.shape)
    d = rng.standard_normal(tiny_grid.shape)
    g = functional.gradient(u, spec)
    alpha = optimizer.exact_step(g, d, spec, u)
    best = functional.value(u + alpha * d, spec)
    for factor in (0.9, 1.1, -1.0):
        assert best < functional.value(u + factor * alpha * d, spec)


def test_exact_step_failures(tiny_grid, make_spec, rng):
    spec = make_spec(tiny_grid)
    u = rng.standard_normal(tiny_grid.shape)
    d = rng.standard_normal(tiny_grid.shape)
    # A fake gradient making d.Hd = -|d|^2
    g = functional.gradient(u + d, spec) + d
    with pytest.raises(optimizer.DegenerateCurvature):
        optimizer.exact_step(g, d, spec, u)
    with pytest.raises(optimizer.NonFiniteEncountered):
        optimizer.exact_step(np.full(tiny_grid.shape, np.nan), d, spec, u)


@pytest.mark.parametrize('weights', [
    functional.Weights(epsilon=0.1),
    functional.Weights(epsilon=0.1, w_trace=10, w_flux=2, w_init=5),
])
def test_matches_dense_solve(weights, make_spec):
    """On 64 unknowns CG reaches the minimum of the assembled quadratic."""
    grid = grid_.square_grid(0, 0.75, 0.375, 0.25, 0.125)
    spec = make_spec(grid, KIND.PHI, weights)
    size = int(np.prod(grid.shape))
    assert size == 64

    zero = np.zeros(grid.shape)
    b = -functional.gradient(zero, spec).ravel()
    hessian = np.empty((size, size))
    for i in range(size):
        e = np.zeros(size)
        e[i] = 1.0
        hessian[:, i] = functional.gradient(e.reshape(grid.shape), spec).ravel() + b
    np.testing.assert_allclose(hessian, hessian.T, atol=1e-9 * np.max(np.abs(hessian)))
    best = np.linalg.solve(hessian, b).reshape(grid.shape)
    j_best = functional.value(best, spec)

    config = optimizer.CgConfig(max_iters=1000, restart_period=10000,
                                grad_tol=1e-18 * float(b @ b))
    u, history = optimizer.minimize(spec, config)
    assert history.j_value[-1] == pytest.approx(j_best, rel=1e-8)
    assert functional.value(u, spec) >= j_best - 1e-10 * abs(j_best)
