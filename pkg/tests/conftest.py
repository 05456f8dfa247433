# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

import numpy as np
import pytest

from qrmwave import experiments
from qrmwave import functional
from qrmwave import g
from qrmwave import grid as grid_


@pytest.fixture
def rng():
    return np.random.default_rng(20140501)


@pytest.fixture
def tiny_grid():
    """5 x 5 x 5 nodes on [0, 1]^2 x [0, 0.5]."""
    return grid_.square_grid(0, 1, 0.5, 0.25, 0.125)


def _random_data(grid, rng, scale=1.0):
    shapes = {seg: (grid.nt + 1, len(grid_.segment_nodes(grid, seg))) for seg in grid_.SEGMENT}
    f = {seg: scale * rng.standard_normal(shape) for seg, shape in shapes.items()}
    h = {seg: scale * rng.standard_normal(shape) for seg, shape in shapes.items()}
    return grid_.CauchyData(grid, f, h)


@pytest.fixture
def random_data(rng):
    """Factory of Cauchy data with standard normal entries."""
    return lambda grid, scale=1.0: _random_data(grid, rng, scale)


@pytest.fixture
def make_spec(rng):
    """Factory of functionals with random data and random known initial condition."""
    def make(grid, kind=functional.KIND.PHI, weights=None):
        weights = weights or functional.Weights.balanced(kind)
        return functional.FunctionalSpec(grid, kind, weights, _random_data(grid, rng),
                                         rng.standard_normal(grid.spatial_shape))
    return make


@pytest.fixture
def small_preset():
    """Whole-boundary phi-problem on SQ(1), coarse enough for unit tests."""
    return experiments.load_preset('test3', h=0.1, ht=0.05, T=0.5, noise=[0.05])


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / 'small.ini'
    path.write_text("[run]\ntest = test3\nh = 0.1\nht = 0.05\nT = 0.5\n"
                    "noise = 0.05\niters = 5\n")
    return str(path)


@pytest.fixture(autouse=True)
def no_user_config(tmp_path, monkeypatch):
    monkeypatch.setattr(g, 'CONFIGFILE', str(tmp_path / 'missing' / 'qrmwave.conf'))
