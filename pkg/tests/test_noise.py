# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

import numpy as np
import pytest

from qrmwave import grid as grid_
from qrmwave import noise
from qrmwave.grid import SEGMENT


def test_splitmix64_reference():
    assert [int(_) for _ in noise.splitmix64(0, 3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
    assert int(noise.splitmix64(0, 1, start=2)[0]) == 0x06C45D188009454F


def test_uniform_range_and_mean():
    draws = noise.uniform(12345, 100000)
    assert np.all(draws > -1) and np.all(draws < 1)
    assert abs(np.mean(draws)) < 0.01
    assert np.var(draws) == pytest.approx(1 / 3, rel=0.02)


def test_stream_keys():
    keys = {noise.stream_key(7, seg, name) for seg in SEGMENT for name in 'fg'}
    assert len(keys) == 8
    assert noise.stream_key(7, SEGMENT.G1, 'f') == int(noise.splitmix64(7, 1)[0])
    assert noise.stream_key(7, SEGMENT.G4, 'g') == int(noise.splitmix64(7, 8)[7])


@pytest.fixture
def ones(tiny_grid):
    return grid_.CauchyData.zeros(tiny_grid).map(lambda seg, name, a: np.ones_like(a))


def test_zero_noise_copies(ones):
    noisy = noise.add_noise(ones, noise.NoiseSpec(0.0, 5))
    for seg in SEGMENT:
        np.testing.assert_array_equal(noisy.f[seg], ones.f[seg])
        assert noisy.f[seg] is not ones.f[seg]


def test_multiplicative_bound(random_data, tiny_grid):
    clean = random_data(tiny_grid)
    noisy = noise.add_noise(clean, noise.NoiseSpec(0.25, 1))
    for (seg, name, a), (_, _, b) in zip(clean.items(), noisy.items()):
        assert np.all(np.abs(b - a) <= 0.25 * np.abs(a) + 1e-15)
        assert np.all(np.sign(b) == np.sign(a))


def test_zeros_stay_zero(tiny_grid):
    zeros = grid_.CauchyData.zeros(tiny_grid)
    noisy = noise.add_noise(zeros, noise.NoiseSpec(0.5, 3))
    assert noisy.max_abs() == 0


def test_reproducible_and_seeded(ones):
    a = noise.add_noise(ones, noise.NoiseSpec(0.5, 42))
    b = noise.add_noise(ones, noise.NoiseSpec(0.5, 42))
    c = noise.add_noise(ones, noise.NoiseSpec(0.5, 43))
    for seg in SEGMENT:
        np.testing.assert_array_equal(a.g[seg], b.g[seg])
        assert not np.array_equal(a.g[seg], c.g[seg])
    # Independent streams for f and g on the same segment
    assert not np.array_equal(a.f[SEGMENT.G1], a.g[SEGMENT.G1])


@pytest.mark.parametrize('gamma, seed', [(-0.1, 0), (0.1, -1), (0.1, 1 << 64)])
def test_invalid_spec(gamma, seed):
    with pytest.raises(grid_.ConfigError):
        noise.NoiseSpec(gamma, seed)


def test_large_noise_warns(caplog):
    noise.NoiseSpec(1.5)
    assert "flip signs" in caplog.text


def test_half_noise_on_ones():
    grid = grid_.square_grid(0, 1, 390.625, 0.25, 0.125)
    ones = grid_.CauchyData.zeros(grid).map(lambda seg, name, a: np.ones_like(a))
    noisy = noise.add_noise(ones, noise.NoiseSpec(0.5, 0))
    values = np.concatenate([a.ravel() for _, _, a in noisy.items()])
    assert values.size > 100000
    assert abs(np.mean(values) - 1) < 0.01
    assert np.all(values > 0.5) and np.all(values < 1.5)
