# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

"""Multiplicative pseudo-random noise on Cauchy data.

Every stored sample v becomes v * (1 + gamma * N), N uniform in (-1, 1).

Draws come from SplitMix64, fully specified below so that any implementation
can reproduce them bit for bit:

    state_i = key + (i + 1) * 0x9E3779B97F4A7C15          (mod 2^64)
    z = state_i
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9              (mod 2^64)
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB              (mod 2^64)
    z =  z ^ (z >> 31)
    N_i = 2 * ((z >> 12) + 0.5) / 2^52 - 1                 in (-1, 1), exact in binary64

Each (segment, function) pair has its own stream. Its key is draw number
<stream> of the SplitMix64 sequence seeded by the user seed, where
stream = 2 * (segment number - 1) + (0 for f, 1 for g). Samples are taken in
C order of the (time level, node) array.
"""

import dataclasses
import logging

import numpy as np

from . import grid as grid_

log = logging.getLogger(__name__)

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1   = np.uint64(0xBF58476D1CE4E5B9)
MIX2   = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1


@dataclasses.dataclass(frozen=True)
class NoiseSpec:
    gamma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise grid_.ConfigError("noise level must be >= 0, got {!r}".format(self.gamma))
        if not 0 <= self.seed <= MASK64:
            raise grid_.ConfigError("seed must be an unsigned 64-bit integer, got {!r}".format(
                self.seed))
        if self.gamma >= 1:
            log.warning("Noise level %g >= 1 may flip signs of the data", self.gamma)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def splitmix64(key: int, count: int, start=0) -> np.ndarray:
    """Outputs start+1 ... start+count of the SplitMix64 sequence seeded by <key>."""
    steps = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over='ignore'):
        return _mix(np.uint64(key & MASK64) + steps * GOLDEN)


def uniform(key: int, count: int) -> np.ndarray:
    """<count> draws uniform in the open interval (-1, 1)."""
    bits = splitmix64(key, count) >> np.uint64(12)
    return 2 * ((bits.astype(np.float64) + 0.5) / 2.0 ** 52) - 1


def stream_key(seed: int, segment: grid_.SEGMENT, name: str) -> int:
    stream = 2 * (segment.value - 1) + (0 if name == 'f' else 1)
    return int(splitmix64(seed, 1, start=stream)[0])


def add_noise(data: grid_.CauchyData, spec: NoiseSpec) -> grid_.CauchyData:
    """Return a noisy copy of <data>. Zero samples stay exactly zero."""
    if spec.gamma == 0:
        return data.map(lambda seg, name, a: a.copy())

    def corrupt(seg, name, values):
        draws = uniform(stream_key(spec.seed, seg, name), values.size).reshape(values.shape)
        return values * (1 + spec.gamma * draws)

    log.debug("Adding %g%% noise, seed %d", 100 * spec.gamma, spec.seed)
    return data.map(corrupt)


if __name__ == '__main__':
    # Reference draws for cross-implementation checks
    print([hex(int(_)) for _ in splitmix64(0, 3)])
    print(uniform(stream_key(12345, grid_.SEGMENT.G1, 'f'), 5))
