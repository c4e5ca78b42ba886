"""Counter-based random number generation for reproducible parallel Monte Carlo.

Each trajectory owns a stream identified by (master_seed, stream_id). The k-th
uniform of a stream is a pure function of (master_seed, stream_id, k), so
results are independent of thread scheduling and replayable from any point.

The uniform source is Widynski's "squares" counter generator (5 rounds, 64-bit
output); per-stream keys are derived with splitmix64 and forced odd. Gaussian
deviates use the basic (trigonometric) Box-Muller transform with rejection of
u = 0; the polar variant is available as an option.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

U64 = np.uint64
_MASK64 = U64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = U64(0x9E3779B97F4A7C15)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True)
def splitmix64(x):
    x = U64(x) + _GOLDEN
    z = x
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(cache=True)
def stream_key(master_seed, stream_id):
    """Derive the squares key for a (master_seed, stream_id) pair; always odd."""
    a = splitmix64(U64(master_seed))
    b = splitmix64(U64(stream_id) ^ U64(0x632BE59BD9B4E019))
    return splitmix64(a ^ (b * _GOLDEN)) | U64(1)


@njit(cache=True)
def squares64(ctr, key):
    """Widynski squares64: 64-bit output from a 64-bit counter and key."""
    x = U64(ctr) * U64(key)
    y = x
    z = y + U64(key)
    x = x * x + y
    x = (x >> U64(32)) | (x << U64(32))
    x = x * x + z
    x = (x >> U64(32)) | (x << U64(32))
    x = x * x + y
    x = (x >> U64(32)) | (x << U64(32))
    t = x * x + z
    x = (t >> U64(32)) | (t << U64(32))
    return t ^ ((x * x + y) >> U64(32))


@njit(cache=True)
def uniform53(ctr, key):
    """Uniform double in [0, 1) with 53 random bits."""
    return float(squares64(ctr, key) >> U64(11)) * _TO_UNIT


@njit(cache=True)
def box_muller(key, ctr):
    """Basic Box-Muller pair. Returns (z0, z1, next_counter).

    u1 = 0 is rejected (the log would diverge); the counter then advances past
    the rejected draw, keeping the stream a pure function of its counter.
    """
    c = U64(ctr)
    u1 = uniform53(c, key)
    c += U64(1)
    while u1 == 0.0:
        u1 = uniform53(c, key)
        c += U64(1)
    u2 = uniform53(c, key)
    c += U64(1)
    r = math.sqrt(-2.0 * math.log(u1))
    a = 6.283185307179586 * u2
    return r * math.cos(a), r * math.sin(a), c


@njit(cache=True)
def box_muller_polar(key, ctr):
    """Polar (Marsaglia) variant; same contract as :func:`box_muller`."""
    c = U64(ctr)
    while True:
        x = 2.0 * uniform53(c, key) - 1.0
        c += U64(1)
        y = 2.0 * uniform53(c, key) - 1.0
        c += U64(1)
        s = x * x + y * y
        if 0.0 < s < 1.0:
            f = math.sqrt(-2.0 * math.log(s) / s)
            return x * f, y * f, c


@njit(cache=True)
def gaussian_fill(key, ctr, out):
    """Fill ``out`` with standard normals; returns the advanced counter."""
    n = out.shape[0]
    i = 0
    c = U64(ctr)
    while i < n:
        z0, z1, c = box_muller(key, c)
        out[i] = z0
        i += 1
        if i < n:
            out[i] = z1
            i += 1
    return c


class RngStream:
    """Stateful view of one reproducible stream.

    The state is just (master_seed, stream_id, counter); two streams with the
    same triple produce bit-identical sequences on any platform or thread
    count.
    """

    __slots__ = ("master_seed", "stream_id", "counter", "_cache", "_has_cache", "_key", "polar")

    def __init__(self, master_seed: int, stream_id: int, counter: int = 0, polar: bool = False):
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        self.counter = int(counter)
        self._key = stream_key(self.master_seed, self.stream_id)
        self._cache = 0.0
        self._has_cache = False
        self.polar = polar

    def uniform(self) -> float:
        u = uniform53(U64(self.counter), self._key)
        self.counter += 1
        return u

    def gaussian(self) -> float:
        if self._has_cache:
            self._has_cache = False
            return self._cache
        transform = box_muller_polar if self.polar else box_muller
        z0, z1, ctr = transform(self._key, U64(self.counter))
        self.counter = int(ctr)
        self._cache = z1
        self._has_cache = True
        return z0

    def gaussians(self, n: int) -> np.ndarray:
        out = np.empty(n)
        for i in range(n):
            out[i] = self.gaussian()
        return out


def gaussian_sample(stream: RngStream) -> float:
    """Next standard-normal deviate from the stream."""
    return stream.gaussian()
