"""Counter-based uniform generator built on the SplitMix64 finaliser.

Every draw is a pure function of ``(seed, stream, counter)``, so values do
not depend on generation order, chunking or thread count.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# named streams keep independent draws apart under the same seed
STREAMS = {
    "factors": 1,
    "content": 2,
    "style": 3,
    "subsample": 4,
    "shuffle": 5,
    "iob_subsample": 6,
}


def mix64(z):
    """SplitMix64 output function on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _mix_int(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, stream) -> int:
    if isinstance(stream, str):
        stream = STREAMS[stream]
    return _mix_int(_mix_int(int(seed) * GOLDEN + 0x632BE59BD9B4E019) ^ int(stream))


def random_bits(seed: int, stream, counters) -> np.ndarray:
    """64-bit outputs for the given counter values."""
    key = np.uint64(stream_key(seed, stream))
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = key + (c + np.uint64(1)) * np.uint64(GOLDEN)
    return mix64(state)


def uniform(seed: int, stream, shape, offset: int = 0) -> np.ndarray:
    """float64 uniforms on [0, 1) for counters ``offset .. offset + prod(shape) - 1``."""
    shape = (int(shape),) if np.isscalar(shape) else tuple(int(s) for s in shape)
    count = int(np.prod(shape))
    counters = np.arange(offset, offset + count, dtype=np.uint64)
    bits = random_bits(seed, stream, counters)
    return ((bits >> np.uint64(11)).astype(np.float64) * 2.0**-53).reshape(shape)


def permutation(seed: int, stream, n: int) -> np.ndarray:
    """Permutation of ``range(n)`` obtained by sorting counter-based keys."""
    keys = random_bits(seed, stream, np.arange(n, dtype=np.uint64))
    return np.argsort(keys, kind="stable")


def choice(seed: int, stream, n: int, m: int) -> np.ndarray:
    """``m`` distinct indices from ``range(n)`` in ascending order."""
    if m >= n:
        return np.arange(n)
    return np.sort(permutation(seed, stream, n)[:m])
