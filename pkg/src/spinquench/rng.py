"""Counter-based random numbers (Threefry-2x32, 20 rounds).

Every random draw is a pure function of (key, counter), so the noise put
into a given plane-wave mode depends only on the seed, the stream label and
the mode's integer wavenumbers.  Refining the grid at fixed box size adds
new modes but leaves the low-k realisations untouched.
"""

from __future__ import annotations

import numpy as np

_ROT = (13, 15, 26, 6, 17, 29, 16, 24)
_PARITY = np.uint32(0x1BD11BDA)
_M32 = 0xFFFFFFFF


def _rotl(x, r):
    return (x << np.uint32(r)) | (x >> np.uint32(32 - r))


def threefry2x32(key, c0, c1):
    """Threefry-2x32-20 block function, vectorised over the counter words.

    ``key`` is a pair of 32-bit ints; ``c0``, ``c1`` broadcastable uint32 arrays.
    Returns the two output words as uint32 arrays.
    """
    k0 = np.uint32(int(key[0]) & _M32)
    k1 = np.uint32(int(key[1]) & _M32)
    ks = (k0, k1, _PARITY ^ k0 ^ k1)
    x0 = np.asarray(c0, dtype=np.uint32) + ks[0]
    x1 = np.asarray(c1, dtype=np.uint32) + ks[1]
    x0, x1 = np.broadcast_arrays(x0, x1)
    x0 = x0.copy()
    x1 = x1.copy()
    with np.errstate(over="ignore"):
        for i in range(20):
            x0 += x1
            x1 = _rotl(x1, _ROT[i % 8])
            x1 ^= x0
            if i % 4 == 3:
                s = (i + 1) // 4
                x0 += ks[s % 3]
                x1 += ks[(s + 1) % 3] + np.uint32(s)
    return x0, x1


def _split_seed(seed: int) -> tuple[int, int]:
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return seed & _M32, seed >> 32


def stream_key(seed: int, stream: int) -> tuple[int, int]:
    """Derive an independent key for a labelled stream of a 64-bit seed."""
    a, b = threefry2x32(_split_seed(seed), np.uint32(stream & _M32), np.uint32(stream >> 32))
    return int(a), int(b)


def uniforms(key, c0, c1):
    """Two arrays of uniforms in (0, 1] from the two output words."""
    a, b = threefry2x32(key, np.asarray(c0).astype(np.uint32), np.asarray(c1).astype(np.uint32))
    scale = 1.0 / 4294967296.0
    return (a.astype(np.float64) + 1.0) * scale, (b.astype(np.float64) + 1.0) * scale


def complex_normal(seed: int, stream: int, c0, c1, variance: float = 1.0):
    """Circular complex Gaussians with E|z|^2 = variance, one per counter pair.

    Box-Muller: |z|^2 is exponential, the phase uniform.
    """
    key = stream_key(seed, stream)
    u1, u2 = uniforms(key, c0, c1)
    r = np.sqrt(-variance * np.log(u1))
    return r * np.exp(2j * np.pi * u2)
