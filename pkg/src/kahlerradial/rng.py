"""Counter-based random numbers keyed by (seed, stream, path, counter).

Every variate is a pure function of its key, so results do not depend on the
order in which paths are simulated or on how they are split into chunks.  The
bits come from nested SplitMix64 finalizers; uniforms use the top 53 bits and
normals come in Box-Muller pairs.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def counter_bits(seed, stream, path, counter):
    x = _mix64(np.uint64(seed) + _GOLDEN)
    x = _mix64(x ^ (np.uint64(stream) * _GOLDEN + np.uint64(path)))
    return _mix64(x ^ (np.uint64(counter) * _M1 + _GOLDEN))


@njit(cache=True, inline="always")
def counter_uniform(seed, stream, path, counter):
    """Uniform variate in the open interval (0, 1)."""
    bits = counter_bits(seed, stream, path, counter)
    return (float(bits >> _S11) + 0.5) * _INV_2_53


@njit(cache=True, inline="always")
def counter_normal_pair(seed, stream, path, counter):
    """Two independent standard normals for one key (uses streams 2*stream, 2*stream+1)."""
    s2 = np.uint64(stream) * np.uint64(2)
    u1 = counter_uniform(seed, s2, path, counter)
    u2 = counter_uniform(seed, s2 + np.uint64(1), path, counter)
    rad = math.sqrt(-2.0 * math.log(u1))
    return rad * math.cos(_TWO_PI * u2), rad * math.sin(_TWO_PI * u2)


@njit(cache=True)
def _fill_normals(seed, stream, path_start, counter, out):
    n = out.shape[0]
    for i in range(0, n, 2):
        z1, z2 = counter_normal_pair(seed, stream, path_start + np.uint64(i // 2), counter)
        out[i] = z1
        if i + 1 < n:
            out[i + 1] = z2


@njit(cache=True)
def _fill_uniforms(seed, stream, path_start, counter, out):
    for i in range(out.shape[0]):
        out[i] = counter_uniform(seed, stream, path_start + np.uint64(i), counter)


def uniforms(seed: int, stream: int, counter: int, size: int, path_start: int = 0) -> np.ndarray:
    """Uniforms for paths path_start .. path_start+size-1 at a fixed counter."""
    out = np.empty(size)
    _fill_uniforms(np.uint64(seed), np.uint64(stream), np.uint64(path_start), np.uint64(counter), out)
    return out


def normals(seed: int, stream: int, counter: int, size: int, path_start: int = 0) -> np.ndarray:
    """``size`` standard normals; entries 2j, 2j+1 share the key of path path_start+j."""
    out = np.empty(size)
    _fill_normals(np.uint64(seed), np.uint64(stream), np.uint64(path_start), np.uint64(counter), out)
    return out
