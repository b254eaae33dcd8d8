"""Counter-based normal variates (Philox4x32-10 + Box-Muller).

Each variate is a pure function of (seed, replicate, step, site): the
counter is (site // 2, step, replicate, 0), the key is the two 32-bit halves
of the seed, and the two sites sharing a counter take the cosine and sine
branch of one Box-Muller pair.
"""
from __future__ import annotations

import math

import numba
import numpy as np

__all__ = ["philox4x32", "rng_stream", "normals"]

M0 = np.uint64(0xD2511F53)
M1 = np.uint64(0xCD9E8D57)
W0 = np.uint64(0x9E3779B9)
W1 = np.uint64(0xBB67AE85)
MASK = np.uint64(0xFFFFFFFF)
TWO_PI = 2.0 * math.pi
INV_2_53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True, inline="always")
def _philox(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = M0 * c0
        p1 = M1 * c2
        hi0, lo0 = p0 >> np.uint64(32), p0 & MASK
        hi1, lo1 = p1 >> np.uint64(32), p1 & MASK
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0) & MASK, lo1, (hi0 ^ c3 ^ k1) & MASK, lo0
        k0 = (k0 + W0) & MASK
        k1 = (k1 + W1) & MASK
    return c0, c1, c2, c3


@numba.njit(cache=True)
def _philox_block(ctr, key):
    out = np.empty(4, dtype=np.uint64)
    r = _philox(ctr[0], ctr[1], ctr[2], ctr[3], key[0], key[1])
    out[0], out[1], out[2], out[3] = r
    return out


def philox4x32(counter, key):
    """Philox4x32-10 of a 4-word counter and 2-word key (lists of ints)."""
    ctr = np.array(counter, dtype=np.uint64) & MASK
    k = np.array(key, dtype=np.uint64) & MASK
    return [int(v) for v in _philox_block(ctr, k)]


@numba.njit(cache=True, inline="always")
def _normal(seed_lo, seed_hi, rep, step, site):
    c0 = np.uint64(site // 2)
    x0, x1, x2, x3 = _philox(c0 & MASK, np.uint64(step) & MASK, np.uint64(rep) & MASK,
                             np.uint64(0), seed_lo, seed_hi)
    # two 53-bit uniforms in (0, 1)
    u1 = (float((x0 >> np.uint64(5)) * np.uint64(67108864) + (x1 >> np.uint64(6))) + 0.5) * INV_2_53
    u2 = (float((x2 >> np.uint64(5)) * np.uint64(67108864) + (x3 >> np.uint64(6))) + 0.5) * INV_2_53
    r = math.sqrt(-2.0 * math.log(u1))
    if site % 2 == 0:
        return r * math.cos(TWO_PI * u2)
    return r * math.sin(TWO_PI * u2)


@numba.njit(cache=True)
def _normals(seed_lo, seed_hi, reps, step, nsites, out):
    for i in range(reps.shape[0]):
        rep = reps[i]
        for j in range(0, nsites, 2):
            c0 = np.uint64(j // 2)
            x0, x1, x2, x3 = _philox(c0 & MASK, np.uint64(step) & MASK, np.uint64(rep) & MASK,
                                     np.uint64(0), seed_lo, seed_hi)
            u1 = (float((x0 >> np.uint64(5)) * np.uint64(67108864) + (x1 >> np.uint64(6))) + 0.5) * INV_2_53
            u2 = (float((x2 >> np.uint64(5)) * np.uint64(67108864) + (x3 >> np.uint64(6))) + 0.5) * INV_2_53
            r = math.sqrt(-2.0 * math.log(u1))
            out[i, j] = r * math.cos(TWO_PI * u2)
            if j + 1 < nsites:
                out[i, j + 1] = r * math.sin(TWO_PI * u2)
    return out


def _split_seed(seed):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


def rng_stream(seed, replicate_id, step, site):
    """One standard normal variate, a pure function of its four arguments."""
    lo, hi = _split_seed(seed)
    return float(_normal(lo, hi, int(replicate_id), int(step), int(site)))


def normals(seed, replicates, step, nsites, out=None):
    """Array of shape (len(replicates), nsites) with rng_stream values."""
    lo, hi = _split_seed(seed)
    reps = np.asarray(replicates, dtype=np.int64)
    if out is None:
        out = np.empty((reps.shape[0], nsites))
    return _normals(lo, hi, reps, int(step), int(nsites), out)
