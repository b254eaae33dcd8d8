import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shemoments.rng import normals, philox4x32, rng_stream

MASK = 0xFFFFFFFF


def ref_philox(ctr, key):
    """Plain-Python Philox4x32-10."""
    c = list(ctr)
    k0, k1 = key
    for _ in range(10):
        p0 = 0xD2511F53 * c[0]
        p1 = 0xCD9E8D57 * c[2]
        c = [((p1 >> 32) ^ c[1] ^ k0) & MASK, p1 & MASK, ((p0 >> 32) ^ c[3] ^ k1) & MASK, p0 & MASK]
        k0 = (k0 + 0x9E3779B9) & MASK
        k1 = (k1 + 0xBB67AE85) & MASK
    return c


def ref_normal(seed, rep, step, site):
    x = ref_philox([site // 2, step & MASK, rep & MASK, 0], [seed & MASK, seed >> 32])
    u1 = ((x[0] >> 5) * 67108864 + (x[1] >> 6) + 0.5) / 2 ** 53
    u2 = ((x[2] >> 5) * 67108864 + (x[3] >> 6) + 0.5) / 2 ** 53
    r = math.sqrt(-2 * math.log(u1))
    return r * (math.cos if site % 2 == 0 else math.sin)(2 * math.pi * u2)


# Known-answer vectors for Philox4x32-10 (Random123 distribution)
KAT = [
    ([0, 0, 0, 0], [0, 0], [0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8]),
    ([MASK] * 4, [MASK, MASK], [0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD]),
    ([0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344], [0xA4093822, 0x299F31D0],
     [0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1]),
]


@pytest.mark.parametrize("ctr,key,out", KAT)
def test_known_answers(ctr, key, out):
    assert philox4x32(ctr, key) == out
    assert ref_philox(ctr, key) == out


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 2 ** 20), st.integers(0, 2 ** 20), st.integers(0, 2 ** 16))
def test_matches_reference_and_is_pure(seed, rep, step, site):
    v = rng_stream(seed, rep, step, site)
    assert v == rng_stream(seed, rep, step, site)
    assert v == pytest.approx(ref_normal(seed, rep, step, site), rel=1e-13, abs=1e-15)


def test_batch_agrees_with_scalar():
    reps = [0, 5, 17]
    out = normals(42, reps, 9, 11)
    for i, r in enumerate(reps):
        for j in range(11):
            assert out[i, j] == rng_stream(42, r, 9, j)
    # replicate subsets give the same rows, whatever else is in the batch
    np.testing.assert_array_equal(normals(42, [17], 9, 11)[0], out[2])


def test_replicates_uncorrelated():
    a = normals(7, [0], 3, 10_000)[0]
    for r in (1, 2, 1000):
        b = normals(7, [r], 3, 10_000)[0]
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.05
    assert abs(np.corrcoef(a, normals(8, [0], 3, 10_000)[0])[0, 1]) < 0.05
    assert abs(np.corrcoef(a, normals(7, [0], 4, 10_000)[0])[0, 1]) < 0.05
    # cosine and sine branches of one pair
    assert abs(np.corrcoef(a[0::2], a[1::2])[0, 1]) < 0.05


def test_moments_of_a_million_draws():
    z = normals(123, np.arange(100), 0, 10_000).ravel()
    n = z.size
    assert abs(z.mean()) < 4 / math.sqrt(n)
    assert abs(z.var() - 1) < 4 * math.sqrt(2 / n)
    assert abs(np.mean(z ** 4) - 3) < 4 * math.sqrt(96 / n)
    assert np.all(np.isfinite(z))
