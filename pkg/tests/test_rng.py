import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from kahlerradial.rng import normals, uniforms


def test_uniform_open_interval_and_law():
    u = uniforms(1, 0, 0, 200_000)
    assert np.all((u > 0) & (u < 1))
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_normal_law_and_pair_independence():
    z = normals(5, 3, 17, 200_000)
    assert stats.kstest(z, "norm").pvalue > 1e-3
    z1, z2 = z[0::2], z[1::2]
    assert abs(np.corrcoef(z1, z2)[0, 1]) < 4 / np.sqrt(len(z1))
    assert abs(np.corrcoef(z1**2, z2**2)[0, 1]) < 4 / np.sqrt(len(z1))


def test_streams_and_counters_differ():
    a = uniforms(9, 0, 0, 1000)
    assert not np.array_equal(a, uniforms(9, 1, 0, 1000))
    assert not np.array_equal(a, uniforms(9, 0, 1, 1000))
    assert not np.array_equal(a, uniforms(10, 0, 0, 1000))
    assert abs(np.corrcoef(a, uniforms(9, 1, 0, 1000))[0, 1]) < 0.15


@given(seed=st.integers(0, 2**64 - 1), start=st.integers(0, 10**6), size=st.integers(1, 50))
@settings(max_examples=30, deadline=None)
def test_chunking_is_invisible(seed, start, size):
    whole = uniforms(seed, 4, 7, start + size)
    part = uniforms(seed, 4, 7, size, path_start=start)
    assert np.array_equal(whole[start:], part)


def test_deterministic():
    assert np.array_equal(normals(123, 2, 99, 1001), normals(123, 2, 99, 1001))
