"""Layered pair-sum table against the brute-force definition."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conformalflow.kernel import layer_prefix_sums, layered_pair_sums, min_plus_one


def pair_sums_oracle(alpha: np.ndarray) -> np.ndarray:
    """C[l, s] = sum_{k=l}^{s-l} alpha_k alpha_{s-k}, term by term."""
    n = alpha.size
    table = np.zeros((n, 2 * n - 1), dtype=np.complex128)
    for l in range(n):
        for s in range(2 * n - 1):
            for k in range(l, s - l + 1):
                if k < n and 0 <= s - k < n:
                    table[l, s] += alpha[k] * alpha[s - k]
    return table


def random_state(seed: int, n: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=seed))
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def test_min_plus_one_values():
    assert min_plus_one(0, 0, 0, 0) == 1
    assert min_plus_one(3, 5, 4, 4) == 4
    assert min_plus_one(2, 7, 9, 0) == 1


def test_min_plus_one_symmetry():
    # S is invariant under n <-> j, k <-> m and (n,j) <-> (k,m)
    assert min_plus_one(3, 6, 2, 7) == min_plus_one(6, 3, 7, 2)
    assert min_plus_one(3, 6, 2, 7) == min_plus_one(2, 7, 3, 6)


@pytest.mark.parametrize("seed,n", [(0, 1), (1, 2), (2, 5), (3, 12)])
def test_table_matches_oracle(seed, n):
    alpha = random_state(seed, n)
    got = layered_pair_sums(alpha)
    want = pair_sums_oracle(alpha)
    assert got.shape == want.shape == (n, 2 * n - 1)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-13 * max(1.0, np.max(np.abs(want))))


def test_row_zero_is_self_convolution():
    alpha = random_state(7, 9)
    table = layered_pair_sums(alpha)
    np.testing.assert_allclose(table[0], np.convolve(alpha, alpha), rtol=1e-14)


def test_triangular_support():
    table = layered_pair_sums(random_state(11, 8))
    for l in range(table.shape[0]):
        assert np.all(table[l, : 2 * l] == 0.0)


def test_max_layer_truncates_rows():
    alpha = random_state(4, 10)
    full = layered_pair_sums(alpha)
    part = layered_pair_sums(alpha, max_layer=3)
    np.testing.assert_array_equal(part, full[:4])
    with pytest.raises(ValueError):
        layered_pair_sums(alpha, max_layer=10)


def test_prefix_sums_are_cumulative():
    table = layered_pair_sums(random_state(5, 7))
    prefix = layer_prefix_sums(table)
    np.testing.assert_allclose(prefix[3], table[:4].sum(axis=0), rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=10), st.integers(min_value=0, max_value=2**31))
def test_table_oracle_property(n, seed):
    alpha = random_state(seed, n)
    got = layered_pair_sums(alpha)
    want = pair_sums_oracle(alpha)
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(want))))
