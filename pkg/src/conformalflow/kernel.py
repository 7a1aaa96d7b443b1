"""Resonant interaction coefficients and the layered pair-sum table.

The quartic coupling S(n, j, k, m) = min(n, j, k, m) + 1 (with n + j = k + m)
admits the representation S = sum_{l=0}^{min} 1.  Splitting every quartic
contraction by the layer index l turns cubic-cost sums into sums over the
table

    C_l(s) = sum_{k=l}^{s-l} alpha_k alpha_{s-k},

which costs O(N^2) in total: the l = 0 row is a plain self-convolution and
each subsequent row follows from the endpoint recurrence

    C_{l+1}(s) = C_l(s) - 2 alpha_l alpha_{s-l}.
"""

from __future__ import annotations

import numpy as np

__all__ = ["min_plus_one", "layered_pair_sums", "layer_prefix_sums"]


def min_plus_one(n: int, j: int, k: int, m: int) -> int:
    """Interaction coefficient of the resonant quartet (n, j, k, m).

    Callers pass m = n + j - k; the resonance condition n + j = k + m is
    checked with a debug assertion only.
    """
    assert n + j == k + m, "non-resonant quartet"
    return min(n, j, k, m) + 1


def layered_pair_sums(alpha: np.ndarray, max_layer: int | None = None) -> np.ndarray:
    """Table C[l, s] = sum_{k=l}^{s-l} alpha_k alpha_{s-k}.

    Parameters
    ----------
    alpha : complex array of length N (truncated mode vector)
    max_layer : highest layer l to fill; defaults to N - 1.

    Returns
    -------
    C : complex array of shape (max_layer + 1, 2N - 1); entries outside the
        triangular index set s >= 2l are zero.
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    n = alpha.size
    if max_layer is None:
        max_layer = n - 1
    if not 0 <= max_layer <= n - 1:
        raise ValueError(f"max_layer must lie in [0, {n - 1}], got {max_layer}")
    width = 2 * n - 1
    table = np.zeros((max_layer + 1, width), dtype=np.complex128)
    table[0] = np.convolve(alpha, alpha)
    s = np.arange(width)
    for l in range(max_layer):
        row = table[l].copy()
        lo = 2 * (l + 1)
        # endpoint pair alpha_l alpha_{s-l}; alpha is zero above n - 1
        hi = min(width - 1, n - 1 + l)
        if hi >= lo:
            sel = s[lo : hi + 1]
            row[sel] -= 2.0 * alpha[l] * alpha[sel - l]
        row[:lo] = 0.0
        table[l + 1] = row
    return table


def layer_prefix_sums(table: np.ndarray) -> np.ndarray:
    """Cumulative layers D[a, s] = sum_{l=0}^{a} C[l, s].

    This is the kernel contraction sum_l [l <= a] C_l(s) that appears in the
    sub-cubic vector field evaluation.
    """
    return np.cumsum(table, axis=0)
