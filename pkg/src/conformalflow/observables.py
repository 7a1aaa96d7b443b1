"""Conserved quantities H, Q, E, the gap Q^2 - H, and the functional K.

``energy_naive`` is the trusted cubic-cost oracle taken straight from the
quadruple-sum definition; ``energy_fast`` is the quadratic-cost production
path built on the layered pair-sum table.  The two are kept independent so
that every fast-path bug shows up as a disagreement.
"""

from __future__ import annotations

import math

import numpy as np

from .kernel import layered_pair_sums

__all__ = [
    "charge",
    "higher_charge",
    "energy_naive",
    "energy_fast",
    "gap",
    "functional_K",
    "hankel_identity_check",
]

#: accumulate with math.fsum above this truncation (quartic sums amplify rounding)
_COMPENSATED_N = 256


def charge(alpha: np.ndarray) -> float:
    """Q(alpha) = sum (n+1) |alpha_n|^2."""
    alpha = np.asarray(alpha)
    n = np.arange(alpha.size)
    return float(np.sum((n + 1.0) * np.abs(alpha) ** 2))


def higher_charge(alpha: np.ndarray) -> float:
    """E(alpha) = sum (n+1)^2 |alpha_n|^2."""
    alpha = np.asarray(alpha)
    n = np.arange(alpha.size)
    return float(np.sum((n + 1.0) ** 2 * np.abs(alpha) ** 2))


def energy_naive(alpha: np.ndarray, imag_tol: float = 1e-12) -> float:
    """Quartic energy from the raw quadruple sum; O(N^3) oracle.

    The n <-> j symmetry halves the index set.  The accumulated value must be
    real; a relative imaginary part above ``imag_tol`` signals an indexing bug
    and raises ``ArithmeticError``.
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    n_modes = alpha.size
    acc = 0.0 + 0.0j
    for n in range(n_modes):
        for j in range(n, n_modes):
            s = n + j
            k = np.arange(max(0, s - n_modes + 1), min(s, n_modes - 1) + 1)
            m = s - k
            coeff = np.minimum(np.minimum(k, m), min(n, j)) + 1
            inner = np.sum(coeff * alpha[k] * alpha[m])
            weight = 1.0 if j == n else 2.0
            acc += weight * np.conj(alpha[n] * alpha[j]) * inner
    scale = max(1.0, abs(acc))
    if abs(acc.imag) > imag_tol * scale:
        raise ArithmeticError(
            f"energy accumulated a non-real value: imag={acc.imag:.3e}, |H|={abs(acc):.3e}"
        )
    return float(acc.real)


def energy_fast(alpha: np.ndarray) -> float:
    """Quartic energy via the layered representation H = sum_{l,s} |C_l(s)|^2."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    table = layered_pair_sums(alpha)
    sq = np.abs(table) ** 2
    if alpha.size > _COMPENSATED_N:
        return math.fsum(sq.ravel())
    return float(np.sum(sq))


def gap(alpha: np.ndarray) -> float:
    """G(alpha) = Q(alpha)^2 - H(alpha); nonnegative, zero on geometric states."""
    return charge(alpha) ** 2 - energy_fast(alpha)


def functional_K(alpha: np.ndarray, lam: float) -> float:
    """K(alpha) = H(alpha)/2 - lambda Q(alpha); standing waves are its critical points."""
    return 0.5 * energy_fast(alpha) - lam * charge(alpha)


def hankel_identity_check(x: np.ndarray, palindrome_tol: float = 1e-12) -> tuple[float, float]:
    """Both sides of the quadratic-form identity behind the energy bound.

    ``x`` has length n + 1 and must be palindromic, x_k = x_{n-k}.  The left
    side is the full quadratic form

        sum_k (k+1)(n+1-k) |x_k|^2 - sum_{j,k} [min(j, n-j, k, n-k) + 1] conj(x_j) x_k,

    the right side the sum of squared differences over half indices,

        4 sum_{j < k <= n//2} (j+1) w_k |x_j - x_k|^2,

    with w_k = 1 except w_{n/2} = 1/2 when n is even (the middle entry is
    self-paired).  Both sides vanish iff x is constant.
    """
    x = np.asarray(x, dtype=np.complex128)
    n = x.size - 1
    scale = max(1.0, float(np.max(np.abs(x)))) if x.size else 1.0
    if np.max(np.abs(x - x[::-1])) > palindrome_tol * scale:
        raise ValueError("input is not palindromic")

    k = np.arange(n + 1)
    lhs_diag = float(np.sum((k + 1.0) * (n + 1.0 - k) * np.abs(x) ** 2))
    depth = np.minimum(k, n - k)
    coeff = np.minimum.outer(depth, depth) + 1.0
    lhs_cross = np.real(np.conj(x) @ (coeff @ x))
    lhs = lhs_diag - float(lhs_cross)

    half = n // 2
    rhs = 0.0
    for j in range(half):
        for kk in range(j + 1, half + 1):
            w = 0.5 if (n % 2 == 0 and kk == half) else 1.0
            rhs += 4.0 * (j + 1) * w * abs(x[j] - x[kk]) ** 2
    return lhs, rhs
