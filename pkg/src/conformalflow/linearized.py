"""Second-variation operators L+/-, their spectra and algebraic structure.

Around a real stationary state A with frequency lambda, the functional
K = H/2 - lambda Q expands as K(A + a + ib) - K(A) = <L+ a, a> + <L- b, b> +
cubic terms.  For the ground state A(p) the operators have the closed form

    [L+-]_{nj} = 2 p^{|n-j|} - 2 p^{2+n+j} +- (1-p^2)^2 (n+1)(j+1) p^{n+j}
                 - (n+1) delta_{nj},

a Toeplitz part plus two rank-one corrections; for a single-mode state they
reduce to a diagonal plus an anti-diagonal band.  This module builds the
dense truncations and verifies the exactly-known spectra, the shift-operator
ladder that locates the negative eigenvalues at the negative integers, the
commutation relations, coercivity on the symplectically orthogonal subspace,
and the closed-form summation identities these facts rest on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .state import (
    GroundState,
    SingleMode,
    ground_amplitudes,
    ground_derivative,
)

__all__ = [
    "OperatorPair",
    "SpectralReport",
    "StabilityReport",
    "build_ground_ops",
    "build_single_mode_ops",
    "spectrum",
    "stability_spectrum",
    "commutators",
    "toeplitz_core",
    "ladder_check",
    "mu_ladder",
    "coercivity",
    "appendix_identities",
    "mode_energy_relation",
]


@dataclass
class OperatorPair:
    """Dense truncations of L+, L- with the diagonal weight M = diag(n+1)."""

    Lplus: np.ndarray
    Lminus: np.ndarray
    M: np.ndarray  # diagonal entries (n+1)
    about: GroundState | SingleMode

    @property
    def n_modes(self) -> int:
        return self.M.size


@dataclass
class SpectralReport:
    eigenvalues: np.ndarray  # sorted descending
    eigenvectors: np.ndarray  # columns matching eigenvalues
    residuals: np.ndarray
    zero_modes: int
    about: GroundState | SingleMode
    n_modes: int


@dataclass
class StabilityReport:
    omegas: np.ndarray  # nonnegative frequencies of the +-i Omega pairs, ascending
    p_eigenvalues: np.ndarray  # eigenvalues of M^-1 L- M^-1 L+ (should be >= 0)
    zero_geometric: int
    jordan_partners: int
    unstable: bool
    kernel_residuals: np.ndarray = field(default_factory=lambda: np.array([]))


def build_ground_ops(p: float, n_modes: int, tail_tol: float = 1e-10) -> OperatorPair:
    """L+-(p) truncated to n_modes; warns when p^{N/2} exceeds tail_tol."""
    if not 0.0 <= p < 1.0:
        raise ValueError("p must lie in [0, 1)")
    if p > 0.0 and p ** (n_modes / 2) > tail_tol:
        import warnings

        warnings.warn(
            f"truncation tail p^(N/2) = {p ** (n_modes / 2):.2e} exceeds {tail_tol:.1e}",
            stacklevel=2,
        )
    n = np.arange(n_modes)
    toeplitz = 2.0 * p ** np.abs(np.subtract.outer(n, n))
    pn = p**n
    rank_one = 2.0 * p * p * np.outer(pn, pn)
    weighted = (1.0 - p * p) ** 2 * np.outer((n + 1.0) * pn, (n + 1.0) * pn)
    diag = np.diag(n + 1.0)
    lplus = toeplitz - rank_one + weighted - diag
    lminus = toeplitz - rank_one - weighted - diag
    return OperatorPair(lplus, lminus, n + 1.0, GroundState(p))


def build_single_mode_ops(mode: int, c: float, n_modes: int) -> OperatorPair:
    """L+- for the single-mode state c delta_{n, mode}; requires N > 2 mode."""
    if n_modes <= 2 * mode:
        raise ValueError("truncation must exceed twice the mode index")
    n = np.arange(n_modes)
    diag = 2.0 * np.minimum(n, mode) + 1.0 - n
    lplus = np.diag(diag).astype(np.float64)
    lminus = np.diag(diag).astype(np.float64)
    for i in range(2 * mode + 1):
        coupling = min(i, mode, 2 * mode - i) + 1.0
        lplus[i, 2 * mode - i] += coupling
        lminus[i, 2 * mode - i] -= coupling
    scale = float(c) ** 2
    return OperatorPair(scale * lplus, scale * lminus, n + 1.0, SingleMode(mode, c))


def spectrum(ops: OperatorPair, which: str) -> SpectralReport:
    """Full symmetric eigendecomposition of L+ or L- with residual contract."""
    mat = _pick(ops, which)
    vals, vecs = scipy.linalg.eigh(mat)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    op_norm = float(np.max(np.abs(vals))) if vals.size else 0.0
    residuals = np.linalg.norm(mat @ vecs - vecs * vals, axis=0)
    if np.any(residuals > 1e-10 * max(op_norm, 1.0)):
        raise ArithmeticError("eigendecomposition residual contract violated")
    zero_modes = int(np.sum(np.abs(vals) <= 1e-8 * max(op_norm, 1.0)))
    return SpectralReport(vals, vecs, residuals, zero_modes, ops.about, ops.n_modes)


def _pick(ops: OperatorPair, which: str) -> np.ndarray:
    if which == "plus":
        return ops.Lplus
    if which == "minus":
        return ops.Lminus
    raise ValueError("which must be 'plus' or 'minus'")


def stability_spectrum(ops: OperatorPair, tol: float = 1e-8) -> StabilityReport:
    """Frequencies of the linearized flow from P = M^-1 L- M^-1 L+.

    Eigenvalues of P are Omega^2 = -Lambda^2; a negative real part or a
    significant imaginary part marks instability (or truncation failure).
    For the ground state the kernel structure (three eigenvectors, one
    Jordan partner) is verified explicitly.
    """
    minv = 1.0 / ops.M
    compose = (minv[:, None] * ops.Lminus) @ (minv[:, None] * ops.Lplus)
    vals = np.linalg.eigvals(compose)
    scale = max(float(np.max(np.abs(vals))), 1.0)
    unstable = bool(np.any(vals.real < -tol * scale) or np.any(np.abs(vals.imag) > tol * scale))
    nonzero = vals[np.abs(vals) > tol * scale]
    omegas = np.sort(np.sqrt(np.clip(nonzero.real, 0.0, None)))

    zero_geometric = 0
    jordan = 0
    kernel_residuals = np.array([])
    if isinstance(ops.about, GroundState):
        p = ops.about.p
        n_modes = ops.n_modes
        ground = ground_amplitudes(p, n_modes)
        dground = ground_derivative(p, n_modes)
        kernel_vecs = [
            (np.zeros(n_modes), ground),  # global phase
            (np.zeros(n_modes), ops.M * ground),  # local phase
            (dground, np.zeros(n_modes)),  # parameter direction
        ]
        big = np.block(
            [[np.zeros((n_modes, n_modes)), ops.Lminus], [-ops.Lplus, np.zeros((n_modes, n_modes))]]
        )
        residuals = []
        for a_part, b_part in kernel_vecs:
            vec = np.concatenate([a_part, b_part])
            residuals.append(np.linalg.norm(big @ vec) / max(np.linalg.norm(vec), 1e-300))
        kernel_residuals = np.array(residuals)
        zero_geometric = int(np.sum(kernel_residuals < 1e-7))
        # Jordan partner of (0, A): big @ (-A/2, 0) = M (0, A)
        partner = np.concatenate([-0.5 * ground, np.zeros(n_modes)])
        target = np.concatenate([np.zeros(n_modes), ops.M * ground])
        jres = np.linalg.norm(big @ partner - target) / np.linalg.norm(target)
        if jres < 1e-7:
            jordan = 1
    return StabilityReport(omegas, vals, zero_geometric, jordan, unstable, kernel_residuals)


def commutators(ops: OperatorPair, inner: int) -> tuple[float, float]:
    """Max |entry| of [L+, L-] and [M^-1 L+, M^-1 L-] over the leading block.

    The inner block (inner <= N/2) keeps truncation-tail contamination below
    tolerance; the operators commute exactly in the untruncated system.
    """
    if inner > ops.n_modes // 2:
        raise ValueError("inner block must not exceed N/2")
    lp, lm = ops.Lplus, ops.Lminus
    comm = lp @ lm - lm @ lp
    minv = 1.0 / ops.M
    tlp = minv[:, None] * lp
    tlm = minv[:, None] * lm
    comm_tilde = tlp @ tlm - tlm @ tlp
    return (
        float(np.max(np.abs(comm[:inner, :inner]))),
        float(np.max(np.abs(comm_tilde[:inner, :inner]))),
    )


def toeplitz_core(p: float, n_modes: int) -> np.ndarray:
    """T(p) with entries p^{|n-j|} - p^{n+j+2}; on the constrained subspace
    B+- = 2T and the negative spectrum of L+- equals that of 2T - M."""
    n = np.arange(n_modes)
    return p ** np.abs(np.subtract.outer(n, n)) - p ** (np.add.outer(n, n) + 2.0)


def _first_ladder_vector(p: float, n_modes: int) -> np.ndarray:
    """Closed-form eigenvector of 2T - M for eigenvalue -1 (regular at p = 0)."""
    v = np.zeros(n_modes)
    v[0] = p * p
    coeff = 1.0 - p * p
    # entries (1-p^2)[n(1-p^2) - (1+p^2)] p^{n-2}; the n = 1 entry simplifies
    # to -2p(1-p^2), which is regular at p = 0
    if n_modes > 1:
        v[1] = -2.0 * p * coeff
    if n_modes > 2:
        m = np.arange(2, n_modes)
        v[2:] = coeff * (m * (1.0 - p * p) - (1.0 + p * p)) * p ** (m - 2)
    return v


@dataclass
class LadderReport:
    p: float
    n_modes: int
    commutation_residual_S: float
    commutation_residual_Sstar: float
    v1_residual: float
    v1_shift_angle: float  # angle between S* v1 and A'(p)
    eigen_residuals: np.ndarray  # ||(2T - M) v_m + m v_m|| / ||v_m||, m = 1..m_max


def ladder_check(p: float, n_modes: int, m_max: int = 10, seed: int = 0) -> LadderReport:
    """Verify the creation/annihilation structure of 2T(p) - M.

    On vectors orthogonal to {A(p), M A(p)} the shift S and left-shift S*
    intertwine 2T - M with itself -+ I; iterating S on the closed-form first
    eigenvector generates eigenvalue -m for every m.
    """
    t_mat = toeplitz_core(p, n_modes)
    ladder_op = 2.0 * t_mat - np.diag(np.arange(1, n_modes + 1, dtype=np.float64))
    ground = ground_amplitudes(p, n_modes)
    weighted = np.arange(1, n_modes + 1) * ground

    rng = np.random.default_rng(np.random.Philox(key=seed))
    half = n_modes // 2
    a = np.zeros(n_modes)
    a[:half] = rng.standard_normal(half)
    # project onto the orthogonal complement of {A, MA} within the support window
    basis = np.stack([ground[:half], weighted[:half]])
    q, _ = np.linalg.qr(basis.T)
    a[:half] -= q @ (q.T @ a[:half])

    shifted = np.concatenate([[0.0], a[:-1]])  # S a
    lhs1 = ladder_op @ shifted
    rhs1 = np.concatenate([[0.0], (ladder_op @ a - a)[:-1]])  # S (2T - M - I) a
    res1 = np.linalg.norm(lhs1 - rhs1) / max(np.linalg.norm(a), 1e-300)

    unshifted = np.concatenate([a[1:], [0.0]])  # S* a
    lhs2 = ladder_op @ unshifted
    rhs2 = (ladder_op @ a + a)[1:]  # S* (2T - M + I) a
    res2 = np.linalg.norm(lhs2 - np.concatenate([rhs2, [0.0]])) / max(np.linalg.norm(a), 1e-300)

    v1 = _first_ladder_vector(p, n_modes)
    v1_res = np.linalg.norm(ladder_op @ v1 + v1) / np.linalg.norm(v1)

    dground = ground_derivative(p, n_modes)
    star = np.concatenate([v1[1:], [0.0]])
    if np.linalg.norm(star) == 0.0 or np.linalg.norm(dground) == 0.0:
        angle = 0.0
    else:
        unit = dground / np.linalg.norm(dground)
        rejection = star - (star @ unit) * unit
        angle = float(np.arcsin(min(1.0, np.linalg.norm(rejection) / np.linalg.norm(star))))

    eigen_res = []
    v = v1.copy()
    for m in range(1, m_max + 1):
        eigen_res.append(np.linalg.norm(ladder_op @ v + m * v) / np.linalg.norm(v))
        v = np.concatenate([[0.0], v[:-1]])  # v^{m+1} = S v^{m}
    return LadderReport(p, n_modes, res1, res2, v1_res, angle, np.array(eigen_res))


@dataclass
class MuLadderReport:
    p: float
    mus: np.ndarray  # 1/(m+1)
    residuals: np.ndarray  # ||T v - mu M v|| / ||M v||
    coefficients: list[np.ndarray]  # expansion of v^(m) over {M^j A}, x_m = 1


def mu_ladder(p: float, m_max: int, n_modes: int) -> MuLadderReport:
    """Eigenvectors of T(p) v = mu M v in the polynomial ladder span{M^j A}.

    v^(m) = M^m A - sum_{j<m} alpha_j M^j A is fixed by the eigen-condition
    with mu_m = 1/(m+1); the coefficients are obtained from a least-squares
    solve in the ladder basis and the residual is verified on the full
    truncation.
    """
    t_mat = toeplitz_core(p, n_modes)
    m_diag = np.arange(1, n_modes + 1, dtype=np.float64)
    ground = ground_amplitudes(p, n_modes)
    basis = [ground.copy()]
    for _ in range(m_max):
        basis.append(m_diag * basis[-1])

    mus, residuals, coeff_list = [], [], []
    for m in range(m_max + 1):
        mu = 1.0 / (m + 1)
        cols = np.stack(
            [t_mat @ basis[j] - mu * m_diag * basis[j] for j in range(m + 1)], axis=1
        )
        if m == 0:
            x = np.array([1.0])
        else:
            sol, *_ = np.linalg.lstsq(cols[:, :m], -cols[:, m], rcond=None)
            x = np.concatenate([sol, [1.0]])
        vec = sum(x[j] * basis[j] for j in range(m + 1))
        res = np.linalg.norm(t_mat @ vec - mu * m_diag * vec) / max(
            np.linalg.norm(m_diag * vec), 1e-300
        )
        mus.append(mu)
        residuals.append(res)
        coeff_list.append(x)
    return MuLadderReport(p, np.array(mus), np.array(residuals), coeff_list)


def coercivity(ops: OperatorPair) -> tuple[float, float]:
    """Largest h^{1/2}-Rayleigh quotients of L+- on the symplectically
    orthogonal subspace {<MA, a> = <MA', a> = 0}; both must be negative."""
    if not isinstance(ops.about, GroundState):
        raise ValueError("coercivity is defined for ground-state operators")
    p = ops.about.p
    n_modes = ops.n_modes
    ground = ground_amplitudes(p, n_modes)
    dground = ground_derivative(p, n_modes)
    w_half = np.sqrt(ops.M)  # W^{1/2} with W = diag(n+1)
    constraints = np.stack([(ops.M * ground) / w_half, (ops.M * dground) / w_half])
    null = scipy.linalg.null_space(constraints)
    out = []
    for mat in (ops.Lplus, ops.Lminus):
        scaled = (mat / w_half[:, None]) / w_half[None, :]
        projected = null.T @ scaled @ null
        vals = scipy.linalg.eigvalsh(projected)
        out.append(float(vals[-1]))
    return out[0], out[1]


def appendix_identities(p: float, n_max: int, tail_eps: float = 1e-22) -> dict[str, float]:
    """Max relative error of each closed-form summation identity vs direct sums.

    Infinite tails are summed until the geometric term drops below tail_eps.
    Keys: geometric_sum, geometric_weighted, kernel_row_le, kernel_row_ge,
    kernel_total, folded_sum, folded_weighted.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    kmax = max(200, int(np.ceil(np.log(tail_eps) / np.log(p))) + 2 * n_max + 4)
    errs: dict[str, float] = {}

    def rel(err: float, scale: float) -> float:
        return err / max(abs(scale), 1e-300)

    worst = {k: 0.0 for k in (
        "geometric_sum",
        "geometric_weighted",
        "kernel_row_le",
        "kernel_row_ge",
        "kernel_total",
        "folded_sum",
        "folded_weighted",
    )}
    for n in range(n_max + 1):
        k = np.arange(n + 1)
        direct = float(np.sum(p ** (2 * k)))
        closed = (1.0 - p ** (2 * n + 2)) / (1.0 - p * p)
        worst["geometric_sum"] = max(worst["geometric_sum"], rel(abs(direct - closed), closed))

        direct = float(np.sum(k * p ** (2 * k)))
        closed = p * p * (1.0 - (n + 1) * p ** (2 * n) + n * p ** (2 * n + 2)) / (1.0 - p * p) ** 2
        worst["geometric_weighted"] = max(
            worst["geometric_weighted"], rel(abs(direct - closed), max(closed, 1.0))
        )

        kk = np.arange(1, kmax)
        direct = float(np.sum(p ** (kk + np.abs(n - kk))))
        closed = (p * p + n * (1.0 - p * p)) / (1.0 - p * p) * p**n
        worst["folded_sum"] = max(worst["folded_sum"], rel(abs(direct - closed), closed))

        direct = float(np.sum(kk * p ** (kk + np.abs(n - kk))))
        closed = (
            (2 * p * p + n * (1.0 - p**4) + n * n * (1.0 - p * p) ** 2)
            / (2.0 * (1.0 - p * p) ** 2)
            * p**n
        )
        worst["folded_weighted"] = max(worst["folded_weighted"], rel(abs(direct - closed), closed))

    for n in range(n_max + 1):
        for j in range(n_max + 1):
            if j <= n:
                kk = np.arange(0, kmax)
                coeff = np.minimum(np.minimum(n, j), np.minimum(kk, n + kk - j)) + 1.0
                direct = float(np.sum(coeff * p ** (n + 2 * kk - j).astype(float)))
                closed = (p ** (n - j) - p ** (2 + j + n)) / (1.0 - p * p) ** 2
                worst["kernel_row_le"] = max(worst["kernel_row_le"], rel(abs(direct - closed), closed))
            if j >= n:
                kk = np.arange(j - n, kmax)
                coeff = np.minimum(np.minimum(n, j), np.minimum(kk, n + kk - j)) + 1.0
                direct = float(np.sum(coeff * p ** (n + 2 * kk - j).astype(float)))
                closed = (p ** (j - n) - p ** (2 + j + n)) / (1.0 - p * p) ** 2
                worst["kernel_row_ge"] = max(worst["kernel_row_ge"], rel(abs(direct - closed), closed))
                # exact integer identity: sum_k S = (1+j)(1+n)
                kk = np.arange(0, n + j + 1)
                coeff = np.minimum(np.minimum(n, j), np.minimum(kk, n + j - kk)) + 1
                direct_int = int(np.sum(coeff))
                closed_int = (1 + j) * (1 + n)
                worst["kernel_total"] = max(
                    worst["kernel_total"], float(abs(direct_int - closed_int))
                )
    errs.update(worst)
    return errs


def mode_energy_relation(p: float, n_modes: int | None = None) -> dict[str, float]:
    """<MA'(p), A(p)> (must vanish) and the closed form of <MA'(p), MA(p)>.

    The inner product equals 2p / (1-p^2)^2, which is half the p-derivative
    of the h^1 mass (1+p^2)/(1-p^2) and is strictly positive for p > 0.  The
    related series sum (n+1)^2 p^{2n} [n(1-p^2) - 2p^2] = 2p^2 / (1-p^2)^3 is
    checked as well; it differs from the inner product by a factor p/(1-p^2).
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if n_modes is None:
        n_modes = max(64, int(np.ceil(np.log(1e-16) / np.log(p))) + 8)
    m_diag = np.arange(1, n_modes + 1, dtype=np.float64)
    n = np.arange(n_modes, dtype=np.float64)
    ground = ground_amplitudes(p, n_modes)
    dground = ground_derivative(p, n_modes)
    ortho = float((m_diag * dground) @ ground)
    inner = float((m_diag * dground) @ (m_diag * ground))
    expected = 2.0 * p / (1.0 - p * p) ** 2
    series = float(np.sum(m_diag**2 * p ** (2 * n) * (n * (1 - p * p) - 2 * p * p)))
    series_expected = 2.0 * p * p / (1.0 - p * p) ** 3
    return {
        "orthogonality": ortho,
        "inner": inner,
        "expected_inner": expected,
        "inner_rel_err": abs(inner - expected) / expected,
        "series_rel_err": abs(series - series_expected) / series_expected,
    }
