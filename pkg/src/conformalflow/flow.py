"""Conformal-flow vector field and adaptive embedded Runge-Kutta integration.

The evolution equation is d alpha / dt = -i F(alpha) with

    [F(alpha)]_n = (1/(n+1)) sum_{j,k} S(n,j,k,n+j-k) conj(alpha_j) alpha_k alpha_{n+j-k}.

``vector_field_fast`` evaluates F in O(N^2) through the layered pair-sum
table; ``vector_field_naive`` is the cubic oracle.  The integrator is a
Dormand-Prince 5(4) pair with proportional step control; steps are capped at
the next sample time so samples are exact integrator states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .kernel import layer_prefix_sums, layered_pair_sums
from .observables import charge, energy_fast, higher_charge
from .state import weighted_norm

__all__ = [
    "vector_field_naive",
    "vector_field_fast",
    "IntegratorConfig",
    "TrajectoryRecord",
    "integrate",
    "linearized_rhs",
    "FlowError",
    "StepSizeUnderflow",
]


class FlowError(RuntimeError):
    """Numerical failure during integration (NaN state, oracle mismatch)."""


class StepSizeUnderflow(FlowError):
    """Adaptive step size collapsed; carries the time reached."""

    def __init__(self, t_reached: float):
        super().__init__(f"step size underflow at t = {t_reached:.6g}")
        self.t_reached = t_reached


def vector_field_naive(alpha: np.ndarray) -> np.ndarray:
    """Direct O(N^3) evaluation of F(alpha) from the quadruple-sum definition."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    n_modes = alpha.size
    out = np.zeros(n_modes, dtype=np.complex128)
    for n in range(n_modes):
        acc = 0.0 + 0.0j
        for j in range(n_modes):
            s = n + j
            k = np.arange(max(0, s - n_modes + 1), min(s, n_modes - 1) + 1)
            m = s - k
            coeff = np.minimum(np.minimum(k, m), min(n, j)) + 1
            acc += np.conj(alpha[j]) * np.sum(coeff * alpha[k] * alpha[m])
        out[n] = acc / (n + 1.0)
    return out


@lru_cache(maxsize=8)
def _gather_indices(n_modes: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(n_modes)
    return np.minimum.outer(idx, idx), np.add.outer(idx, idx)


def vector_field_fast(alpha: np.ndarray) -> np.ndarray:
    """O(N^2) evaluation: (n+1) F_n = sum_j conj(alpha_j) D[min(n,j), n+j]

    where D is the layer-cumulative pair-sum table.
    """
    alpha = np.asarray(alpha, dtype=np.complex128)
    n_modes = alpha.size
    prefix = layer_prefix_sums(layered_pair_sums(alpha))
    layer_ix, degree_ix = _gather_indices(n_modes)
    gathered = prefix[layer_ix, degree_ix]
    weights = np.arange(1, n_modes + 1, dtype=np.float64)
    return gathered @ np.conj(alpha) / weights


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 1.0
    t_end: float = 10.0
    sample_dt: float = 0.1
    renormalize_Q: bool = False
    #: cross-check the fast field against the cubic oracle every this many
    #: accepted steps; applied only at N <= 48, disabled when None
    oracle_check_stride: int | None = 1000
    oracle_check_tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.sample_dt <= 0 or self.t_end <= 0 or self.max_step <= 0:
            raise ValueError("time parameters must be positive")


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    states: np.ndarray  # shape (n_samples, N)
    H: np.ndarray
    Q: np.ndarray
    E: np.ndarray
    accepted: int = 0
    rejected: int = 0
    renormalized: bool = False

    def max_relative_drift(self) -> dict[str, float]:
        out = {}
        for name, series in (("H", self.H), ("Q", self.Q), ("E", self.E)):
            ref = series[0]
            scale = max(abs(ref), 1e-300)
            out[name] = float(np.max(np.abs(series - ref)) / scale)
        return out


# Dormand-Prince 5(4) tableau; the 5th-order solution is propagated.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def _error_norm(err: np.ndarray, y0: np.ndarray, y1: np.ndarray, cfg: IntegratorConfig) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    with np.errstate(over="ignore"):
        norm = float(np.sqrt(np.mean(np.abs(err / scale) ** 2)))
    return norm


def integrate(
    alpha0: np.ndarray,
    cfg: IntegratorConfig,
    backward: bool = False,
) -> TrajectoryRecord:
    """Integrate d alpha/dt = -i F(alpha) to cfg.t_end with samples at sample_dt.

    ``backward`` negates the vector field (time-reversed run over [0, t_end]).
    """
    y = np.asarray(alpha0, dtype=np.complex128).copy()
    if not np.all(np.isfinite(y.view(np.float64))):
        raise FlowError("initial state contains NaN/Inf")
    n_modes = y.size
    sign = 1.0 if not backward else -1.0

    def rhs(state: np.ndarray) -> np.ndarray:
        return sign * (-1j) * vector_field_fast(state)

    q0 = charge(y)
    sample_times = [0.0]
    n_samples = int(round(cfg.t_end / cfg.sample_dt))
    targets = [min((i + 1) * cfg.sample_dt, cfg.t_end) for i in range(n_samples)]
    if not targets or targets[-1] < cfg.t_end:
        targets.append(cfg.t_end)

    states = [y.copy()]
    cons = [(energy_fast(y), charge(y), higher_charge(y))]
    t = 0.0
    h = min(cfg.max_step, cfg.sample_dt, 0.1)
    accepted = rejected = 0
    k = np.empty((7, n_modes), dtype=np.complex128)
    k[0] = rhs(y)

    for target in targets:
        while t < target - 1e-14 * max(1.0, target):
            h = min(h, cfg.max_step, target - t)
            if h < 1e-14 * max(1.0, abs(t)):
                raise StepSizeUnderflow(t)
            with np.errstate(over="ignore", invalid="ignore"):
                for i in range(1, 7):
                    yi = y + h * (_DP_A[i] @ k[:i])
                    k[i] = rhs(yi)
                y5 = y + h * (_DP_B5 @ k)
                err = h * ((_DP_B5 - _DP_B4) @ k)
            if not np.all(np.isfinite(y5.view(np.float64))):
                # overflow in a trial step: reject and retry with a smaller one
                rejected += 1
                h *= 0.2
                k[1:] = 0.0
                continue
            enorm = _error_norm(err, y, y5, cfg)
            if enorm <= 1.0:
                t += h
                y = y5
                accepted += 1
                if cfg.renormalize_Q:
                    y *= math.sqrt(q0 / charge(y))
                    k[0] = rhs(y)
                else:
                    k[0] = k[6]  # FSAL
                if (
                    cfg.oracle_check_stride
                    and n_modes <= 48
                    and accepted % cfg.oracle_check_stride == 0
                ):
                    _oracle_check(y, cfg.oracle_check_tol)
            else:
                rejected += 1
            factor = 0.9 * enorm ** (-0.2) if enorm > 0 else 5.0
            h *= min(5.0, max(0.2, factor))
        sample_times.append(target)
        states.append(y.copy())
        cons.append((energy_fast(y), charge(y), higher_charge(y)))

    cons_arr = np.array(cons)
    return TrajectoryRecord(
        times=np.array(sample_times),
        states=np.array(states),
        H=cons_arr[:, 0],
        Q=cons_arr[:, 1],
        E=cons_arr[:, 2],
        accepted=accepted,
        rejected=rejected,
        renormalized=cfg.renormalize_Q,
    )


def _oracle_check(y: np.ndarray, tol: float) -> None:
    fast = vector_field_fast(y)
    naive = vector_field_naive(y)
    scale = max(weighted_norm(naive, 1.0), 1e-300)
    rel = weighted_norm(fast - naive, 1.0) / scale
    if rel > tol:
        raise FlowError(f"fast/naive vector-field mismatch: rel err {rel:.3e}")


def linearized_rhs(
    a: np.ndarray, b: np.ndarray, ops: "OperatorPair"  # noqa: F821
) -> tuple[np.ndarray, np.ndarray]:
    """Linearized evolution M da/dt = L_- b, M db/dt = -L_+ a around ops.about."""
    minv = 1.0 / ops.M
    return minv * (ops.Lminus @ b), -minv * (ops.Lplus @ a)
