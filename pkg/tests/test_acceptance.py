"""Acceptance suite: one criterion per test, one printed pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see every line as it is
produced; without ``-s`` the lines appear in the captured-output section of
any failing test.
"""

import sys
import time

import numpy as np
import pytest

import conformalflow as cf
from conformalflow.lab import (
    PerturbationSpec,
    generate_perturbation,
    random_state,
    run_inequality_scan,
)

TRACK_T_END = 100.0


def report(num: int, name: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num:02d} {name}: {status} ({detail})", file=sys.stderr, flush=True)


def test_criterion_01_energy_bound():
    start = time.perf_counter()
    scan = run_inequality_scan(n_random=10_000, n_geometric=100, n_modes=32, seed=0)
    elapsed = time.perf_counter() - start
    ok = (
        scan["min_gap_random"] >= -1e-10
        and scan["max_gap_geometric"] <= 1e-9
        and elapsed <= 60.0
    )
    report(
        1,
        "energy-bound",
        ok,
        f"min gap {scan['min_gap_random']:.3e}, geometric |gap| {scan['max_gap_geometric']:.3e}, "
        f"{elapsed:.1f}s",
    )
    assert ok


def test_criterion_02_oracle_equivalence():
    rng = np.random.Generator(np.random.Philox(key=1))
    worst_h = worst_f = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 49))
        alpha = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        h_naive = cf.energy_naive(alpha)
        worst_h = max(worst_h, abs(cf.energy_fast(alpha) - h_naive) / max(abs(h_naive), 1.0))
        f_naive = cf.vector_field_naive(alpha)
        scale = max(float(np.max(np.abs(f_naive))), 1.0)
        worst_f = max(
            worst_f, float(np.max(np.abs(cf.vector_field_fast(alpha) - f_naive))) / scale
        )

    sizes = np.array([32, 64, 128, 256])
    timings = []
    for n in sizes:
        alpha = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        reps = max(20, 4000 // n)
        cf.energy_fast(alpha)  # warm caches
        best = min(
            (lambda t0: (cf.energy_fast(alpha), time.perf_counter() - t0)[1])(
                time.perf_counter()
            )
            for _ in range(reps)
        )
        timings.append(best)
    slope = float(np.polyfit(np.log(sizes), np.log(timings), 1)[0])

    ok = worst_h <= 1e-12 and worst_f <= 1e-12 and slope <= 2.5
    report(
        2,
        "oracle-equivalence",
        ok,
        f"H rel err {worst_h:.2e}, F rel err {worst_f:.2e}, H timing slope {slope:.2f}",
    )
    assert ok


def test_criterion_03_conservation():
    alpha0 = random_state(2024, 64, q_normalize=1.0)
    cfg = cf.IntegratorConfig(
        t_end=100.0, sample_dt=1.0, rel_tol=1e-10, oracle_check_stride=None
    )
    start = time.perf_counter()
    traj = cf.integrate(alpha0, cfg)
    elapsed = time.perf_counter() - start
    drift = traj.max_relative_drift()
    ok = max(drift.values()) <= 1e-8 and elapsed <= 300.0
    report(
        3,
        "conservation",
        ok,
        f"drift H {drift['H']:.2e}, Q {drift['Q']:.2e}, E {drift['E']:.2e}, {elapsed:.1f}s",
    )
    assert ok


def test_criterion_04_ground_spectra():
    worst = 0.0
    for p in (0.0, 0.3, 0.6):
        ops = cf.build_ground_ops(p, 128)
        minus = cf.spectrum(ops, "minus").eigenvalues[:12]
        plus = cf.spectrum(ops, "plus").eigenvalues[:12]
        lam = 2 * (1 + p * p) / (1 - p * p)
        want_minus = np.array([0.0, 0.0] + [-m for m in range(1, 11)])
        want_plus = np.array([lam, 0.0] + [-m for m in range(1, 11)])
        worst = max(
            worst,
            float(np.max(np.abs(minus - want_minus))),
            float(np.max(np.abs(plus - want_plus))),
        )
    ok = worst <= 1e-6
    report(4, "ground-spectra", ok, f"max eigenvalue error {worst:.2e}")
    assert ok


def test_criterion_05_stability_frequencies():
    want = np.sort([(m - 1) / (m + 1) for m in range(2, 11)])
    grids = []
    kernel_ok = True
    for p in (0.0, 0.3, 0.6):
        rep = cf.stability_spectrum(cf.build_ground_ops(p, 128))
        grids.append(np.sort(rep.omegas)[: want.size])
        kernel_ok = kernel_ok and rep.zero_geometric == 3 and rep.jordan_partners == 1
    err = max(float(np.max(np.abs(g - want))) for g in grids)
    spread = max(float(np.max(np.abs(g - grids[0]))) for g in grids)
    ok = err <= 1e-6 and spread <= 1e-6 and kernel_ok
    report(
        5,
        "stability-frequencies",
        ok,
        f"closed-form err {err:.2e}, p-spread {spread:.2e}, kernel 3+1 {kernel_ok}",
    )
    assert ok


def test_criterion_06_single_mode_spectra():
    n_modes = 64
    worst = 0.0
    counts_ok = True
    for mode in (0, 1, 2):
        ops = cf.build_single_mode_ops(mode, 1.0, n_modes)
        rep = cf.stability_spectrum(ops)
        block = [2.0 * (mode - n) / (2 * mode + 1 - n) for n in range(mode)]
        tail = [(n - 2 * mode - 1) / (n + 1.0) for n in range(2 * mode + 2, n_modes)]
        want = np.sort(np.array(block + tail))
        got = np.sort(rep.omegas)
        if got.size != want.size:
            counts_ok = False
            continue
        worst = max(worst, float(np.max(np.abs(got - want))))
        for which, pos_want, zero_want in (
            ("plus", mode + 1, mode + 1),
            ("minus", mode, mode + 2),
        ):
            vals = cf.spectrum(ops, which).eigenvalues
            pos = int(np.sum(vals > 1e-8))
            zero = int(np.sum(np.abs(vals) <= 1e-8))
            counts_ok = counts_ok and (pos, zero) == (pos_want, zero_want)
    ok = worst <= 1e-10 and counts_ok
    report(
        6,
        "single-mode-spectra",
        ok,
        f"frequency err {worst:.2e}, signature counts {counts_ok}",
    )
    assert ok


def test_criterion_07_commutators():
    c1, c2 = cf.commutators(cf.build_ground_ops(0.5, 128), 64)
    ok = c1 <= 1e-8 and c2 <= 1e-8
    report(7, "commutators", ok, f"[L+, L-] {c1:.2e}, weighted {c2:.2e}")
    assert ok


def test_criterion_08_ladder_structure():
    worst_res = worst_angle = 0.0
    for p in (0.1, 0.3, 0.6):
        rep = cf.ladder_check(p, 192, m_max=10)
        worst_res = max(worst_res, float(np.max(rep.eigen_residuals)))
        worst_angle = max(worst_angle, rep.v1_shift_angle)
    ok = worst_res <= 1e-9 and worst_angle <= 1e-9
    report(
        8,
        "ladder-structure",
        ok,
        f"eigen residual {worst_res:.2e}, S* v1 angle {worst_angle:.2e}",
    )
    assert ok


def test_criterion_09_appendix_identities():
    worst = 0.0
    for p in (0.3, 0.5, 0.7):
        worst = max(worst, max(cf.appendix_identities(p, 50).values()))
    ok = worst <= 1e-12
    report(9, "appendix-identities", ok, f"max relative error {worst:.2e}")
    assert ok


def test_criterion_10_modulation_decomposition():
    n_modes = 64
    eps = 1e-3
    worst_param = worst_constraint = worst_recon = 0.0
    p_values = np.linspace(0.1, 0.7, 10)
    for i in range(100):
        p0 = float(p_values[i % p_values.size])
        alpha = cf.ground_amplitudes(p0, n_modes) + generate_perturbation(
            PerturbationSpec(delta=eps), 1000 + i, n_modes
        )
        frame = cf.decompose(alpha, p0)
        worst_param = max(
            worst_param,
            abs(frame.c - 1.0),
            abs(frame.p - p0),
            abs((frame.theta_orbit + np.pi) % (2 * np.pi) - np.pi),
            abs((frame.mu + np.pi) % (2 * np.pi) - np.pi),
        )
        worst_constraint = max(
            worst_constraint, float(np.max(np.abs(frame.constraint_residuals())))
        )
        worst_recon = max(
            worst_recon, float(np.max(np.abs(frame.reconstruct() - alpha)))
        )
    ok = worst_param <= 5 * eps and worst_constraint <= 1e-10 and worst_recon <= 1e-12
    report(
        10,
        "modulation-decomposition",
        ok,
        f"param err {worst_param:.2e} (bound {5 * eps:.0e}), constraints "
        f"{worst_constraint:.2e}, reconstruction {worst_recon:.2e}",
    )
    assert ok


@pytest.fixture(scope="module")
def p0_scaling_tracks():
    """delta-scaling runs at p0 = 0: (sup dist_h1, max E-budget err) per delta."""
    out = {}
    base = cf.ground_amplitudes(0.0, 48).astype(complex)
    cfg = cf.IntegratorConfig(t_end=TRACK_T_END, sample_dt=1.0, oracle_check_stride=None)
    for zero0 in (False, True):
        sups, budgets = [], []
        for delta in (1e-3, 1e-4, 1e-5):
            pert = generate_perturbation(
                PerturbationSpec(delta=delta, zero_mode0=zero0), 77, 48
            )
            track = cf.track_modulation(cf.integrate(base + pert, cfg), 0.0)
            sups.append(float(np.max(track.dist_h1)))
            budgets.append(float(np.max(np.abs(track.energy_budget_error))))
        out[zero0] = (np.array(sups), max(budgets))
    return out


@pytest.fixture(scope="module")
def ground_track():
    """p0 = 0.5, delta = 1e-3 modulation track to t = 100."""
    n_modes = 64
    delta = 1e-3
    alpha0 = cf.ground_amplitudes(0.5, n_modes) + generate_perturbation(
        PerturbationSpec(delta=delta), 424242, n_modes
    )
    cfg = cf.IntegratorConfig(t_end=TRACK_T_END, sample_dt=1.0, oracle_check_stride=None)
    return cf.track_modulation(cf.integrate(alpha0, cfg), 0.5), delta


def test_criterion_11a_delta_scaling(p0_scaling_tracks):
    deltas = np.array([1e-3, 1e-4, 1e-5])
    sups_generic, _ = p0_scaling_tracks[False]
    sups_restricted, _ = p0_scaling_tracks[True]
    slope_generic = float(np.polyfit(np.log(deltas), np.log(sups_generic), 1)[0])
    slope_restricted = float(np.polyfit(np.log(deltas), np.log(sups_restricted), 1)[0])
    ok_generic = abs(slope_generic - 0.5) <= 0.15
    ok_restricted = abs(slope_restricted - 1.0) <= 0.15
    ok = ok_generic and ok_restricted
    report(
        11,
        "delta-scaling (a)",
        ok,
        f"generic slope {slope_generic:.3f} (want 0.5 +- 0.15), restricted slope "
        f"{slope_restricted:.3f} (want 1.0 +- 0.15)",
    )
    assert ok


def test_criterion_11b_tracked_constants(ground_track):
    track, delta = ground_track
    c_half = float(np.max(track.dist_h12)) / delta
    drop = np.clip(0.5 - track.p, 0.0, None)
    c_one = float(np.max(track.dist_h1 / (delta + np.sqrt(drop))))
    min_p = float(np.min(track.p))
    ok = np.isfinite(c_half) and np.isfinite(c_one) and c_half < 1e3 and c_one < 1e3
    report(
        11,
        "tracked-constants (b)",
        ok,
        f"C_h12 {c_half:.3g}, C_h1 {c_one:.3g}, min p(t) {min_p:.6f} "
        f"(downward drift reported, not asserted)",
    )
    assert ok


def test_criterion_11c_energy_budget(ground_track, p0_scaling_tracks):
    track, _ = ground_track
    worst = float(np.max(np.abs(track.energy_budget_error)))
    for zero0 in (False, True):
        worst = max(worst, p0_scaling_tracks[zero0][1])
    ok = worst <= 1e-8
    report(11, "energy-budget (c)", ok, f"max E-budget error {worst:.2e}")
    assert ok


def test_criterion_12_hessian_consistency():
    worst_ratio = np.inf
    for p in (0.0, 0.5):
        n_modes = 200
        ops = cf.build_ground_ops(p, n_modes)
        ground = cf.ground_amplitudes(p, n_modes)
        rng = np.random.Generator(np.random.Philox(key=12))
        a = rng.standard_normal(n_modes) * 0.85 ** np.arange(n_modes)
        b = rng.standard_normal(n_modes) * 0.85 ** np.arange(n_modes)
        k0 = cf.functional_K(ground.astype(complex), 1.0)
        quad = a @ ops.Lplus @ a + b @ ops.Lminus @ b
        res = []
        for eps in (1e-2, 5e-3):
            dk = cf.functional_K(ground + eps * a + 1j * eps * b, 1.0) - k0
            res.append(abs(dk - eps * eps * quad))
        worst_ratio = min(worst_ratio, res[0] / res[1])
    ok = worst_ratio >= 7.0
    report(12, "hessian-consistency", ok, f"halving reduces residual by {worst_ratio:.1f}x")
    assert ok
