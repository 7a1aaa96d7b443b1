"""Experiment orchestration, seeded randomness, persistence, and the CLI.

Randomness uses numpy's Philox counter-based generator so that a seed fully
determines every ensemble member, independent of execution order.  CSV is
the canonical output format; JSON files carry run metadata only.

CLI subcommands: simulate | spectrum | inequality | decompose | drift-study
| verify-identities.  Exit codes: 0 success, 2 validation failure, 3
numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import linearized, modulation
from .flow import FlowError, IntegratorConfig, TrajectoryRecord, integrate
from .observables import charge, energy_fast, gap
from .state import GroundState, ground_amplitudes, weighted_norm

__all__ = [
    "ExperimentConfig",
    "PerturbationSpec",
    "generate_perturbation",
    "random_state",
    "run_inequality_scan",
    "run_spectrum_suite",
    "run_drift_study",
    "write_trajectory_csv",
    "write_track_csv",
    "main",
]


@dataclass
class PerturbationSpec:
    """Seeded random perturbation with exact h^1 norm delta."""

    delta: float
    support_lo: int = 0
    support_hi: int | None = None  # exclusive; defaults to N
    zero_mode0: bool = False

    def __post_init__(self) -> None:
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _uniform_disc(rng: np.random.Generator, size: int) -> np.ndarray:
    radius = np.sqrt(rng.random(size))
    phase = 2.0 * np.pi * rng.random(size)
    return radius * np.exp(1j * phase)


def generate_perturbation(spec: PerturbationSpec, seed: int, n_modes: int) -> np.ndarray:
    """Deterministic perturbation: uniform complex disc per supported mode,
    optional mode-0 suppression, exact h^1 normalization."""
    rng = _rng(seed)
    hi = spec.support_hi if spec.support_hi is not None else n_modes
    out = np.zeros(n_modes, dtype=np.complex128)
    out[spec.support_lo : hi] = _uniform_disc(rng, hi - spec.support_lo)
    if spec.zero_mode0:
        out[0] = 0.0
    if spec.delta == 0.0:
        return np.zeros(n_modes, dtype=np.complex128)
    norm = weighted_norm(out, 1.0)
    if norm == 0.0:
        raise ValueError("perturbation support is empty")
    return out * (spec.delta / norm)


def random_state(seed: int, n_modes: int, q_normalize: float | None = None) -> np.ndarray:
    """Random state with entries uniform in the complex unit disc; optionally
    rescaled to a prescribed charge Q."""
    alpha = _uniform_disc(_rng(seed), n_modes)
    if q_normalize is not None:
        alpha *= np.sqrt(q_normalize / charge(alpha))
    return alpha


@dataclass
class ExperimentConfig:
    kind: str = "simulate"
    n_modes: int = 64
    p0: float = 0.5
    delta: float = 1e-3
    seed: int = 12345
    ensemble: int = 32
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    out_dir: Path | None = None

    def __post_init__(self) -> None:
        if self.n_modes < 8:
            raise ValueError("truncation must be at least 8")
        if not 0.0 <= self.p0 < 1.0:
            raise ValueError("p0 must lie in [0, 1)")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")


# ---------------------------------------------------------------- experiments


def run_inequality_scan(
    n_random: int = 10_000,
    n_geometric: int = 100,
    n_modes: int = 32,
    seed: int = 0,
) -> dict:
    """Energy-bound scan: min(Q^2 - H) over random states and the saturation
    residual on random truncated geometric sequences."""
    rng = _rng(seed)
    min_gap = np.inf
    for _ in range(n_random):
        alpha = _uniform_disc(rng, n_modes)
        min_gap = min(min_gap, gap(alpha))
    max_sat = 0.0
    geo_n = 160  # |p|^N < 1e-13 for |p| <= 0.8
    for _ in range(n_geometric):
        p = 0.8 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
        c = _uniform_disc(rng, 1)[0]
        alpha = c * p ** np.arange(geo_n)
        max_sat = max(max_sat, abs(gap(alpha)))
    return {"min_gap_random": float(min_gap), "max_gap_geometric": float(max_sat)}


def run_spectrum_suite(
    p_grid: tuple[float, ...] = (0.0, 0.3, 0.6),
    single_modes: tuple[int, ...] = (0, 1, 2),
    n_modes: int = 128,
) -> dict:
    """Closed-form spectral checks over a (p, N) grid and single-mode indices."""
    report: dict = {"ground": {}, "single_mode": {}, "identities": {}}
    for p in p_grid:
        ops = linearized.build_ground_ops(p, n_modes)
        top_minus = linearized.spectrum(ops, "minus").eigenvalues[:12]
        top_plus = linearized.spectrum(ops, "plus").eigenvalues[:12]
        lam_star = 2.0 * (1.0 + p * p) / (1.0 - p * p)
        expect_minus = np.array([0.0, 0.0] + [-m for m in range(1, 11)])
        expect_plus = np.array([lam_star, 0.0] + [-m for m in range(1, 11)])
        stab = linearized.stability_spectrum(ops)
        expect_omega = np.array([(m - 1) / (m + 1) for m in range(2, 11)])
        got_omega = stab.omegas[: expect_omega.size]
        report["ground"][p] = {
            "minus_err": float(np.max(np.abs(top_minus - expect_minus))),
            "plus_err": float(np.max(np.abs(top_plus - expect_plus))),
            "omega_err": float(np.max(np.abs(np.sort(got_omega) - np.sort(expect_omega)))),
            "zero_geometric": stab.zero_geometric,
            "jordan_partners": stab.jordan_partners,
            "unstable": stab.unstable,
        }
        if p > 0:
            ladder = linearized.ladder_check(p, n_modes)
            mu = linearized.mu_ladder(p, 6, n_modes)
            inner = min(64, n_modes // 2)
            comm = linearized.commutators(ops, inner)
            report["ground"][p].update(
                {
                    "ladder_max_residual": float(np.max(ladder.eigen_residuals)),
                    "mu_max_residual": float(np.max(mu.residuals)),
                    "commutator_max": max(comm),
                }
            )
            report["identities"][p] = {
                "appendix": linearized.appendix_identities(p, 50),
                "mode_energy": linearized.mode_energy_relation(p),
            }
    for mode in single_modes:
        ops = linearized.build_single_mode_ops(mode, 1.0, n_modes)
        stab = linearized.stability_spectrum(ops)
        expected = _single_mode_omegas(mode, n_modes)
        got = np.sort(stab.omegas)
        err = (
            float(np.max(np.abs(got - np.sort(expected))))
            if got.size == expected.size
            else np.inf
        )
        report["single_mode"][mode] = {
            "omega_err": err,
            "count_got": int(got.size),
            "count_expected": int(expected.size),
            "unstable": stab.unstable,
        }
    return report


def _single_mode_omegas(mode: int, n_modes: int) -> np.ndarray:
    """Nonzero frequencies of the truncated single-mode stability problem."""
    block = [2.0 * (mode - n) / (2 * mode + 1 - n) for n in range(mode)]
    tail = [(n - 2 * mode - 1) / (n + 1.0) for n in range(2 * mode + 2, n_modes)]
    return np.array(block + tail)


@dataclass
class DriftRunSummary:
    seed: int
    ok: bool
    sup_dist_h12: float = np.nan
    sup_dist_h1: float = np.nan
    min_p: float = np.nan
    max_p_drop: float = np.nan
    theorem_ratio: float = np.nan  # sup dist_h1 / (delta + (p0 - p)^{1/2})
    max_energy_budget_error: float = np.nan
    error: str = ""


def run_drift_study(cfg: ExperimentConfig) -> dict:
    """Ensemble of seeded perturbations of A(p0): integrate, track modulation,
    summarize distances and the possible downward drift of p(t)."""
    out_dir = cfg.out_dir
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    base = ground_amplitudes(cfg.p0, cfg.n_modes).astype(np.complex128)
    spec = PerturbationSpec(delta=cfg.delta)
    runs: list[DriftRunSummary] = []
    wall_start = time.perf_counter()
    for member in range(cfg.ensemble):
        seed = cfg.seed + member
        alpha0 = base + generate_perturbation(spec, seed, cfg.n_modes)
        try:
            traj = integrate(alpha0, cfg.integrator)
            track = modulation.track_modulation(traj, cfg.p0)
        except (FlowError, modulation.NoConvergence) as exc:
            runs.append(DriftRunSummary(seed=seed, ok=False, error=str(exc)))
            continue
        drop = cfg.p0 - track.p
        denom = cfg.delta + np.sqrt(np.clip(drop, 0.0, None))
        summary = DriftRunSummary(
            seed=seed,
            ok=True,
            sup_dist_h12=float(np.max(track.dist_h12)),
            sup_dist_h1=float(np.max(track.dist_h1)),
            min_p=float(np.min(track.p)),
            max_p_drop=float(np.max(drop)),
            theorem_ratio=float(np.max(track.dist_h1 / denom)),
            max_energy_budget_error=float(np.max(np.abs(track.energy_budget_error))),
        )
        runs.append(summary)
        if out_dir is not None:
            write_track_csv(out_dir / f"track_{seed}.csv", track)
    ok_runs = [r for r in runs if r.ok]
    result = {
        "config": _config_dict(cfg),
        "wall_time_s": time.perf_counter() - wall_start,
        "runs": [asdict(r) for r in runs],
        "n_failed": len(runs) - len(ok_runs),
    }
    if ok_runs:
        result["ensemble"] = {
            "sup_dist_h12": max(r.sup_dist_h12 for r in ok_runs),
            "sup_dist_h1": max(r.sup_dist_h1 for r in ok_runs),
            "min_p": min(r.min_p for r in ok_runs),
            "max_p_drop": max(r.max_p_drop for r in ok_runs),
            "max_theorem_ratio": max(r.theorem_ratio for r in ok_runs),
            "max_energy_budget_error": max(r.max_energy_budget_error for r in ok_runs),
        }
    if out_dir is not None:
        (out_dir / "summary.json").write_text(json.dumps(result, indent=2))
    return result


# ---------------------------------------------------------------- persistence


def write_trajectory_csv(
    path: Path, traj: TrajectoryRecord, mode_subset: tuple[int, ...] = ()
) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        header = ["t", "H", "Q", "E"]
        for n in mode_subset:
            header += [f"re{n}", f"im{n}"]
        writer.writerow(header)
        for i, t in enumerate(traj.times):
            row = [f"{t:.17g}", f"{traj.H[i]:.17g}", f"{traj.Q[i]:.17g}", f"{traj.E[i]:.17g}"]
            for n in mode_subset:
                z = traj.states[i][n]
                row += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            writer.writerow(row)


def write_track_csv(path: Path, track: modulation.ModulationTrack) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "c", "p", "theta", "mu", "dist_h12", "dist_h1", "residual"])
        for i, t in enumerate(track.times):
            writer.writerow(
                [
                    f"{t:.17g}",
                    f"{track.c[i]:.17g}",
                    f"{track.p[i]:.17g}",
                    f"{track.theta[i]:.17g}",
                    f"{track.mu[i]:.17g}",
                    f"{track.dist_h12[i]:.17g}",
                    f"{track.dist_h1[i]:.17g}",
                    f"{track.constraint_residual[i]:.17g}",
                ]
            )


def _config_dict(cfg: ExperimentConfig) -> dict:
    data = asdict(cfg)
    data["out_dir"] = str(cfg.out_dir) if cfg.out_dir else None
    return data


def write_metadata(path: Path, cfg: ExperimentConfig, extra: dict | None = None) -> None:
    payload = {"config": _config_dict(cfg)}
    if extra:
        payload.update(extra)
    path.write_text(json.dumps(payload, indent=2))


# ------------------------------------------------------------------------ CLI


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conformalflow",
        description="Numerical laboratory for the truncated conformal flow on the 3-sphere.",
    )
    parser.add_argument(
        "command",
        choices=[
            "simulate",
            "spectrum",
            "inequality",
            "decompose",
            "drift-study",
            "verify-identities",
        ],
    )
    parser.add_argument("--config", type=str, default=None, help="key = value config file")
    parser.add_argument("--n", type=int, default=None, help="truncation size")
    parser.add_argument("--p0", type=float, default=None)
    parser.add_argument("--delta", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--t-end", type=float, default=None)
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--rel-tol", type=float, default=None)
    parser.add_argument("--ensemble", type=int, default=None)
    return parser


_DEFAULTS = {
    "n": 64,
    "p0": 0.5,
    "delta": 1e-3,
    "seed": 12345,
    "t_end": 10.0,
    "out": None,
    "rel_tol": 1e-10,
    "ensemble": 32,
}


def _resolve_options(args: argparse.Namespace) -> dict:
    values = dict(_DEFAULTS)
    if args.config:
        file_values = _read_config_file(args.config)
        for key, raw in file_values.items():
            if key not in values:
                raise ValueError(f"unknown config key: {key}")
            if key == "out":
                values[key] = raw
            elif key in ("n", "seed", "ensemble"):
                values[key] = int(raw)
            else:
                values[key] = float(raw)
    for key in values:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            values[key] = cli_val
    return values


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        opts = _resolve_options(args)
        integrator = IntegratorConfig(
            rel_tol=opts["rel_tol"],
            t_end=opts["t_end"],
            sample_dt=min(0.5, opts["t_end"]),
        )
        cfg = ExperimentConfig(
            kind=args.command,
            n_modes=opts["n"],
            p0=opts["p0"],
            delta=opts["delta"],
            seed=opts["seed"],
            ensemble=opts["ensemble"],
            integrator=integrator,
            out_dir=Path(opts["out"]) if opts["out"] else None,
        )
    except (ValueError, OSError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2

    try:
        return _dispatch(cfg)
    except (FlowError, modulation.NoConvergence, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def _dispatch(cfg: ExperimentConfig) -> int:
    out_dir = cfg.out_dir
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.kind == "simulate":
        base = ground_amplitudes(cfg.p0, cfg.n_modes).astype(np.complex128)
        pert = generate_perturbation(PerturbationSpec(delta=cfg.delta), cfg.seed, cfg.n_modes)
        wall = time.perf_counter()
        traj = integrate(base + pert, cfg.integrator)
        drift = traj.max_relative_drift()
        print(
            f"t_end={traj.times[-1]:g} accepted={traj.accepted} rejected={traj.rejected} "
            f"drift H={drift['H']:.3e} Q={drift['Q']:.3e} E={drift['E']:.3e}"
        )
        if out_dir is not None:
            write_trajectory_csv(out_dir / "trajectory.csv", traj, mode_subset=(0, 1, 2, 3))
            write_metadata(
                out_dir / "metadata.json",
                cfg,
                {"wall_time_s": time.perf_counter() - wall, "drift": drift},
            )
    elif cfg.kind == "spectrum":
        report = run_spectrum_suite(n_modes=max(cfg.n_modes, 128))
        _print_spectrum_report(report)
        if out_dir is not None:
            (out_dir / "spectrum.json").write_text(json.dumps(_jsonable(report), indent=2))
    elif cfg.kind == "inequality":
        report = run_inequality_scan(seed=cfg.seed)
        print(
            f"min gap over random states: {report['min_gap_random']:.3e}; "
            f"max |gap| on geometric states: {report['max_gap_geometric']:.3e}"
        )
        if report["min_gap_random"] < -1e-10 or report["max_gap_geometric"] > 1e-9:
            print("energy bound violated beyond tolerance", file=sys.stderr)
            return 3
        if out_dir is not None:
            (out_dir / "inequality.json").write_text(json.dumps(report, indent=2))
    elif cfg.kind == "decompose":
        base = ground_amplitudes(cfg.p0, cfg.n_modes).astype(np.complex128)
        pert = generate_perturbation(PerturbationSpec(delta=cfg.delta), cfg.seed, cfg.n_modes)
        frame = modulation.decompose(base + pert, cfg.p0)
        res = float(np.max(np.abs(frame.constraint_residuals())))
        print(
            f"c={frame.c:.12g} p={frame.p:.12g} theta={frame.theta:.12g} "
            f"mu={frame.mu:.12g} constraint_residual={res:.3e}"
        )
    elif cfg.kind == "drift-study":
        result = run_drift_study(cfg)
        if "ensemble" in result:
            ens = result["ensemble"]
            print(
                f"runs={cfg.ensemble} failed={result['n_failed']} "
                f"sup_dist_h12={ens['sup_dist_h12']:.3e} sup_dist_h1={ens['sup_dist_h1']:.3e} "
                f"min_p={ens['min_p']:.6g} max_p_drop={ens['max_p_drop']:.3e} "
                f"theorem_ratio={ens['max_theorem_ratio']:.3g}"
            )
        else:
            print("all ensemble members failed", file=sys.stderr)
            return 3
    elif cfg.kind == "verify-identities":
        worst = 0.0
        for p in (0.3, 0.5, 0.7):
            report = linearized.appendix_identities(p, 50)
            local = max(report.values())
            worst = max(worst, local)
            print(f"p={p}: max relative error {local:.3e}")
        relation = linearized.mode_energy_relation(0.5)
        print(
            f"mode-energy relation at p=0.5: inner rel err {relation['inner_rel_err']:.3e}, "
            f"orthogonality {relation['orthogonality']:.3e}"
        )
        if worst > 1e-12:
            return 3
    return 0


def _print_spectrum_report(report: dict) -> None:
    for p, entry in report["ground"].items():
        print(
            f"ground p={p}: L- err {entry['minus_err']:.2e}, L+ err {entry['plus_err']:.2e}, "
            f"Omega err {entry['omega_err']:.2e}, kernel {entry['zero_geometric']}+"
            f"{entry['jordan_partners']} (unstable={entry['unstable']})"
        )
    for mode, entry in report["single_mode"].items():
        print(
            f"single mode N={mode}: Omega err {entry['omega_err']:.2e} "
            f"({entry['count_got']}/{entry['count_expected']} frequencies, "
            f"unstable={entry['unstable']})"
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


if __name__ == "__main__":
    sys.exit(main())
