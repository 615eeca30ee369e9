"""Command-line front end.

Subcommands take a JSON description file (a channel file for most commands,
a Markov matrix file for markov-report), run an analysis, and write a JSON
report to stdout or --output. Exit codes: 0 success, 2 malformed/invalid
input, 1 internal numeric failure. Randomized commands print the effective
seed on stderr; the seed default is 0, overridable by the
CHANNEL_ERGODICS_SEED environment variable and the --seed flag. Serial runs
(--jobs 1, the default) with the same input and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import _kernels
from .channel import (
    KrausMeasure,
    complete_positivity_check,
    is_stochastic,
    load_channel,
    matrix_to_json,
)
from .entropy import (
    channel_entropy,
    entropy_lyapunov_report,
    load_markov_spec,
    stationary_distribution,
)
from .errors import (
    DegenerateStepError,
    EnumerationBudgetError,
    InputValidationError,
    NotIrreducibleError,
    NotStochasticError,
    SpectralError,
)
from .lyapunov import estimate_exponents, theorem_b_diagnostic
from .purification import purification_scan, wedge2_decay
from .spectral import (
    is_irreducible,
    minimal_invariant_subspaces,
    spectral_data,
    temporal_mean,
)
from .trajectory import (
    SampleConfig,
    dump_paths,
    empirical_barycenter,
    sample_quantum_trajectory,
    sample_x_process,
)

MAX_DIM = 16


def _default_seed() -> int:
    env = os.environ.get("CHANNEL_ERGODICS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise InputValidationError(f"CHANNEL_ERGODICS_SEED must be an integer, got {env!r}") from exc
    return 0


def _write_report(report: dict, output: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_curves(rows: list[dict], path: str) -> None:
    if not rows:
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _load_channel_checked(path: str) -> KrausMeasure:
    km = load_channel(path)
    if km.dim > MAX_DIM:
        raise InputValidationError(f"dimension {km.dim} exceeds the supported maximum {MAX_DIM}")
    return km


def _seed_banner(seed: int) -> None:
    print(f"effective seed: {seed}", file=sys.stderr)


def cmd_validate(args) -> dict:
    km = _load_channel_checked(args.input)
    stoch = is_stochastic(km, tol=args.tol)
    cp = complete_positivity_check(km)
    report = {
        "command": "validate",
        "dim": km.dim,
        "n_atoms": len(km),
        "stochastic": stoch.ok,
        "stochastic_residual": stoch.residual,
        "choi_min_eigenvalue": cp.min_eigenvalue,
        "completely_positive": cp.ok,
    }
    if not stoch.ok:
        raise CommandValidationFailure(report, f"channel is not stochastic (residual {stoch.residual:.3e})")
    return report


class CommandValidationFailure(Exception):
    """A validate-style command failed its check; carries the report payload."""

    def __init__(self, report: dict, message: str):
        super().__init__(message)
        self.report = report


def cmd_spectral(args) -> dict:
    km = _load_channel_checked(args.input)
    sd = spectral_data(km)
    irr = is_irreducible(km)
    subspaces = minimal_invariant_subspaces(km)
    report = {
        "command": "spectral",
        "lambda": sd.lam,
        "lambda_multiplicity": sd.lambda_multiplicity,
        "peripheral_multiplicity": sd.peripheral_multiplicity,
        "spectral_gap": sd.spectral_gap,
        "rho_fixed": matrix_to_json(sd.rho_fixed),
        "rho_min_eigenvalue": sd.rho_min_eigenvalue,
        "rho_residual": sd.rho_residual,
        "sigma_dual": matrix_to_json(sd.sigma_dual),
        "sigma_residual": sd.sigma_residual,
        "irreducible": irr.irreducible,
        "phi_erg": subspaces.is_phi_erg,
        "minimal_subspaces": [
            {"dim": int(b.shape[1]), "basis": matrix_to_json(b)}
            for b in subspaces.minimal_subspaces
        ],
    }
    if args.curves:
        rho0 = np.eye(km.dim, dtype=np.complex128) / km.dim
        tm = temporal_mean(km, rho0, args.n_steps)
        _write_curves(
            [{"n": n + 1, "cesaro_distance": d} for n, d in enumerate(tm.distances)], args.curves
        )
        report["cesaro_distance_final"] = float(tm.distances[-1])
    return report


def cmd_irreducibility(args) -> dict:
    km = _load_channel_checked(args.input)
    _seed_banner(args.seed)
    res = is_irreducible(km, trials=args.trials, seed=args.seed, tol=args.tol)
    return {
        "command": "irreducibility",
        "seed": args.seed,
        "irreducible": res.irreducible,
        "conclusive": res.conclusive,
        "spectral_criterion": res.spectral_criterion,
        "positivity_criterion": res.positivity_criterion,
        "lambda": res.lam,
        "lambda_multiplicity": res.lambda_multiplicity,
        "rho_min_eigenvalue": res.rho_min_eigenvalue,
        "witness": None if res.witness is None else matrix_to_json(res.witness),
    }


def cmd_phi_erg(args) -> dict:
    km = _load_channel_checked(args.input)
    _seed_banner(args.seed)
    report = minimal_invariant_subspaces(km, trials=args.trials, seed=args.seed)
    return {
        "command": "phi-erg",
        "seed": args.seed,
        "phi_erg": report.is_phi_erg,
        "irreducible": report.is_irreducible,
        "minimal_subspaces": [
            {"dim": int(b.shape[1]), "basis": matrix_to_json(b)}
            for b in report.minimal_subspaces
        ],
        "n_seeds": report.n_seeds,
    }


def cmd_purification(args) -> dict:
    km = _load_channel_checked(args.input)
    _seed_banner(args.seed)
    scan = purification_scan(
        km, max_depth=args.max_depth, n_random_projectors=args.n_random_projectors, seed=args.seed
    )
    decay = wedge2_decay(
        km,
        max_exact_depth=args.max_exact_depth,
        mc_depth=args.mc_depth,
        n_paths=args.n_paths,
        seed=args.seed,
    )
    witness = None
    for cand in scan.candidates:
        if cand.witness_word is not None:
            witness = [km.atom_label(a) for a in cand.witness_word]
            break
    report = {
        "command": "purification",
        "seed": args.seed,
        "verdict": scan.verdict,
        "decay_verdict": decay.verdict,
        "witness": witness,
        "n_candidates": len(scan.candidates),
        "n_survivors": len(scan.survivors),
        "d_n": {int(n): float(d) for n, d in zip(decay.exact_depths, decay.d_exact)},
        "d_n_monte_carlo": {
            int(n): {"mean": float(m), "stderr": float(s)}
            for n, m, s in zip(decay.mc_depths, decay.d_mc, decay.d_mc_stderr)
        },
        "slope": decay.slope,
        "slope_ci95": list(decay.slope_ci),
    }
    if args.curves:
        rows = [
            {"n": int(n), "d_exact": float(d), "d_mc": "", "d_mc_stderr": ""}
            for n, d in zip(decay.exact_depths, decay.d_exact)
        ]
        for n, m, s in zip(decay.mc_depths, decay.d_mc, decay.d_mc_stderr):
            rows.append({"n": int(n), "d_exact": "", "d_mc": float(m), "d_mc_stderr": float(s)})
        _write_curves(rows, args.curves)
    return report


def cmd_trajectory(args) -> dict:
    km = _load_channel_checked(args.input)
    _seed_banner(args.seed)
    cfg = SampleConfig(seed=args.seed, n_steps=args.n_steps, n_paths=args.n_paths, burn_in=args.burn_in)
    if args.process == "x":
        paths = sample_x_process(km, _basis_vector(km.dim), cfg, store_states=True)
        bary = empirical_barycenter(paths, cfg.burn_in)
        extra = {"empirical_barycenter": matrix_to_json(bary)}
    else:
        rho0 = np.eye(km.dim, dtype=np.complex128) / km.dim
        paths = sample_quantum_trajectory(km, rho0, cfg, store_states=False)
        extra = {}
    if args.dump_paths:
        with open(args.dump_paths, "w", encoding="utf-8") as fh:
            dump_paths(paths, fh)
    report = {
        "command": "trajectory",
        "process": args.process,
        "seed": args.seed,
        "n_steps": cfg.n_steps,
        "n_paths": cfg.n_paths,
        "burn_in": cfg.burn_in,
        "mean_log_weight_rate": float(np.mean([p.log_weight for p in paths]) / cfg.n_steps),
    }
    report.update(extra)
    return report


def cmd_lyapunov(args) -> dict:
    km = _load_channel_checked(args.input)
    _seed_banner(args.seed)
    cfg = SampleConfig(seed=args.seed, n_steps=args.n_steps, n_paths=args.n_paths)
    est = estimate_exponents(km, cfg=cfg, jobs=args.jobs, verify_assumptions=False)
    report = {"command": "lyapunov", "seed": args.seed, "backend": _kernels.BACKEND}
    report.update(est.to_dict())
    if args.curves:
        diag = theorem_b_diagnostic(km, _basis_vector(km.dim), cfg)
        rows = [
            {"n": t + 1, "median_abs_curve": float(np.median(np.abs(diag.curves[:, t])))}
            for t in range(diag.curves.shape[1])
        ]
        _write_curves(rows, args.curves)
        report["theorem_b_median_terminal"] = diag.median_terminal_abs
    return report


def cmd_entropy(args) -> dict:
    km = _load_channel_checked(args.input)
    h = channel_entropy(km)
    return {"command": "entropy", "h_channel_nats": h, "h_channel_bits": h / np.log(2.0)}


def cmd_markov_report(args) -> dict:
    spec = load_markov_spec(args.input, force_row=args.row_stochastic)
    _seed_banner(args.seed)
    cfg = SampleConfig(seed=args.seed, n_steps=args.n_steps, n_paths=args.n_paths)
    rep = entropy_lyapunov_report(spec, cfg, jobs=args.jobs)
    report = {
        "command": "markov-report",
        "seed": args.seed,
        "P": [[float(x) for x in row] for row in spec.P],
        "stationary": [float(x) for x in stationary_distribution(spec)],
    }
    report.update(rep.to_dict())
    return report


def _basis_vector(k: int) -> np.ndarray:
    v = np.zeros(k, dtype=np.complex128)
    v[0] = 1.0
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="channel-ergodics",
        description="Analyze quantum channels given by finite weighted Kraus families.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, randomized=False, sampled=False):
        p.add_argument("input", help="JSON description file")
        p.add_argument("-o", "--output", default=None, help="report path (default stdout)")
        p.add_argument("--tol", type=float, default=1e-10, help="comparison tolerance")
        p.add_argument("--jobs", type=int, default=1, help="path-level parallelism (1 = serial)")
        if randomized:
            p.add_argument("--seed", type=int, default=None, help="RNG seed (default 0 or CHANNEL_ERGODICS_SEED)")
        if sampled:
            p.add_argument("--n-steps", type=int, default=None)
            p.add_argument("--n-paths", type=int, default=None)

    p = sub.add_parser("validate", help="schema, stochasticity and complete positivity checks")
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("spectral", help="Perron eigendata of the channel")
    common(p)
    p.add_argument("--curves", default=None, help="write the Cesàro-distance curve to this CSV")
    p.add_argument("--n-steps", type=int, default=500, help="Cesàro terms for --curves")
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("irreducibility", help="decide irreducibility by two concurrent criteria")
    common(p, randomized=True)
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=cmd_irreducibility)

    p = sub.add_parser("phi-erg", help="minimal invariant subspaces of the atom family")
    common(p, randomized=True)
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_phi_erg)

    p = sub.add_parser("purification", help="purification scan and wedge-2 decay")
    common(p, randomized=True)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--max-exact-depth", type=int, default=8)
    p.add_argument("--mc-depth", type=int, default=0)
    p.add_argument("--n-paths", type=int, default=400)
    p.add_argument("--n-random-projectors", type=int, default=4)
    p.add_argument("--curves", default=None, help="write the d_n table to this CSV")
    p.set_defaults(func=cmd_purification)

    p = sub.add_parser("trajectory", help="sample the projective or density-matrix process")
    common(p, randomized=True, sampled=True)
    p.add_argument("--process", choices=["x", "rho"], default="x")
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--dump-paths", default=None, help="write JSON-lines paths here")
    p.set_defaults(func=cmd_trajectory, default_n_steps=2000, default_n_paths=4)

    p = sub.add_parser("lyapunov", help="estimate the Lyapunov spectrum")
    common(p, randomized=True, sampled=True)
    p.add_argument("--curves", default=None, help="write the theorem-b median curve to this CSV")
    p.set_defaults(func=cmd_lyapunov, default_n_steps=20000, default_n_paths=16)

    p = sub.add_parser("entropy", help="channel entropy at the invariant state")
    common(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("markov-report", help="entropy-Lyapunov identity report for a Markov matrix")
    common(p, randomized=True, sampled=True)
    p.add_argument("--row-stochastic", action="store_true", help="transpose the input matrix")
    p.set_defaults(func=cmd_markov_report, default_n_steps=100000, default_n_paths=32)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and hasattr(args, "seed"):
        try:
            args.seed = _default_seed()
        except InputValidationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    if getattr(args, "n_steps", None) is None and hasattr(args, "default_n_steps"):
        args.n_steps = args.default_n_steps
    if getattr(args, "n_paths", None) is None and hasattr(args, "default_n_paths"):
        args.n_paths = args.default_n_paths
    try:
        report = args.func(args)
    except CommandValidationFailure as exc:
        report = exc.report
        report["error"] = str(exc)
        _write_report(report, args.output)
        return 2
    except (InputValidationError, NotStochasticError, NotIrreducibleError, FileNotFoundError) as exc:
        _write_report({"error": str(exc), "kind": type(exc).__name__}, args.output)
        return 2
    except (SpectralError, DegenerateStepError, EnumerationBudgetError, OverflowError,
            np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1
    _write_report(report, args.output)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
