"""Lyapunov spectrum estimation from sampled words.

Per path, a word is sampled under the stationary word law and the log
singular-value growth is accumulated by repeated QR: with an orthonormal
frame Q, each step factors L_a Q = Q'R' and adds log|R'_jj| to slot j
(column pivoting stays off so slot j tracks exponent j). Exact rank
collapse — a singular atom bounds the product rank forever — freezes a slot
at the first step its R diagonal drops to the numerical-rank floor, and the
exponent is reported as -inf with the collapse step.

The default initial frame is a seeded Haar unitary per path: with singular
atoms a fixed coordinate frame has positive probability of being annihilated
outright (e.g. rank-one atom families), which would poison the top slot,
while a random frame is safe almost surely and costs only an O(1/n) startup
bias.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel import KrausMeasure, apply_channel, is_stochastic
from .errors import NotStochasticError
from .linalg import haar_unitary, hs_norm, random_unit_vector, validate_density
from .spectral import fixed_point, minimal_invariant_subspaces
from .trajectory import SampleConfig, path_generators

NEG_INFINITY = float("-inf")

DEFAULT_COLLAPSE_TOL = 1e-150


@dataclass
class LyapunovEstimate:
    """Estimated spectrum gamma_1 >= ... >= gamma_k with per-path statistics.

    ``gamma`` holds -inf for collapsed exponents (these form a suffix);
    ``stderr`` is the standard error across paths (nan for collapsed slots);
    ``collapse_step`` is the worst (largest) first-collapse step across
    paths, -1 where no path collapsed. ``per_path_gamma`` and
    ``per_path_collapse_step`` keep the raw (n_paths, k) data and
    ``atom_counts`` the total atom occurrences over all sampled words.
    """

    gamma: np.ndarray
    stderr: np.ndarray
    neg_infinity: np.ndarray
    collapse_step: np.ndarray
    n_steps: int
    n_paths: int
    per_path_gamma: np.ndarray
    per_path_collapse_step: np.ndarray
    atom_counts: np.ndarray
    mean_log_abs_det_rate: float

    def to_dict(self) -> dict:
        return {
            "gamma": [("-inf" if not np.isfinite(g) else float(g)) for g in self.gamma],
            "stderr": [None if not np.isfinite(s) else float(s) for s in self.stderr],
            "neg_infinity": [bool(b) for b in self.neg_infinity],
            "collapse_step": [int(c) for c in self.collapse_step],
            "n_steps": int(self.n_steps),
            "n_paths": int(self.n_paths),
        }


def _resolve_rho(km: KrausMeasure, rho) -> np.ndarray:
    if rho is None:
        return fixed_point(km)
    rho_m = validate_density(rho)
    drift = hs_norm(apply_channel(km, rho_m) - rho_m)
    if drift > 1e-8:
        warnings.warn(
            f"rho is not the channel fixed point (residual {drift:.3e}); "
            "the almost-sure limits do not depend on it, but finite-step "
            "estimates may be biased",
            stacklevel=3,
        )
    return rho_m


def _initial_frame(spec, k: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(spec, str):
        if spec == "random":
            return haar_unitary(k, rng)
        if spec == "identity":
            return np.eye(k, dtype=np.complex128)
        raise ValueError(f"unknown initial_frame {spec!r}")
    frame = np.asarray(spec, dtype=np.complex128)
    if frame.shape != (k, k):
        raise ValueError(f"initial_frame must be (k, k), got {frame.shape}")
    return frame


def _run_paths(
    km: KrausMeasure,
    rho: np.ndarray,
    cfg: SampleConfig,
    collapse_tol: float,
    initial_frame,
    jobs: int,
    warmup_steps: int,
):
    """Sample cfg.n_paths words and accumulate QR sums; returns raw per-path data."""
    k = km.dim
    if not 0 <= warmup_steps < cfg.n_steps:
        raise ValueError("warmup_steps must satisfy 0 <= warmup_steps < n_steps")
    inputs = []
    for rng in path_generators(cfg):
        uniforms = rng.random(cfg.n_steps)
        q0 = _initial_frame(initial_frame, k, rng)
        inputs.append((uniforms, q0))

    def run(args):
        uniforms, q0 = args
        return _kernels.lyapunov_path(
            km.matrices, km.weights, rho, q0, uniforms, collapse_tol, warmup_steps
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, inputs))
    else:
        results = [run(args) for args in inputs]
    return results


def _check_assumptions(km: KrausMeasure) -> None:
    report = minimal_invariant_subspaces(km)
    if not report.is_phi_erg:
        warnings.warn(
            f"the atom family has {len(report.minimal_subspaces)} minimal invariant "
            "subspaces; exponent limits may depend on the initial law",
            stacklevel=3,
        )


def estimate_exponents(
    km: KrausMeasure,
    rho=None,
    cfg: SampleConfig = None,
    collapse_tol: float = DEFAULT_COLLAPSE_TOL,
    initial_frame="random",
    verify_assumptions: bool = True,
    jobs: int = 1,
    warmup_steps: int = 1,
) -> LyapunovEstimate:
    """Estimate gamma_1 >= ... >= gamma_k under the stationary word law.

    ``rho`` defaults to the channel fixed point. An exponent is -inf when any
    path hit rank collapse in its slot (a positive-probability singular word
    makes collapse almost sure in the limit). The first ``warmup_steps``
    factorizations only align the frame and are excluded from the averages;
    with the default single warmup step, families whose products align the
    frame exactly (unitary atoms, the Markov example) are estimated with no
    frame bias at all. Purification of the channel is the caller's
    responsibility to establish (see the purification module); only the
    unique-minimal-subspace condition is checked here, and only as a warning.
    """
    if cfg is None:
        raise ValueError("cfg is required")
    check = is_stochastic(km, tol=1e-8)
    if not check.ok:
        raise NotStochasticError(f"exponent estimation needs a stochastic family (residual {check.residual:.3e})")
    if verify_assumptions:
        _check_assumptions(km)
    rho_m = _resolve_rho(km, rho)
    results = _run_paths(km, rho_m, cfg, collapse_tol, initial_frame, jobs, warmup_steps)

    k = km.dim
    n_eff = cfg.n_steps - warmup_steps
    per_gamma = np.empty((cfg.n_paths, k))
    per_collapse = np.empty((cfg.n_paths, k), dtype=np.int64)
    atom_counts = np.zeros(len(km), dtype=np.int64)
    logdet_rates = []
    for p, (word, sums, collapse, _logw, logdet) in enumerate(results):
        per_collapse[p] = collapse
        per_gamma[p] = np.where(collapse >= 0, NEG_INFINITY, sums / n_eff)
        atom_counts += np.bincount(word, minlength=len(km))
        if np.all(collapse < 0):
            logdet_rates.append(logdet / n_eff)

    gamma = np.empty(k)
    stderr = np.empty(k)
    collapse_step = np.full(k, -1, dtype=np.int64)
    for j in range(k):
        col = per_gamma[:, j]
        collapsed = per_collapse[:, j] >= 0
        if np.any(collapsed):
            gamma[j] = NEG_INFINITY
            stderr[j] = np.nan
            collapse_step[j] = int(per_collapse[collapsed, j].max())
        else:
            gamma[j] = col.mean()
            stderr[j] = col.std(ddof=1) / np.sqrt(len(col)) if len(col) > 1 else 0.0

    # slot estimates can micro-invert at finite n; report an ordered spectrum
    order = np.argsort(-gamma, kind="stable")
    return LyapunovEstimate(
        gamma=gamma[order],
        stderr=stderr[order],
        neg_infinity=~np.isfinite(gamma[order]),
        collapse_step=collapse_step[order],
        n_steps=cfg.n_steps,
        n_paths=cfg.n_paths,
        per_path_gamma=per_gamma[:, order],
        per_path_collapse_step=per_collapse[:, order],
        atom_counts=atom_counts,
        mean_log_abs_det_rate=float(np.mean(logdet_rates)) if logdet_rates else NEG_INFINITY,
    )


@dataclass
class OracleReport:
    """Result of validating the QR accumulator against brute-force products.

    ``max_discrepancy`` compares, per sampled word, the accumulator started
    at the product's right-singular frame against the SVD of the explicitly
    multiplied product: the two agree exactly in exact arithmetic, for every
    wedge order. Slots contracted below the SVD's own certification floor
    (relative ``oracle_floor``) are excluded from per-order sums but still
    covered by the |det| identity, which is checked in full. The
    ``fixed_frame_discrepancy`` of an identity-frame accumulator is reported
    for reference; it contains an O(1) frame-alignment term that only decays
    after division by n.
    """

    max_discrepancy: float
    det_discrepancy: float
    fixed_frame_discrepancy: float
    n_paths: int
    n_steps: int


def wedge_vs_qr_oracle(
    km: KrausMeasure,
    cfg: SampleConfig,
    rho=None,
    collapse_tol: float = DEFAULT_COLLAPSE_TOL,
    oracle_floor: float = 1e-7,
) -> OracleReport:
    """Cross-validate the QR accumulator against directly multiplied products.

    Words are sampled as in :func:`estimate_exponents`; each product W_n is
    formed explicitly (n_steps <= 60 keeps it representable), decomposed by
    SVD, and the accumulator is replayed over the word starting from the
    right-singular frame of W_n, where partial sums of log|R_jj| equal the
    wedge-norm logs exactly.
    """
    if cfg.n_steps > 60:
        raise ValueError("direct products are limited to n_steps <= 60")
    check = is_stochastic(km, tol=1e-8)
    if not check.ok:
        raise NotStochasticError(f"oracle sampling needs a stochastic family (residual {check.residual:.3e})")
    rho_m = _resolve_rho(km, rho)
    k = km.dim
    max_disc = 0.0
    det_disc = 0.0
    fixed_disc = 0.0
    for rng in path_generators(cfg):
        uniforms = rng.random(cfg.n_steps)
        word, _, _ = _kernels.trajectory_path(km.matrices, km.weights, rho_m, uniforms, False)
        w_mat = np.eye(k, dtype=np.complex128)
        logdet = 0.0
        for a in word:
            w_mat = km.matrices[a] @ w_mat
            logdet += np.linalg.slogdet(km.matrices[a])[1]
        if not np.all(np.isfinite(w_mat)):
            raise OverflowError("direct product overflowed; reduce n_steps")
        _, s_vals, vh = np.linalg.svd(w_mat)
        sums, collapse = _kernels.qr_accumulate(km.matrices, word, vh.conj().T, collapse_tol)
        sums_id, _ = _kernels.qr_accumulate(
            km.matrices, word, np.eye(k, dtype=np.complex128), collapse_tol
        )
        certified = s_vals >= oracle_floor * s_vals[0]
        acc_prefix = 0.0
        exact_prefix = 0.0
        for j in range(k):
            if not certified[j] or collapse[j] >= 0:
                break
            acc_prefix += sums[j]
            exact_prefix += np.log(s_vals[j])
            max_disc = max(max_disc, abs(acc_prefix - exact_prefix))
            fixed_disc = max(fixed_disc, abs(sums_id[: j + 1].sum() - exact_prefix))
        if np.all(collapse < 0) and np.isfinite(logdet):
            det_disc = max(det_disc, abs(sums.sum() - logdet))
    return OracleReport(
        max_discrepancy=float(max_disc),
        det_discrepancy=float(det_disc),
        fixed_frame_discrepancy=float(fixed_disc),
        n_paths=cfg.n_paths,
        n_steps=cfg.n_steps,
    )


@dataclass
class GapEstimate:
    """Estimate of gamma_2 - gamma_1 (negative for purifying channels)."""

    gap: float
    stderr: float
    is_neg_infinity: bool
    n_paths_used: int

    @property
    def upper_95(self) -> float:
        if self.is_neg_infinity:
            return NEG_INFINITY
        return self.gap + 1.96 * self.stderr


def gap_estimate(
    km: KrausMeasure,
    cfg: SampleConfig,
    rho=None,
    collapse_tol: float = DEFAULT_COLLAPSE_TOL,
    initial_frame="random",
    jobs: int = 1,
    warmup_steps: int = 1,
) -> GapEstimate:
    """Limit of (1/n) log(wedge2(W_n) / wedge1(W_n)^2) via the QR accumulator.

    Computed on paths whose first slot stays finite; -inf when the second
    slot collapses (rank-one products). The theorem states the gap limit for
    finite top exponent, so first-slot collapses are excluded rather than
    averaged.
    """
    if km.dim < 2:
        raise ValueError("the spectral gap needs dimension k >= 2")
    check = is_stochastic(km, tol=1e-8)
    if not check.ok:
        raise NotStochasticError(f"gap estimation needs a stochastic family (residual {check.residual:.3e})")
    rho_m = _resolve_rho(km, rho)
    results = _run_paths(km, rho_m, cfg, collapse_tol, initial_frame, jobs, warmup_steps)
    n_eff = cfg.n_steps - warmup_steps
    gaps = []
    neg_inf = False
    for _word, sums, collapse, _logw, _logdet in results:
        if collapse[0] >= 0:
            continue
        if collapse[1] >= 0:
            neg_inf = True
            continue
        gaps.append((sums[1] - sums[0]) / n_eff)
    if neg_inf:
        return GapEstimate(gap=NEG_INFINITY, stderr=0.0, is_neg_infinity=True, n_paths_used=len(gaps))
    if not gaps:
        raise RuntimeError("no usable paths: the first exponent collapsed everywhere")
    arr = np.asarray(gaps)
    stderr = arr.std(ddof=1) / np.sqrt(len(arr)) if len(arr) > 1 else 0.0
    return GapEstimate(
        gap=float(arr.mean()), stderr=float(stderr), is_neg_infinity=False, n_paths_used=len(arr)
    )


@dataclass
class TheoremBDiagnostic:
    """Per-path curves of (1/n)(log ||W_n x|| - log ||W_n||)."""

    curves: np.ndarray  # (n_paths, n_steps)
    terminal: np.ndarray  # (n_paths,)
    median_terminal_abs: float


def theorem_b_diagnostic(km: KrausMeasure, x, cfg: SampleConfig) -> TheoremBDiagnostic:
    """Track the vector-norm vs operator-norm growth ratio along sampled paths.

    Words are sampled from the projective kernel at x — the conditional word
    law given the starting point, under which ||W_n x|| stays positive — and
    the operator norm is tracked by the top slot of the accumulator (a
    propagated generic vector), so the curve converging to zero is exactly
    the almost-sure statement being diagnosed.
    """
    check = is_stochastic(km, tol=1e-8)
    if not check.ok:
        raise NotStochasticError(f"the diagnostic needs a stochastic family (residual {check.residual:.3e})")
    from .linalg import canonicalize

    xv = canonicalize(x)
    curves = np.empty((cfg.n_paths, cfg.n_steps))
    for p, rng in enumerate(path_generators(cfg)):
        uniforms = rng.random(cfg.n_steps)
        q0 = random_unit_vector(km.dim, rng)
        _, curve = _kernels.theorem_b_path(km.matrices, km.weights, xv, q0, uniforms)
        curves[p] = curve
    terminal = curves[:, -1]
    return TheoremBDiagnostic(
        curves=curves,
        terminal=terminal,
        median_terminal_abs=float(np.median(np.abs(terminal))),
    )
