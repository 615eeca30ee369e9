"""Operational tests of the purification condition.

The condition asks that any orthogonal projector of rank >= 2 on which every
word operator acts proportionally to the projector itself must be rank one.
With finitely many atoms every positive-weight word can be enumerated, so
depth-n purification of a concrete projector is decidable exactly; the
quantified-over-all-projectors condition is probed with a finite candidate
family and reported as evidence. The wedge-2 decay rate and the normalized
product martingale give complementary quantitative diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _kernels
from .channel import KrausMeasure, is_stochastic
from .errors import DegenerateStepError, EnumerationBudgetError, NotStochasticError
from .linalg import (
    haar_unitary,
    hermitize,
    hs_norm,
    orthonormal_columns,
    validate_projector,
    wedge_norm,
)
from .trajectory import SampleConfig, path_generators

DEFAULT_WORD_BUDGET = 10**6
PROPORTIONALITY_TOL = 1e-9


def _check_budget(n_atoms: int, depth: int, budget: int) -> None:
    if n_atoms**depth > budget:
        raise EnumerationBudgetError(
            f"enumerating {n_atoms}^{depth} words exceeds the budget of {budget}"
        )


def _restricted_deviation(w_mat: np.ndarray, basis: np.ndarray) -> tuple[float, float]:
    """Deviation of B† W†W B from a scalar multiple of the identity.

    Returns (deviation, scale); proportionality holds when
    deviation <= PROPORTIONALITY_TOL * scale.
    """
    g = w_mat @ basis
    r = g.conj().T @ g
    rank = basis.shape[1]
    scaled_id = (np.trace(r) / rank) * np.eye(rank)
    return hs_norm(r - scaled_id), max(hs_norm(r), 1e-300)


@dataclass
class PurifiesResult:
    purifies: bool
    depth: int
    witness_word: tuple[int, ...] | None


def purifies_at_depth(
    km: KrausMeasure, pi, depth: int, budget: int = DEFAULT_WORD_BUDGET
) -> PurifiesResult:
    """Whether some positive-weight word of the given depth breaks
    proportionality of pi W†W pi to pi.

    The test runs on the rank x rank restriction of W†W to the range of pi,
    which is basis independent and ignores the kernel of pi. Word order
    follows sampling order: the word (a_1, ..., a_n) denotes the product
    L_{a_n} ... L_{a_1}.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    pi_mat, rank = validate_projector(pi)
    if rank < 2:
        raise ValueError(f"the purification test needs rank >= 2, got rank {rank}")
    _check_budget(len(km), depth, budget)
    basis = orthonormal_columns(pi_mat, tol=1e-9)[:, :rank]
    mats = km.matrices

    word: list[int] = []

    def dfs(w_mat: np.ndarray, level: int) -> tuple[int, ...] | None:
        if level == depth:
            dev, scale = _restricted_deviation(w_mat, basis)
            if dev > PROPORTIONALITY_TOL * scale:
                return tuple(word)
            return None
        for a in range(len(mats)):
            word.append(a)
            hit = dfs(mats[a] @ w_mat, level + 1)
            if hit is not None:
                return hit
            word.pop()
        return None

    witness = dfs(np.eye(km.dim, dtype=np.complex128), 0)
    return PurifiesResult(purifies=witness is not None, depth=depth, witness_word=witness)


@dataclass
class CandidateOutcome:
    projector: np.ndarray
    rank: int
    origin: str
    purifying_depth: int | None  # smallest depth at which it purified
    witness_word: tuple[int, ...] | None


@dataclass
class PurificationScan:
    """Evidence-level scan over a finite projector family.

    verdict: "purifying-evidence" when every candidate purified at some
    tested depth, "non-purifying-witness" when a candidate survived all
    depths (the survivor is exact for those depths: all its words were
    enumerated), "inconclusive" when the budget cut enumeration short.
    """

    verdict: str
    candidates: list[CandidateOutcome]
    survivors: list[CandidateOutcome]
    max_depth: int


def _candidate_projectors(
    km: KrausMeasure, n_random: int, rng: np.random.Generator
) -> list[tuple[np.ndarray, str]]:
    from itertools import combinations

    k = km.dim
    eye = np.eye(k, dtype=np.complex128)
    cands: list[tuple[np.ndarray, str]] = []
    for size in range(2, k + 1):
        for subset in combinations(range(k), size):
            basis = eye[:, list(subset)]
            cands.append((basis @ basis.conj().T, f"coords{list(subset)}"))
    for idx, mat in enumerate(km.matrices):
        _, vecs = np.linalg.eigh(mat.conj().T @ mat)
        for i, j in combinations(range(k), 2):
            basis = orthonormal_columns(vecs[:, [i, j]], tol=1e-9)
            if basis.shape[1] == 2:
                cands.append((basis @ basis.conj().T, f"gram-eigenpair(atom{idx},{i},{j})"))
    for r in range(n_random):
        rank = int(rng.integers(2, k + 1))
        basis = haar_unitary(k, rng)[:, :rank]
        cands.append((basis @ basis.conj().T, f"random{r}(rank {rank})"))
    return cands


def purification_scan(
    km: KrausMeasure,
    max_depth: int = 4,
    n_random_projectors: int = 4,
    seed: int = 0,
    budget: int = DEFAULT_WORD_BUDGET,
) -> PurificationScan:
    """Probe the purification condition over a finite projector family."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    rng = np.random.default_rng(seed)
    outcomes: list[CandidateOutcome] = []
    budget_hit = False
    for pi_mat, origin in _candidate_projectors(km, n_random_projectors, rng):
        rank = int(round(float(np.trace(pi_mat).real)))
        found: int | None = None
        witness = None
        for depth in range(1, max_depth + 1):
            try:
                res = purifies_at_depth(km, pi_mat, depth, budget)
            except EnumerationBudgetError:
                budget_hit = True
                break
            if res.purifies:
                found = depth
                witness = res.witness_word
                break
        outcomes.append(
            CandidateOutcome(
                projector=pi_mat,
                rank=rank,
                origin=origin,
                purifying_depth=found,
                witness_word=witness,
            )
        )
    survivors = [c for c in outcomes if c.purifying_depth is None]
    if survivors and budget_hit:
        verdict = "inconclusive"
    elif survivors:
        verdict = "non-purifying-witness"
    else:
        verdict = "purifying-evidence"
    return PurificationScan(
        verdict=verdict, candidates=outcomes, survivors=survivors, max_depth=max_depth
    )


@dataclass
class Wedge2Decay:
    """Exact and Monte Carlo values of d_n = integral of |wedge^2 W_n| and the
    fitted decay rate of log d_n.

    Exact values sum (prod of atom weights) * wedge2(W_word) over all words of
    each depth. The Monte Carlo column estimates the same quantity as the
    mean of k * wedge2(W_n) / tr(W_n† W_n) over words sampled at the maximally
    mixed state. ``slope`` is the least-squares slope of log d_n over the
    tail of the exact depths (-inf when d_n hits exact zero, the strongest
    possible decay); the verdict is "purifying-evidence" iff the slope is
    negative at 95% confidence.
    """

    exact_depths: np.ndarray
    d_exact: np.ndarray
    mc_depths: np.ndarray
    d_mc: np.ndarray
    d_mc_stderr: np.ndarray
    slope: float
    slope_ci: tuple[float, float]
    verdict: str


def _exact_wedge2_sums(km: KrausMeasure, max_depth: int, budget: int) -> np.ndarray:
    _check_budget(len(km), max_depth, budget)
    mats = km.matrices
    weights = km.weights
    sums = np.zeros(max_depth)

    def dfs(w_mat: np.ndarray, mass: float, level: int) -> None:
        if level > 0:
            sums[level - 1] += mass * wedge_norm(w_mat, 2)
        if level == max_depth:
            return
        for a in range(len(mats)):
            dfs(mats[a] @ w_mat, mass * weights[a], level + 1)

    dfs(np.eye(km.dim, dtype=np.complex128), 1.0, 0)
    return sums


def _mc_wedge2(
    km: KrausMeasure, depth: int, n_paths: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    k = km.dim
    rho_ch = np.eye(k, dtype=np.complex128) / k
    cfg = SampleConfig(seed=seed, n_steps=depth, n_paths=n_paths, burn_in=0)
    estimates = np.empty((n_paths, depth))
    for p, rng in enumerate(path_generators(cfg)):
        uniforms = rng.random(depth)
        word, _, _ = _kernels.trajectory_path(km.matrices, km.weights, rho_ch, uniforms, False)
        w_mat = np.eye(k, dtype=np.complex128)
        for t, a in enumerate(word):
            w_mat = km.matrices[a] @ w_mat
            scale = hs_norm(w_mat)
            if scale < 1e-250:
                raise DegenerateStepError("sampled product vanished; defective measure")
            w_mat = w_mat / scale  # scale cancels in the estimator below
            s = np.linalg.svd(w_mat, compute_uv=False)
            estimates[p, t] = k * (s[0] * s[1]) / float(np.sum(s**2))
    mean = estimates.mean(axis=0)
    stderr = (
        estimates.std(axis=0, ddof=1) / np.sqrt(n_paths) if n_paths > 1 else np.zeros(depth)
    )
    return mean, stderr


def wedge2_decay(
    km: KrausMeasure,
    max_exact_depth: int = 8,
    mc_depth: int = 0,
    n_paths: int = 400,
    seed: int = 0,
    budget: int = DEFAULT_WORD_BUDGET,
) -> Wedge2Decay:
    """Measure the decay of the expected wedge-2 norm of sampled products."""
    check = is_stochastic(km, tol=1e-8)
    if not check.ok:
        raise NotStochasticError(f"wedge2 decay needs a stochastic family (residual {check.residual:.3e})")
    if km.dim < 2:
        raise ValueError("wedge-2 decay needs dimension k >= 2")
    if max_exact_depth < 1:
        raise ValueError("max_exact_depth must be >= 1")
    d_exact = _exact_wedge2_sums(km, max_exact_depth, budget)
    exact_depths = np.arange(1, max_exact_depth + 1)

    if mc_depth > 0:
        d_mc, d_mc_stderr = _mc_wedge2(km, mc_depth, n_paths, seed)
        mc_depths = np.arange(1, mc_depth + 1)
    else:
        d_mc = np.zeros(0)
        d_mc_stderr = np.zeros(0)
        mc_depths = np.zeros(0, dtype=int)

    tail_start = max(2, max_exact_depth // 2)
    tail = exact_depths >= tail_start
    tail_depths = exact_depths[tail]
    tail_vals = d_exact[tail]
    if np.any(tail_vals <= 0.0):
        slope = float("-inf")
        slope_ci = (float("-inf"), float("-inf"))
        verdict = "purifying-evidence"
    elif tail_depths.size < 3:
        slope = float("nan")
        slope_ci = (float("nan"), float("nan"))
        verdict = "inconclusive"
    else:
        fit = stats.linregress(tail_depths, np.log(tail_vals))
        tcrit = stats.t.ppf(0.975, tail_depths.size - 2)
        lo, hi = fit.slope - tcrit * fit.stderr, fit.slope + tcrit * fit.stderr
        slope = float(fit.slope)
        slope_ci = (float(lo), float(hi))
        # a roundoff-scale band around zero counts as "no decay"
        zero_tol = 1e-9
        if hi < -zero_tol:
            verdict = "purifying-evidence"
        elif lo >= -zero_tol:
            verdict = "non-purifying-witness"
        else:
            verdict = "inconclusive"
    return Wedge2Decay(
        exact_depths=exact_depths,
        d_exact=d_exact,
        mc_depths=mc_depths,
        d_mc=d_mc,
        d_mc_stderr=d_mc_stderr,
        slope=slope,
        slope_ci=slope_ci,
        verdict=verdict,
    )


@dataclass
class YProcessReport:
    """Distribution of the second-to-first singular value ratio of Y_n.

    Y_n = W_n† W_n / tr(W_n† W_n) along words sampled at the maximally mixed
    state. Under purification the ratio collapses to zero. The martingale
    deviation is an exact one-step check: the conditional expectation of
    Y_{n+1} over the next atom is computed in closed form on a subsample of
    prefixes and compared to Y_n.
    """

    ratios: np.ndarray
    median_ratio: float
    martingale_deviation: float
    n_paths: int
    depth: int


def y_process_diagnostic(
    km: KrausMeasure, depth: int, n_paths: int, seed: int = 0, martingale_subsample: int = 10
) -> YProcessReport:
    check = is_stochastic(km, tol=1e-8)
    if not check.ok:
        raise NotStochasticError(f"the Y-process needs a stochastic family (residual {check.residual:.3e})")
    k = km.dim
    rho_ch = np.eye(k, dtype=np.complex128) / k
    cfg = SampleConfig(seed=seed, n_steps=depth, n_paths=n_paths, burn_in=0)
    ratios = np.empty(n_paths)
    mart_dev = 0.0
    degenerate = 0
    for p, rng in enumerate(path_generators(cfg)):
        uniforms = rng.random(depth)
        try:
            word, _, _ = _kernels.trajectory_path(km.matrices, km.weights, rho_ch, uniforms, False)
        except DegenerateStepError:
            degenerate += 1
            ratios[p] = np.nan
            continue
        w_mat = np.eye(k, dtype=np.complex128)
        for t, a in enumerate(word):
            w_mat = km.matrices[a] @ w_mat
            w_mat = w_mat / hs_norm(w_mat)
            if p < martingale_subsample and t == depth // 2:
                y_now = _y_matrix(w_mat)
                cond = np.zeros_like(y_now)
                for wgt, mat in zip(km.weights, km.matrices):
                    nxt = mat @ w_mat
                    tr_nxt = float(np.trace(nxt.conj().T @ nxt).real)
                    if tr_nxt > 1e-30:
                        cond += wgt * (nxt.conj().T @ nxt) / float(
                            np.trace(w_mat.conj().T @ w_mat).real
                        )
                mart_dev = max(mart_dev, hs_norm(cond - y_now))
        y_final = _y_matrix(w_mat)
        eigs = np.linalg.eigvalsh(hermitize(y_final))
        ratios[p] = float(eigs[-2] / eigs[-1]) if eigs[-1] > 0 else np.nan
    if degenerate == n_paths:
        raise DegenerateStepError("every sampled path died: the measure is defective")
    valid = ratios[np.isfinite(ratios)]
    return YProcessReport(
        ratios=ratios,
        median_ratio=float(np.median(valid)),
        martingale_deviation=float(mart_dev),
        n_paths=n_paths,
        depth=depth,
    )


def _y_matrix(w_mat: np.ndarray) -> np.ndarray:
    g = w_mat.conj().T @ w_mat
    return g / float(np.trace(g).real)
