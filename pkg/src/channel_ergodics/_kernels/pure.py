"""Pure-numpy per-path simulation kernels.

Reference implementations of the hot loops: word sampling under the
trajectory/kernel laws, the QR exponent accumulator, and the diagnostic
vector propagation. The compiled extension (``_core``) implements the same
functions with identical sampling logic, so both backends produce the same
words for the same pre-generated uniforms; tests cross-check them.

Conventions shared by both backends:

* selection is inverse-CDF over the per-step probability vector, with
  probabilities below ``MIN_PROB`` clamped to zero and the uniform scaled
  by the (tolerance-checked) total, so floating drift cannot select
  effectively-dead atoms;
* a QR slot collapses at the first step where the R diagonal falls below
  ``max(collapse_tol, COLLAPSE_REL_TOL * ||B||_F)``; it is frozen from then
  on (a singular factor bounds the product rank forever);
* per-path randomness is consumed as: the uniforms array first, any
  auxiliary frame/vector afterwards (callers pre-generate both).
"""

from __future__ import annotations

import numpy as np

from ..errors import DegenerateStepError, NotStochasticError
from ..linalg import canonicalize

PROB_TOL = 1e-8
MIN_PROB = 1e-14
COLLAPSE_REL_TOL = 1e-13


def _select_atom(probs: np.ndarray, total: float, u: float) -> int:
    target = u * total
    acc = 0.0
    last = -1
    for a in range(probs.shape[0]):
        p = probs[a]
        if p > 0.0:
            last = a
            acc += p
            if target < acc:
                return a
    return last


def _check_total(total: float, t: int) -> None:
    if abs(total - 1.0) > PROB_TOL:
        if total < MIN_PROB:
            raise DegenerateStepError(f"all selection probabilities vanished at step {t}")
        raise NotStochasticError(
            f"step probabilities sum to {total!r} at step {t}; the family is not stochastic"
        )


def _state_probs(mats: np.ndarray, weights: np.ndarray, rho: np.ndarray) -> np.ndarray:
    probs = np.einsum("aij,jl,ail->a", mats, rho, mats.conj(), optimize=True).real * weights
    probs[probs < MIN_PROB] = 0.0
    return probs


def trajectory_path(
    mats: np.ndarray,
    weights: np.ndarray,
    rho0: np.ndarray,
    uniforms: np.ndarray,
    store_states: bool = False,
):
    """Quantum trajectory: atom a with probability w_a tr(L_a rho L_a†), then
    rho <- L_a rho L_a† / tr. Returns (word, states | None, log_weight)."""
    n = uniforms.shape[0]
    k = rho0.shape[0]
    word = np.empty(n, dtype=np.int32)
    states = np.empty((n, k, k), dtype=np.complex128) if store_states else None
    rho = np.array(rho0, dtype=np.complex128)
    log_weight = 0.0
    for t in range(n):
        probs = _state_probs(mats, weights, rho)
        total = float(probs.sum())
        _check_total(total, t)
        a = _select_atom(probs, total, float(uniforms[t]))
        if a < 0:
            raise DegenerateStepError(f"all selection probabilities vanished at step {t}")
        word[t] = a
        log_weight += np.log(probs[a])
        nxt = mats[a] @ rho @ mats[a].conj().T
        rho = nxt / float(np.trace(nxt).real)
        if store_states:
            states[t] = rho
    return word, states, log_weight


def x_process_path(
    mats: np.ndarray,
    weights: np.ndarray,
    x0: np.ndarray,
    uniforms: np.ndarray,
    store_states: bool = False,
):
    """Projective-space process: atom a with probability w_a ||L_a x||^2, then
    x <- L_a x / ||L_a x|| (canonicalized). Returns (word, states | None, log_weight)."""
    n = uniforms.shape[0]
    k = x0.shape[0]
    word = np.empty(n, dtype=np.int32)
    states = np.empty((n, k), dtype=np.complex128) if store_states else None
    x = np.array(x0, dtype=np.complex128)
    log_weight = 0.0
    for t in range(n):
        imgs = mats @ x
        probs = np.einsum("ai,ai->a", imgs, imgs.conj()).real * weights
        probs[probs < MIN_PROB] = 0.0
        total = float(probs.sum())
        _check_total(total, t)
        a = _select_atom(probs, total, float(uniforms[t]))
        if a < 0:
            raise DegenerateStepError(f"all selection probabilities vanished at step {t}")
        word[t] = a
        log_weight += np.log(probs[a])
        y = imgs[a]
        x = canonicalize(y / np.linalg.norm(y))
        if store_states:
            states[t] = x
    return word, states, log_weight


def qr_accumulate(
    mats: np.ndarray,
    word: np.ndarray,
    q0: np.ndarray,
    collapse_tol: float = 1e-150,
):
    """Replay the QR exponent accumulator over a given word.

    Maintains an orthonormal frame Q; at each step factors L_a Q = Q' R' and
    adds log|R'_jj| to slot j. Returns (slot_sums, collapse_step) where
    collapse_step[j] is the 1-based step at which slot j collapsed (-1: never);
    sums stop accumulating at collapse.
    """
    k = q0.shape[0]
    q = np.array(q0, dtype=np.complex128)
    sums = np.zeros(k, dtype=np.float64)
    collapse_step = np.full(k, -1, dtype=np.int64)
    for t, a in enumerate(word):
        b = mats[a] @ q
        thresh = max(collapse_tol, COLLAPSE_REL_TOL * float(np.linalg.norm(b)))
        q, r = np.linalg.qr(b)
        diag = np.abs(np.diagonal(r))
        for j in range(k):
            if collapse_step[j] < 0:
                if diag[j] <= thresh:
                    collapse_step[j] = t + 1
                else:
                    sums[j] += np.log(diag[j])
    return sums, collapse_step


def lyapunov_path(
    mats: np.ndarray,
    weights: np.ndarray,
    rho0: np.ndarray,
    q0: np.ndarray,
    uniforms: np.ndarray,
    collapse_tol: float = 1e-150,
    skip_steps: int = 0,
):
    """Sample a word under the stationary word law and accumulate QR slot sums.

    The first ``skip_steps`` factorizations update the frame and the collapse
    detection but are excluded from both accumulators (warmup: the leading
    diagonals carry the arbitrary initial frame). Returns
    (word, slot_sums, collapse_step, log_weight, logdet_window) where
    logdet_window = sum of log|det L_{a_t}| over the accumulated window, so
    that sum_j slot_sums[j] == logdet_window exactly when nothing collapsed.
    """
    n = uniforms.shape[0]
    k = rho0.shape[0]
    word = np.empty(n, dtype=np.int32)
    sums = np.zeros(k, dtype=np.float64)
    collapse_step = np.full(k, -1, dtype=np.int64)
    atom_logdet = np.array([np.linalg.slogdet(m)[1] for m in mats])
    rho = np.array(rho0, dtype=np.complex128)
    q = np.array(q0, dtype=np.complex128)
    log_weight = 0.0
    logdet_sum = 0.0
    for t in range(n):
        probs = _state_probs(mats, weights, rho)
        total = float(probs.sum())
        _check_total(total, t)
        a = _select_atom(probs, total, float(uniforms[t]))
        if a < 0:
            raise DegenerateStepError(f"all selection probabilities vanished at step {t}")
        word[t] = a
        log_weight += np.log(probs[a])
        if t >= skip_steps:
            logdet_sum += atom_logdet[a]
        nxt = mats[a] @ rho @ mats[a].conj().T
        rho = nxt / float(np.trace(nxt).real)
        b = mats[a] @ q
        thresh = max(collapse_tol, COLLAPSE_REL_TOL * float(np.linalg.norm(b)))
        q, r = np.linalg.qr(b)
        diag = np.abs(np.diagonal(r))
        for j in range(k):
            if collapse_step[j] < 0:
                if diag[j] <= thresh:
                    collapse_step[j] = t + 1
                elif t >= skip_steps:
                    sums[j] += np.log(diag[j])
    return word, sums, collapse_step, log_weight, logdet_sum


def theorem_b_path(
    mats: np.ndarray,
    weights: np.ndarray,
    x0: np.ndarray,
    q0_vec: np.ndarray,
    uniforms: np.ndarray,
):
    """Per-step curve (1/n)(log||W_n x|| - log||W_n q||) along a kernel-sampled word.

    The word is sampled from the projective kernel at x (the conditional
    word law given the starting point), so ||W_n x|| stays positive along the
    path; q is a fixed generic unit vector whose growth tracks the top
    singular value up to an O(1/n) startup term.
    """
    n = uniforms.shape[0]
    word = np.empty(n, dtype=np.int32)
    curve = np.empty(n, dtype=np.float64)
    x = np.array(x0, dtype=np.complex128)
    q = np.array(q0_vec, dtype=np.complex128)
    q /= np.linalg.norm(q)
    log_wx = 0.0
    log_wq = 0.0
    for t in range(n):
        imgs = mats @ x
        probs = np.einsum("ai,ai->a", imgs, imgs.conj()).real * weights
        probs[probs < MIN_PROB] = 0.0
        total = float(probs.sum())
        _check_total(total, t)
        a = _select_atom(probs, total, float(uniforms[t]))
        if a < 0:
            raise DegenerateStepError(f"all selection probabilities vanished at step {t}")
        word[t] = a
        y = imgs[a]
        ny = float(np.linalg.norm(y))
        log_wx += np.log(ny)
        x = y / ny
        z = mats[a] @ q
        nz = float(np.linalg.norm(z))
        if nz < 1e-300:
            raise DegenerateStepError(
                f"norm-tracking vector annihilated at step {t}; rerun with a different seed"
            )
        log_wq += np.log(nz)
        q = z / nz
        curve[t] = (log_wx - log_wq) / (t + 1)
    return word, curve
