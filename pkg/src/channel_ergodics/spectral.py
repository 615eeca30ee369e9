"""Spectral and ergodic analysis of the channel.

Covers the Perron eigendata (spectral radius, fixed density matrix, dual
eigenmatrix), the irreducibility decision, minimal invariant subspaces of
the atom family, Cesàro temporal means, and the normalization that rescales
an irreducible family to a stochastic one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    KrausMeasure,
    apply_channel,
    apply_dual,
    dual_superoperator_matrix,
    is_stochastic,
    superoperator_matrix,
    unvec,
    vec,
)
from .errors import NotIrreducibleError, NotStochasticError, SpectralError
from .linalg import (
    hermitize,
    hs_norm,
    orthonormal_columns,
    projector_from_basis,
    subspace_distance,
    validate_density,
)

PERIPHERAL_REL_TOL = 1e-9


def _perron_eigenmatrix(superop: np.ndarray, k: int) -> tuple[float, np.ndarray, int]:
    """Extract (spectral radius, trace-positive Hermitian eigenmatrix, multiplicity).

    The eigenvector at a simple real leading eigenvalue is used directly.
    When the leading eigenvalue is degenerate (or its eigenvector has a
    vanishing trace), the identity is projected onto the full eigenspace,
    which recovers a trace-positive eigenmatrix whenever one exists.
    """
    evals, evecs = np.linalg.eig(superop)
    lam = float(np.max(np.abs(evals)))
    if lam <= 0.0:
        raise SpectralError("zero spectral radius: the family acts as the zero map")
    tol = PERIPHERAL_REL_TOL * max(lam, 1.0)
    multiplicity = int(np.sum(np.abs(evals - lam) <= tol))

    candidate = None
    if multiplicity == 1:
        idx = int(np.argmin(np.abs(evals - lam)))
        if abs(evals[idx].imag) <= tol:
            mat = hermitize(unvec(evecs[:, idx], k))
            tr = float(np.trace(mat).real)
            if abs(tr) > 1e-12 * max(1.0, hs_norm(mat)):
                candidate = mat / tr
    if candidate is None:
        # project Id onto the eigenspace of eigenvalues within tol of lam
        sel = np.abs(evals - lam) <= tol
        if not np.any(sel):
            raise SpectralError("no eigenvalue found at the spectral radius")
        coeffs = np.linalg.solve(evecs, vec(np.eye(k)))
        proj = evecs[:, sel] @ coeffs[sel]
        mat = hermitize(unvec(proj, k))
        tr = float(np.trace(mat).real)
        if abs(tr) <= 1e-12 * max(1.0, hs_norm(mat)):
            raise SpectralError("no trace-positive eigenmatrix at the spectral radius")
        candidate = mat / tr
    return lam, candidate, multiplicity


@dataclass(frozen=True)
class SpectralData:
    """Perron eigendata of the channel.

    ``rho_fixed`` is Hermitian with unit trace and satisfies
    ``apply_channel(rho) = lam * rho`` up to ``rho_residual``; ``sigma_dual``
    is the dual eigenmatrix normalized to trace k. ``lambda_multiplicity``
    counts eigenvalues within relative 1e-9 of lam itself, while
    ``peripheral_multiplicity`` counts the whole peripheral spectrum
    (|z| >= lam(1 - 1e-9)).
    """

    lam: float
    rho_fixed: np.ndarray
    sigma_dual: np.ndarray
    peripheral_multiplicity: int
    spectral_gap: float
    lambda_multiplicity: int
    rho_min_eigenvalue: float
    sigma_min_eigenvalue: float
    rho_residual: float
    sigma_residual: float


def spectral_data(km: KrausMeasure) -> SpectralData:
    """Full eigenanalysis of the k^2 x k^2 superoperator."""
    k = km.dim
    sup = superoperator_matrix(km)
    evals = np.linalg.eigvals(sup)
    moduli = np.sort(np.abs(evals))[::-1]
    lam_mod = float(moduli[0])
    peripheral = int(np.sum(moduli >= lam_mod * (1.0 - PERIPHERAL_REL_TOL)))
    gap = float(lam_mod - moduli[1]) if moduli.size > 1 else lam_mod

    lam, rho, multiplicity = _perron_eigenmatrix(sup, k)
    _, sigma, _ = _perron_eigenmatrix(dual_superoperator_matrix(km), k)
    sigma = sigma * k  # trace normalized to k so stochastic channels give Id

    rho_res = hs_norm(apply_channel(km, rho) - lam * rho)
    sigma_res = hs_norm(apply_dual(km, sigma) - lam * sigma)
    return SpectralData(
        lam=lam,
        rho_fixed=rho,
        sigma_dual=sigma,
        peripheral_multiplicity=peripheral,
        spectral_gap=gap,
        lambda_multiplicity=multiplicity,
        rho_min_eigenvalue=float(np.linalg.eigvalsh(hermitize(rho))[0]),
        sigma_min_eigenvalue=float(np.linalg.eigvalsh(hermitize(sigma))[0]),
        rho_residual=rho_res,
        sigma_residual=sigma_res,
    )


def fixed_point(km: KrausMeasure) -> np.ndarray:
    """Invariant density matrix of a stochastic channel."""
    check = is_stochastic(km, tol=1e-8)
    if not check.ok:
        raise NotStochasticError(f"channel is not stochastic (residual {check.residual:.3e})")
    sd = spectral_data(km)
    rho = hermitize(sd.rho_fixed)
    # clip eigenvalue dust so the result passes density validation downstream
    w, v = np.linalg.eigh(rho)
    w = np.maximum(w, 0.0)
    rho = (v * w) @ v.conj().T
    return rho / float(np.trace(rho).real)


@dataclass(frozen=True)
class IrreducibilityResult:
    """Decision by two concurrent criteria that must agree.

    ``irreducible`` is None when the spectral criterion (simple Perron
    eigenvalue with positive-definite eigenmatrix) and the positivity
    criterion ((Id + phi)^{k-1} strictly positive on a family of rank-one
    seeds) disagree, which signals a borderline numeric case.
    """

    irreducible: bool | None
    spectral_criterion: bool
    positivity_criterion: bool
    witness: np.ndarray | None
    lam: float
    lambda_multiplicity: int
    rho_min_eigenvalue: float

    @property
    def conclusive(self) -> bool:
        return self.irreducible is not None


def _positivity_seeds(km: KrausMeasure, trials: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Rank-one PSD test matrices: basis projectors, atom eigenvector projectors,
    and seeded random projectors. The structured seeds catch reducible channels
    whose invariant subspaces random sampling almost surely misses."""
    k = km.dim
    seeds = [np.zeros(k, dtype=np.complex128) for _ in range(k)]
    for i in range(k):
        seeds[i][i] = 1.0
    for mat in km.matrices:
        _, vecs = np.linalg.eig(mat)
        for col in vecs.T:
            nrm = np.linalg.norm(col)
            if nrm > 1e-12:
                seeds.append(col / nrm)
    for _ in range(trials):
        z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        seeds.append(z / np.linalg.norm(z))
    return [np.outer(x, x.conj()) for x in seeds]


def is_irreducible(
    km: KrausMeasure, trials: int = 20, seed: int = 0, tol: float = 1e-9
) -> IrreducibilityResult:
    """Decide irreducibility of the induced channel."""
    sd = spectral_data(km)
    crit_spectral = sd.lambda_multiplicity == 1 and sd.rho_min_eigenvalue > tol * sd.lam

    k = km.dim
    rng = np.random.default_rng(seed)
    witness = None
    crit_positivity = True
    for a in _positivity_seeds(km, trials, rng):
        b = a
        for _ in range(k - 1):
            b = b + apply_channel(km, b)
        if float(np.linalg.eigvalsh(hermitize(b))[0]) <= tol:
            crit_positivity = False
            witness = a
            break

    if crit_spectral == crit_positivity:
        verdict: bool | None = crit_spectral
    else:
        verdict = None
    if verdict is False and witness is None:
        witness = sd.rho_fixed
    return IrreducibilityResult(
        irreducible=verdict,
        spectral_criterion=crit_spectral,
        positivity_criterion=crit_positivity,
        witness=witness,
        lam=sd.lam,
        lambda_multiplicity=sd.lambda_multiplicity,
        rho_min_eigenvalue=sd.rho_min_eigenvalue,
    )


def trace_positivity_cross_check(
    km: KrausMeasure, trials: int = 10, seed: int = 0, tol: float = 1e-9
) -> bool:
    """Optional cross-check: tr[B phi^n(A)] > 0 for some n in 1..k-1 on random PSD pairs."""
    k = km.dim
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        za = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        zb = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        a = np.outer(za, za.conj())
        b = np.outer(zb, zb.conj())
        cur = a
        ok = False
        for _ in range(max(1, k - 1)):
            cur = apply_channel(km, cur)
            if float(np.trace(b @ cur).real) > tol:
                ok = True
                break
        if not ok:
            return False
    return True


@dataclass(frozen=True)
class InvariantSubspaceReport:
    """Inclusion-minimal common invariant subspaces of the atom family."""

    minimal_subspaces: tuple[np.ndarray, ...]  # each an orthonormal (k, r) basis
    is_phi_erg: bool
    is_irreducible: bool
    n_seeds: int


def _orbit_closure(mats: np.ndarray, x: np.ndarray, tol: float) -> np.ndarray:
    basis = orthonormal_columns(x[:, None], tol)
    while True:
        blocks = [basis] + [m @ basis for m in mats]
        new_basis = orthonormal_columns(np.hstack(blocks), tol)
        if new_basis.shape[1] == basis.shape[1]:
            return basis
        basis = new_basis


def _is_contained(inner: np.ndarray, outer: np.ndarray, tol: float) -> bool:
    proj = projector_from_basis(outer)
    return hs_norm(inner - proj @ inner) <= tol


def minimal_invariant_subspaces(
    km: KrausMeasure,
    trials: int | None = None,
    seed: int = 0,
    rank_tol: float = 1e-9,
    match_tol: float = 1e-8,
) -> InvariantSubspaceReport:
    """Search for minimal subspaces E with L_a E contained in E for all atoms.

    Orbit closures are grown from the standard basis, the eigenvectors of
    every atom, and ``trials`` seeded random vectors; the inclusion-minimal
    results are kept. The seed family is a heuristic: it finds all minimal
    subspaces on the channels treated here but is not guaranteed complete
    for adversarial inputs (increase ``trials`` to push harder).
    """
    k = km.dim
    if trials is None:
        trials = max(k, 2 * k)
    if trials < k:
        raise ValueError(f"trials must be at least the dimension k={k}")
    rng = np.random.default_rng(seed)

    starts: list[np.ndarray] = [np.eye(k, dtype=np.complex128)[:, i] for i in range(k)]
    for mat in km.matrices:
        _, vecs = np.linalg.eig(mat)
        for col in vecs.T:
            nrm = np.linalg.norm(col)
            if nrm > 1e-12:
                starts.append(col / nrm)
    for _ in range(trials):
        z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        starts.append(z / np.linalg.norm(z))

    closures: list[np.ndarray] = []
    for x in starts:
        basis = _orbit_closure(km.matrices, x, rank_tol)
        if basis.shape[1] == 0:
            continue
        if not any(
            basis.shape[1] == other.shape[1]
            and subspace_distance(basis, other) <= match_tol
            for other in closures
        ):
            closures.append(basis)

    minimal = [
        cand
        for cand in closures
        if not any(
            other.shape[1] < cand.shape[1] and _is_contained(other, cand, match_tol)
            for other in closures
        )
    ]
    minimal.sort(
        key=lambda b: (
            b.shape[1],
            tuple(np.round(projector_from_basis(b).view(np.float64).ravel(), 8)),
        )
    )
    unique_minimal = len(minimal) == 1
    return InvariantSubspaceReport(
        minimal_subspaces=tuple(minimal),
        is_phi_erg=unique_minimal,
        is_irreducible=bool(unique_minimal and minimal[0].shape[1] == k),
        n_seeds=len(starts),
    )


@dataclass(frozen=True)
class TemporalMeanResult:
    mean: np.ndarray
    distances: np.ndarray  # HS distance of the partial Cesàro mean to rho_fixed
    rho_fixed: np.ndarray = field(repr=False)


def temporal_mean(km: KrausMeasure, rho0, n_terms: int) -> TemporalMeanResult:
    """Cesàro mean (1/N) sum_{n=1..N} phi^n(rho0) with its convergence curve."""
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    check = is_stochastic(km, tol=1e-8)
    if not check.ok:
        raise NotStochasticError(f"temporal means need a stochastic channel (residual {check.residual:.3e})")
    rho = validate_density(rho0)
    target = fixed_point(km)
    acc = np.zeros_like(rho)
    distances = np.empty(n_terms, dtype=np.float64)
    cur = rho
    for n in range(1, n_terms + 1):
        cur = apply_channel(km, cur)
        acc += cur
        distances[n - 1] = hs_norm(acc / n - target)
    return TemporalMeanResult(mean=acc / n_terms, distances=distances, rho_fixed=target)


def normalize(km: KrausMeasure, eig_floor: float = 1e-12) -> KrausMeasure:
    """Conjugate and rescale the atoms so the induced channel is stochastic.

    Uses the Perron eigenpair of the dual map, phi*(sigma) = lam sigma with
    sigma > 0, and returns atoms ``lam^{-1/2} sigma^{1/2} L_a sigma^{-1/2}``.
    The paper-level normalization is defined by existence only; this
    sigma-conjugation is the standard constructive form. Requires sigma to
    be positive definite, which fails exactly when the channel is reducible
    (or the eigenproblem is numerically degenerate).
    """
    k = km.dim
    lam, sigma, _ = _perron_eigenmatrix(dual_superoperator_matrix(km), k)
    w, v = np.linalg.eigh(hermitize(sigma))
    if w[0] <= eig_floor * w[-1]:
        raise NotIrreducibleError(
            "dual Perron eigenmatrix is not positive definite "
            f"(min/max eigenvalue ratio {w[0] / w[-1]:.3e}); "
            "the channel is reducible or numerically degenerate"
        )
    sigma_half = (v * np.sqrt(w)) @ v.conj().T
    sigma_mhalf = (v / np.sqrt(w)) @ v.conj().T
    scale = 1.0 / math.sqrt(lam)
    new_mats = np.array([scale * (sigma_half @ m @ sigma_mhalf) for m in km.matrices])
    out = KrausMeasure.from_arrays(new_mats, km.weights, km.labels)
    check = is_stochastic(out, tol=1e-9)
    if not check.ok:
        raise SpectralError(
            f"normalization failed to produce a stochastic family (residual {check.residual:.3e})"
        )
    return out
