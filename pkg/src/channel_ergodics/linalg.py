"""Dense complex linear algebra at fixed small dimension.

Hilbert-Schmidt geometry, singular values and wedge-product norms, the
projective-space metric, and the phase canonicalization used to make
projective points comparable. Everything operates on plain numpy arrays
and is pure; matrices are expected to be small (dimension <= 16).
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-10


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a square complex128 matrix with finite entries."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def hermitize(a: np.ndarray) -> np.ndarray:
    """Hermitian part (A + A†) / 2."""
    return (a + a.conj().T) / 2


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product tr(A B†)."""
    a = as_complex_matrix(a, "A")
    b = as_complex_matrix(b, "B")
    check_same_dim(a, b)
    # tr(A B†) = sum_ij A_ij conj(B_ij); vdot conjugates its first argument
    return complex(np.vdot(b, a))


def hs_norm(a) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(np.asarray(a, dtype=np.complex128)))


def canonicalize(v, tol: float = 1e-12) -> np.ndarray:
    """Normalize a vector to a canonical projective representative.

    The result has unit Euclidean norm and its entry of largest modulus
    (ties broken by lowest index) is real and nonnegative. The function is
    exactly idempotent: applying it to its own output returns the input
    bit-for-bit, so canonical representatives can be compared directly.
    """
    x = np.asarray(v, dtype=np.complex128).reshape(-1).copy()
    nrm = float(np.linalg.norm(x))
    if nrm < tol:
        raise ValueError("cannot canonicalize a (near-)zero vector")
    if abs(nrm - 1.0) > 1e-13:
        x /= nrm
    j = int(np.argmax(np.abs(x)))
    pivot = x[j]
    if pivot.imag != 0.0 or pivot.real < 0.0:
        mod = abs(pivot)
        x *= np.conj(pivot) / mod
        x[j] = mod  # force an exact real, nonnegative pivot
    return x


def proj_distance(x, y) -> float:
    """Projective-space distance sqrt(1 - |<x,y>|^2) between unit vectors."""
    xv = np.asarray(x, dtype=np.complex128).reshape(-1)
    yv = np.asarray(y, dtype=np.complex128).reshape(-1)
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.shape} vs {yv.shape}")
    ov = abs(np.vdot(xv, yv)) ** 2
    return float(np.sqrt(max(0.0, 1.0 - min(ov, 1.0))))


def singular_values(a) -> np.ndarray:
    """Singular values in nonincreasing order."""
    return np.linalg.svd(as_complex_matrix(a), compute_uv=False)


def wedge_norm(a, p: int) -> float:
    """Product of the p largest singular values.

    Equals the operator norm of the induced map on p-fold wedge products;
    p = 1 gives the operator 2-norm and p = dim gives |det|.
    """
    m = as_complex_matrix(a)
    k = m.shape[0]
    if not 1 <= p <= k:
        raise ValueError(f"wedge order p={p} out of range [1, {k}]")
    s = np.linalg.svd(m, compute_uv=False)
    return float(np.prod(s[:p]))


def projector_onto(x) -> np.ndarray:
    """Rank-one orthogonal projector x x† onto the line through a unit vector."""
    xv = np.asarray(x, dtype=np.complex128).reshape(-1)
    return np.outer(xv, xv.conj())


def validate_density(rho, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Check that rho is a density matrix (Hermitian, PSD, unit trace) within tol."""
    m = as_complex_matrix(rho, "density matrix")
    herm_dev = float(np.max(np.abs(m - m.conj().T)))
    if herm_dev > tol:
        raise ValueError(f"density matrix not Hermitian: deviation {herm_dev:.3e}")
    h = hermitize(m)
    min_eig = float(np.linalg.eigvalsh(h)[0])
    if min_eig < -tol:
        raise ValueError(f"density matrix not PSD: min eigenvalue {min_eig:.3e}")
    tr_dev = abs(complex(np.trace(m)) - 1.0)
    if tr_dev > tol:
        raise ValueError(f"density matrix trace differs from 1 by {tr_dev:.3e}")
    return m


def validate_projector(pi, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, int]:
    """Check Hermitian idempotency within tol; return (matrix, rank)."""
    m = as_complex_matrix(pi, "projector")
    if float(np.max(np.abs(m - m.conj().T))) > tol:
        raise ValueError("projector not Hermitian")
    scale = max(1.0, float(np.max(np.abs(m))))
    if float(np.max(np.abs(m @ m - m))) > tol * scale:
        raise ValueError("projector not idempotent")
    rank = int(round(float(np.trace(m).real)))
    return m, rank


def orthonormal_columns(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the column span, rank decided by SVD at relative tol."""
    a = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=np.complex128)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros((a.shape[0], 0), dtype=np.complex128)
    r = int(np.sum(s > tol * s[0]))
    return u[:, :r]


def projector_from_basis(basis: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the span of orthonormal columns."""
    return basis @ basis.conj().T


def subspace_distance(basis_a: np.ndarray, basis_b: np.ndarray) -> float:
    """HS distance between the orthogonal projectors of two subspaces."""
    return hs_norm(projector_from_basis(basis_a) - projector_from_basis(basis_b))


def haar_unitary(k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed k x k unitary (QR of a complex Ginibre sample)."""
    z = (rng.standard_normal((k, k)) + 1j * rng.standard_normal((k, k))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_unit_vector(k: int, rng: np.random.Generator) -> np.ndarray:
    """Canonicalized uniformly random point on the unit sphere of C^k."""
    z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return canonicalize(z / np.linalg.norm(z))
