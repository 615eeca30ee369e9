"""Finite weighted Kraus families and the completely positive maps they induce.

A channel is described by a finite measure on matrix space: atoms ``(w_a, L_a)``
with strictly positive weights. The induced map is::

    rho  ->  sum_a  w_a  L_a rho L_a†

Weights are kept separate from the matrices throughout (they enter sampling
probabilities and entropy sums explicitly and are never folded into the
operators as sqrt-factors). Vectorization uses the column-stacking convention
``vec(A X B) = (B^T kron A) vec(X)``; see :func:`vec` / :func:`unvec`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputValidationError
from .linalg import as_complex_matrix, check_same_dim, hermitize, hs_norm


@dataclass(frozen=True)
class KrausAtom:
    """One atom of the measure: mass ``weight`` at the matrix ``matrix``."""

    weight: float
    matrix: np.ndarray
    label: str | None = None


class KrausMeasure:
    """Immutable finite weighted family of same-dimension complex matrices.

    The stacked arrays ``matrices`` (m, k, k) and ``weights`` (m,) are
    read-only views shared by all operations, so instances are safe to use
    from concurrent callers.
    """

    def __init__(self, atoms: Iterable[KrausAtom]):
        atoms = list(atoms)
        if not atoms:
            raise InputValidationError("a Kraus measure needs at least one atom")
        mats = []
        weights = []
        labels = []
        for idx, atom in enumerate(atoms):
            w = float(atom.weight)
            if not np.isfinite(w) or w <= 0.0:
                raise InputValidationError(f"atom {idx}: weight must be positive, got {atom.weight !r}")
            m = as_complex_matrix(atom.matrix, f"atom {idx} matrix")
            mats.append(m)
            weights.append(w)
            labels.append(atom.label)
        dims = {m.shape[0] for m in mats}
        if len(dims) != 1:
            raise InputValidationError(f"atoms have mixed dimensions: {sorted(dims)}")
        stacked = np.stack(mats)
        if not np.any(np.abs(stacked) > 0.0):
            raise InputValidationError("all atom matrices are zero")
        stacked.setflags(write=False)
        warr = np.asarray(weights, dtype=np.float64)
        warr.setflags(write=False)
        self._matrices = stacked
        self._weights = warr
        self._labels = tuple(labels)
        self.dim = int(stacked.shape[2])

    @classmethod
    def from_arrays(
        cls,
        matrices,
        weights: Sequence[float] | None = None,
        labels: Sequence[str | None] | None = None,
    ) -> "KrausMeasure":
        mats = np.asarray(matrices, dtype=np.complex128)
        if mats.ndim != 3:
            raise InputValidationError(f"matrices must be a (m, k, k) stack, got shape {mats.shape}")
        m = mats.shape[0]
        if weights is None:
            weights = [1.0] * m
        if labels is None:
            labels = [None] * m
        if len(weights) != m or len(labels) != m:
            raise InputValidationError("weights/labels length must match the number of matrices")
        return cls(KrausAtom(w, x, lb) for w, x, lb in zip(weights, mats, labels))

    @property
    def matrices(self) -> np.ndarray:
        return self._matrices

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def labels(self) -> tuple[str | None, ...]:
        return self._labels

    @property
    def atoms(self) -> tuple[KrausAtom, ...]:
        return tuple(
            KrausAtom(float(w), m, lb)
            for w, m, lb in zip(self._weights, self._matrices, self._labels)
        )

    def __len__(self) -> int:
        return int(self._matrices.shape[0])

    def atom_label(self, index: int) -> str:
        lb = self._labels[index]
        return lb if lb is not None else f"atom{index}"

    def __repr__(self) -> str:
        return f"KrausMeasure(dim={self.dim}, atoms={len(self)})"


def apply_channel(km: KrausMeasure, rho) -> np.ndarray:
    """sum_a w_a L_a rho L_a†."""
    r = as_complex_matrix(rho, "rho")
    if r.shape[0] != km.dim:
        raise ValueError(f"dimension mismatch: channel dim {km.dim}, state dim {r.shape[0]}")
    return np.einsum(
        "a,aij,jl,aml->im", km.weights, km.matrices, r, km.matrices.conj(), optimize=True
    )


def apply_dual(km: KrausMeasure, x) -> np.ndarray:
    """sum_a w_a L_a† X L_a (Hilbert-Schmidt dual of :func:`apply_channel`)."""
    xm = as_complex_matrix(x, "X")
    if xm.shape[0] != km.dim:
        raise ValueError(f"dimension mismatch: channel dim {km.dim}, operator dim {xm.shape[0]}")
    return np.einsum(
        "a,aij,il,alm->jm", km.weights, km.matrices.conj(), xm, km.matrices, optimize=True
    )


@dataclass(frozen=True)
class StochasticityCheck:
    ok: bool
    residual: float
    tol: float


def is_stochastic(km: KrausMeasure, tol: float = 1e-9) -> StochasticityCheck:
    """Whether sum_a w_a L_a† L_a = Id within tol (HS norm of the residual)."""
    gram = np.einsum(
        "a,aij,aim->jm", km.weights, km.matrices.conj(), km.matrices, optimize=True
    )
    residual = hs_norm(gram - np.eye(km.dim))
    return StochasticityCheck(ok=bool(residual <= tol), residual=float(residual), tol=tol)


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho, dtype=np.complex128).reshape(-1, order="F")


def unvec(v: np.ndarray, k: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v, dtype=np.complex128).reshape((k, k), order="F")


def superoperator_matrix(km: KrausMeasure) -> np.ndarray:
    """k^2 x k^2 matrix of the channel on column-stacked inputs.

    Satisfies ``unvec(M @ vec(rho)) == apply_channel(km, rho)``.
    """
    k = km.dim
    out = np.zeros((k * k, k * k), dtype=np.complex128)
    for w, mat in zip(km.weights, km.matrices):
        out += w * np.kron(mat.conj(), mat)
    return out


def dual_superoperator_matrix(km: KrausMeasure) -> np.ndarray:
    """Matrix of the dual map; the conjugate transpose of the channel matrix."""
    return superoperator_matrix(km).conj().T


def choi_matrix(km: KrausMeasure) -> np.ndarray:
    """Choi matrix sum_ij |i><j| kron phi(|i><j|); PSD iff the map is CP."""
    m = len(km)
    k = km.dim
    cols = km.matrices.transpose(0, 2, 1).reshape(m, k * k)  # row a = vec_F(L_a)
    return np.einsum("a,ai,aj->ij", km.weights, cols, cols.conj(), optimize=True)


@dataclass(frozen=True)
class CompletePositivityCheck:
    ok: bool
    min_eigenvalue: float
    tol: float


def complete_positivity_check(km: KrausMeasure, tol: float = 1e-10) -> CompletePositivityCheck:
    """Minimum Choi eigenvalue; nonnegative (within tol) by construction."""
    min_eig = float(np.linalg.eigvalsh(hermitize(choi_matrix(km)))[0])
    return CompletePositivityCheck(ok=bool(min_eig >= -tol), min_eigenvalue=min_eig, tol=tol)


def perturb(km: KrausMeasure, direction, eps: float) -> KrausMeasure:
    """Add ``eps * direction`` to every atom matrix, keeping weights and labels."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    d = as_complex_matrix(direction, "direction")
    check_same_dim(d, km.matrices[0])
    return KrausMeasure.from_arrays(km.matrices + eps * d, km.weights, km.labels)


# ---------------------------------------------------------------------------
# JSON description files
#
# Schema: { "dim": k,
#           "atoms": [ { "weight": w,
#                        "matrix": [[[re, im], ...], ...],   # k rows of k [re, im] pairs
#                        "label": "optional" }, ... ] }
# ---------------------------------------------------------------------------


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=np.complex128)]


def matrix_from_json(data, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise InputValidationError(
            f"{name} must be a square nested list of [re, im] pairs, got shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


def channel_to_dict(km: KrausMeasure) -> dict:
    atoms = []
    for w, m, lb in zip(km.weights, km.matrices, km.labels):
        entry: dict = {"weight": float(w), "matrix": matrix_to_json(m)}
        if lb is not None:
            entry["label"] = lb
        atoms.append(entry)
    return {"dim": km.dim, "atoms": atoms}


def channel_from_dict(data: dict) -> KrausMeasure:
    if not isinstance(data, dict) or "atoms" not in data:
        raise InputValidationError("channel description must be an object with an 'atoms' list")
    raw_atoms = data["atoms"]
    if not isinstance(raw_atoms, list) or not raw_atoms:
        raise InputValidationError("'atoms' must be a nonempty list")
    atoms = []
    for idx, entry in enumerate(raw_atoms):
        if not isinstance(entry, dict) or "weight" not in entry or "matrix" not in entry:
            raise InputValidationError(f"atom {idx}: expected an object with 'weight' and 'matrix'")
        try:
            weight = float(entry["weight"])
        except (TypeError, ValueError) as exc:
            raise InputValidationError(f"atom {idx}: weight is not a number") from exc
        if not np.isfinite(weight) or weight <= 0.0:
            raise InputValidationError(f"atom {idx}: weight must be positive, got {entry['weight']!r}")
        try:
            matrix = matrix_from_json(entry["matrix"], name=f"atom {idx} matrix")
        except (ValueError, TypeError) as exc:
            raise InputValidationError(f"atom {idx}: {exc}") from exc
        atoms.append(KrausAtom(weight, matrix, entry.get("label")))
    try:
        km = KrausMeasure(atoms)
    except ValueError as exc:
        raise InputValidationError(str(exc)) from exc
    if "dim" in data and int(data["dim"]) != km.dim:
        raise InputValidationError(f"declared dim {data['dim']} does not match matrices of dim {km.dim}")
    return km


def load_channel(path) -> KrausMeasure:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputValidationError(f"invalid JSON in {path}: {exc}") from exc
    return channel_from_dict(data)


def save_channel(km: KrausMeasure, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(channel_to_dict(km), fh, indent=2, sort_keys=True)
        fh.write("\n")
