"""Channel entropy and the Markov-chain example family.

The entropy of a stochastic irreducible family is the double sum over atom
pairs of ``- w_v w_w tr(L_v rho L_v†) P(v,w) log P(v,w)`` with transition
weights ``P(v,w) = tr(L_w L_v rho L_v† L_w†) / tr(L_v rho L_v†)`` and rho
the invariant state. Natural logarithm throughout (reports may additionally
display bits).

The example family built from a column-stochastic matrix P has one atom
``sqrt(p_ij) |i><j|`` of unit weight per nonzero entry; its entropy equals
the classical entropy rate of the stationary chain, its top Lyapunov
exponent is minus half that entropy, and every deeper exponent is -inf.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .channel import KrausAtom, KrausMeasure, is_stochastic
from .errors import InputValidationError, NotIrreducibleError, NotStochasticError
from .lyapunov import LyapunovEstimate, estimate_exponents
from .spectral import spectral_data
from .trajectory import SampleConfig

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class MarkovSpec:
    """A column-stochastic transition matrix (columns sum to one, P pi = pi).

    Irreducibility in the classical nonnegative-matrix sense is required:
    (Id + P)^{k-1} must be entrywise positive.
    """

    P: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.P, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
            raise InputValidationError(f"P must be square, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InputValidationError("P has non-finite entries")
        if np.any(p < -1e-12):
            raise InputValidationError("P has negative entries")
        col_dev = float(np.max(np.abs(p.sum(axis=0) - 1.0)))
        if col_dev > 1e-12:
            raise InputValidationError(
                f"columns must sum to 1 within 1e-12 (worst deviation {col_dev:.3e}); "
                "pass row-stochastic input through transpose_convention first"
            )
        k = p.shape[0]
        reach = np.linalg.matrix_power(np.eye(k) + p, k - 1) if k > 1 else np.ones((1, 1))
        if np.any(reach <= 0.0):
            raise InputValidationError("P is not irreducible: (Id + P)^(k-1) has zero entries")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "P", p)

    @property
    def dim(self) -> int:
        return int(self.P.shape[0])


def stationary_distribution(spec: MarkovSpec) -> np.ndarray:
    """The probability vector pi with P pi = pi (positive for irreducible P)."""
    evals, evecs = np.linalg.eig(spec.P)
    idx = int(np.argmin(np.abs(evals - 1.0)))
    v = evecs[:, idx]
    v = v / v.sum()
    pi = v.real
    if float(np.max(np.abs(v.imag))) > 1e-10 or float(pi.min()) < -1e-10:
        raise RuntimeError("stationary vector extraction failed; is P irreducible?")
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def classical_markov_entropy(spec: MarkovSpec) -> float:
    """Entropy rate -sum_j pi_j sum_i p_ij log p_ij in nats (0 log 0 = 0)."""
    pi = stationary_distribution(spec)
    p = spec.P
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return float(-(plogp.sum(axis=0) * pi).sum())


def markov_channel(spec: MarkovSpec) -> KrausMeasure:
    """Kraus family sqrt(p_ij) |i><j| with unit weights, zero entries omitted."""
    k = spec.dim
    atoms = []
    for i in range(k):
        for j in range(k):
            p = float(spec.P[i, j])
            if p <= 0.0:
                continue
            m = np.zeros((k, k), dtype=np.complex128)
            m[i, j] = math.sqrt(p)
            atoms.append(KrausAtom(1.0, m, label=f"V{i + 1}{j + 1}"))
    return KrausMeasure(atoms)


def channel_entropy(km: KrausMeasure, rho_fixed=None, tol: float = 1e-9) -> float:
    """Entropy of a stochastic irreducible family at its invariant state."""
    check = is_stochastic(km, tol=1e-8)
    if not check.ok:
        raise NotStochasticError(f"entropy is defined for stochastic families (residual {check.residual:.3e})")
    if rho_fixed is None:
        sd = spectral_data(km)
        if sd.lambda_multiplicity != 1 or sd.rho_min_eigenvalue <= tol * sd.lam:
            raise NotIrreducibleError(
                "entropy needs an irreducible channel (the Perron eigenvalue is "
                f"degenerate or the fixed point is singular: multiplicity "
                f"{sd.lambda_multiplicity}, min eigenvalue {sd.rho_min_eigenvalue:.3e})"
            )
        rho_fixed = sd.rho_fixed
    rho = np.asarray(rho_fixed, dtype=np.complex128)

    mats = km.matrices
    weights = km.weights
    propagated = np.einsum("vij,jl,vml->vim", mats, rho, mats.conj(), optimize=True)
    t_v = np.einsum("vii->v", propagated).real
    # tr(L_w A_v L_w†) for all atom pairs
    t_vw = np.einsum("wij,vjl,wil->vw", mats, propagated, mats.conj(), optimize=True).real

    h = 0.0
    for v in range(len(km)):
        if t_v[v] < 1e-14:
            continue
        for w in range(len(km)):
            p_vw = t_vw[v, w] / t_v[v]
            if p_vw > 0.0:
                h -= weights[v] * weights[w] * t_v[v] * p_vw * math.log(p_vw)
    return h


@dataclass
class EntropyReport:
    """The entropy-exponent identity report for a Markov family."""

    h_channel: float
    h_classical: float
    gamma1_estimate: float
    gamma1_stderr: float
    gamma1_predicted: float
    gamma2_is_neg_infinity: bool
    gamma2_collapse_step: int
    identity_residual: float
    atom_labels: list[str]
    empirical_frequencies: np.ndarray
    expected_frequencies: np.ndarray
    estimate: LyapunovEstimate

    def to_dict(self) -> dict:
        return {
            "h_channel": self.h_channel,
            "h_classical": self.h_classical,
            "h_channel_bits": self.h_channel / LOG2,
            "gamma1": self.gamma1_estimate,
            "gamma1_stderr": self.gamma1_stderr,
            "gamma1_predicted": self.gamma1_predicted,
            "gamma2": "-inf" if self.gamma2_is_neg_infinity else None,
            "gamma2_collapse_step": self.gamma2_collapse_step,
            "identity_residual": self.identity_residual,
            "cylinder_frequencies": {
                label: {"empirical": float(emp), "expected": float(exp)}
                for label, emp, exp in zip(
                    self.atom_labels, self.empirical_frequencies, self.expected_frequencies
                )
            },
            "lyapunov": self.estimate.to_dict(),
        }


def entropy_lyapunov_report(
    spec: MarkovSpec, cfg: SampleConfig, jobs: int = 1
) -> EntropyReport:
    """Build the Markov family, estimate its spectrum, and report the identity.

    Reports the estimated top exponent against the prediction -h/2, the
    -inf flag for the second exponent, and the empirical one-cylinder
    frequencies against p_ij pi_j.
    """
    km = markov_channel(spec)
    pi = stationary_distribution(spec)
    rho = np.diag(pi).astype(np.complex128)
    h_ch = channel_entropy(km, rho_fixed=rho)
    h_cl = classical_markov_entropy(spec)

    est = estimate_exponents(km, rho=rho, cfg=cfg, verify_assumptions=False, jobs=jobs)
    gamma1 = float(est.gamma[0])
    predicted = -h_ch / 2.0
    expected = np.array(
        [
            float(spec.P[i, j]) * pi[j]
            for i in range(spec.dim)
            for j in range(spec.dim)
            if spec.P[i, j] > 0.0
        ]
    )
    total_steps = cfg.n_steps * cfg.n_paths
    empirical = est.atom_counts / total_steps
    gamma2_flag = bool(est.neg_infinity[1]) if km.dim >= 2 else False
    gamma2_step = int(est.collapse_step[1]) if km.dim >= 2 else -1
    return EntropyReport(
        h_channel=h_ch,
        h_classical=h_cl,
        gamma1_estimate=gamma1,
        gamma1_stderr=float(est.stderr[0]),
        gamma1_predicted=predicted,
        gamma2_is_neg_infinity=gamma2_flag,
        gamma2_collapse_step=gamma2_step,
        identity_residual=abs(gamma1 - predicted),
        atom_labels=[km.atom_label(a) for a in range(len(km))],
        empirical_frequencies=empirical,
        expected_frequencies=expected,
        estimate=est,
    )


# ---------------------------------------------------------------------------
# JSON description files: { "P": [[...], ...], "convention": "column" | "row" }
# ---------------------------------------------------------------------------


def markov_spec_from_dict(data: dict, force_row: bool = False) -> MarkovSpec:
    if not isinstance(data, dict) or "P" not in data:
        raise InputValidationError("Markov description must be an object with a 'P' matrix")
    try:
        p = np.asarray(data["P"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputValidationError("'P' must be a numeric matrix") from exc
    convention = data.get("convention", "column")
    if convention not in ("column", "row"):
        raise InputValidationError(f"convention must be 'column' or 'row', got {convention!r}")
    if convention == "row" or force_row:
        p = p.T
    return MarkovSpec(P=p)


def load_markov_spec(path, force_row: bool = False) -> MarkovSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputValidationError(f"invalid JSON in {path}: {exc}") from exc
    return markov_spec_from_dict(data, force_row=force_row)
