"""Simulation of the two processes attached to a stochastic channel.

The projective-space process moves a unit vector by a randomly selected atom
(selection probability ``w_a ||L_a x||^2``); the quantum trajectory moves a
density matrix by normalized conjugation (selection probability
``w_a tr(L_a rho L_a†)``). Sampling the trajectory atoms sequentially from the
channel fixed point reproduces exactly the stationary word law whose n-cylinder
mass is ``w-weighted tr(W_n rho W_n†)``.

Determinism contract: a :class:`SampleConfig` fixes everything. Per-path
generators are spawned as ``SeedSequence(seed).spawn(n_paths)`` (PCG64), and
each path consumes its uniforms array first, auxiliary draws afterwards, so
identical configs give bit-identical words on a given backend.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel import KrausMeasure, apply_channel, is_stochastic
from .errors import NotStochasticError
from .linalg import canonicalize, hermitize, validate_density


@dataclass(frozen=True)
class SampleConfig:
    """Seeded size parameters for path sampling. burn_in defaults to n_steps // 10."""

    seed: int
    n_steps: int
    n_paths: int = 1
    burn_in: int | None = None

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.n_steps // 10)
        if not 0 <= self.burn_in < self.n_steps:
            raise ValueError("burn_in must satisfy 0 <= burn_in < n_steps")


@dataclass
class TrajectoryPath:
    """One realized path: the word of atom indices, the running log of the
    path weight (log tr(W_n rho W_n†) resp. log ||W_n x||^2), and optionally
    the visited states."""

    word: np.ndarray
    log_weight: float
    states: np.ndarray | None = None


def path_generators(cfg: SampleConfig) -> list[np.random.Generator]:
    """Independent per-path generators from the documented splitting rule."""
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_paths)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def _require_stochastic(km: KrausMeasure) -> None:
    check = is_stochastic(km, tol=1e-8)
    if not check.ok:
        raise NotStochasticError(
            f"sampling requires a stochastic family (residual {check.residual:.3e})"
        )


def step_kernel(
    km: KrausMeasure, x: np.ndarray, rng: np.random.Generator
) -> tuple[int, np.ndarray]:
    """One step of the projective-space kernel.

    Selects atom a with probability ``w_a ||L_a x||^2`` (these sum to one for
    a stochastic family) and returns ``(a, canonicalize(L_a x / ||L_a x||))``.
    """
    _require_stochastic(km)
    xv = canonicalize(x)
    word, states, _ = _kernels.x_process_path(
        km.matrices, km.weights, xv, np.array([rng.random()]), True
    )
    return int(word[0]), states[0]


def sample_x_process(
    km: KrausMeasure, x0, cfg: SampleConfig, store_states: bool = True
) -> list[TrajectoryPath]:
    """Independent paths of the projective-space process started at x0."""
    _require_stochastic(km)
    xv = canonicalize(x0)
    paths = []
    for rng in path_generators(cfg):
        uniforms = rng.random(cfg.n_steps)
        word, states, logw = _kernels.x_process_path(
            km.matrices, km.weights, xv, uniforms, store_states
        )
        paths.append(TrajectoryPath(word=word, log_weight=float(logw), states=states))
    return paths


def sample_quantum_trajectory(
    km: KrausMeasure, rho0, cfg: SampleConfig, store_states: bool = True
) -> list[TrajectoryPath]:
    """Independent quantum trajectories started at the density matrix rho0."""
    _require_stochastic(km)
    rho = validate_density(rho0)
    paths = []
    for rng in path_generators(cfg):
        uniforms = rng.random(cfg.n_steps)
        word, states, logw = _kernels.trajectory_path(
            km.matrices, km.weights, rho, uniforms, store_states
        )
        paths.append(TrajectoryPath(word=word, log_weight=float(logw), states=states))
    return paths


def sample_word_process(
    km: KrausMeasure, rho, cfg: SampleConfig, store_states: bool = False
) -> list[TrajectoryPath]:
    """Words under the law with n-cylinder mass tr(W_n rho W_n†) (times weights).

    Sequential trajectory sampling realizes this law exactly; it is shift
    stationary when rho is the channel fixed point, so a non-fixed rho only
    triggers a warning.
    """
    _require_stochastic(km)
    rho_m = validate_density(rho)
    drift = float(np.linalg.norm(apply_channel(km, rho_m) - rho_m))
    if drift > 1e-8:
        warnings.warn(
            f"rho is not a fixed point (residual {drift:.3e}); "
            "the sampled word process is not stationary",
            stacklevel=2,
        )
    return sample_quantum_trajectory(km, rho_m, cfg, store_states=store_states)


def empirical_barycenter(paths: list[TrajectoryPath], burn_in: int) -> np.ndarray:
    """Average of the projectors onto the visited points, after burn-in.

    Needs at least 100 post-burn-in samples; returns a Hermitian, unit-trace
    matrix that estimates the barycenter of the empirical invariant measure.
    """
    total = np.zeros(0)
    count = 0
    for path in paths:
        if path.states is None:
            raise ValueError("paths must be sampled with store_states=True")
        states = path.states[burn_in:]
        if states.ndim != 2:
            raise ValueError("empirical_barycenter expects projective-space paths")
        if total.size == 0:
            total = np.zeros((states.shape[1], states.shape[1]), dtype=np.complex128)
        total += np.einsum("ti,tj->ij", states, states.conj())
        count += states.shape[0]
    if count < 100:
        raise ValueError(f"need at least 100 post-burn-in samples, got {count}")
    bary = hermitize(total / count)
    return bary / float(np.trace(bary).real)


def dump_paths(paths: list[TrajectoryPath], fh) -> None:
    """Write paths as JSON-lines: one {"word": [...], "log_weight": ...} per line."""
    for path in paths:
        fh.write(
            json.dumps(
                {"word": [int(a) for a in path.word], "log_weight": float(path.log_weight)},
                sort_keys=True,
            )
        )
        fh.write("\n")


def projector_barycenter_target(km: KrausMeasure) -> np.ndarray:
    """Fixed point of the channel, the barycenter of every invariant measure."""
    from .spectral import fixed_point

    return fixed_point(km)


__all__ = [
    "SampleConfig",
    "TrajectoryPath",
    "path_generators",
    "step_kernel",
    "sample_x_process",
    "sample_quantum_trajectory",
    "sample_word_process",
    "empirical_barycenter",
    "dump_paths",
    "projector_barycenter_target",
]
