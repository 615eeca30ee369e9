"""Cross-checks between the compiled extension and the pure-numpy fallback.

Both backends implement the same sampling logic over the same pre-generated
uniforms, so words must agree exactly; accumulated floats agree to roundoff.
"""

import numpy as np
import pytest

from channel_ergodics._kernels import available_backends
from channel_ergodics.linalg import haar_unitary

from conftest import random_stochastic_channel

BACKENDS = available_backends()

pytestmark = pytest.mark.skipif(
    "compiled" not in BACKENDS, reason="compiled kernel extension not built"
)


def channels():
    from channel_ergodics import MarkovSpec, markov_channel

    yield "markov", markov_channel(MarkovSpec(P=np.array([[0.7, 0.4], [0.3, 0.6]])))
    yield "random-k2", random_stochastic_channel(seed=1, k=2, n_atoms=2)
    yield "random-k3", random_stochastic_channel(seed=2, k=3, n_atoms=3)
    yield "random-k4", random_stochastic_channel(seed=3, k=4, n_atoms=2)


@pytest.mark.parametrize("name,km", list(channels()))
def test_lyapunov_path_equivalence(name, km):
    from channel_ergodics import fixed_point

    rng = np.random.default_rng(10)
    rho = fixed_point(km)
    q0 = haar_unitary(km.dim, rng)
    uniforms = rng.random(3000)
    out_c = BACKENDS["compiled"].lyapunov_path(km.matrices, km.weights, rho, q0, uniforms, 1e-150, 1)
    out_p = BACKENDS["pure"].lyapunov_path(km.matrices, km.weights, rho, q0, uniforms, 1e-150, 1)
    assert np.array_equal(out_c[0], out_p[0])  # identical words
    finite = out_c[2] < 0
    assert np.allclose(out_c[1][finite], out_p[1][finite], atol=1e-9)
    assert np.array_equal(out_c[2], out_p[2])  # identical collapse steps
    assert out_c[3] == pytest.approx(out_p[3], abs=1e-9)
    assert out_c[4] == pytest.approx(out_p[4], abs=1e-9) or (
        np.isneginf(out_c[4]) and np.isneginf(out_p[4])
    )


@pytest.mark.parametrize("name,km", list(channels()))
def test_x_process_equivalence(name, km):
    rng = np.random.default_rng(11)
    x0 = np.zeros(km.dim, dtype=complex)
    x0[0] = 1.0
    uniforms = rng.random(2000)
    out_c = BACKENDS["compiled"].x_process_path(km.matrices, km.weights, x0, uniforms, True)
    out_p = BACKENDS["pure"].x_process_path(km.matrices, km.weights, x0, uniforms, True)
    assert np.array_equal(out_c[0], out_p[0])
    assert np.max(np.abs(out_c[1] - out_p[1])) <= 1e-12
    assert out_c[2] == pytest.approx(out_p[2], abs=1e-9)


@pytest.mark.parametrize("name,km", list(channels()))
def test_trajectory_equivalence(name, km):
    rng = np.random.default_rng(12)
    rho0 = np.eye(km.dim, dtype=complex) / km.dim
    uniforms = rng.random(2000)
    out_c = BACKENDS["compiled"].trajectory_path(km.matrices, km.weights, rho0, uniforms, True)
    out_p = BACKENDS["pure"].trajectory_path(km.matrices, km.weights, rho0, uniforms, True)
    assert np.array_equal(out_c[0], out_p[0])
    assert np.max(np.abs(out_c[1] - out_p[1])) <= 1e-10
    assert out_c[2] == pytest.approx(out_p[2], abs=1e-9)


@pytest.mark.parametrize("name,km", list(channels()))
def test_theorem_b_equivalence(name, km):
    rng = np.random.default_rng(13)
    x0 = np.zeros(km.dim, dtype=complex)
    x0[0] = 1.0
    qv = rng.standard_normal(km.dim) + 1j * rng.standard_normal(km.dim)
    uniforms = rng.random(2000)
    out_c = BACKENDS["compiled"].theorem_b_path(km.matrices, km.weights, x0, qv, uniforms)
    out_p = BACKENDS["pure"].theorem_b_path(km.matrices, km.weights, x0, qv, uniforms)
    assert np.array_equal(out_c[0], out_p[0])
    assert np.max(np.abs(out_c[1] - out_p[1])) <= 1e-9


def test_qr_accumulate_equivalence():
    km = random_stochastic_channel(seed=4, k=3, n_atoms=2)
    rng = np.random.default_rng(14)
    word = rng.integers(0, len(km), size=500).astype(np.int32)
    q0 = haar_unitary(km.dim, rng)
    sums_c, col_c = BACKENDS["compiled"].qr_accumulate(km.matrices, word, q0)
    sums_p, col_p = BACKENDS["pure"].qr_accumulate(km.matrices, word, q0)
    assert np.array_equal(col_c, col_p)
    assert np.allclose(sums_c, sums_p, atol=1e-9)


def test_error_conditions_match():
    from channel_ergodics import KrausAtom, KrausMeasure
    from channel_ergodics.errors import NotStochasticError

    km = KrausMeasure([KrausAtom(1.0, 0.7 * np.eye(2))])
    rho0 = np.eye(2, dtype=complex) / 2
    u = np.random.default_rng(0).random(10)
    for mod in BACKENDS.values():
        with pytest.raises(NotStochasticError):
            mod.trajectory_path(km.matrices, km.weights, rho0, u, False)
