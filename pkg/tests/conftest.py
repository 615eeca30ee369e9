import numpy as np
import pytest

from channel_ergodics import KrausAtom, KrausMeasure, MarkovSpec, markov_channel, normalize


MAIN_P = np.array([[0.7, 0.4], [0.3, 0.6]])
MAIN_PI = np.array([4.0 / 7.0, 3.0 / 7.0])


@pytest.fixture(scope="session")
def markov_spec_main():
    return MarkovSpec(P=MAIN_P)


@pytest.fixture(scope="session")
def markov_km(markov_spec_main):
    return markov_channel(markov_spec_main)


@pytest.fixture(scope="session")
def uniform_km():
    return markov_channel(MarkovSpec(P=np.array([[0.5, 0.5], [0.5, 0.5]])))


@pytest.fixture(scope="session")
def swap_km():
    return markov_channel(MarkovSpec(P=np.array([[0.0, 1.0], [1.0, 0.0]])))


def unitary_channel(theta: float = 2.0, k: int = 2) -> KrausMeasure:
    phases = np.exp(1j * theta * np.arange(k))
    return KrausMeasure([KrausAtom(1.0, np.diag(phases), label="U")])


@pytest.fixture(scope="session")
def unitary_km():
    return unitary_channel()


@pytest.fixture(scope="session")
def diagonal_two_atom_km():
    # all word operators satisfy W†W proportional to Id: purification fails
    a = np.diag([1.0, 1.0]) / np.sqrt(2)
    b = np.diag([1.0, -1.0]) / np.sqrt(2)
    return KrausMeasure([KrausAtom(1.0, a), KrausAtom(1.0, b)])


@pytest.fixture(scope="session")
def amplitude_damping_km():
    g = 0.3
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1 - g)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(g)], [0.0, 0.0]], dtype=complex)
    return KrausMeasure([KrausAtom(1.0, k0), KrausAtom(1.0, k1)])


@pytest.fixture(scope="session")
def phi_erg_not_irreducible_km():
    # atoms |1><1| and |1><2|: unique minimal invariant subspace span{e1} != C^2
    e11 = np.zeros((2, 2), dtype=complex)
    e11[0, 0] = 1.0
    e12 = np.zeros((2, 2), dtype=complex)
    e12[0, 1] = 1.0
    return KrausMeasure([KrausAtom(1.0, e11), KrausAtom(1.0, e12)])


def random_stochastic_channel(seed: int, k: int = 2, n_atoms: int = 2) -> KrausMeasure:
    """Generic purifying channel: normalize a random Ginibre family."""
    rng = np.random.default_rng(seed)
    mats = (rng.standard_normal((n_atoms, k, k)) + 1j * rng.standard_normal((n_atoms, k, k))) / 2
    return normalize(KrausMeasure.from_arrays(mats))


@pytest.fixture(scope="session")
def random_purifying_km():
    return random_stochastic_channel(seed=2024)


@pytest.fixture(scope="session")
def irreducible_suite(markov_km, uniform_km, swap_km, random_purifying_km):
    """Stochastic irreducible channels used by the statistical checks."""
    return {
        "markov": markov_km,
        "uniform": uniform_km,
        "swap": swap_km,
        "random2": random_purifying_km,
        "random3": random_stochastic_channel(seed=5, k=3, n_atoms=3),
    }
