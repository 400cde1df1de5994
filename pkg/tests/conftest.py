import os
import sys

import numpy as np
import pytest

ROOT = os.path.join(os.path.dirname(__file__), '..')
sys.path.insert(0, ROOT)

from qmsfinite import FiniteGKLSModel
from qmsmodel import GaussianModel, TwoBosonParams, build_kossakowski, two_boson_model

SCENARIOS = os.path.join(ROOT, 'scenarios')


def random_positive_model(d, seed, floor=0.1, hamiltonian=0.3):
    """Seeded model with m = 2d Kraus rows, eps0 >= floor and a random quadratic plus linear H."""
    rng = np.random.default_rng(seed)
    while True:
        B = np.eye(2 * d) + 0.1 * (rng.standard_normal((2 * d, 2 * d)) + 1j * rng.standard_normal((2 * d, 2 * d)))
        V = B[:d].T.copy()
        U = B[d:].conj().T.copy()
        if build_kossakowski(V, U).eps0 >= floor:
            break
    omega = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    kappa = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    zeta = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return GaussianModel(d=d, omega=hamiltonian * 0.5 * (omega + omega.conj().T),
                         kappa=hamiltonian * 0.5 * (kappa + kappa.T), zeta=hamiltonian * zeta, V=V, U=U)


def random_finite_model(n, seed, floor=0.1):
    rng = np.random.default_rng(seed)
    size = n * n - 1
    A = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    c = A @ A.conj().T / size + floor * np.eye(size)
    H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return FiniteGKLSModel(n=n, H=0.25 * (H + H.conj().T), c=c)


@pytest.fixture
def damping_model():
    """Single-mode amplitude damping: L = a, H = 0."""
    return GaussianModel.from_kraus([[1.0]], [[0.0]])


@pytest.fixture
def identity_k_model():
    """d = 1 with L1 = a, L2 = a^+, so K is the 2x2 identity."""
    return GaussianModel.from_kraus([[1.0], [0.0]], [[0.0], [1.0]])


@pytest.fixture
def two_boson_identity():
    """Two bosons with gamma_minus = gamma_plus = I and Omega = 0."""
    return two_boson_model(TwoBosonParams(gamma_minus=np.eye(2), gamma_plus=np.eye(2), omega=np.zeros((2, 2))))


@pytest.fixture
def qubit_model():
    """Qubit with c = I and H = 0 in the Gell-Mann basis."""
    return FiniteGKLSModel(n=2, H=np.zeros((2, 2)), c=np.eye(3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
