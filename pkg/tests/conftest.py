import os

os.environ.setdefault("LOG_TO_FILE", "0")

import numpy as np
import pytest

from lib.model import ModelParams
from lib.qmath import DensityMatrix, random_density_matrix

PHI_PLUS = np.array([1, 0, 0, 1], dtype=np.complex128) / np.sqrt(2)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=np.complex128) / np.sqrt(2)


def projector(psi) -> np.ndarray:
    return np.outer(psi, psi.conj())


def werner(p: float) -> DensityMatrix:
    return DensityMatrix(p * projector(PHI_PLUS) + (1 - p) * np.eye(4) / 4, (2, 2))


def bell_mixture(p: float) -> DensityMatrix:
    return DensityMatrix(p * projector(PHI_PLUS) + (1 - p) * projector(PSI_PLUS), (2, 2))


def product(rho_a, rho_b) -> DensityMatrix:
    return DensityMatrix(np.kron(rho_a, rho_b), (2, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def bell():
    return DensityMatrix.from_ket(PHI_PLUS, (2, 2))


@pytest.fixture
def classical_mix():
    """1/2 (|gg><gg| + |ee><ee|)"""
    return DensityMatrix(np.diag([0.5, 0, 0, 0.5]), (2, 2))


@pytest.fixture
def product_state(rng):
    a = random_density_matrix(2, rng).matrix
    b = random_density_matrix(2, rng).matrix
    return product(a, b)


@pytest.fixture
def fig2_params():
    return ModelParams(gamma=0.1, kappa=1.5, n_T=0.7, m_T=0.0)


@pytest.fixture
def fig4_params():
    return ModelParams(gamma=0.2, kappa=0.1, n_T=0.0, m_T=1.0)


@pytest.fixture
def fig6_params():
    return ModelParams(gamma=0.1, kappa=1.0, n_T=0.5, m_T=0.5)
