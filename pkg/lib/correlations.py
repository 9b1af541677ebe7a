"""Quantum correlations of the two-atom reduced state.

Entropies are in bits. Classical correlation is maximized over one-qubit
projective measurements

    |psi1> = cos(theta)|g> + e^{i phi} sin(theta)|e>
    |psi2> = e^{-i phi} sin(theta)|g> - cos(theta)|e>

applied to one atom (atom 2 unless ``measured=0``), first on a coarse grid and
then by Nelder-Mead refinement from the best grid cell.
"""
import logging
from dataclasses import dataclass, asdict
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from lib.errors import DimensionError, NotAStateError
from lib.model import SIGMA_Y
from lib.qmath import DensityMatrix, as_matrix, herm_eig, hermitize, kron, partial_trace

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi

COARSE_GRID = (48, 48)
ORACLE_GRID = (720, 1440)
SIMPLEX_XATOL = 1e-6
SIMPLEX_MAXITER = 4000
PROBABILITY_FLOOR = 1e-14
NEGATIVE_EIGENVALUE_TOL = 1e-8
REAL_STATE_TOL = 1e-10
ORACLE_CHUNK = 60
# Spin-flip spectrum entries below this are rounding noise of rank-deficient states
SPECTRUM_FLOOR = 1e-13

SIGMA_YY = kron(SIGMA_Y, SIGMA_Y)


@dataclass(frozen=True)
class MeasurementBasis:
    theta: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(np.mod(self.theta, TWO_PI)))
        object.__setattr__(self, "phi", float(np.mod(self.phi, TWO_PI)))

    def kets(self):
        c, s = np.cos(self.theta), np.sin(self.theta)
        e = np.exp(1j * self.phi)
        psi1 = np.array([c, e * s], dtype=np.complex128)
        psi2 = np.array([np.conj(e) * s, -c], dtype=np.complex128)
        return psi1, psi2

    def projectors(self):
        return tuple(np.outer(psi, psi.conj()) for psi in self.kets())


class ClassicalCorrelation(NamedTuple):
    value: float
    basis: MeasurementBasis
    evaluations: int


@dataclass(frozen=True)
class CorrelationReport:
    mutual_information: float
    classical_correlation: float
    discord: float
    concurrence: float
    optimal_basis: MeasurementBasis
    optimizer_evaluations: int

    def to_dict(self) -> dict:
        data = asdict(self)
        basis = data.pop("optimal_basis")
        data["theta"] = basis["theta"]
        data["phi"] = basis["phi"]
        return data


def _xlog2x(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * np.log2(safe), 0.0)


def entropy(rho) -> float:
    """von Neumann entropy in bits"""
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)
    eigenvalues, _ = herm_eig(m)
    if eigenvalues[0] < -NEGATIVE_EIGENVALUE_TOL:
        raise NotAStateError(f"Eigenvalue {eigenvalues[0]:.3e} below -{NEGATIVE_EIGENVALUE_TOL:.0e}, not a state")
    eigenvalues = np.clip(eigenvalues, 0.0, 1.0)
    return float(max(0.0, -np.sum(_xlog2x(eigenvalues))))


def _two_qubit(rho) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        if rho.dims != (2, 2):
            raise DimensionError(f"Expected a two-qubit state with dims (2, 2), got {rho.dims}")
        return rho
    m = as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"Expected a 4x4 two-qubit state, got shape {m.shape}")
    return DensityMatrix(m, (2, 2))


def _check_side(measured):
    if measured not in (0, 1):
        raise DimensionError(f"measured must be 0 (atom 1) or 1 (atom 2), got {measured}")


def mutual_information(rho_ab) -> float:
    rho = _two_qubit(rho_ab)
    return (entropy(partial_trace(rho, {0})) + entropy(partial_trace(rho, {1}))
            - entropy(rho))


def _conditional_entropies(rho: DensityMatrix, theta, phi, measured=1) -> np.ndarray:
    """sum_k p_k S(rho_k) for broadcastable arrays of measurement angles"""
    t = rho.matrix.reshape(2, 2, 2, 2)
    if measured == 0:
        t = t.transpose(1, 0, 3, 2)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * phi)
    c, s, e = np.broadcast_arrays(c, s, e)
    kets = (
        np.stack([c + 0j, e * s], axis=-1),
        np.stack([np.conj(e) * s, -c + 0j], axis=-1),
    )

    total = np.zeros(c.shape)
    for psi in kets:
        # Unnormalized conditional state of the unmeasured atom
        m = np.einsum("...b,xbyc,...c->...xy", psi.conj(), t, psi)
        p = np.real(m[..., 0, 0] + m[..., 1, 1])
        radius = np.sqrt((0.5 * np.real(m[..., 0, 0] - m[..., 1, 1])) ** 2 + np.abs(m[..., 0, 1]) ** 2)
        upper = np.clip(0.5 * p + radius, 0.0, None)
        lower = np.clip(0.5 * p - radius, 0.0, None)
        weighted = _xlog2x(p) - _xlog2x(upper) - _xlog2x(lower)
        total += np.where(p >= PROBABILITY_FLOOR, weighted, 0.0)
    return total


def conditional_entropy(rho_ab, basis: MeasurementBasis, measured=1) -> float:
    rho = _two_qubit(rho_ab)
    _check_side(measured)
    return float(_conditional_entropies(rho, basis.theta, basis.phi, measured))


def _unmeasured_entropy(rho: DensityMatrix, measured) -> float:
    return entropy(partial_trace(rho, {1 - measured}))


def classical_correlation(rho_ab, measured=1, grid=COARSE_GRID, theta_max=np.pi,
                          xatol=SIMPLEX_XATOL) -> ClassicalCorrelation:
    """max over projective measurements of S(rho_a) - S(rho | {B_k})"""
    rho = _two_qubit(rho_ab)
    _check_side(measured)
    n_theta, n_phi = grid
    thetas = np.linspace(0.0, theta_max, n_theta)
    phis = np.linspace(0.0, TWO_PI, n_phi, endpoint=False)
    values = _conditional_entropies(rho, thetas[:, None], phis[None, :], measured)
    i, j = np.unravel_index(np.argmin(values), values.shape)
    x0 = np.array([thetas[i], phis[j]])
    step = np.array([thetas[1] - thetas[0], phis[1] - phis[0]])

    result = minimize(
        lambda x: float(_conditional_entropies(rho, x[0], x[1], measured)),
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": np.array([x0, x0 + [step[0], 0.0], x0 + [0.0, step[1]]]),
            "xatol": xatol,
            "fatol": np.inf,
            "maxiter": SIMPLEX_MAXITER,
            "maxfev": SIMPLEX_MAXITER,
        },
    )
    best_x, best_h = (result.x, float(result.fun)) if result.fun <= values[i, j] else (x0, float(values[i, j]))
    evaluations = values.size + int(result.nfev)
    logger.debug(f"Measurement search: {evaluations} evaluations, converged={result.success}")

    value = max(0.0, _unmeasured_entropy(rho, measured) - best_h)
    return ClassicalCorrelation(value, MeasurementBasis(best_x[0], best_x[1]), evaluations)


def classical_correlation_grid(rho_ab, n_theta=ORACLE_GRID[0], n_phi=ORACLE_GRID[1],
                               theta_max=np.pi, measured=1) -> ClassicalCorrelation:
    """Exhaustive-grid maximum, no refinement"""
    rho = _two_qubit(rho_ab)
    _check_side(measured)
    thetas = np.linspace(0.0, theta_max, n_theta)
    phis = np.linspace(0.0, TWO_PI, n_phi, endpoint=False)
    best_h, best_x = np.inf, (0.0, 0.0)
    for start in range(0, n_theta, ORACLE_CHUNK):
        chunk = thetas[start:start + ORACLE_CHUNK]
        values = _conditional_entropies(rho, chunk[:, None], phis[None, :], measured)
        i, j = np.unravel_index(np.argmin(values), values.shape)
        if values[i, j] < best_h:
            best_h, best_x = float(values[i, j]), (chunk[i], phis[j])
    value = max(0.0, _unmeasured_entropy(rho, measured) - best_h)
    return ClassicalCorrelation(value, MeasurementBasis(*best_x), n_theta * n_phi)


def concurrence(rho_ab) -> float:
    """Wootters concurrence, spin flip taken in the computational basis"""
    rho = _two_qubit(rho_ab)
    eigenvalues, eigenvectors = herm_eig(rho.matrix)
    root = eigenvectors @ np.diag(np.sqrt(np.clip(eigenvalues, 0.0, None))) @ eigenvectors.conj().T
    flipped = SIGMA_YY @ rho.matrix.conj() @ SIGMA_YY
    r = hermitize(root @ flipped @ root)
    spectrum = np.linalg.eigvalsh(r)
    spectrum[spectrum < SPECTRUM_FLOOR] = 0.0
    lambdas = np.sort(np.sqrt(spectrum))[::-1]
    return float(max(0.0, lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]))


def discord(rho_ab, measured=1) -> CorrelationReport:
    rho = _two_qubit(rho_ab)
    mutual = mutual_information(rho)
    classical = classical_correlation(rho, measured=measured)
    return CorrelationReport(
        mutual_information=mutual,
        classical_correlation=classical.value,
        discord=mutual - classical.value,
        concurrence=concurrence(rho),
        optimal_basis=classical.basis,
        optimizer_evaluations=classical.evaluations,
    )


def atoms_state(rho_full: DensityMatrix) -> DensityMatrix:
    """Two-atom reduced state (cavity traced out)"""
    if len(rho_full.dims) != 3 or rho_full.dims[:2] != (2, 2):
        raise DimensionError(f"Expected dims (2, 2, cavity), got {rho_full.dims}")
    return partial_trace(rho_full, {0, 1})


def atoms_report(rho_full: DensityMatrix, measured=1) -> CorrelationReport:
    rho_ab = atoms_state(rho_full)
    if not rho_ab.is_real(REAL_STATE_TOL):
        imaginary = float(np.max(np.abs(rho_ab.matrix.imag)))
        logger.warning(f"Two-atom state is not real in the computational basis (max |Im| = {imaginary:.2e})")
    return discord(rho_ab, measured=measured)
