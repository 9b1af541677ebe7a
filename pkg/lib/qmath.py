"""Dense complex linear algebra for small operators and states.

Conventions used throughout the package:

* matrices are ``numpy.ndarray`` of dtype ``complex128`` stored row-major;
* vectorization stacks the columns of a matrix, so that
  ``vectorize(A @ rho @ B) == kron(B.T, A) @ vectorize(rho)``.
"""
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.linalg

from lib.errors import DimensionError, NotHermitianError, NotAStateError

ComplexMatrix = np.ndarray

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9


def as_matrix(a) -> ComplexMatrix:
    """Coerce to a finite 2-D complex128 array"""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.size == 0:
        raise DimensionError(f"Expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("Matrix has non-finite entries")
    return m


def _require_square(m: ComplexMatrix, name="matrix"):
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")


def kron(a, b) -> ComplexMatrix:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(*ops) -> ComplexMatrix:
    """Tensor product of several factors, left to right"""
    return reduce(kron, ops)


def dagger(a) -> ComplexMatrix:
    return as_matrix(a).conj().T


def hermiticity(a) -> float:
    m = as_matrix(a)
    _require_square(m)
    return float(np.max(np.abs(m - m.conj().T)))


def hermitize(a) -> ComplexMatrix:
    m = as_matrix(a)
    return 0.5 * (m + m.conj().T)


def herm_eig(a, tol=HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and the unitary whose columns are
    the matching eigenvectors. Raises NotHermitianError when the input is
    asymmetric by more than ``tol``.
    """
    m = as_matrix(a)
    _require_square(m)
    asymmetry = float(np.max(np.abs(m - m.conj().T)))
    if asymmetry > tol:
        raise NotHermitianError(asymmetry, tol)
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (m + m.conj().T))
    return eigenvalues, eigenvectors


def expm(a) -> ComplexMatrix:
    """Matrix exponential (scaling and squaring around a Pade approximant)"""
    m = as_matrix(a)
    _require_square(m)
    return scipy.linalg.expm(m)


def vectorize(rho) -> np.ndarray:
    """Column-stacked vector of a square matrix"""
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)
    _require_square(m)
    return m.reshape(-1, order="F")


def devectorize(v, dim=None) -> ComplexMatrix:
    """Inverse of vectorize"""
    vec = np.asarray(v, dtype=np.complex128).reshape(-1)
    side = int(round(np.sqrt(vec.size)))
    if side * side != vec.size:
        raise DimensionError(f"Vector length {vec.size} is not a perfect square")
    if dim is not None and dim != side:
        raise DimensionError(f"Vector length {vec.size} does not match dimension {dim}")
    return vec.reshape(side, side, order="F")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A square matrix together with the dimensions of its tensor factors.

    Construction only checks shapes; ``validate`` checks the physical
    invariants (Hermiticity, unit trace, positivity) against tolerances.
    """

    matrix: ComplexMatrix
    dims: tuple = field(default=())

    def __post_init__(self):
        m = as_matrix(self.matrix).copy()
        _require_square(m, "density matrix")
        dims = tuple(int(d) for d in (self.dims or (m.shape[0],)))
        if any(d < 1 for d in dims) or int(np.prod(dims)) != m.shape[0]:
            raise DimensionError(f"Subsystem dims {dims} do not multiply to {m.shape[0]}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_ket(cls, psi, dims=None):
        v = np.asarray(psi, dtype=np.complex128).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), dims or (v.size,))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def hermiticity(self) -> float:
        return hermiticity(self.matrix)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(hermitize(self.matrix))

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def expectation(self, op) -> float:
        return float(np.real(np.trace(self.matrix @ as_matrix(op))))

    def validate(self, herm_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL, pos_tol=POSITIVITY_TOL):
        """Raise NotAStateError unless every density-matrix invariant holds"""
        problems = []
        asymmetry = self.hermiticity()
        if asymmetry > herm_tol:
            problems.append(f"Hermiticity violated by {asymmetry:.3e}")
        drift = abs(self.trace() - 1.0)
        if drift > trace_tol:
            problems.append(f"Trace differs from 1 by {drift:.3e}")
        lowest = self.min_eigenvalue()
        if lowest < -pos_tol:
            problems.append(f"Smallest eigenvalue {lowest:.3e} below -{pos_tol:.1e}")
        if problems:
            raise NotAStateError("; ".join(problems))
        return self

    def is_real(self, tol=1e-10) -> bool:
        return float(np.max(np.abs(self.matrix.imag))) <= tol


def _unwrap(rho):
    return rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduce ``rho`` to the factors listed in ``keep`` (original order kept)"""
    keep = sorted(set(int(k) for k in keep))
    n = len(rho.dims)
    if not keep:
        raise DimensionError("partial_trace needs at least one subsystem to keep")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"Subsystem indices {keep} out of range for dims {list(rho.dims)}")

    tensor = rho.matrix.reshape(rho.dims + rho.dims)
    remaining = n
    for index in reversed(range(n)):
        if index in keep:
            continue
        tensor = np.trace(tensor, axis1=index, axis2=index + remaining)
        remaining -= 1

    kept_dims = tuple(rho.dims[k] for k in keep)
    size = int(np.prod(kept_dims))
    return DensityMatrix(tensor.reshape(size, size), kept_dims)


def trace_distance(rho, sigma) -> float:
    a, b = _unwrap(rho), _unwrap(sigma)
    if a.shape != b.shape:
        raise DimensionError(f"Cannot compare states of shapes {a.shape} and {b.shape}")
    eigenvalues, _ = herm_eig(a - b)
    return float(0.5 * np.sum(np.abs(eigenvalues)))


def random_density_matrix(dim, rng=None, rank=None, dims=None) -> DensityMatrix:
    """Random mixed state from the Ginibre ensemble"""
    rng = rng if rng is not None else np.random.default_rng()
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, dims or (dim,))
