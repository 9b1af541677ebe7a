"""Two atoms in a single-mode cavity, driven by thermal white noise.

Composite space ordering is atom1 (x) atom2 (x) cavity. Each atom uses index
0 for |g> and 1 for |e>; the cavity holds Fock states 0..cutoff. The dynamics
is written in the interaction picture on resonance, so the bare frequencies
are carried only as metadata.
"""
import logging
from dataclasses import dataclass, asdict, replace
from functools import cached_property, lru_cache

import numpy as np

from lib.errors import ConfigError, DimensionError
from lib.qmath import ComplexMatrix, DensityMatrix, as_matrix, dagger, devectorize, kron_all, vectorize

logger = logging.getLogger(__name__)

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=np.complex128)
SIGMA_PLUS = SIGMA_MINUS.conj().T.copy()
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
EXCITED = SIGMA_PLUS @ SIGMA_MINUS
I2 = np.eye(2, dtype=np.complex128)

for _op in (SIGMA_MINUS, SIGMA_PLUS, SIGMA_Y, EXCITED, I2):
    _op.setflags(write=False)

FAMILIES = ("coherent", "atom_decay", "atom_pump", "cavity_decay", "cavity_pump")


@dataclass(frozen=True)
class ModelParams:
    """Rates in units of the coupling g; times in units of 1/g"""

    g: float = 1.0
    gamma: float = 0.0
    kappa: float = 0.0
    n_T: float = 0.0
    m_T: float = 0.0
    cutoff: int = 5
    omega_a: float | None = None
    omega_c: float | None = None

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ConfigError(problems)

    def violations(self) -> list:
        problems = []
        for name in ("g", "gamma", "kappa", "n_T", "m_T"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not np.isfinite(value):
                problems.append(f"params.{name}: expected a finite number, got {value!r}")
        if not problems:
            for name in ("g", "gamma", "kappa", "n_T", "m_T"):
                if getattr(self, name) < 0:
                    problems.append(f"params.{name}: must be >= 0, got {getattr(self, name)}")
        if isinstance(self.cutoff, bool) or not isinstance(self.cutoff, (int, np.integer)) or self.cutoff < 1:
            problems.append(f"params.cutoff: must be an integer >= 1, got {self.cutoff!r}")
        return problems

    @property
    def dims(self) -> tuple:
        return (2, 2, self.cutoff + 1)

    @property
    def dim(self) -> int:
        return 4 * (self.cutoff + 1)

    @property
    def case(self) -> str:
        """Which subsystems the white noise drives"""
        if self.n_T > 0 and self.m_T > 0:
            return "both"
        if self.n_T > 0:
            return "atoms"
        if self.m_T > 0:
            return "cavity"
        return "vacuum"

    @property
    def is_dissipative(self) -> bool:
        return self.gamma > 0 or self.kappa > 0

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def annihilation(cutoff: int) -> ComplexMatrix:
    """Truncated cavity lowering operator on Fock states 0..cutoff"""
    if cutoff < 1:
        raise DimensionError(f"cutoff must be >= 1, got {cutoff}")
    return np.diag(np.sqrt(np.arange(1, cutoff + 1)), k=1).astype(np.complex128)


def embed_atom_op(op, atom_index: int, cutoff: int) -> ComplexMatrix:
    """Lift a single-atom operator to the composite space"""
    op = as_matrix(op)
    if op.shape != (2, 2):
        raise DimensionError(f"Atomic operator must be 2x2, got {op.shape}")
    cavity_identity = np.eye(cutoff + 1, dtype=np.complex128)
    if atom_index == 1:
        return kron_all(op, I2, cavity_identity)
    if atom_index == 2:
        return kron_all(I2, op, cavity_identity)
    raise DimensionError(f"atom_index must be 1 or 2, got {atom_index}")


def embed_cavity_op(op, cutoff: int) -> ComplexMatrix:
    op = as_matrix(op)
    if op.shape != (cutoff + 1, cutoff + 1):
        raise DimensionError(f"Cavity operator must be {cutoff + 1}x{cutoff + 1}, got {op.shape}")
    return kron_all(I2, I2, op)


@lru_cache(maxsize=64)
def _operators(cutoff: int) -> dict:
    a = embed_cavity_op(annihilation(cutoff), cutoff)
    ops = {
        "a": a,
        "sm1": embed_atom_op(SIGMA_MINUS, 1, cutoff),
        "sm2": embed_atom_op(SIGMA_MINUS, 2, cutoff),
    }
    ops["ad"] = dagger(a)
    ops["sp1"] = dagger(ops["sm1"])
    ops["sp2"] = dagger(ops["sm2"])
    for op in ops.values():
        op.setflags(write=False)
    return ops


def operators(cutoff: int) -> dict:
    """Embedded a, a+, sigma-/+ for both atoms (shared, read-only)"""
    return _operators(int(cutoff))


def basis_index(atom1: int, atom2: int, photons: int, cutoff: int) -> int:
    if atom1 not in (0, 1) or atom2 not in (0, 1) or not 0 <= photons <= cutoff:
        raise DimensionError(f"Invalid basis label ({atom1}, {atom2}, {photons}) at cutoff {cutoff}")
    return (2 * atom1 + atom2) * (cutoff + 1) + photons


def basis_ket(atom1: int, atom2: int, photons: int, cutoff: int) -> np.ndarray:
    ket = np.zeros(4 * (cutoff + 1), dtype=np.complex128)
    ket[basis_index(atom1, atom2, photons, cutoff)] = 1.0
    return ket


def excitation_numbers(cutoff: int) -> np.ndarray:
    """Total excitation N of every composite basis state"""
    atoms = np.array([0, 1, 1, 2])
    photons = np.arange(cutoff + 1)
    return (atoms[:, None] + photons[None, :]).reshape(-1)


def number_operator(params: ModelParams) -> ComplexMatrix:
    return np.diag(excitation_numbers(params.cutoff)).astype(np.complex128)


def photon_number_operator(params: ModelParams) -> ComplexMatrix:
    ops = operators(params.cutoff)
    return ops["ad"] @ ops["a"]


def atom_swap(cutoff: int) -> ComplexMatrix:
    """Permutation exchanging the two atoms"""
    dim = 4 * (cutoff + 1)
    swap = np.zeros((dim, dim), dtype=np.complex128)
    for atom1 in (0, 1):
        for atom2 in (0, 1):
            for n in range(cutoff + 1):
                swap[basis_index(atom2, atom1, n, cutoff), basis_index(atom1, atom2, n, cutoff)] = 1.0
    return swap


def hamiltonian(params: ModelParams) -> ComplexMatrix:
    """Resonant interaction-picture coupling g * sum_i (a+ s_i- + a s_i+)"""
    ops = operators(params.cutoff)
    h = np.zeros((params.dim, params.dim), dtype=np.complex128)
    for i in (1, 2):
        h += params.g * (ops["ad"] @ ops[f"sm{i}"] + ops["a"] @ ops[f"sp{i}"])
    return h


def jump_operators(params: ModelParams) -> list:
    """(family, rate, c) triples; each contributes rate * (2 c rho c+ - c+c rho - rho c+c)"""
    ops = operators(params.cutoff)
    jumps = []
    for i in (1, 2):
        jumps.append(("atom_decay", (params.n_T + 1) * params.gamma, ops[f"sm{i}"]))
    for i in (1, 2):
        jumps.append(("atom_pump", params.n_T * params.gamma, ops[f"sp{i}"]))
    jumps.append(("cavity_decay", (params.m_T + 1) * params.kappa, ops["a"]))
    jumps.append(("cavity_pump", params.m_T * params.kappa, ops["ad"]))
    return jumps


class Superoperator:
    """Linear map on column-stacked D x D matrices.

    Stored as terms ``coef * left @ rho @ right`` grouped by family, so any
    block of the D^2 x D^2 matrix can be assembled without building the rest.
    """

    def __init__(self, dim: int, families: dict, charges=None):
        self.dim = dim
        self.families = families
        self.charges = charges

    @cached_property
    def matrix(self) -> ComplexMatrix:
        return sum(self.family_matrix(name) for name in self.families)

    def family_matrix(self, name: str) -> ComplexMatrix:
        size = self.dim * self.dim
        out = np.zeros((size, size), dtype=np.complex128)
        for coef, left, right in self.families[name]:
            if coef != 0:
                out += coef * np.kron(right.T, left)
        return out

    def block(self, rows, cols) -> ComplexMatrix:
        """Rows/cols of the full matrix, given as column-stacked indices"""
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        row_m, row_n = rows % self.dim, rows // self.dim
        col_m, col_n = cols % self.dim, cols // self.dim
        out = np.zeros((rows.size, cols.size), dtype=np.complex128)
        for terms in self.families.values():
            for coef, left, right in terms:
                if coef == 0:
                    continue
                out += coef * left[np.ix_(row_m, col_m)] * right.T[np.ix_(row_n, col_n)]
        return out

    def sectors(self) -> dict:
        """Column-stacked indices grouped by N(row) - N(column)"""
        if self.charges is None:
            return {0: np.arange(self.dim * self.dim)}
        m = np.tile(np.arange(self.dim), self.dim)
        n = np.repeat(np.arange(self.dim), self.dim)
        difference = self.charges[m] - self.charges[n]
        return {int(k): np.flatnonzero(difference == k) for k in np.unique(difference)}

    def apply(self, rho) -> ComplexMatrix:
        return devectorize(self.matrix @ vectorize(rho), self.dim)


def liouvillian(params: ModelParams) -> Superoperator:
    """Generator of the thermal master equation as a superoperator"""
    dim = params.dim
    identity = np.eye(dim, dtype=np.complex128)
    h = hamiltonian(params)
    families = {name: [] for name in FAMILIES}
    families["coherent"] = [(-1j, h, identity), (1j, identity, h)]
    for family, rate, c in jump_operators(params):
        cd = dagger(c)
        cdc = cd @ c
        families[family].extend([
            (2 * rate, c, cd),
            (-rate, cdc, identity),
            (-rate, identity, cdc),
        ])
    logger.debug(f"Built Liouvillian: D={dim}, case={params.case}, cutoff={params.cutoff}")
    return Superoperator(dim, families, charges=excitation_numbers(params.cutoff))


def apply_generator(params: ModelParams, rho) -> ComplexMatrix:
    """-i[H, rho] + L(rho) evaluated with matrix products"""
    m = rho.matrix if isinstance(rho, DensityMatrix) else as_matrix(rho)
    if m.shape != (params.dim, params.dim):
        raise DimensionError(f"State of shape {m.shape} does not match model dimension {params.dim}")
    h = hamiltonian(params)
    out = -1j * (h @ m - m @ h)
    for _, rate, c in jump_operators(params):
        if rate == 0:
            continue
        cd = dagger(c)
        cdc = cd @ c
        out += rate * (2 * c @ m @ cd - cdc @ m - m @ cdc)
    return out
