import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from lib.correlations import atoms_report
from lib.errors import (
    CutoffNotConvergedError,
    DimensionError,
    NonUniqueSteadyStateError,
    NotAStateError,
    NotSettledError,
    PropagatorError,
)
from lib.model import ModelParams, EXCITED, apply_generator, basis_ket, embed_atom_op, liouvillian, photon_number_operator
from lib.qmath import DensityMatrix, devectorize, expm, hermitize, vectorize

logger = logging.getLogger(__name__)

DEFAULT_DT = 0.02
DEFAULT_T_MAX = 200.0
GAP_TOL = 1e-8
STEADY_NEGATIVITY_TOL = 1e-7
POSITIVITY_FLAG_TOL = 1e-6
RENORMALIZE_TOL = 1e-12
DRIFT_WARNING_TOL = 1e-7
MAX_AUDIT_CUTOFF = 30


def _atom_excitation(rho: DensityMatrix) -> float:
    cutoff = rho.dims[2] - 1
    return 0.5 * sum(rho.expectation(embed_atom_op(EXCITED, i, cutoff)) for i in (1, 2))


def _photon_number(rho: DensityMatrix) -> float:
    return rho.expectation(photon_number_operator(ModelParams(cutoff=rho.dims[2] - 1)))


# Named observables of a full (atoms + cavity) state
OBSERVABLES = {
    "discord": lambda rho: atoms_report(rho).discord,
    "classical_correlation": lambda rho: atoms_report(rho).classical_correlation,
    "mutual_information": lambda rho: atoms_report(rho).mutual_information,
    "concurrence": lambda rho: atoms_report(rho).concurrence,
    "photon_number": _photon_number,
    "atom_excitation": _atom_excitation,
}


def observable(name: str):
    try:
        return OBSERVABLES[name]
    except KeyError:
        raise DimensionError(f"Unknown observable '{name}', expected one of {sorted(OBSERVABLES)}") from None


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: list
    params: ModelParams
    trace_drift: np.ndarray
    min_eigenvalues: np.ndarray
    diagnostics: list = field(default_factory=list)

    def series(self, name: str) -> np.ndarray:
        fn = observable(name)
        return np.array([fn(state) for state in self.states])

    @property
    def final_state(self) -> DensityMatrix:
        return self.states[-1]


@dataclass(frozen=True, eq=False)
class SteadyState:
    state: DensityMatrix
    residual: float
    spectral_gap: float
    params: ModelParams


def initial_state(params: ModelParams) -> DensityMatrix:
    """|g>|g>|0> projector"""
    return DensityMatrix.from_ket(basis_ket(0, 0, 0, params.cutoff), params.dims)


class _Sector:
    """Invariant index set of column-stacked states, with the index maps
    needed to Hermitize and take traces without leaving the sector"""

    def __init__(self, dim, indices):
        self.dim = dim
        self.indices = np.asarray(indices)
        rows, cols = self.indices % dim, self.indices // dim
        self.transpose = np.searchsorted(self.indices, cols + dim * rows)
        self.diagonal = np.flatnonzero(rows == cols)

    def expand(self, v) -> np.ndarray:
        full = np.zeros(self.dim * self.dim, dtype=np.complex128)
        full[self.indices] = v
        return full


class DynamicsManager:
    def __init__(self, params: ModelParams):
        """Evolution and steady states of one parameter point.

        Args:
            params: validated model parameters; the Liouvillian is built
                lazily and reused by every call on this manager.
        """
        self.params = params
        self.logger = logging.getLogger(__name__)

    @cached_property
    def liouvillian(self):
        return liouvillian(self.params)

    @cached_property
    def sectors(self) -> dict:
        return self.liouvillian.sectors()

    def initial_state(self) -> DensityMatrix:
        return initial_state(self.params)

    def _sector_for(self, v) -> _Sector:
        zero = self.sectors[0]
        outside = np.delete(v, zero)
        if outside.size and np.max(np.abs(outside)) > 0:
            return _Sector(self.params.dim, np.arange(v.size))
        return _Sector(self.params.dim, zero)

    def evolve(self, rho0=None, t_max=DEFAULT_T_MAX, dt=DEFAULT_DT, stride=1) -> Trajectory:
        """Propagate with one exp(L dt) reused at every step.

        States are stored every ``stride`` steps, starting at t = 0.
        """
        if dt <= 0 or t_max < dt:
            raise DimensionError(f"Need dt > 0 and t_max >= dt, got dt={dt}, t_max={t_max}")
        if stride < 1:
            raise DimensionError(f"stride must be >= 1, got {stride}")
        rho0 = rho0 if rho0 is not None else self.initial_state()
        if rho0.dim != self.params.dim:
            raise DimensionError(f"Initial state dimension {rho0.dim} does not match model dimension {self.params.dim}")

        v_full = vectorize(rho0)
        sector = self._sector_for(v_full)
        block = self.liouvillian.block(sector.indices, sector.indices)
        propagator = expm(block * dt)
        if not np.all(np.isfinite(propagator)):
            raise PropagatorError(f"Propagator has non-finite entries (dt={dt}, case={self.params.case})")

        n_steps = int(np.floor(t_max / dt + 1e-9))
        self.logger.debug(f"Evolving {n_steps} steps of dt={dt} in a sector of size {sector.indices.size}")

        v = v_full[sector.indices]
        times, states, drifts, lowest = [], [], [], []
        diagnostics = []
        cumulative_drift = 0.0
        warned = False

        for step in range(n_steps + 1):
            if step > 0:
                v = propagator @ v
                v = 0.5 * (v + v[sector.transpose].conj())
                trace = np.sum(v[sector.diagonal]).real
                drift = abs(trace - 1.0)
                cumulative_drift += drift
                if drift > RENORMALIZE_TOL:
                    v = v / trace
                if cumulative_drift > DRIFT_WARNING_TOL and not warned:
                    warned = True
                    self.logger.warning(f"Cumulative trace drift {cumulative_drift:.2e} at t={step * dt:.4g}")
            if step % stride:
                continue
            state = DensityMatrix(devectorize(sector.expand(v), self.params.dim), self.params.dims)
            minimum = state.min_eigenvalue()
            if minimum < -POSITIVITY_FLAG_TOL:
                message = f"Positivity violated at t={step * dt:.6g}: smallest eigenvalue {minimum:.3e}"
                diagnostics.append(message)
                self.logger.warning(message)
            times.append(step * dt)
            states.append(state)
            drifts.append(cumulative_drift)
            lowest.append(minimum)

        self.logger.debug(f"Evolution done, cumulative trace drift {cumulative_drift:.3e}")
        return Trajectory(
            times=np.array(times),
            states=states,
            params=self.params,
            trace_drift=np.array(drifts),
            min_eigenvalues=np.array(lowest),
            diagnostics=diagnostics,
        )

    def spectral_gap(self) -> float:
        """Second-smallest singular value of the full Liouvillian.

        The generator is block diagonal over excitation-difference sectors,
        so the full singular spectrum is the union of the blocks' spectra.
        """
        singular_values = [
            scipy.linalg.svdvals(self.liouvillian.block(indices, indices))
            for indices in self.sectors.values()
        ]
        return float(np.sort(np.concatenate(singular_values))[1])

    def steady_state(self) -> SteadyState:
        if not self.params.is_dissipative:
            raise NonUniqueSteadyStateError(0.0, GAP_TOL)

        zero = self.sectors[0]
        _, _, vh = scipy.linalg.svd(self.liouvillian.block(zero, zero))
        gap = self.spectral_gap()
        if gap < GAP_TOL:
            raise NonUniqueSteadyStateError(gap, GAP_TOL)

        sector = _Sector(self.params.dim, zero)
        rho = devectorize(sector.expand(vh[-1].conj()), self.params.dim)
        rho = hermitize(rho / np.trace(rho))
        rho = rho / np.trace(rho).real
        state = DensityMatrix(rho, self.params.dims)

        minimum = state.min_eigenvalue()
        if minimum < -STEADY_NEGATIVITY_TOL:
            raise NotAStateError(f"Steady state has eigenvalue {minimum:.3e} below -{STEADY_NEGATIVITY_TOL:.0e}")

        residual = float(np.linalg.norm(apply_generator(self.params, state), "fro"))
        self.logger.debug(f"Steady state: residual={residual:.2e}, gap={gap:.3e}, case={self.params.case}")
        return SteadyState(state=state, residual=residual, spectral_gap=gap, params=self.params)


def settle_time(traj, observable_series, tol) -> float:
    """Earliest time after which the series stays within ``tol`` of its final value"""
    times = traj.times if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    series = np.asarray(observable_series, dtype=float)
    if series.shape != times.shape:
        raise DimensionError(f"Series of length {series.size} does not match {times.size} time points")
    outside = np.flatnonzero(np.abs(series - series[-1]) > tol)
    if outside.size == 0:
        return float(times[0])
    first_inside = outside[-1] + 1
    if first_inside >= series.size - 1:
        raise NotSettledError(f"Series has not settled within tol={tol:g} by t={times[-1]:g}")
    return float(times[first_inside])


def cutoff_audit(params: ModelParams, observable_name: str, tol: float,
                 start=1, max_cutoff=MAX_AUDIT_CUTOFF) -> int:
    """Smallest cutoff c whose steady-state observable moves by less than tol at c + 2"""
    if tol <= 0:
        raise DimensionError(f"tol must be > 0, got {tol}")
    fn = observable(observable_name)
    cache = {}

    def value(cutoff):
        if cutoff not in cache:
            steady = DynamicsManager(params.replace(cutoff=cutoff)).steady_state()
            cache[cutoff] = fn(steady.state)
            logger.debug(f"Cutoff {cutoff}: {observable_name} = {cache[cutoff]:.12g}")
        return cache[cutoff]

    for cutoff in range(start, max_cutoff + 1):
        change = abs(value(cutoff) - value(cutoff + 2))
        if change < tol:
            logger.info(f"{observable_name} converged at cutoff {cutoff} (change {change:.2e} < {tol:g})")
            return cutoff
    raise CutoffNotConvergedError(
        f"{observable_name} did not converge to tol={tol:g} for cutoffs up to {max_cutoff}"
    )
