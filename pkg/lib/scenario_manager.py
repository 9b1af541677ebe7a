import itertools
import logging
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from lib.config import ScenarioConfig, TimeGrid
from lib.correlations import atoms_report
from lib.dynamics_manager import DynamicsManager, OBSERVABLES, cutoff_audit, settle_time
from lib.errors import ConfigError, DiscordSimError
from lib.model import ModelParams

MEASURES = ("discord", "classical_correlation", "mutual_information", "concurrence", "theta", "phi")
EVOLVE_COLUMNS = ("time", *MEASURES, "trace_drift", "min_eigenvalue", "error")
STEADY_COLUMNS = (*MEASURES, "residual", "spectral_gap", "photon_number", "atom_excitation", "error")

SETTLE_FRACTION = 0.01
PRODUCT_RATIO = 1 / 20


@dataclass(frozen=True, eq=False)
class ResultSet:
    columns: tuple
    rows: list
    config: dict
    caption: dict = field(default_factory=dict)
    states: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if row.get(name) is None else row[name] for row in self.rows], dtype=float)

    def failed_rows(self) -> list:
        return [row for row in self.rows if row.get("error")]


@dataclass(frozen=True)
class SettlingReport:
    time: float
    seconds: float
    plateau: float
    physical_g: float


def _measures(rho_full) -> dict:
    report = atoms_report(rho_full).to_dict()
    return {name: report[name] for name in MEASURES}


def _failed_row(columns, base, error) -> dict:
    row = {**base, **{column: np.nan for column in columns}}
    if "time" in row:
        row["time"] = None
    row["error"] = f"{type(error).__name__}: {error}"
    return row


def _evolve_point(params: ModelParams, base: dict, time: TimeGrid):
    trajectory = DynamicsManager(params).evolve(t_max=time.t_max, dt=time.dt, stride=time.stride)
    rows = []
    for t, state, drift, lowest in zip(trajectory.times, trajectory.states,
                                       trajectory.trace_drift, trajectory.min_eigenvalues):
        rows.append({
            **base,
            "time": float(t),
            **_measures(state),
            "trace_drift": float(drift),
            "min_eigenvalue": float(lowest),
            "error": "",
        })
    return rows, trajectory.final_state


def _steady_point(params: ModelParams, base: dict):
    steady = DynamicsManager(params).steady_state()
    row = {
        **base,
        **_measures(steady.state),
        "residual": steady.residual,
        "spectral_gap": steady.spectral_gap,
        "photon_number": OBSERVABLES["photon_number"](steady.state),
        "atom_excitation": OBSERVABLES["atom_excitation"](steady.state),
        "error": "",
    }
    return [row], steady.state


def _solve_point(task):
    """Rows (and final or steady state) for one parameter point; runs in workers"""
    mode, params, point, time = task
    base = {"case": params.case, **point}
    columns = EVOLVE_COLUMNS if mode == "evolve" else STEADY_COLUMNS
    try:
        if mode == "evolve":
            return _evolve_point(params, base, time)
        return _steady_point(params, base)
    except DiscordSimError as e:
        logging.getLogger(__name__).warning(f"Point {point} failed: {e}")
        return [_failed_row(columns, base, e)], None


class ScenarioManager:
    def __init__(self, config: ScenarioConfig, workers=None):
        """Runs a validated scenario over its parameter grid.

        Args:
            config: output of ``parse_config``.
            workers: process count; defaults to ``config.workers``. With one
                worker every point is solved in this process.
        """
        self.config = config
        self.workers = workers or config.workers
        self.logger = logging.getLogger(__name__)

    def points(self) -> list:
        """(params, axis values) for every grid point, in axis order"""
        axes = self.config.axes
        grids = [axis.values() for axis in axes]
        points = []
        for values in itertools.product(*grids):
            params = self.config.params
            for axis, value in zip(axes, values):
                params = axis.apply(params, value)
            points.append((params, {axis.name: float(value) for axis, value in zip(axes, values)}))
        return points

    def run_scenario(self) -> ResultSet:
        mode = "evolve" if self.config.effective_mode == "evolve" else "steady"
        columns = ("case", *(axis.name for axis in self.config.axes),
                   *(EVOLVE_COLUMNS if mode == "evolve" else STEADY_COLUMNS))
        tasks = [(mode, params, point, self.config.time) for params, point in self.points()]

        self.logger.info("=" * 50)
        self.logger.info(f"Running {mode} scenario over {len(tasks)} points with {self.workers} worker(s)")
        if self.config.preset:
            self.logger.info(f"Preset {self.config.preset}: {self.config.caption}")

        if self.workers > 1 and len(tasks) > 1:
            with Pool(processes=min(self.workers, len(tasks))) as pool:
                outputs = pool.map(_solve_point, tasks)
        else:
            outputs = [_solve_point(task) for task in tasks]

        rows, states = [], []
        for (_, _, point, _), (point_rows, state) in zip(tasks, outputs):
            rows.extend(point_rows)
            if self.config.dump_states and state is not None:
                states.append((point, state))

        axis_names = [axis.name for axis in self.config.axes]
        rows.sort(key=lambda row: (*(row[name] for name in axis_names), row.get("time") or 0.0))
        self._check_rows(rows)

        failed = sum(1 for row in rows if row.get("error"))
        self.logger.info(f"Scenario produced {len(rows)} rows, {failed} failed")
        self.logger.info("=" * 50)
        return ResultSet(
            columns=columns,
            rows=rows,
            config=self.config.to_dict(),
            caption=self.config.caption,
            states=states,
        )

    def _check_rows(self, rows):
        for row in rows:
            if row.get("error"):
                continue
            if row["classical_correlation"] > row["mutual_information"] + 1e-9 or row["discord"] < -1e-9:
                self.logger.warning(f"Correlation bounds violated at {row}")

    def audit_cutoff(self) -> int:
        return cutoff_audit(self.config.params, self.config.audit_observable, self.config.audit_tol)

    def settling_report(self, params=None, physical_g=None, tol_fraction=SETTLE_FRACTION) -> SettlingReport:
        """Discord settling time of one trajectory, in seconds"""
        params = params or self.config.params
        physical_g = physical_g if physical_g is not None else self.config.physical_g
        if physical_g is None or physical_g <= 0:
            raise ConfigError([f"physical_g: must be > 0, got {physical_g!r}"])
        product = params.gamma * params.kappa
        target = PRODUCT_RATIO * params.g ** 2
        if not np.isclose(product, target, rtol=1e-2):
            self.logger.warning(f"gamma*kappa = {product:.4g} differs from g^2/20 = {target:.4g}")

        time = self.config.time
        trajectory = DynamicsManager(params).evolve(t_max=time.t_max, dt=time.dt, stride=time.stride)
        report = settling_from_series(trajectory.times, trajectory.series("discord"), physical_g, tol_fraction)
        self.logger.info(
            f"Discord settles at t={report.time:.4g}/g = {report.seconds:.4e} s "
            f"(plateau {report.plateau:.4e}, g={physical_g:.4e} rad/s)"
        )
        return report


def settling_from_series(times, series, physical_g, tol_fraction=SETTLE_FRACTION) -> SettlingReport:
    """Settle time of a dimensionless series (t in 1/g) converted to seconds"""
    if physical_g <= 0:
        raise ConfigError([f"physical_g: must be > 0, got {physical_g!r}"])
    series = np.asarray(series, dtype=float)
    plateau = float(series[-1])
    t = settle_time(times, series, tol_fraction * abs(plateau))
    return SettlingReport(time=t, seconds=t / physical_g, plateau=plateau, physical_g=physical_g)
