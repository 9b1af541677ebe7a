import json
import logging
from dataclasses import dataclass, field, asdict

import numpy as np

from lib.errors import ConfigError
from lib.model import ModelParams

logger = logging.getLogger(__name__)

MODES = ("evolve", "steady", "sweep2d", "figure-preset")
FORMATS = ("csv", "json")
AXIS_NAMES = ("n_T", "m_T", "gamma", "kappa", "noise")
OBSERVABLE_NAMES = (
    "discord", "classical_correlation", "mutual_information",
    "concurrence", "photon_number", "atom_excitation",
)

TOP_LEVEL_KEYS = {"mode", "preset", "params", "axes", "time", "output", "workers", "physical_g", "audit"}
PARAM_KEYS = {"g", "gamma", "kappa", "n_T", "m_T", "cutoff", "omega_a", "omega_c"}
AXIS_KEYS = {"name", "start", "stop", "count"}
TIME_KEYS = {"t_max", "dt", "report_every"}
OUTPUT_KEYS = {"path", "format", "dump_states"}
AUDIT_KEYS = {"observable", "tol"}

# Axis extents are not given by the figure captions; these windows hold the
# reported features and can be overridden per config
NOISE_AXIS = {"start": 0.0, "stop": 5.0, "count": 26}
RATE_AXIS = {"start": 0.05, "stop": 3.0, "count": 30}

# Each preset binds exactly the parameters its figure caption states
PRESETS = {
    "fig2": {"mode": "evolve", "params": {"gamma": 0.1, "kappa": 1.5, "m_T": 0.0},
             "axes": [{"name": "n_T", **NOISE_AXIS}], "quantity": "discord"},
    "fig3a": {"mode": "sweep2d", "params": {"m_T": 0.0, "gamma": 0.1},
              "axes": [{"name": "n_T", **NOISE_AXIS}, {"name": "kappa", **RATE_AXIS}], "quantity": "discord"},
    "fig3b": {"mode": "sweep2d", "params": {"m_T": 0.0, "gamma": 0.1},
              "axes": [{"name": "n_T", **NOISE_AXIS}, {"name": "kappa", **RATE_AXIS}], "quantity": "concurrence"},
    "fig3c": {"mode": "sweep2d", "params": {"m_T": 0.0, "kappa": 2.0},
              "axes": [{"name": "n_T", **NOISE_AXIS}, {"name": "gamma", **RATE_AXIS}], "quantity": "discord"},
    "fig3d": {"mode": "sweep2d", "params": {"m_T": 0.0, "kappa": 2.0},
              "axes": [{"name": "n_T", **NOISE_AXIS}, {"name": "gamma", **RATE_AXIS}], "quantity": "concurrence"},
    "fig4": {"mode": "evolve", "params": {"kappa": 0.1, "gamma": 0.2, "n_T": 0.0},
             "axes": [{"name": "m_T", **NOISE_AXIS}], "quantity": "discord"},
    "fig5a": {"mode": "sweep2d", "params": {"n_T": 0.0, "gamma": 0.1},
              "axes": [{"name": "m_T", **NOISE_AXIS}, {"name": "kappa", **RATE_AXIS}], "quantity": "discord"},
    "fig5b": {"mode": "sweep2d", "params": {"n_T": 0.0, "gamma": 0.1},
              "axes": [{"name": "m_T", **NOISE_AXIS}, {"name": "kappa", **RATE_AXIS}], "quantity": "concurrence"},
    "fig5c": {"mode": "sweep2d", "params": {"n_T": 0.0, "kappa": 0.1},
              "axes": [{"name": "m_T", **NOISE_AXIS}, {"name": "gamma", **RATE_AXIS}], "quantity": "discord"},
    "fig5d": {"mode": "sweep2d", "params": {"n_T": 0.0, "kappa": 0.1},
              "axes": [{"name": "m_T", **NOISE_AXIS}, {"name": "gamma", **RATE_AXIS}], "quantity": "concurrence"},
    "fig6": {"mode": "evolve", "params": {"kappa": 1.0, "gamma": 0.1},
             "axes": [{"name": "noise", **NOISE_AXIS}], "quantity": "discord"},
}


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    def apply(self, params: ModelParams, value: float) -> ModelParams:
        if self.name == "noise":
            return params.replace(n_T=float(value), m_T=float(value))
        return params.replace(**{self.name: float(value)})


@dataclass(frozen=True)
class TimeGrid:
    t_max: float = 200.0
    dt: float = 0.02
    report_every: float = 0.5

    @property
    def stride(self) -> int:
        return max(1, int(round(self.report_every / self.dt)))


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str = "steady"
    params: ModelParams = field(default_factory=ModelParams)
    axes: tuple = ()
    time: TimeGrid = field(default_factory=TimeGrid)
    output_path: str | None = None
    output_format: str = "csv"
    dump_states: bool = False
    preset: str | None = None
    workers: int = 1
    physical_g: float | None = None
    audit_observable: str = "discord"
    audit_tol: float = 1e-4

    @property
    def effective_mode(self) -> str:
        if self.mode == "figure-preset":
            return PRESETS[self.preset]["mode"]
        return self.mode

    @property
    def caption(self) -> dict:
        """Fixed parameters stated by the preset's figure caption"""
        if not self.preset:
            return {}
        return dict(PRESETS[self.preset]["params"])

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "preset": self.preset,
            "params": self.params.to_dict(),
            "axes": [asdict(axis) for axis in self.axes],
            "time": asdict(self.time),
            "output": {"path": self.output_path, "format": self.output_format, "dump_states": self.dump_states},
            "workers": self.workers,
            "physical_g": self.physical_g,
            "audit": {"observable": self.audit_observable, "tol": self.audit_tol},
        }


def _merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and np.isfinite(value)


def _check_keys(section: dict, allowed: set, path: str, errors: list):
    for key in sorted(set(section) - allowed):
        errors.append(f"{path}{key}: unknown key")


def _section(doc: dict, key: str, errors: list) -> dict:
    value = doc.get(key) or {}
    if not isinstance(value, dict):
        errors.append(f"{key}: expected an object, got {type(value).__name__}")
        return {}
    return value


def _number(section: dict, key: str, path: str, errors: list, default, minimum=None, strict=False):
    label = f"{path}.{key}" if path else key
    value = section.get(key, default)
    if value is None:
        return None
    if not _is_number(value):
        errors.append(f"{label}: expected a number, got {value!r}")
        return default
    if minimum is not None and (value <= minimum if strict else value < minimum):
        errors.append(f"{label}: must be {'>' if strict else '>='} {minimum}, got {value}")
    return value


def _parse_axes(raw, errors: list) -> tuple:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        errors.append(f"axes: expected a list, got {type(raw).__name__}")
        return ()
    if len(raw) > 2:
        errors.append(f"axes: at most two sweep axes allowed, got {len(raw)}")
    axes, seen = [], set()
    for i, item in enumerate(raw):
        path = f"axes[{i}]"
        if not isinstance(item, dict):
            errors.append(f"{path}: expected an object")
            continue
        _check_keys(item, AXIS_KEYS, f"{path}.", errors)
        name = item.get("name")
        if name not in AXIS_NAMES:
            errors.append(f"{path}.name: expected one of {list(AXIS_NAMES)}, got {name!r}")
            continue
        if name in seen:
            errors.append(f"{path}.name: duplicate axis '{name}'")
        seen.add(name)
        default = NOISE_AXIS if name in ("n_T", "m_T", "noise") else RATE_AXIS
        start = _number(item, "start", path, errors, default["start"], minimum=0.0)
        stop = _number(item, "stop", path, errors, default["stop"], minimum=0.0)
        count = item.get("count", default["count"])
        if isinstance(count, bool) or not isinstance(count, int) or count < 2:
            errors.append(f"{path}.count: must be an integer >= 2, got {count!r}")
            count = 2
        if _is_number(start) and _is_number(stop) and start >= stop:
            errors.append(f"{path}: start ({start}) must be < stop ({stop})")
        axes.append(SweepAxis(name, float(start), float(stop), int(count)))
    if {"noise", "n_T"} <= seen or {"noise", "m_T"} <= seen:
        errors.append("axes: 'noise' ties n_T and m_T and cannot be combined with either")
    return tuple(axes)


def parse_config(text: str, overrides: dict | None = None) -> ScenarioConfig:
    """Validate a JSON scenario document, reporting every violation"""
    errors = []
    try:
        doc = json.loads(text) if text and text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError([f"line {e.lineno}, column {e.colno}: {e.msg}"]) from None
    if not isinstance(doc, dict):
        raise ConfigError([f"document: expected a JSON object, got {type(doc).__name__}"])

    doc = _merge(doc, overrides or {})
    _check_keys(doc, TOP_LEVEL_KEYS, "", errors)

    preset = doc.get("preset")
    if preset is not None and preset not in PRESETS:
        errors.append(f"preset: unknown preset {preset!r}, expected one of {sorted(PRESETS)}")
        preset = None
    mode = doc.get("mode", "figure-preset" if preset else "steady")
    if mode not in MODES:
        errors.append(f"mode: expected one of {list(MODES)}, got {mode!r}")
        mode = "steady"
    if mode == "figure-preset" and not preset:
        errors.append("preset: required when mode is 'figure-preset'")
        mode = "steady"
    if preset:
        template = PRESETS[preset]
        doc = _merge({"params": template["params"], "axes": template["axes"]}, doc)
        if mode not in ("figure-preset", template["mode"]):
            errors.append(f"mode: preset '{preset}' runs in '{template['mode']}' mode, got {mode!r}")

    params_doc = _section(doc, "params", errors)
    _check_keys(params_doc, PARAM_KEYS, "params.", errors)
    params_kwargs = {}
    for key in ("g", "gamma", "kappa", "n_T", "m_T", "omega_a", "omega_c"):
        if key in params_doc:
            value = params_doc[key]
            if value is not None and not _is_number(value):
                errors.append(f"params.{key}: expected a number, got {value!r}")
                continue
            params_kwargs[key] = float(value) if value is not None else None
    if "cutoff" in params_doc:
        params_kwargs["cutoff"] = params_doc["cutoff"]
    params = ModelParams()
    try:
        params = ModelParams(**params_kwargs)
    except ConfigError as e:
        errors.extend(e.errors)

    axes = _parse_axes(doc.get("axes"), errors)

    time_doc = _section(doc, "time", errors)
    _check_keys(time_doc, TIME_KEYS, "time.", errors)
    dt = _number(time_doc, "dt", "time", errors, 0.02, minimum=0.0, strict=True)
    t_max = _number(time_doc, "t_max", "time", errors, 200.0, minimum=0.0, strict=True)
    report_every = _number(time_doc, "report_every", "time", errors, 0.5, minimum=0.0, strict=True)
    if _is_number(dt) and _is_number(t_max) and t_max < dt:
        errors.append(f"time.t_max: must be >= dt ({dt}), got {t_max}")

    output_doc = _section(doc, "output", errors)
    _check_keys(output_doc, OUTPUT_KEYS, "output.", errors)
    output_format = output_doc.get("format", "csv")
    if output_format not in FORMATS:
        errors.append(f"output.format: expected one of {list(FORMATS)}, got {output_format!r}")
    output_path = output_doc.get("path")
    if output_path is not None and not isinstance(output_path, str):
        errors.append(f"output.path: expected a string, got {output_path!r}")
    dump_states = output_doc.get("dump_states", False)
    if not isinstance(dump_states, bool):
        errors.append(f"output.dump_states: expected true/false, got {dump_states!r}")

    workers = doc.get("workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        errors.append(f"workers: must be an integer >= 1, got {workers!r}")
        workers = 1
    physical_g = _number(doc, "physical_g", "", errors, None, minimum=0.0, strict=True)

    audit_doc = _section(doc, "audit", errors)
    _check_keys(audit_doc, AUDIT_KEYS, "audit.", errors)
    audit_observable = audit_doc.get("observable", "discord")
    if audit_observable not in OBSERVABLE_NAMES:
        errors.append(f"audit.observable: expected one of {list(OBSERVABLE_NAMES)}, got {audit_observable!r}")
    audit_tol = _number(audit_doc, "tol", "audit", errors, 1e-4, minimum=0.0, strict=True)

    effective = PRESETS[preset]["mode"] if mode == "figure-preset" else mode
    if effective == "sweep2d" and len(axes) != 2:
        errors.append(f"axes: sweep2d mode needs exactly two axes, got {len(axes)}")
    if effective in ("evolve", "steady") and len(axes) > 1:
        errors.append(f"axes: {effective} mode takes at most one axis, got {len(axes)}")

    if errors:
        for error in errors:
            logger.error(f"Config error: {error}")
        raise ConfigError(errors)

    return ScenarioConfig(
        mode=mode,
        params=params,
        axes=axes,
        time=TimeGrid(t_max=float(t_max), dt=float(dt), report_every=float(report_every)),
        output_path=output_path,
        output_format=output_format,
        dump_states=dump_states,
        preset=preset,
        workers=workers,
        physical_g=float(physical_g) if physical_g is not None else None,
        audit_observable=audit_observable,
        audit_tol=float(audit_tol),
    )
