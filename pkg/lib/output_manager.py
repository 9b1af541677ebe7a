import csv
import io
import json
import logging
import math
import os

import numpy as np

from lib.correlations import atoms_state
from lib.qmath import DensityMatrix

FLOAT_FORMAT = "{:.11e}"


def format_value(value) -> str:
    """Cell text for a CSV row; floats use 12 significant digits"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return FLOAT_FORMAT.format(float(value))
    return str(value)


def _json_value(value):
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return None
        return float(FLOAT_FORMAT.format(float(value)))
    if isinstance(value, np.integer):
        return int(value)
    return value


def state_to_dict(state: DensityMatrix) -> dict:
    return {
        "dims": list(state.dims),
        "entries": [[float(z.real), float(z.imag)] for z in state.matrix.reshape(-1)],
    }


class OutputManager:
    def __init__(self, output_format="csv"):
        """Serializes scenario results.

        Args:
            output_format: "csv" (metadata comment block + header row) or
                "json" (row objects plus the resolved config).
        """
        self.output_format = output_format
        self.logger = logging.getLogger(__name__)

    def render(self, result) -> str:
        if self.output_format == "json":
            return self.render_json(result)
        return self.render_csv(result)

    def render_csv(self, result) -> str:
        buffer = io.StringIO()
        for line in json.dumps(result.config, sort_keys=True, indent=2).splitlines():
            buffer.write(f"# {line}\n")
        if result.caption:
            caption = ", ".join(f"{k}={format_value(float(v))}" for k, v in sorted(result.caption.items()))
            buffer.write(f"# preset {result.config.get('preset')}: {caption}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([format_value(row.get(column)) for column in result.columns])
        return buffer.getvalue()

    def render_json(self, result) -> str:
        payload = {
            "config": result.config,
            "caption": result.caption,
            "columns": list(result.columns),
            "rows": [{column: _json_value(row.get(column)) for column in result.columns} for row in result.rows],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def render_states(self, result) -> str:
        dumps = []
        for point, state in result.states:
            atoms = state_to_dict(atoms_state(state)) if len(state.dims) == 3 else None
            dumps.append({
                "point": {k: _json_value(v) for k, v in point.items()},
                "state": state_to_dict(state),
                "atoms": atoms,
            })
        return json.dumps({"config": result.config, "states": dumps}, sort_keys=True, indent=2) + "\n"

    def write(self, result, path=None) -> str:
        """Write the rendered result to ``path`` (stdout when None); returns the text"""
        text = self.render(result)
        if path is None:
            print(text, end="")
            if result.states:
                self.logger.warning("State dumps need an output path, skipping")
            return text
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        self.logger.info(f"Wrote {len(result.rows)} rows to {path}")

        if result.states:
            states_path = f"{os.path.splitext(path)[0]}_states.json"
            with open(states_path, "w", encoding="utf-8") as f:
                f.write(self.render_states(result))
            self.logger.info(f"Wrote {len(result.states)} density matrices to {states_path}")
        return text
