import csv
import io
import json
import re

import numpy as np
import pytest

import gen_presets
import main as cli
from lib.config import parse_config
from lib.errors import ConfigError, NonUniqueSteadyStateError
from lib.output_manager import OutputManager, format_value
from lib.scenario_manager import ScenarioManager, settling_from_series

SMALL_STEADY = {
    "mode": "steady",
    "params": {"gamma": 0.1, "kappa": 1.5, "cutoff": 2},
    "axes": [{"name": "n_T", "start": 0.0, "stop": 1.0, "count": 3}],
}
SMALL_EVOLVE = {
    "mode": "evolve",
    "params": {"gamma": 0.1, "kappa": 1.5, "cutoff": 2},
    "axes": [{"name": "n_T", "start": 0.0, "stop": 1.0, "count": 3}],
    "time": {"t_max": 1.0, "dt": 0.05, "report_every": 0.5},
}


def run(doc, **overrides):
    return ScenarioManager(parse_config(json.dumps(doc), overrides or None)).run_scenario()


def data_lines(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


class TestRunScenario:
    def test_steady_rows(self):
        result = run(SMALL_STEADY)
        assert len(result.rows) == 3
        np.testing.assert_allclose(result.column("n_T"), [0.0, 0.5, 1.0])
        assert {"residual", "spectral_gap", "discord", "concurrence", "case", "error"} <= set(result.columns)
        vacuum = result.rows[0]
        assert vacuum["case"] == "vacuum"
        for name in ("discord", "classical_correlation", "mutual_information", "concurrence"):
            assert abs(vacuum[name]) <= 1e-9
        assert result.rows[2]["case"] == "atoms"
        assert all(row["residual"] <= 1e-9 for row in result.rows)

    def test_evolve_rows(self):
        result = run(SMALL_EVOLVE)
        assert len(result.rows) == 9
        np.testing.assert_allclose(result.column("time")[:3], [0.0, 0.5, 1.0])
        assert result.rows[0]["discord"] == pytest.approx(0.0, abs=1e-9)
        assert np.all(result.column("trace_drift") <= 1e-9)

    def test_failed_points_become_rows(self):
        doc = {**SMALL_STEADY, "params": {"gamma": 0.0, "kappa": 0.0, "cutoff": 2}}
        result = run(doc)
        assert len(result.failed_rows()) == 3
        assert "NonUniqueSteadyStateError" in result.rows[0]["error"]
        assert np.all(np.isnan(result.column("discord")))

    def test_workers_do_not_change_rows(self):
        serial = run(SMALL_STEADY)
        parallel = run(SMALL_STEADY, workers=2)
        for a, b in zip(serial.rows, parallel.rows):
            assert a["n_T"] == b["n_T"]
            assert a["discord"] == pytest.approx(b["discord"], abs=1e-12)

    def test_dump_states(self, tmp_path):
        doc = {**SMALL_STEADY, "output": {"dump_states": True}}
        result = run(doc)
        path = tmp_path / "steady.csv"
        OutputManager("csv").write(result, str(path))
        dumped = json.loads((tmp_path / "steady_states.json").read_text())
        first = dumped["states"][0]
        assert first["state"]["dims"] == [2, 2, 3]
        assert len(first["state"]["entries"]) == 144
        assert first["atoms"]["dims"] == [2, 2]
        assert first["point"] == {"n_T": 0.0}


class TestOutput:
    def test_csv_is_deterministic(self):
        first = OutputManager("csv").render(run(SMALL_STEADY))
        second = OutputManager("csv").render(run(SMALL_STEADY))
        assert first == second

    def test_csv_layout(self):
        text = OutputManager("csv").render(run(SMALL_STEADY))
        assert text.startswith("# {")
        rows = list(csv.DictReader(io.StringIO("\n".join(data_lines(text)))))
        assert len(rows) == 3
        assert re.fullmatch(r"-?\d\.\d{11}e[+-]\d{2}", rows[1]["discord"])
        metadata = "\n".join(line[2:] for line in text.splitlines() if line.startswith("# "))
        assert json.loads(metadata)["params"]["kappa"] == 1.5

    def test_preset_header_lists_caption(self):
        doc = {"preset": "fig6", "params": {"cutoff": 2},
               "axes": [{"name": "noise", "start": 0.0, "stop": 0.5, "count": 2}],
               "time": {"t_max": 0.5, "report_every": 0.5}}
        text = OutputManager("csv").render(run(doc))
        assert "# preset fig6: gamma=1.00000000000e-01, kappa=1.00000000000e+00" in text

    def test_json_output(self):
        payload = json.loads(OutputManager("json").render(run(SMALL_STEADY)))
        assert len(payload["rows"]) == 3
        assert payload["config"]["mode"] == "steady"

    def test_format_value(self):
        assert format_value(0.5) == "5.00000000000e-01"
        assert format_value(3) == "3"
        assert format_value(float("nan")) == "nan"
        assert format_value(None) == ""


class TestSettling:
    def test_constant_series(self):
        times = np.linspace(0, 50, 101)
        report = settling_from_series(times, np.full(101, 0.2), 2 * np.pi * 1e8)
        assert report.seconds == 0.0

    def test_scales_with_coupling(self):
        times = np.linspace(0, 20, 401)
        series = 1 - np.exp(-times)
        slow = settling_from_series(times, series, 1e8)
        fast = settling_from_series(times, series, 2e8)
        assert fast.seconds == pytest.approx(slow.seconds / 2)
        assert slow.time == fast.time

    def test_needs_physical_coupling(self):
        manager = ScenarioManager(parse_config(json.dumps(SMALL_EVOLVE)))
        with pytest.raises(ConfigError, match="physical_g"):
            manager.settling_report()


class TestCommandLine:
    def test_steady_to_file(self, tmp_path):
        path = tmp_path / "out.csv"
        code = cli.main(["steady", "--gamma", "0.1", "--kappa", "1.5", "--cutoff", "2",
                         "--axis", "n_T:0:1:2", "--output", str(path)])
        assert code == 0
        assert len(data_lines(path.read_text())) == 3

    def test_config_error_exit_code(self, capsys):
        assert cli.main(["steady", "--n-T", "-1"]) == 1
        assert "params.n_T" in capsys.readouterr().err

    def test_solver_error_exit_code(self):
        assert cli.main(["audit-cutoff", "--gamma", "0", "--kappa", "0", "--cutoff", "2"]) == 2

    def test_not_settled_exit_code(self):
        code = cli.main(["settling-report", "--gamma", "0.1", "--kappa", "1.5", "--n-T", "0.7",
                         "--t-max", "0.5", "--report-every", "0.1", "--physical-g", "6.283e8"])
        assert code == 3

    def test_unknown_preset_is_config_error(self, capsys):
        assert cli.main(["preset", "fig99"]) == 1
        assert "fig99" in capsys.readouterr().err

    def test_non_numeric_flag_is_config_error(self, capsys):
        assert cli.main(["steady", "--n-T", "abc"]) == 1
        assert "abc" in capsys.readouterr().err

    def test_missing_command_is_config_error(self):
        assert cli.main([]) == 1

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["steady", "--config", str(tmp_path / "missing.json")]) == 1

    def test_config_file_with_flag_override(self, tmp_path):
        config_path = tmp_path / "scenario.json"
        config_path.write_text(json.dumps(SMALL_STEADY))
        out = tmp_path / "out.json"
        code = cli.main(["steady", "--config", str(config_path), "--kappa", "2.0",
                         "--format", "json", "--output", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["config"]["params"]["kappa"] == 2.0


class TestPresetBatch:
    def test_continues_past_failures(self, monkeypatch, tmp_path):
        calls = []

        def fake_run(name, output_dir, workers):
            calls.append(name)
            if name == "fig3a":
                raise NonUniqueSteadyStateError(0.0, 1e-8)
            return str(tmp_path / f"{name}.csv")

        monkeypatch.setattr(gen_presets, "run_preset", fake_run)
        assert gen_presets.main(["fig2", "fig3a", "fig6"]) == 2
        assert calls == ["fig2", "fig3a", "fig6"]
