"""Tests for configuration handling, report generation, and the CLI."""

import csv
import json
import math
import subprocess
import sys

import pytest

import wfsim.cli as cli
from wfsim import ConfigError, InvariantViolation, ScenarioConfig, emit, run
from wfsim.report import CSV_COLUMNS, ENV_OUT_DIR, render_csv, render_json


def _rows_by_quantity(report):
    out = {}
    for row in report.rows:
        out[(row.hypothesis, row.quantity)] = row
    return out


class TestScenarioConfig:
    def test_defaults(self):
        config = ScenarioConfig()
        assert config.scenario == "proietti"
        assert config.hypotheses == ("unitary_only", "friend_dephasing")
        assert config.shots == 0
        assert config.output_format == "csv"

    def test_per_scenario_default_hypotheses(self):
        assert ScenarioConfig(scenario="counterexample").hypotheses == (
            "unitary_only",
            "subjective_collapse",
        )
        assert ScenarioConfig(scenario="bell_singlet").hypotheses == ()

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(scenario="pendulum")

    def test_bad_hypothesis_name(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(hypotheses=("gravity_collapse",))

    def test_counterexample_hypothesis_restriction(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(scenario="counterexample", hypotheses=("friend_dephasing",))

    def test_scenarios_without_hypotheses_reject_them(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(scenario="bell_singlet", hypotheses=("unitary_only",))

    def test_numeric_validation(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(shots=-1)
        with pytest.raises(ConfigError):
            ScenarioConfig(seed=-5)
        with pytest.raises(ConfigError):
            ScenarioConfig(seed=2**64)
        with pytest.raises(ConfigError):
            ScenarioConfig(grid_step=0.0)
        with pytest.raises(ConfigError):
            ScenarioConfig(grid_step=1.0)
        with pytest.raises(ConfigError):
            ScenarioConfig(threads=0)
        with pytest.raises(ConfigError):
            ScenarioConfig(output_format="yaml")

    def test_from_mapping_rejects_unknown_key_with_line(self):
        with pytest.raises(ConfigError, match=r"cfg\.json:4"):
            ScenarioConfig.from_mapping(
                {"scenario": "proietti", "shotz": 3},
                lines={"scenario": 2, "shotz": 4},
                source="cfg.json",
            )

    def test_from_mapping_points_value_errors_at_lines(self):
        with pytest.raises(ConfigError, match=r"cfg\.json:3"):
            ScenarioConfig.from_mapping(
                {"grid_step": 2.5},
                lines={"grid_step": 3},
                source="cfg.json",
            )

    def test_from_mapping_comma_separated_hypotheses(self):
        config = ScenarioConfig.from_mapping(
            {"scenario": "proietti", "hypotheses": "unitary_only, stochastic_collapse(0.5)"}
        )
        assert config.hypotheses == ("unitary_only", "stochastic_collapse(0.5)")

    def test_from_mapping_type_checks(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_mapping({"shots": "many"})
        with pytest.raises(ConfigError):
            ScenarioConfig.from_mapping({"shots": True})
        with pytest.raises(ConfigError):
            ScenarioConfig.from_mapping({"grid_step": "fine"})


class TestRunPointerBasic:
    def test_exact_rows(self):
        report = run(ScenarioConfig(scenario="pointer_basic", hypotheses=()))
        rows = _rows_by_quantity(report)
        assert rows[("", "composite_purity")].exact_value == pytest.approx(1.0)
        assert rows[("", "reduced_purity")].exact_value == pytest.approx(0.5)
        assert rows[("", "coherence_composite")].exact_value == pytest.approx(1.0)
        assert rows[("", "coherence_dephased")].exact_value == pytest.approx(0.0)
        assert rows[("", "born_p0")].exact_value == pytest.approx(0.5)
        assert report.factor_order == ("s", "p")

    def test_sampling_fills_estimates(self):
        config = ScenarioConfig(
            scenario="pointer_basic", hypotheses=(), shots=2000, seed=5
        )
        rows = _rows_by_quantity(run(config))
        row = rows[("", "born_p0")]
        assert row.estimate is not None
        assert row.shots == 2000
        assert abs(row.estimate - 0.5) < 5 * row.std_error


class TestRunBellSinglet:
    def test_exact_rows(self):
        config = ScenarioConfig(scenario="bell_singlet", hypotheses=(), grid_step=math.pi / 16)
        rows = _rows_by_quantity(run(config))
        assert rows[("", "sigma_zz_correlator")].exact_value == pytest.approx(-1.0)
        assert rows[("", "s_max")].exact_value == pytest.approx(
            2 * math.sqrt(2), abs=1e-9
        )
        assert rows[("", "reduced_purity_e1")].exact_value == pytest.approx(0.5)

    def test_sampled_rows_track_exact(self):
        config = ScenarioConfig(
            scenario="bell_singlet",
            hypotheses=(),
            shots=20000,
            seed=3,
            grid_step=math.pi / 16,
        )
        rows = _rows_by_quantity(run(config))
        row = rows[("", "s_at_optimal")]
        assert row.estimate is not None
        assert abs(row.estimate - row.exact_value) < 5 * row.std_error


class TestRunProietti:
    def test_exact_rows(self):
        config = ScenarioConfig(scenario="proietti", grid_step=math.pi / 16)
        report = run(config)
        rows = _rows_by_quantity(report)
        assert rows[("", "herald_probability_side_a")].exact_value == pytest.approx(
            0.25, abs=1e-12
        )
        assert rows[("", "herald_probability_chained")].exact_value == pytest.approx(
            0.0625, abs=1e-12
        )
        assert rows[("", "final_vs_reference_error")].exact_value < 1e-12
        assert rows[("", "local_deterministic_bound")].exact_value == 2.0
        assert rows[("unitary_only", "s_max")].exact_value == pytest.approx(
            2 * math.sqrt(2), abs=1e-9
        )
        assert rows[("unitary_only", "consistent_with_unitary")].exact_value == 1.0
        assert rows[("friend_dephasing", "consistent_with_unitary")].exact_value == 0.0
        assert report.factor_order[0] == "a"

    def test_stochastic_hypothesis_in_report(self):
        config = ScenarioConfig(
            scenario="proietti",
            hypotheses=("stochastic_collapse(0.5)",),
            grid_step=math.pi / 16,
        )
        rows = _rows_by_quantity(run(config))
        key = ("stochastic_collapse(0.5)", "s_max")
        assert key in rows


class TestRunCounterexample:
    def test_exact_probabilities(self):
        config = ScenarioConfig(scenario="counterexample")
        rows = _rows_by_quantity(run(config))
        assert rows[("unitary_only", "photon_probability")].exact_value == pytest.approx(
            1.0, abs=1e-12
        )
        assert rows[
            ("subjective_collapse", "photon_probability")
        ].exact_value == pytest.approx(0.5, abs=1e-12)

    def test_sampled_frequencies(self):
        config = ScenarioConfig(scenario="counterexample", shots=50_000, seed=2)
        rows = _rows_by_quantity(run(config))
        unitary = rows[("unitary_only", "photon_probability")]
        collapse = rows[("subjective_collapse", "photon_probability")]
        assert unitary.estimate == 1.0
        assert abs(collapse.estimate - 0.5) < 5 * math.sqrt(0.25 / 50_000)


class TestEmission:
    def test_csv_header_and_digits(self):
        report = run(ScenarioConfig(scenario="pointer_basic", hypotheses=()))
        text = render_csv(report)
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + len(report.rows)
        # every float field round-trips through 12 significant digits
        for line in lines[1:]:
            value = line.split(",")[3]
            assert value == f"{float(value):.12g}"

    def test_json_mirrors_rows(self):
        report = run(ScenarioConfig(scenario="pointer_basic", hypotheses=(), seed=9))
        body = json.loads(render_json(report))
        assert body["factor_order"] == ["s", "p"]
        assert body["config"]["seed"] == 9
        assert len(body["rows"]) == len(report.rows)
        assert body["rows"][0]["quantity"] == report.rows[0].quantity

    def test_emit_writes_explicit_path(self, tmp_path):
        report = run(ScenarioConfig(scenario="pointer_basic", hypotheses=()))
        out = emit(report, path=tmp_path / "r.csv")
        assert out.read_text().startswith("scenario,")

    def test_emit_env_var_directory(self, tmp_path, monkeypatch):
        monkeypatch.setenv(ENV_OUT_DIR, str(tmp_path))
        monkeypatch.chdir(tmp_path)
        report = run(ScenarioConfig(scenario="pointer_basic", hypotheses=(), seed=4))
        out = emit(report)
        assert out.parent == tmp_path
        assert out.name == "pointer_basic_seed4.csv"

    def test_emit_propagates_oserror(self, tmp_path):
        report = run(ScenarioConfig(scenario="pointer_basic", hypotheses=()))
        with pytest.raises(OSError):
            emit(report, path=tmp_path / "missing_dir" / "r.csv")


class TestCliExitCodes:
    def test_success(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code = cli.main(
            ["--scenario", "pointer_basic", "--seed", "1", "--out", str(out)]
        )
        assert code == 0
        assert out.exists()
        assert str(out) in capsys.readouterr().out

    def test_invalid_config_file_line_number(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{\n  "scenario": "proietti",\n  "shotz": 3\n}\n')
        code = cli.main(["--config", str(cfg)])
        assert code == 2
        err = capsys.readouterr().err
        assert f"{cfg}:3" in err

    def test_invalid_json_reports_line(self, tmp_path, capsys):
        cfg = tmp_path / "broken.json"
        cfg.write_text('{\n  "scenario": "proietti",\n}\n')
        assert cli.main(["--config", str(cfg)]) == 2
        assert f"{cfg}:3" in capsys.readouterr().err

    def test_invalid_flag_value(self, capsys):
        code = cli.main(["--scenario", "pointer_basic", "--grid-step", "7.0"])
        assert code == 2

    def test_invariant_violation_exit(self, tmp_path, monkeypatch, capsys):
        def explode(config):
            raise InvariantViolation("synthetic failure for the exit-code path")

        monkeypatch.setattr(cli, "run", explode)
        code = cli.main(["--scenario", "pointer_basic", "--out", str(tmp_path / "x.csv")])
        assert code == 3
        assert "invariant" in capsys.readouterr().err

    def test_unwritable_path_exit(self, tmp_path, capsys):
        target = tmp_path / "nowhere" / "r.csv"
        code = cli.main(["--scenario", "pointer_basic", "--out", str(target)])
        assert code == 4
        assert "cannot write" in capsys.readouterr().err

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scenario": "pointer_basic", "seed": 1, "shots": 50}))
        out = tmp_path / "r.csv"
        assert cli.main(["--config", str(cfg), "--shots", "10", "--out", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        sampled = [r for r in rows if r["shots"]]
        assert sampled and all(r["shots"] == "10" for r in sampled)


class TestCliDeterminism:
    """Byte-level reproducibility through the real process boundary."""

    def _run(self, tmp_path, name, threads):
        out = tmp_path / name
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "wfsim",
                "--scenario",
                "bell_singlet",
                "--seed",
                "123",
                "--shots",
                "5000",
                "--grid-step",
                str(math.pi / 16),
                "--threads",
                str(threads),
                "--out",
                str(out),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        return out.read_bytes()

    def test_repeat_runs_are_byte_identical(self, tmp_path):
        first = self._run(tmp_path, "a.csv", threads=1)
        second = self._run(tmp_path, "b.csv", threads=1)
        assert first == second

    def test_thread_counts_are_byte_identical(self, tmp_path):
        serial = self._run(tmp_path, "t1.csv", threads=1)
        threaded = self._run(tmp_path, "t4.csv", threads=4)
        assert serial == threaded

    def test_json_body_stable_except_wall_time(self, tmp_path):
        config = ScenarioConfig(
            scenario="counterexample", shots=1000, seed=8, output_format="json"
        )
        body_a = json.loads(render_json(run(config)))
        body_b = json.loads(render_json(run(config)))
        body_a.pop("wall_time_s")
        body_b.pop("wall_time_s")
        assert body_a == body_b
