import csv
import json
import math
import subprocess
import sys

import pytest

from paracomm.experiments import ExperimentConfig, run_experiment
from paracomm.experiments.baselines import baseline_key, compare_interval, load_baselines, save_baselines
from paracomm.experiments.cli import main
from paracomm.experiments.config import ConfigError, dump_config, load_config, spec_hash
from paracomm.experiments.report import CSV_HEADER, Check
from paracomm.spectral import load_field

SMALL = """\
suite: theorem1
n: 16
seed: 3
theorem1:
  fields: 2
  tests_per_field: 2
"""


def _write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestConfig:
    def test_defaults_valid(self):
        cfg = ExperimentConfig()
        cfg.validate()
        assert cfg.suites() == ["theorem1", "identities", "equivalence", "carleson"]
        assert sum(cfg.equivalence.fields_per_slope) * len(cfg.equivalence.slopes) >= 30

    def test_yaml_roundtrip(self, tmp_path):
        cfg = ExperimentConfig().with_overrides(seed=5, threads=2)
        p = _write(tmp_path, dump_config(cfg))
        assert load_config(p) == cfg

    def test_partial_file(self, tmp_path):
        cfg = load_config(_write(tmp_path, SMALL))
        assert cfg.n == 16 and cfg.theorem1.fields == 2 and cfg.theorem1.tol == 1e-10

    def test_empty_file(self, tmp_path):
        assert load_config(_write(tmp_path, "")) == ExperimentConfig()

    def test_unknown_key_line(self, tmp_path):
        p = _write(tmp_path, "n: 16\ntheorem1:\n  fields: 2\n  feilds: 3\n")
        with pytest.raises(ConfigError) as exc:
            load_config(p)
        assert exc.value.line == 4 and exc.value.column == 3
        assert str(exc.value).startswith(f"{p}:4:3: unknown key 'feilds'")

    def test_bad_type_line(self, tmp_path):
        p = _write(tmp_path, "seed: 1\nn: sixteen\n")
        with pytest.raises(ConfigError, match="must be an integer") as exc:
            load_config(p)
        assert exc.value.line == 2

    def test_bad_list_entry(self, tmp_path):
        p = _write(tmp_path, "equivalence:\n  slopes: [1.0, x]\n")
        with pytest.raises(ConfigError, match="bad entry"):
            load_config(p)

    def test_float_from_exponent_string(self, tmp_path):
        # YAML 1.1 reads 1e-12 without a dot as a string
        assert load_config(_write(tmp_path, "theorem1:\n  tol: 1e-12\n")).theorem1.tol == 1e-12

    def test_syntax_error(self, tmp_path):
        with pytest.raises(ConfigError, match="YAML syntax error") as exc:
            load_config(_write(tmp_path, "n: [16\nseed: 1\n"))
        assert exc.value.line is not None

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.yaml")

    @pytest.mark.parametrize(
        "text,match",
        [
            ("n: 24\n", "power of two"),
            ("suite: lemmas\n", "unknown suite"),
            ("suite: carleson\nn: 8\ntheorem1:\n  mollify_cells: []\n", "Carleson suite needs"),
            ("n: 8\n", "mollifier width"),
            ("theorem1:\n  mollify_cells: [1.0]\n", "mollifier width"),
            ("equivalence:\n  slopes: [3.0]\n", "slope"),
            ("equivalence:\n  fields_per_slope: [1]\n", "one entry per grid size"),
            ("threads: 0\n", "threads"),
        ],
    )
    def test_validation(self, tmp_path, text, match):
        with pytest.raises(ConfigError, match=match):
            load_config(_write(tmp_path, text))

    def test_n_override_replaces_grid_sizes(self):
        cfg = ExperimentConfig().with_overrides(n=16)
        assert cfg.n == 16 and cfg.identities.plancherel_n == 16
        assert cfg.equivalence.grid_sizes == [16] and cfg.equivalence.fields_per_slope == [10]

    def test_spec_hash_stable(self):
        assert spec_hash({"a": 1, "b": [1, 2]}) == spec_hash({"b": [1, 2], "a": 1})
        assert len(spec_hash({})) == 16


class TestReportPieces:
    @pytest.mark.parametrize(
        "value,limit,op,ok",
        [(1.0, 2.0, "<=", True), (2.0, 2.0, "<", False), (0.0, 0.0, "==", True), (1.0, 0.5, ">", True), (math.nan, 1.0, "<=", False)],
    )
    def test_check(self, value, limit, op, ok):
        assert Check("x", value, limit, op).passed is ok

    def test_compare_interval(self):
        checks = compare_interval("s", {"r": [1.0, 2.0]}, {"r": [1.04, 2.2]}, 0.05)
        assert [c.passed for c in checks] == [True, False]
        assert compare_interval("s", {"r": [1.0, 2.0]}, None, 0.05) == []

    def test_baseline_io(self, tmp_path):
        key = baseline_key("carleson", {"a": 1}, [16], 1.0, 0)
        assert key.startswith("carleson:")
        p = tmp_path / "b.json"
        save_baselines(p, {key: {"r": [1.0, 2.0]}})
        assert load_baselines(p) == {key: {"r": [1.0, 2.0]}}
        assert load_baselines(tmp_path / "none.json") == {}

    def test_packaged_baselines(self):
        table = load_baselines()
        for key, entry in table.items():
            for lo, hi in entry.values():
                assert 0 < lo <= hi < math.inf, key


class TestRunner:
    def test_outputs(self, tmp_path):
        cfg = load_config(_write(tmp_path, SMALL))
        rep = run_experiment(cfg, tmp_path / "out")
        assert rep.passed
        data = json.loads((tmp_path / "out" / "report.json").read_text())
        assert set(data) == {"config", "passed", "suites", "environment"}
        assert "runtime_seconds" in data["environment"]
        with (tmp_path / "out" / "ratios.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_HEADER
        assert any(r[4] == "max_ratio" and float(r[5]) <= 1e-10 for r in rows[1:])

    def test_reproducible_across_threads(self, tmp_path):
        cfg = load_config(_write(tmp_path, SMALL))
        a = run_experiment(cfg).payload()
        b = run_experiment(cfg.with_overrides(threads=3)).payload()
        b["config"]["threads"] = a["config"]["threads"]
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_dump_fields(self, tmp_path):
        cfg = load_config(_write(tmp_path, SMALL + "dump_fields: true\n"))
        run_experiment(cfg, tmp_path / "out")
        dumped = sorted((tmp_path / "out" / "fields").glob("*.pcf"))
        assert len(dumped) == 2
        assert load_field(dumped[0]).grid.n == 16

    def test_fresh_baselines_written(self, tmp_path):
        cfg = ExperimentConfig(suite="carleson", n=16, baselines=str(tmp_path / "none.json"))
        cfg.carleson.fields_per_slope = 1
        rep = run_experiment(cfg, tmp_path / "out", update_baselines=True)
        summary = rep.results[0].summary
        assert summary["baseline"] == "established"
        stored = json.loads((tmp_path / "none.json").read_text())
        assert stored[summary["baseline_key"]] == {"carleson_over_bmo": summary["interval"]["carleson_over_bmo"]}
        again = run_experiment(cfg).results[0]
        assert again.summary["baseline"] == stored[summary["baseline_key"]]
        assert again.checks and all(c.passed for c in again.checks)


class TestCLI:
    def test_missing_config(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2
        assert "config file not found" in capsys.readouterr().err

    def test_bad_config_reports_location(self, tmp_path, capsys):
        p = _write(tmp_path, "n: 16\nbogus: 1\n")
        assert main(["run", "--config", str(p)]) == 2
        assert f"{p}:2:1:" in capsys.readouterr().err

    def test_bad_n(self, capsys):
        assert main(["run", "--n", "12"]) == 2
        assert "power of two" in capsys.readouterr().err

    def test_theorem1_run(self, tmp_path, capsys):
        out = tmp_path / "r"
        assert main(["run", "--suite", "theorem1", "--n", "32", "--seed", "7", "--out", str(out)]) == 0
        assert "theorem1     PASS" in capsys.readouterr().out
        data = json.loads((out / "report.json").read_text())
        assert data["config"]["seed"] == 7 and data["suites"]["theorem1"]["passed"]

    def test_failing_check_exits_1(self, tmp_path, capsys):
        p = _write(tmp_path, SMALL + "  tol: 0.0\n")
        assert main(["run", "--config", str(p), "--out", str(tmp_path / "r")]) == 1
        assert "failed: theorem1/" in capsys.readouterr().err

    def test_defaults_command(self, capsys):
        assert main(["defaults"]) == 0
        text = capsys.readouterr().out
        assert "equivalence:" in text and "power_tol" in text

    def test_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "paracomm", "--help"], capture_output=True, text=True)
        assert res.returncode == 0 and "run" in res.stdout
