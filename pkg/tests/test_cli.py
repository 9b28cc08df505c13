from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import pytest

from ergolab import __version__
from ergolab.cli import (EXIT_COMPUTE, EXIT_INVALID, EXIT_OK, RunConfig, eval_expression,
                         integer_series, main, parse_function, parse_sequence, run, validate)

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "scripts" / "configs").glob("*.yaml"))


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def run_text(tmp_path, text, monkeypatch):
    monkeypatch.setenv("LAB_OUTPUT_DIR", str(tmp_path / "out"))
    code = main(["run", str(write(tmp_path, text))])
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    return code, summary


class TestValidate:
    def test_missing_experiment(self):
        errs = validate("system: golden\n")
        assert errs == ["experiment: required"]

    def test_negative_level_cites_precondition(self):
        errs = validate("experiment: levelset\nparameters:\n  lambda: -1\n")
        assert len(errs) == 1
        assert errs[0].startswith("line 3: parameters.lambda")
        assert "levelset precondition lambda > 0" in errs[0]

    def test_witness_defaults_echoed(self):
        cfg = validate("experiment: witness\nsystem: golden\nfunction: power:0.5\n"
                       "parameters:\n  lambda: 2\n")
        assert isinstance(cfg, RunConfig)
        assert cfg.parameters["delta"] == 0.1 and cfg.parameters["n_start"] == 1
        assert set(cfg.parameters) >= {"eps", "eta", "beta", "n_max", "arc_start", "arc_length"}

    def test_unknown_keys(self):
        errs = validate("experiment: norm\ncolour: red\nparameters:\n  phi: power:2\n  speed: 3\n")
        assert any(e.startswith("line 2: colour: unknown key") for e in errs)
        assert any("parameters.speed: unknown parameter" in e for e in errs)

    @pytest.mark.parametrize("text,needle", [
        ("experiment: nope\n", "unknown experiment"),
        ("experiment: norm\nsystem: pi\n", "system"),
        ("experiment: norm\nfunction: cube:1\n", "function"),
        ("experiment: levelset\nparameters:\n  lambda: 2\n  grid_cells: 10\n", "grid_cells >= 1000"),
        ("experiment: levelset\nparameters:\n  lambda: 2\n  grid_cells: 1.5\n", "expected int"),
        ("experiment: construct\nfunction: power:0.5\n", "parameters.s"),
        ("experiment: [\n", "not valid YAML"),
        ("- 1\n- 2\n", "mapping"),
    ])
    def test_rejections(self, text, needle):
        errs = validate(text)
        assert isinstance(errs, list) and any(needle in e for e in errs), errs

    @pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
    def test_shipped_configs_validate(self, path):
        assert isinstance(validate(path.read_text()), RunConfig)


class TestRun:
    def test_norm_of_one(self, tmp_path, monkeypatch):
        code, summary = run_text(tmp_path, "experiment: norm\nfunction: const:1\nparameters:\n  phi: power:2\n",
                                 monkeypatch)
        assert code == EXIT_OK
        assert summary["result"]["norm"] == pytest.approx(1.0, rel=1e-8)
        assert summary["version"] == __version__ and summary["seed"] == 0
        assert summary["wall_time"] >= 0

    def test_levelset_single_arc(self, tmp_path, monkeypatch):
        text = ("experiment: levelset\nsystem: golden\nfunction: power:0.5\n"
                "parameters:\n  lambda: 2\n  seq: prefix:1\n  grid_cells: 100000\n")
        code, _ = run_text(tmp_path, text, monkeypatch)
        assert code == EXIT_OK
        rows = list(csv.DictReader((tmp_path / "out" / "levelset.csv").open()))
        assert len(rows) == 1 and float(rows[0]["length"]) == pytest.approx(0.25, abs=1e-4)

    def test_example_series(self, tmp_path, monkeypatch):
        text = "experiment: example-series\nparameters:\n  s: 0.5\n  p: 1\n  K: 100000\n"
        code, summary = run_text(tmp_path, text, monkeypatch)
        assert code == EXIT_OK and summary["result"]["classification"] == "Convergent"

    def test_computation_error_exit_three(self, tmp_path, monkeypatch):
        text = "experiment: witness\nfunction: oneminusx\nparameters:\n  lambda: 3\n  arc_length: 0.5\n"
        code, summary = run_text(tmp_path, text, monkeypatch)
        assert code == EXIT_COMPUTE
        assert summary["error"]["name"] == "NoWitness"

    def test_invalid_exit_two(self, tmp_path, capsys):
        code = main(["validate", str(write(tmp_path, "parameters: {}\n"))])
        assert code == EXIT_INVALID
        assert "experiment: required" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.yaml")]) == EXIT_INVALID

    def test_list(self, capsys):
        assert main(["list-experiments"]) == EXIT_OK
        names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
        assert names == ["norm", "average", "levelset", "decompose", "witness", "criterion",
                         "construct", "example-series", "weak-scan"]

    def test_output_dir_from_config(self, tmp_path, monkeypatch):
        monkeypatch.delenv("LAB_OUTPUT_DIR", raising=False)
        cfg = validate(f"experiment: criterion\noutput_dir: {tmp_path / 'direct'}\n")
        status, _ = run(cfg)
        assert status == EXIT_OK and (tmp_path / "direct" / "criterion.csv").exists()

    @pytest.mark.parametrize("stem", ["decompose", "witness", "criterion", "weak_scan"])
    def test_csv_byte_identical(self, tmp_path, monkeypatch, stem):
        path = next(p for p in CONFIGS if p.stem == stem)
        outs = []
        for i in range(2):
            monkeypatch.setenv("LAB_OUTPUT_DIR", str(tmp_path / str(i)))
            status, _ = run(validate(path.read_text()))
            assert status == EXIT_OK
            outs.append(next((tmp_path / str(i)).glob("*.csv")).read_bytes())
        assert outs[0] == outs[1]

    @pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.stem)
    def test_shipped_configs_run_quickly(self, tmp_path, monkeypatch, path):
        monkeypatch.setenv("LAB_OUTPUT_DIR", str(tmp_path))
        t0 = time.perf_counter()
        status, summary = run(validate(path.read_text()))
        assert status == EXIT_OK, summary.get("error")
        assert time.perf_counter() - t0 < 60


class TestParsers:
    def test_sequences(self):
        assert parse_sequence("prefix:3") == [0, 1, 2]
        assert parse_sequence("range:2,5") == [2, 3, 4]
        assert parse_sequence("list:4,1,4") == [1, 4]
        assert parse_sequence("blocks:B:1,3; D:{5}") == [1, 2, 3, 5]
        for bad in ("prefix:0", "range:5,2", "list:", "zigzag:3"):
            with pytest.raises(ValueError):
                parse_sequence(bad)

    def test_functions(self):
        assert parse_function("const:2")(0.3) == 2.0
        assert parse_function("power:0.5")(0.25) == pytest.approx(2.0)
        assert parse_function("oneminusx")(0.25) == pytest.approx(0.75)
        assert parse_function("gs:1").name == "gs:1"
        for bad in ("const:-1", "gs:0", "power", "sin"):
            with pytest.raises(ValueError):
                parse_function(bad)

    def test_expressions(self):
        assert eval_expression("2^k + floor(log(k))", {"k": 3}) == 9
        assert integer_series("2^k", 4) == [2, 4, 8, 16]
        assert integer_series("floor(l/k^2)", 4, {"l": [2, 4, 8, 16]}) == [2, 1, 0, 1]
        for bad in ("__import__('os')", "k.real", "[1]", "open('x')", "q + 1"):
            with pytest.raises((ValueError, SyntaxError)):
                eval_expression(bad, {"k": 1})
