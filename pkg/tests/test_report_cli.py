import csv
import io
import json
import os
import subprocess
import sys

import pytest

from qkcurv.cli import main, resolve_config, build_parser
from qkcurv.errors import ConfigError
from qkcurv.report import CheckRecord, CheckReport, dumps, lower, near, upper
from qkcurv.suites import RunConfig, run_all

FAST = ["--restarts", "4", "--samples", "2000"]


def sample_report() -> CheckReport:
    r = CheckReport("demo", {"family": "hpn", "n": 2}, seed=7)
    r.add(upper("small", "x <= 1", 0.1, 1.0))
    r.add(lower("big", "x >= 1", 0.5, 1.0))
    r.add(near("close", "x = 1/3", 1 / 3, 1 / 3, 1e-12, witness={"x": [1.0, 0.0]}))
    r.add(CheckRecord.skipped("later", "needs eps=-1", "Kähler branch"))
    return r


class TestRecords:
    def test_status(self):
        r = sample_report()
        assert [rec.status for rec in r.records] == ["pass", "fail", "pass", "skipped"]
        assert [rec.name for rec in r.failures()] == ["big"]
        assert not r.passed

    def test_skipped_does_not_fail_report(self):
        r = CheckReport("demo", {})
        r.add(upper("a", "", 0.0, 1.0))
        r.add(CheckRecord.skipped("b", "", "not applicable"))
        assert r.passed

    def test_near_reason(self):
        rec = near("x", "", 1.0, 2.0, 0.5)
        assert not rec.passed and "exceeds" in rec.reason

    def test_bad_status(self):
        with pytest.raises(ValueError):
            CheckRecord("x", "", 0.0, 0.0, True, status="maybe")


class TestSerialisation:
    def test_json_round_trip(self):
        r = sample_report()
        back = CheckReport.from_dict(json.loads(r.to_json()))
        assert back.to_json() == r.to_json()

    def test_schema_checked(self):
        payload = json.loads(sample_report().to_json())
        payload["schema"] = "other/9"
        with pytest.raises(ValueError):
            CheckReport.from_dict(payload)

    def test_full_precision(self):
        text = dumps({"v": 1 / 3})
        assert "0.33333333333333331" in text
        assert json.loads(text)["v"] == 1 / 3

    def test_sorted_keys_and_specials(self):
        text = dumps({"b": 1.0, "a": float("nan"), "c": [2.0, float("inf")]})
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        assert json.loads(text) == {"a": None, "b": 1.0, "c": [2.0, None]}

    def test_integral_float_stays_float(self):
        assert isinstance(json.loads(dumps({"v": 4.0}))["v"], float)

    def test_csv(self):
        r = sample_report()
        rows = list(csv.DictReader(io.StringIO(r.to_csv())))
        assert len(rows) == 4
        assert rows[0]["suite"] == "demo" and rows[1]["status"] == "fail"
        assert rows[3]["value"] == "" and rows[3]["reason"] == "Kähler branch"
        assert float(rows[2]["value"]) == 1 / 3

    def test_emit(self):
        r = sample_report()
        assert r.emit("json") == r.to_json()
        with pytest.raises(ValueError):
            r.emit("xml")


class TestConfig:
    def test_defaults(self):
        cfg = RunConfig().validate()
        assert cfg.scal == 64.0 and cfg.eps == -1
        assert cfg.ordered_suites()[0] == "model-invariants"

    @pytest.mark.parametrize("kwargs", [
        {"n": 1}, {"family": "e8"}, {"scal": -1.0}, {"eps": 0}, {"suites": ("nope",)},
        {"opt_tol": 0.0}, {"restarts": 0}, {"fmt": "xml"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs).validate()

    def test_suite_order_is_canonical(self):
        cfg = RunConfig(suites=("bounds", "model-invariants"))
        assert cfg.ordered_suites() == ["model-invariants", "bounds"]

    def test_file_then_flags(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"model": "gr2c", "seed": 5, "suite": "bounds", "samples": 10}))
        args = build_parser().parse_args(["--config", str(path), "--seed", "9"])
        cfg = resolve_config(args)
        assert (cfg.family, cfg.seed, cfg.suites, cfg.samples) == ("gr2c", 9, ("bounds",), 10)

    def test_unknown_config_key(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"colour": "red"}))
        with pytest.raises(ConfigError):
            resolve_config(build_parser().parse_args(["--config", str(path)]))


class TestCli:
    def test_default_run(self, tmp_path, capsys):
        code = main(["--out", str(tmp_path), *FAST])
        assert code == 0
        files = sorted(os.listdir(tmp_path))
        assert files == sorted(f"{s}.json" for s in RunConfig().suites)
        assert "all checks passed" in capsys.readouterr().out

    def test_grassmannian_csv(self, tmp_path):
        code = main(["--model", "gr2c", "--suite", "bounds", "--format", "csv", "--out", str(tmp_path), *FAST])
        assert code == 0
        rows = list(csv.DictReader(open(tmp_path / "bounds.csv", encoding="utf-8")))
        assert all(r["status"] == "pass" for r in rows)

    def test_kahler_branch_skips(self, tmp_path):
        code = main(["--eps", "1", "--suite", "nk-identities", "--suite", "twistor-assembly",
                     "--out", str(tmp_path), "-q"])
        assert code == 0
        payload = json.loads((tmp_path / "nk-identities.json").read_text())
        assert {r["status"] for r in payload["records"]} == {"skipped"}
        assert payload["passed"] is True

    @pytest.mark.parametrize("argv", [["--n", "1"], ["--suite", "everything"], ["--scal", "0"]])
    def test_usage_errors(self, tmp_path, argv):
        assert main([*argv, "--out", str(tmp_path)]) == 2

    def test_bad_config_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        assert main(["--config", str(path), "--out", str(tmp_path)]) == 2

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["--suite", "model-invariants", "--out", str(blocker / "sub")]) == 2

    def test_failing_run_exits_one(self, tmp_path, monkeypatch):
        import qkcurv.cli as cli

        def failing(config):
            r = CheckReport("model-invariants", {})
            r.add(upper("x", "", 2.0, 1.0))
            return [r]

        monkeypatch.setattr(cli, "run_all", failing)
        assert main(["--out", str(tmp_path)]) == 1

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "qkcurv", "--suite", "model-invariants", "--out", str(tmp_path), "-q"],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0, proc.stderr
        assert proc.stdout.strip() == "all checks passed"


def test_run_all_is_deterministic():
    cfg = dict(suites=("nk-identities", "bounds"), restarts=4, samples=2000, seed=3)
    a = [r.to_dict() for r in run_all(RunConfig(**cfg))]
    b = [r.to_dict() for r in run_all(RunConfig(**cfg))]
    for x, y in zip(a, b):
        x.pop("wall_time"), y.pop("wall_time")
    assert dumps(a) == dumps(b)
