"""CLI behavior: subcommands, overrides, exit codes, reproducibility."""

import csv
import json
import os

import pytest

from urllcsim.cli import main


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


class TestRun:
    def test_smoke_run_writes_traces_and_aggregate(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["run", "--realizations", "2", "--slots", "10",
                   "--seed", "3", "--out", str(out)])
        assert rc == 0
        doc = read_json(out / "aggregate.json")
        assert set(doc["policies"]) == {"proposed", "baseline1",
                                        "baseline2", "wsrm"}
        traces = sorted(os.listdir(out / "traces"))
        assert len(traces) == 8  # two realizations per policy
        assert doc["config"]["scenario.seed"] == 3

    def test_unknown_config_key_named_in_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[scenario]\nn_antennas = 8\nbogus_key = 1\n")
        rc = main(["run", "--config", str(cfg), "--out",
                   str(tmp_path / "o")])
        assert rc == 1
        assert "scenario.bogus_key" in capsys.readouterr().err

    def test_unknown_dotted_override_rejected(self, tmp_path, capsys):
        rc = main(["run", "--foo.bar=1", "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "foo.bar" in capsys.readouterr().err

    def test_dotted_override_applies(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["run", "--realizations", "1", "--slots", "5",
                   "--scenario.n_antennas", "24", "--out", str(out),
                   "--output.traces=never"])
        assert rc == 0
        doc = read_json(out / "aggregate.json")
        assert doc["config"]["scenario.n_antennas"] == 24
        assert not (out / "traces").exists()

    def test_repeat_run_identical_bytes_and_jobs_invariant(self, tmp_path):
        args = ["run", "--realizations", "3", "--slots", "20", "--seed", "9"]
        outs = []
        for name, jobs in (("a", "1"), ("b", "1"), ("c", "2")):
            out = tmp_path / name
            rc = main(args + ["--jobs", jobs, "--out", str(out)])
            assert rc == 0
            outs.append((out / "aggregate.json").read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_empty_policy_list_usage_error(self, tmp_path):
        rc = main(["run", "--policies", "", "--out", str(tmp_path / "o")])
        assert rc == 1


class TestSweep:
    def test_lambda_sweep_rows(self, tmp_path):
        out = tmp_path / "sw"
        rc = main(["sweep", "--sweep-var", "lambda_gbps",
                   "--sweep-values", "0.5,1.0,1.5",
                   "--policies", "proposed,wsrm",
                   "--realizations", "2", "--slots", "10",
                   "--out", str(out)])
        assert rc == 0
        with open(out / "sweep.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["sweep_value", "policy", "avg_latency_ms",
                           "ci_low", "ci_high", "avgut_gbps",
                           "violation_rate", "status"]
        assert len(rows) == 1 + 6  # three points x two policies
        assert all(row[7] == "ok" for row in rows[1:])

    def test_ue_count_point_matches_standalone_run(self, tmp_path):
        sweep_out = tmp_path / "sw"
        rc = main(["sweep", "--sweep-var", "ue_count", "--sweep-values",
                   "16", "--realizations", "2", "--slots", "10",
                   "--seed", "4", "--policies", "proposed",
                   "--out", str(sweep_out)])
        assert rc == 0
        run_out = tmp_path / "single"
        rc = main(["run", "--scenario.ue_count=16", "--realizations", "2",
                   "--slots", "10", "--seed", "4", "--policies", "proposed",
                   "--out", str(run_out)])
        assert rc == 0
        a = read_json(sweep_out / "ue_count_16" / "aggregate.json")
        b = read_json(run_out / "aggregate.json")
        assert a == b

    def test_empty_values_usage_error(self, tmp_path):
        rc = main(["sweep", "--sweep-var", "ue_count", "--sweep-values",
                   " ", "--out", str(tmp_path / "o")])
        assert rc == 1


class TestValidate:
    def test_only_single_check(self, capsys):
        rc = main(["validate", "--only", "omega"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "[PASS] omega" in out
        assert "waterfill" not in out

    def test_impossible_tolerance_fails(self, capsys):
        rc = main(["validate", "--only", "omega", "--tol-scale", "0"])
        assert rc == 3
        assert "[FAIL] omega" in capsys.readouterr().out

    def test_unknown_check_usage_error(self):
        assert main(["validate", "--only", "nonsense"]) == 1

    def test_fast_checks_pass(self, capsys):
        rc = main(["validate", "--only", "waterfill,ccp"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "[PASS] waterfill" in out
        assert "[PASS] ccp" in out


class TestUsage:
    def test_missing_subcommand(self):
        assert main([]) == 1

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0
