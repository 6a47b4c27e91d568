from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from bdmatching.cli import EXIT_INVALID, EXIT_OK, EXIT_VERIFY, main
from bdmatching.harness import (
    CSV_COLUMNS,
    ExperimentPlan,
    Trial,
    generator_config,
    loglog_slope,
    parse_flat,
    run_trial,
)
from bdmatching.stream import GeneratorConfig, read_stream, validate_stream


@pytest.fixture
def fixture_stream(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("# matching killer\nkind = matching_killer\nn = 24\nK = 4\np = 0.4\nseed = 3\n")
    out = tmp_path / "s.txt"
    assert main(["generate", str(cfg), "--out", str(out)]) == EXIT_OK
    return out


class TestGenerate:
    def test_erdos_renyi(self, tmp_path):
        cfg = tmp_path / "g.cfg"
        cfg.write_text("kind = erdos_renyi\nn = 16\np = 0.5\nK = 0\nseed = 7\n")
        out = tmp_path / "er.txt"
        assert main(["generate", str(cfg), "--out", str(out)]) == EXIT_OK
        assert validate_stream(read_stream(out))

    def test_batch(self, tmp_path):
        cfg = tmp_path / "g.cfg"
        cfg.write_text(f"kind = matching_killer\nn = 12\nK = 3\np = 0.5\ncount = 100\nout = {tmp_path / 'batch'}\n")
        assert main(["generate", str(cfg)]) == EXIT_OK
        files = sorted((tmp_path / "batch").glob("*.txt"))
        assert len(files) == 100
        assert all(validate_stream(read_stream(f)) for f in files)

    def test_infeasible(self, tmp_path, capsys):
        cfg = tmp_path / "g.cfg"
        cfg.write_text("kind = erdos_renyi\nn = 4\np = 1\nK = 9\n")
        assert main(["generate", str(cfg), "--out", str(tmp_path / "x.txt")]) == EXIT_INVALID
        assert "error" in capsys.readouterr().err

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "g.cfg"
        cfg.write_text("kind = erdos_renyi\nbogus = 1\n")
        assert main(["generate", str(cfg), "--out", str(tmp_path / "x.txt")]) == EXIT_INVALID
        cfg.write_text("no equals sign\n")
        assert main(["generate", str(cfg), "--out", str(tmp_path / "x.txt")]) == EXIT_INVALID


class TestRun:
    def test_deterministic_k_zero(self, tmp_path):
        stream = tmp_path / "s.txt"
        stream.write_text("5 0\n+ 0 1\n+ 1 2\n+ 3 4\n")
        out = tmp_path / "r.json"
        assert main(["run", "--stream", str(stream), "--algo", "det", "--verify", "--out", str(out)]) == EXIT_OK
        assert json.loads(out.read_text())["verdict"]["is_maximal"] is True

    def test_randomized_reproducible(self, fixture_stream, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            path = tmp_path / name
            args = ["run", "--stream", str(fixture_stream), "--algo", "rand", "--seed", "11", "--out", str(path)]
            assert main(args) == EXIT_OK
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]
        assert json.loads(outs[0])["seed"] == 11

    def test_randomized_params_and_trace(self, fixture_stream, tmp_path):
        trace = tmp_path / "t.jsonl"
        args = [
            "run", "--stream", str(fixture_stream), "--c", "6", "--c-prime", "3", "--delta", "0.001",
            "--trace", str(trace), "--verify", "--out", str(tmp_path / "r.json"),
        ]
        assert main(args) == EXIT_OK
        payload = json.loads((tmp_path / "r.json").read_text())
        assert payload["config"]["C"] == 6 and payload["config"]["delta"] == 0.001
        lines = trace.read_text().splitlines()
        assert len(lines) == len(payload["trace"])

    def test_budgeted_ratio(self, fixture_stream, tmp_path):
        out = tmp_path / "r.json"
        args = ["run", "--stream", str(fixture_stream), "--algo", "budget", "--epsilon", "0.5", "--verify", "--out", str(out)]
        assert main(args) == EXIT_OK
        assert json.loads(out.read_text())["verdict"]["ratio"] <= 2.5

    def test_missing_or_invalid_stream(self, tmp_path):
        assert main(["run", "--stream", str(tmp_path / "nope.txt")]) == EXIT_INVALID
        bad = tmp_path / "bad.txt"
        bad.write_text("3 0\n- 0 1\n")
        assert main(["run", "--stream", str(bad)]) == EXIT_INVALID

    def test_module_entry_point(self, fixture_stream):
        proc = subprocess.run(
            [sys.executable, "-m", "bdmatching", "run", "--stream", str(fixture_stream), "--algo", "det"],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0 and json.loads(proc.stdout)["algorithm"] == "det"


class TestVerify:
    def test_pass_and_fail(self, tmp_path):
        stream = tmp_path / "s.txt"
        stream.write_text("4 1\n+ 0 1\n+ 2 3\n+ 1 2\n- 0 1\n")
        good, bad = tmp_path / "good.json", tmp_path / "bad.json"
        good.write_text(json.dumps({"algorithm": "rand", "matching": [[2, 3]]}))
        bad.write_text(json.dumps({"algorithm": "rand", "matching": [[0, 1]]}))
        assert main(["verify", "--stream", str(stream), "--result", str(good)]) == EXIT_OK
        assert main(["verify", "--stream", str(stream), "--result", str(bad)]) == EXIT_VERIFY
        empty = tmp_path / "empty.json"
        empty.write_text(json.dumps({"algorithm": "det", "matching": []}))
        out = tmp_path / "v.json"
        assert main(["verify", "--stream", str(stream), "--result", str(empty), "--out", str(out)]) == EXIT_VERIFY
        assert json.loads(out.read_text())["witness"] == [1, 2]

    def test_budget_threshold(self, tmp_path):
        stream = tmp_path / "s.txt"
        stream.write_text("6 0\n+ 0 1\n+ 2 3\n+ 4 5\n")
        res = tmp_path / "r.json"
        res.write_text(json.dumps({"algorithm": "budget", "matching": [[0, 1]], "config": {"epsilon": 0.5}}))
        assert main(["verify", "--stream", str(stream), "--result", str(res)]) == EXIT_VERIFY
        assert main(["verify", "--stream", str(stream), "--result", str(res), "--epsilon", "1.0"]) == EXIT_OK

    def test_unreadable_result(self, tmp_path):
        stream = tmp_path / "s.txt"
        stream.write_text("2 0\n")
        res = tmp_path / "r.json"
        res.write_text("{not json")
        assert main(["verify", "--stream", str(stream), "--result", str(res)]) == EXIT_INVALID


class TestSweep:
    def test_sweep_csv(self, tmp_path):
        plan = tmp_path / "plan.cfg"
        out = tmp_path / "out.csv"
        plan.write_text(
            "algo = rand, det, budget\nkind = erdos_renyi\nn = 20\nK = 2, 4\np = 0.3\n"
            f"epsilon = 0.5, 1\ntrials = 2\nseed_base = 10\nout = {out}\n"
        )
        assert main(["sweep", str(plan)]) == EXIT_OK
        with open(out, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
            assert reader.fieldnames == CSV_COLUMNS
        # rand 2K*2t + det 2K*2t + budget 2K*2eps*2t
        assert len(rows) == 16
        assert {r["seed"] for r in rows} == {"10", "11"}
        assert all(r["error"] == "" and r["is_maximal"] in ("True", "False") for r in rows)

    def test_partial_failure_recorded(self, tmp_path):
        plan = tmp_path / "plan.cfg"
        plan.write_text("algo = det\nkind = erdos_renyi\nn = 4, 20\nK = 8\np = 1\n")
        out = tmp_path / "out.csv"
        assert main(["sweep", str(plan), "--out", str(out)]) == EXIT_OK
        rows = list(csv.DictReader(open(out, newline="")))
        assert [bool(r["error"]) for r in rows] == [True, False]

    def test_bad_plan(self, tmp_path):
        plan = tmp_path / "plan.cfg"
        plan.write_text("algo = nope\nn = 4\nK = 1\n")
        assert main(["sweep", str(plan)]) == EXIT_INVALID
        plan.write_text("n = 4\nK = 1\ntrials = 0\n")
        assert main(["sweep", str(plan)]) == EXIT_INVALID
        plan.write_text("K = 1\n")
        assert main(["sweep", str(plan)]) == EXIT_INVALID


class TestHarness:
    def test_parse_flat(self):
        assert parse_flat("a = 1 # note\n\n b=2\n") == {"a": "1", "b": "2"}
        with pytest.raises(ValueError):
            parse_flat("= 3\n")

    def test_generator_config(self):
        cfg = generator_config({"kind": "block_bipartite", "blocks": "3", "block_size": "6", "p": "0.5", "K": "2"})
        assert cfg == GeneratorConfig("block_bipartite", blocks=3, block_size=6, p=0.5, K=2)
        with pytest.raises(ValueError):
            generator_config({"n": "3"})

    def test_plan_grid(self):
        plan = ExperimentPlan.from_values({"algo": "rand", "n": "16", "K": "4", "C": "4, 8", "trials": "3"})
        trials = list(plan.trials_iter())
        assert len(trials) == 6
        assert {t.C for t in trials} == {4.0, 8.0}
        assert [t.gen.seed for t in trials[:3]] == [0, 1, 2]

    def test_run_trial_replayable(self):
        t = Trial("rand", GeneratorConfig("matching_killer", n=20, K=4, p=0.4, seed=5), 5)
        a, b = run_trial(t), run_trial(t)
        assert a.matching_size == b.matching_size and a.is_maximal and a.ratio >= 1
        assert a.seed == 5 and a.sampler_count > 0

    def test_loglog_slope(self):
        assert loglog_slope([1, 2, 4, 8], [3, 6, 12, 24]) == pytest.approx(1.0)
        assert loglog_slope([1, 4, 16], [1, 2, 4]) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            loglog_slope([1], [1])

    def test_parallel_workers(self, tmp_path):
        from bdmatching.harness import sweep

        plan = ExperimentPlan.from_values({"algo": "det", "n": "12", "K": "2", "p": "0.4", "trials": "3", "workers": "2"})
        rows = sweep(plan, tmp_path / "p.csv")
        assert [r.trial for r in rows] == [0, 1, 2] and all(r.is_maximal for r in rows)
