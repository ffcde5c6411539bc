from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from xract.cli import main
from xract.uad.store import read_session, store_hash


def run_cli(*argv) -> int:
    return main(list(argv))


class TestCliFlow:
    def test_simulate_ingest_process_insights_eval(self, tmp_path, capsys):
        raw = tmp_path / "raw"
        cooked = tmp_path / "cooked"
        assert run_cli("simulate", "--preset", "a5_ar_inspection", "--seed", "42",
                       "--out", str(raw)) == 0
        assert (tmp_path / "raw.manifest.json").exists()
        assert run_cli("ingest", str(raw), "--out", str(cooked)) == 0
        assert read_session(cooked).meta.anonymized

        assert run_cli("process", str(cooked), "--llm", "mock") == 0
        h1 = store_hash(cooked)
        assert run_cli("process", str(cooked), "--llm", "mock") == 0
        assert store_hash(cooked) == h1  # idempotent second run
        out = capsys.readouterr().out
        assert "0 record(s) updated" in out

        assert run_cli("insights", str(cooked), "--aoi",
                       "Insights on the time spent object with Gaze action",
                       "--mode", "multi", "--llm", "mock") == 0
        insights = json.loads((cooked / "insights.json").read_text())
        assert 1 <= len(insights["insights"]) <= 10

        assert run_cli("eval", str(cooked), "--runs", "2", "--llm", "mock") == 0
        payload = json.loads((cooked / "insights_eval.json").read_text())
        assert "multi" in payload

    def test_ingest_merge_two_sessions(self, tmp_path):
        for name, seed in (("one", 1), ("two", 2)):
            assert run_cli("simulate", "--preset", "a3_ar_markers", "--seed", str(seed),
                           "--out", str(tmp_path / name)) == 0
        assert run_cli("ingest", str(tmp_path / "one"), str(tmp_path / "two"),
                       "--out", str(tmp_path / "merged"), "--rebase") == 0
        store = read_session(tmp_path / "merged")
        assert list(store.meta.users) == ["User1", "User2"]

    def test_bench_tiny(self, tmp_path, capsys):
        assert run_cli("bench", "--iterations", "10", "--runs", "1",
                       "--points", "50000", "--out", str(tmp_path / "bench.json")) == 0
        report = json.loads((tmp_path / "bench.json").read_text())
        assert report["iterations"] == 10
        assert "base.sync" in report["stats"]
        assert "Log (base)" in capsys.readouterr().out

    def test_usage_error_exit_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate"])  # missing required --preset/--out
        assert exc.value.code == 2

    def test_unknown_preset_operational_error(self, tmp_path, capsys):
        code = run_cli("simulate", "--preset", "bogus", "--out", str(tmp_path / "x"))
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_iterations_usage_error(self, capsys):
        assert run_cli("bench", "--iterations", "0", "--runs", "1") == 2
        assert "usage error:" in capsys.readouterr().err


class TestCrashRecovery:
    """Kill the pipeline after each step; a re-run must converge bytewise."""

    @staticmethod
    def prepare(tmp_path):
        assert run_cli("simulate", "--preset", "a4_ar_collab", "--seed", "42",
                       "--out", str(tmp_path / "raw")) == 0
        assert run_cli("ingest", str(tmp_path / "raw"),
                       "--out", str(tmp_path / "cooked")) == 0
        return tmp_path / "cooked"

    @staticmethod
    def run_process(session, crash_after=None) -> subprocess.CompletedProcess:
        env = dict(os.environ)
        env["EXR_LLM_MODE"] = "mock"
        if crash_after:
            env["XRACT_CRASH_AFTER"] = crash_after
        else:
            env.pop("XRACT_CRASH_AFTER", None)
        return subprocess.run(
            [sys.executable, "-m", "xract.cli", "process", str(session)],
            env=env, capture_output=True, text=True, timeout=300,
        )

    @pytest.mark.parametrize("step", ["context", "classify", "describe", "intent"])
    def test_interrupt_after_each_step_converges(self, tmp_path, step):
        reference = self.prepare(tmp_path / "ref")
        assert self.run_process(reference).returncode == 0
        expected = store_hash(reference)

        victim = self.prepare(tmp_path / "victim")
        crashed = self.run_process(victim, crash_after=step)
        assert crashed.returncode == 137
        # The interrupted store still reads cleanly.
        read_session(victim)
        resumed = self.run_process(victim)
        assert resumed.returncode == 0, resumed.stderr
        assert store_hash(victim) == expected
