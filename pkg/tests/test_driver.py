"""Golden-file runs, exit codes, state threading, and the CLI."""

import os

import pytest

from conftest import CORPUS, GOLDENS
from corpus_config import CORPUS_RUNS
from hygex.cli import main
from hygex.driver import RunConfig, Runner, run_string

UPDATE = os.environ.get("HYGEX_UPDATE_GOLDENS") == "1"


class TestGoldens:
    @pytest.mark.parametrize("name", sorted(CORPUS_RUNS))
    def test_corpus_output_matches_golden(self, name):
        kw, expected_code = CORPUS_RUNS[name]
        runner = Runner(RunConfig(**kw))
        code = runner.run_files([str(CORPUS / f"{name}.hyg")])
        golden_path = GOLDENS / f"{name}.txt"
        if UPDATE:
            golden_path.write_text(runner.output, encoding="utf-8")
        golden = golden_path.read_text(encoding="utf-8")
        assert runner.output == golden
        assert code == expected_code

    @pytest.mark.parametrize("name", sorted(CORPUS_RUNS))
    def test_two_runs_are_byte_identical(self, name):
        kw, _ = CORPUS_RUNS[name]

        def once():
            runner = Runner(RunConfig(**kw))
            runner.run_files([str(CORPUS / f"{name}.hyg")])
            return runner.output

        assert once() == once()


class TestStateThreading:
    def test_split_file_equals_one_file(self, tmp_path):
        whole = (CORPUS / "macro_tower.hyg").read_text(encoding="utf-8")
        lines = whole.splitlines(keepends=True)
        split_at = next(i for i, l in enumerate(lines) if l.startswith("m f"))
        a = tmp_path / "a.hyg"
        b = tmp_path / "b.hyg"
        a.write_text("".join(lines[:split_at]), encoding="utf-8")
        b.write_text("".join(lines[split_at:]), encoding="utf-8")

        one = Runner(RunConfig())
        one.run_files([str(CORPUS / "macro_tower.hyg")])
        two = Runner(RunConfig())
        two.run_files([str(a), str(b)])
        assert one.output == two.output
        assert set(one.state.gctx) == set(two.state.gctx)

    def test_processing_continues_past_a_diagnostic(self):
        code, out = run_string(
            "def x := nope\ndef y := 1\n", RunConfig()
        )
        assert code == 1
        assert "unknown identifier 'nope'" in out
        assert "def y := 1" in out


class TestParseRecovery:
    BROKEN = "def x := \ndef y := 2\n"

    def test_resync_skips_to_the_next_command(self):
        code, out = run_string(self.BROKEN, RunConfig())
        assert code == 1
        assert "def y := 2" in out
        assert "<missing>" not in out

    def test_recover_mode_inserts_missing(self):
        code, out = run_string(self.BROKEN, RunConfig(recover=True))
        assert code == 1
        assert "<missing>" in out
        assert "def y := 2" in out


class TestConfig:
    def test_bad_stage_rejected(self):
        with pytest.raises(ValueError):
            RunConfig(stage="parse")

    def test_caps_must_be_positive(self):
        with pytest.raises(ValueError):
            RunConfig(max_repeat=0)

    def test_no_prelude_has_no_notation(self):
        code, out = run_string(
            'notation "const" e => fun x => e\n', RunConfig(prelude=False)
        )
        assert code == 1
        assert "unknown command" in out


class TestCli:
    def test_run_corpus_file(self, capsys):
        code = main(
            ["run", str(CORPUS / "const.hyg"), "--stage", "expand", "--trace-expansion"]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert out.endswith("def y := fun x.1 => x\n")

    def test_exit_code_on_diagnostics(self, capsys):
        code = main(["run", str(CORPUS / "precheck_err.hyg")])
        out = capsys.readouterr().out
        assert code == 1
        assert "unknown identifier 'z'" in out

    def test_missing_file(self, capsys):
        code = main(["run", "does-not-exist.hyg"])
        assert code == 2

    def test_flags_reach_the_config(self, capsys):
        code = main(
            [
                "run",
                str(CORPUS / "notation_noprecheck.hyg"),
                "--no-notation-precheck",
            ]
        )
        out = capsys.readouterr().out
        assert code == 1
        assert "in expansion of ∃∃" in out
