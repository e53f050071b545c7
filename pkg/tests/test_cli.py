"""CLI surface tests: flags, exit codes, file outputs."""

from __future__ import annotations

import json

import pytest

from cotbench.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGenerate:
    def test_deterministic_output(self, tmp_path, capsys):
        out_a = tmp_path / "a.jsonl"
        out_b = tmp_path / "b.jsonl"
        for out in (out_a, out_b):
            code, _, _ = run_cli(
                capsys, "generate", "--task", "pc", "--length", "20",
                "--count", "5", "--seed", "7", "--out", str(out),
            )
            assert code == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_odd_palindrome_length_is_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "generate", "--task", "pv", "--length", "5")
        assert code == 2
        assert "even" in err

    def test_even_pairs_mean_half_transitions(self, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "--task", "ep", "--length", "10", "--count", "1000", "--seed", "3",
        )
        assert code == 0
        answers = [json.loads(line)["oracle"] for line in out.strip().split("\n")]
        assert len(answers) == 1000
        mean = sum(answers) / len(answers)
        assert abs(mean - 4.5) < 0.2

    def test_documented_fields_and_optional_input(self, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "--task", "ep", "--length", "4", "--count", "1",
            "--rendering", "list",
        )
        record = json.loads(out.strip())
        assert list(record)[:5] == ["task", "length", "elements", "params", "oracle"]
        assert record["input"].startswith("[")

    def test_unknown_task_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--task", "zz", "--length", "4"])
        assert exc.value.code == 2


class TestValidateOracles:
    def test_full_agreement(self, capsys):
        code, out, _ = run_cli(capsys, "validate-oracles", "--max-length", "6", "--samples", "50")
        assert code == 0
        assert "0 disagreements" in out


class TestShowPrompt:
    def test_supervised_even_pairs_anchor(self, capsys):
        code, out, _ = run_cli(capsys, "show-prompt", "--task", "ep", "--kind", "scot")
        assert code == 0
        assert "Terminate when the letter is the last element" in out
        assert "{{" not in out

    def test_duplicate_base(self, capsys):
        code, out, _ = run_cli(capsys, "show-prompt", "--task", "dl", "--kind", "base")
        assert code == 0
        assert "Input string:" in out

    def test_every_combination_renders(self, capsys):
        for task in ("pc", "ep", "cn", "rl", "en", "pv", "of", "sl", "dl"):
            for kind in ("base", "cot", "scot", "scot-sub"):
                code, out, _ = run_cli(capsys, "show-prompt", "--task", task, "--kind", kind)
                assert code == 0
                assert "{{" not in out


class TestRunReportCompare:
    def write_spec(self, path, **overrides):
        spec = {
            "tasks": ["pc", "ep"],
            "lengths": {"pc": [20], "ep": [10]},
            "kinds": ["base", "cot", "scot", "scot-sub"],
            "rendering": "list",
            "instances_per_cell": 10,
            "master_seed": 5,
            "backend": {"kind": "echo"},
        }
        spec.update(overrides)
        path.write_text(json.dumps(spec))
        return path

    def test_echo_run_and_report(self, tmp_path, capsys):
        spec = self.write_spec(tmp_path / "spec.json")
        run_dir = tmp_path / "run"
        code, _, err = run_cli(capsys, "run", "--spec", str(spec), "--out", str(run_dir))
        assert code == 0
        records = list((run_dir / "records").glob("*.jsonl"))
        assert len(records) == 8
        total = sum(len(p.read_text().strip().split("\n")) for p in records)
        assert total == 80

        code, out, _ = run_cli(capsys, "report", "--run", str(run_dir))
        assert code == 0
        assert "100.0" in out
        assert (run_dir / "table.json").exists()
        table = json.loads((run_dir / "table.json").read_text())
        assert all(cell["accuracy"] == 1.0 for cell in table["cells"])

    def test_corrupt_run_near_half(self, tmp_path, capsys):
        spec = self.write_spec(
            tmp_path / "spec.json",
            tasks=["pc"],
            lengths={"pc": [20]},
            instances_per_cell=200,
            backend={"kind": "corrupt", "p": 0.5, "seed": 9},
        )
        run_dir = tmp_path / "run"
        code, _, _ = run_cli(capsys, "run", "--spec", str(spec), "--out", str(run_dir))
        assert code == 0
        table = json.loads((run_dir / "table.json").read_text()) if (run_dir / "table.json").exists() else None
        code, out, _ = run_cli(capsys, "report", "--run", str(run_dir))
        table = json.loads((run_dir / "table.json").read_text())
        for cell in table["cells"]:
            assert 0.35 <= cell["accuracy"] <= 0.65

    def test_compare_self_is_null(self, tmp_path, capsys):
        spec = self.write_spec(tmp_path / "spec.json", tasks=["pc"], lengths={"pc": [20]})
        run_dir = tmp_path / "run"
        run_cli(capsys, "run", "--spec", str(spec), "--out", str(run_dir))
        code, out, _ = run_cli(
            capsys, "compare", "--run-a", str(run_dir), "--run-b", str(run_dir), "--json",
        )
        assert code == 0
        rows = json.loads(out)["cells"]
        assert all(row["delta"] == 0.0 and not row["significant"] for row in rows)

    def test_live_without_key_fails_cleanly(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("COTBENCH_API_KEY", raising=False)
        spec = self.write_spec(tmp_path / "spec.json", backend={"kind": "live"})
        code, _, err = run_cli(capsys, "run", "--spec", str(spec), "--out", str(tmp_path / "run"))
        assert code == 1
        assert "auth" in err.lower()

    def test_missing_spec_usage_error(self, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, "run", "--spec", str(tmp_path / "nope.json"), "--out", str(tmp_path / "run"),
        )
        assert code == 2


class TestComplexityCommand:
    def test_template_count(self, capsys):
        code, out, _ = run_cli(capsys, "complexity", "--n", "64", "--s", "8")
        assert code == 0
        assert "4426165368" in out

    def test_invalid_params(self, capsys):
        code, _, err = run_cli(capsys, "complexity", "--n", "3", "--s", "9")
        assert code == 2

    def test_census_table(self, capsys):
        code, out, _ = run_cli(
            capsys, "complexity", "--tasks", "pc,cn,rl", "--lengths", "4,5",
        )
        assert code == 0
        assert "1/2" in out and "1/5" in out and "1/24" in out

    def test_no_action_usage_error(self, capsys):
        code, _, _ = run_cli(capsys, "complexity")
        assert code == 2


class TestHelp:
    @pytest.mark.parametrize(
        "command",
        ["generate", "validate-oracles", "run", "report", "compare", "complexity", "show-prompt"],
    )
    def test_every_subcommand_has_help(self, command, capsys):
        with pytest.raises(SystemExit) as exc:
            main([command, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "usage" in out
