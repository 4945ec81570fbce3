from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from hintlab.cli import main as cli_main

from conftest import run_demo_cli


def demo_args(demo_paths, *overrides: str) -> dict[str, str]:
    named = {
        "--matrix": str(demo_paths["matrix"]),
        "--corpus": str(demo_paths["corpus"]),
        "--prompts": str(demo_paths["prompts"]),
        "--backends": str(demo_paths["backends"]),
    }
    for i in range(0, len(overrides), 2):
        named[overrides[i]] = overrides[i + 1]
    return named


def validate_argv(demo_paths, *overrides: str) -> list[str]:
    argv = ["validate"]
    for flag, value in demo_args(demo_paths, *overrides).items():
        argv += [flag, value]
    return argv


def backends_without_translator(demo_paths, dest: Path) -> Path:
    raw = json.loads(Path(demo_paths["backends"]).read_text(encoding="utf-8"))
    del raw["translator"]
    raw["backends"] = {
        name: {**spec, "rules": str(demo_paths["root"] / spec["rules"])}
        for name, spec in raw["backends"].items()
    }
    raw["lid"] = {**raw["lid"], "rules": str(demo_paths["root"] / raw["lid"]["rules"])}
    path = dest / "backends_no_translator.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    return path


def test_validate_ok(demo_paths, capsys):
    assert cli_main(validate_argv(demo_paths)) == 0
    assert capsys.readouterr().out.strip() == "ok: 8 configs x 5 exercises = 40 sessions"


def test_validate_missing_corpus_exits_2(demo_paths, tmp_path, capsys):
    missing = tmp_path / "nowhere"
    assert cli_main(validate_argv(demo_paths, "--corpus", str(missing))) == 2
    err = capsys.readouterr().err
    assert err.startswith("error:") and "nowhere" in err


def test_validate_flags_missing_translator(demo_paths, tmp_path, capsys):
    stripped = backends_without_translator(demo_paths, tmp_path)
    assert cli_main(validate_argv(demo_paths, "--backends", str(stripped))) == 2
    err = capsys.readouterr().err
    assert "problem:" in err and "needs a translator" in err and "en_en_l" in err


def test_validate_llm_judge_needs_backend(demo_paths, capsys):
    assert cli_main(validate_argv(demo_paths, "--judge", "llm")) == 2
    assert "judge_backend" in capsys.readouterr().err


def test_run_writes_artifacts_and_reports_counts(demo_paths, tmp_path, capsys):
    out = tmp_path / "out"
    assert run_demo_cli(demo_paths, out) == 0
    stdout = capsys.readouterr().out
    assert f"journal: {out / 'journal.jsonl'}" in stdout
    assert "sessions: 40 total, 40 executed this run, 0 resumed" in stdout
    assert (out / "journal.jsonl").exists()
    assert (out / "manifest.json").exists()
    assert (out / "run_spec.json").exists()
    assert list((out / "cache").glob("*.jsonl"))
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["sessions"] == 40 and manifest["aborted"] == []
    spec = json.loads((out / "run_spec.json").read_text(encoding="utf-8"))
    assert spec["matrix_axes"]["students"] == ["student-sim"]
    assert spec["cache_enabled"] is True


def test_run_resume_executes_nothing_new(demo_paths, tmp_path, capsys):
    out = tmp_path / "out"
    assert run_demo_cli(demo_paths, out) == 0
    before = (out / "journal.jsonl").read_bytes()
    capsys.readouterr()
    assert run_demo_cli(demo_paths, out, "--resume") == 0
    assert "sessions: 40 total, 0 executed this run, 40 resumed" in capsys.readouterr().out
    assert (out / "journal.jsonl").read_bytes() == before


def test_run_no_cache_skips_cache_dir(demo_paths, tmp_path):
    out = tmp_path / "out"
    assert run_demo_cli(demo_paths, out, "--no-cache") == 0
    assert not (out / "cache").exists()
    spec = json.loads((out / "run_spec.json").read_text(encoding="utf-8"))
    assert spec["cache_enabled"] is False


def test_run_max_hints_override(demo_paths, tmp_path):
    out = tmp_path / "out"
    assert run_demo_cli(demo_paths, out, "--max-hints", "1") == 0
    spec = json.loads((out / "run_spec.json").read_text(encoding="utf-8"))
    assert spec["matrix_axes"]["max_hints"] == 1
    lines = (out / "journal.jsonl").read_text(encoding="utf-8").splitlines()
    assert all(json.loads(line)["hints_used"] <= 1 for line in lines)


def test_report_without_journal_exits_2(tmp_path, capsys):
    assert cli_main(["report", "--out", str(tmp_path)]) == 2
    assert "no journal found" in capsys.readouterr().err


def test_report_writes_tables_and_figures(demo_out, capsys):
    assert cli_main(["report", "--out", str(demo_out)]) == 0
    stdout = capsys.readouterr().out
    reports = demo_out / "reports"
    for name in ("gains", "gain_summary", "hint_stats"):
        assert (reports / f"{name}.csv").exists()
        assert (reports / f"{name}.json").exists()
    for figure in ("gains.png", "hint_counts.png"):
        assert (reports / "figures" / figure).exists()
    assert stdout.count("wrote: ") == 8


def test_report_csv_only(demo_paths, tmp_path, capsys):
    out = tmp_path / "out"
    assert run_demo_cli(demo_paths, out) == 0
    capsys.readouterr()
    assert cli_main(["report", "--out", str(out), "--format", "csv"]) == 0
    reports = out / "reports"
    assert sorted(p.name for p in reports.glob("*.csv")) == ["gain_summary.csv", "gains.csv", "hint_stats.csv"]
    assert not list(reports.glob("*.json"))
    # figures are not format-gated
    assert (reports / "figures" / "gains.png").exists()


def test_audit_uses_run_spec_paths(demo_out, capsys):
    assert cli_main(["audit", "--out", str(demo_out)]) == 0
    capsys.readouterr()
    reports = demo_out / "reports"
    for name in ("leakage_groups", "leakage_by_language", "consistency", "backtranslation"):
        assert (reports / f"{name}.csv").exists()
        assert (reports / f"{name}.json").exists()
    assert (reports / "figures" / "leakage.png").exists()


def test_audit_without_run_spec_needs_explicit_flags(demo_paths, demo_out, tmp_path, capsys):
    bare = tmp_path / "bare"
    bare.mkdir()
    shutil.copy(demo_out / "journal.jsonl", bare / "journal.jsonl")
    assert cli_main(["audit", "--out", str(bare)]) == 2
    assert "pass --backends and --corpus explicitly" in capsys.readouterr().err

    assert (
        cli_main(
            [
                "audit",
                "--out", str(bare),
                "--corpus", str(demo_paths["corpus"]),
                "--backends", str(demo_paths["backends"]),
            ]
        )
        == 0
    )
    assert (bare / "reports" / "backtranslation.csv").exists()


def test_audit_without_translator_exits_1(demo_paths, demo_out, tmp_path, capsys):
    stripped = backends_without_translator(demo_paths, tmp_path)
    bare = tmp_path / "bare"
    bare.mkdir()
    shutil.copy(demo_out / "journal.jsonl", bare / "journal.jsonl")
    code = cli_main(
        [
            "audit",
            "--out", str(bare),
            "--corpus", str(demo_paths["corpus"]),
            "--backends", str(stripped),
        ]
    )
    assert code == 1
    assert "add a [translator] section" in capsys.readouterr().err


def test_usage_errors_exit_2(demo_paths):
    with pytest.raises(SystemExit) as exc:
        cli_main(["validate"])  # missing required flags
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli_main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        cli_main(["report", "--out", "x", "--format", "yaml"])
    assert exc.value.code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli_main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip().startswith("hintlab ")
