# tests/test_main.py

import json
import re
from pathlib import Path

import pytest

from vortexlab.main import build_parser, load_and_register_commands, main
from vortexlab.runner import LabRunner

SMALL = ["--nx", "17", "--ny", "13"]


def _last_json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_all_commands_are_discovered():
    runner = LabRunner()
    load_and_register_commands(runner)
    assert set(runner.commands) == {
        "spectrum", "ic-find", "normal-form", "beta", "predict", "simulate", "sweep", "validate",
    }
    help_text = build_parser(runner).format_help()
    assert "--delta" in help_text and "normal-form" in help_text


def test_beta_run_is_cached_and_reproducible(tmp_path, capsys):
    argv = ["beta", *SMALL, "--output_dir", str(tmp_path)]
    assert main(argv) == 0
    first = _last_json(capsys)
    assert not first["from_cache"]
    # Real ground state: flat phase
    assert first["summary"]["scenario"] == "OTHER"
    with open(f"{first['directory']}/beta.csv", "rb") as fh:
        before = fh.read()

    assert main(argv) == 0
    second = _last_json(capsys)
    assert second["from_cache"]
    assert second["config_hash"] == first["config_hash"]

    assert main([*argv, "--no-cache"]) == 0
    third = _last_json(capsys)
    assert not third["from_cache"]
    with open(f"{third['directory']}/beta.csv", "rb") as fh:
        assert fh.read() == before


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["normal-form", "--delta", "0.9", "--output_dir", str(tmp_path)]) == 2
    err = _last_json(capsys)
    assert err["error"] == "ConfigError"
    assert "delta must be < K" in err["message"]
    assert err["exit_code"] == 2


def test_unknown_command_exit_code(tmp_path, capsys):
    assert main(["frobnicate", "--output_dir", str(tmp_path)]) == 2
    assert "unknown command" in _last_json(capsys)["message"]


def test_unsupported_point_exit_code(tmp_path, capsys):
    # No current: lambda_1 is real and there is no Hopf orbit to predict on
    assert main(["predict", *SMALL, "--output_dir", str(tmp_path)]) == 3
    assert _last_json(capsys)["error"] == "UnsupportedPointError"


def test_spectrum_command_writes_table(tmp_path, capsys):
    argv = [
        "spectrum", "--nx", "17", "--ny", "5", "--delta", repr(2.0 / 3.0),
        "--sweep_param", "h", "--sweep_start", "0", "--sweep_stop", "0.2", "--sweep_count", "3",
        "--n_eigs", "2", "--eig_method", "dense", "--output_dir", str(tmp_path),
    ]
    assert main(argv) == 0
    result = _last_json(capsys)
    with open(f"{result['directory']}/spectrum.csv", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("# vortexlab ")
    assert lines[1] == "h,re_lambda1,im_lambda1,branch1,re_lambda2,im_lambda2,branch2,abs_m11"
    assert len(lines) == 2 + 3


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "vortexlab" in capsys.readouterr().out


def test_docs_nav_pages_exist():
    root = Path(__file__).resolve().parent.parent
    text = (root / "mkdocs.yml").read_text(encoding="utf-8")
    pages = re.findall(r"^\s*- [^:#]+: (\S+\.md)", text, flags=re.MULTILINE)
    assert "commands.md" in pages
    for page in pages:
        assert (root / "docs" / page).is_file(), page
