# tests/test_runner.py

import json
import os

import numpy as np
import pytest

from vortexlab import __version__
from vortexlab.config import RunConfig
from vortexlab.errors import ConfigError, ValidationMismatch
from vortexlab.output import read_field, to_jsonable
from vortexlab.runner import MISMATCH_KEY, RECORD_FILE, LabRunner, config_hash

calls = {"count": 0}


def _table(ctx):
    calls["count"] += 1
    ctx.csv("table.csv", ["a", "b", "flag"], [(1.0, float("nan"), True), (0.5, 2, False)])
    ctx.jsonl("events.jsonl", [{"t": 0.25, "kind": "X"}])
    ctx.field("psi.field", np.arange(6, dtype=complex).reshape(2, 3), {"t": 1.0})
    return {"lambda1": 1.5 + 2.0j, "value": np.float64(3.0)}


def _mismatch(ctx):
    ctx.json("report.json", {"passed": False})
    return {MISMATCH_KEY: "amplitude off by 40%"}


def _broken(ctx):
    ctx.csv("partial.csv", ["a"], [(1.0,)])
    raise RuntimeError("boom")


@pytest.fixture
def runner():
    r = LabRunner()
    r.register_command("table", _table, "Writes a small table")
    r.register_command("mismatch", _mismatch, "Fails its cross-check")
    r.register_command("broken", _broken, "Raises half-way")
    return r


@pytest.fixture
def cfg(tmp_path):
    return RunConfig(output_dir=str(tmp_path))


def test_register_command_validates_arguments():
    r = LabRunner()
    with pytest.raises(ValueError):
        r.register_command("", _table, "help")
    with pytest.raises(TypeError):
        r.register_command("x", "not callable", "help")
    with pytest.raises(ValueError):
        r.register_command("x", _table, "")
    r.register_command("Mixed", _table, "help")
    assert "mixed" in r.commands


def test_run_writes_record_and_payload(runner, cfg):
    record = runner.run_command("table", cfg)
    assert not record.from_cache
    assert os.path.basename(record.directory) == f"table-{config_hash('table', cfg)}"
    assert sorted(record.payload) == ["events.jsonl", "psi.field", "psi.field.json", "table.csv"]
    assert record.summary["lambda1"] == {"re": 1.5, "im": 2.0}

    with open(record.path("table.csv"), encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    assert lines[0] == f"# vortexlab {__version__} config={record.config_hash}"
    assert lines[1] == "a,b,flag"
    assert lines[2] == "1.000000000000e+00,nan,1"

    with open(record.path("events.jsonl"), encoding="utf-8") as fh:
        first, second = fh.read().splitlines()
    assert record.config_hash in first
    assert json.loads(second) == {"kind": "X", "t": 0.25}

    values = read_field(record.path("psi.field"))
    np.testing.assert_array_equal(values, np.arange(6, dtype=complex).reshape(2, 3))
    with open(record.path("psi.field.json"), encoding="utf-8") as fh:
        assert json.load(fh)["meta"] == {"t": 1.0}

    with open(record.path(RECORD_FILE), encoding="utf-8") as fh:
        stored = json.load(fh)
    assert stored["config_hash"] == record.config_hash
    assert stored["vortexlab_version"] == __version__


def test_run_creates_missing_output_dir(runner, tmp_path):
    nested = tmp_path / "campaign" / "h20"
    record = runner.run_command("table", RunConfig(output_dir=str(nested)))
    assert os.path.isdir(record.directory)
    assert os.path.dirname(record.directory) == str(nested)


def test_cache_hit_is_byte_identical(runner, cfg):
    calls["count"] = 0
    first = runner.run_command("table", cfg)
    with open(first.path("table.csv"), "rb") as fh:
        before = fh.read()
    second = runner.run_command("table", cfg)
    assert second.from_cache
    assert calls["count"] == 1
    assert second.summary == first.summary

    third = runner.run_command("table", cfg.with_(cache=False))
    assert not third.from_cache and calls["count"] == 2
    with open(third.path("table.csv"), "rb") as fh:
        assert fh.read() == before


def test_failed_run_leaves_no_result(runner, cfg):
    with pytest.raises(RuntimeError):
        runner.run_command("broken", cfg)
    assert os.listdir(cfg.output_dir) == []


def test_mismatch_is_raised_after_commit(runner, cfg):
    with pytest.raises(ValidationMismatch, match="amplitude off"):
        runner.run_command("mismatch", cfg)
    target = runner.result_dir("mismatch", cfg)
    assert os.path.isfile(os.path.join(target, "report.json"))
    # A cached report still fails
    with pytest.raises(ValidationMismatch):
        runner.run_command("mismatch", cfg)


def test_unknown_command(runner, cfg):
    with pytest.raises(ConfigError, match="unknown command"):
        runner.run_command("nope", cfg)


def test_jsonable_conversions():
    assert to_jsonable(float("nan")) is None
    assert to_jsonable(np.array([1.0, np.inf])) == [1.0, None]
    assert to_jsonable((np.int64(2), np.bool_(True))) == [2, True]
    assert to_jsonable({1: 1j}) == {"1": {"re": 0.0, "im": 1.0}}
