# src/vortexlab/runner.py

"""
Command registry and execution for vortexlab.

Commands are discovered by main.py and registered on a LabRunner. Running a
command computes the config hash, serves the result from the cache when an
identical run already exists, and otherwise executes the command inside a
temporary directory that is renamed into place once it succeeded, so a
cache entry is never half-written.
"""

import hashlib
import json
import logging
import os
import shutil
import tempfile
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional

import numpy as np

from vortexlab import __version__
from vortexlab.config import RunConfig
from vortexlab.errors import ConfigError, ValidationMismatch
from vortexlab.output import to_jsonable, write_csv, write_field, write_json, write_jsonl

RECORD_FILE = "record.json"
MISMATCH_KEY = "mismatch"   # Summary key through which a command reports a failed cross-check


def config_hash(command: str, cfg: RunConfig) -> str:
    """Deterministic hash of (command, semantic config, version); key order does not matter."""
    payload = {"command": command, "config": to_jsonable(cfg.canonical()), "version": __version__}
    text = json.dumps(payload, sort_keys=True, allow_nan=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass
class ResultRecord:
    """
    Outcome of one command run.

    Attributes:
        config_hash: Hash of the run configuration.
        command: Command name.
        directory: Result directory ``<output_dir>/<command>-<hash>``.
        payload: Files written by the command, relative to ``directory``.
        summary: Scalar results (lambda_1, I_c, n4, gamma, scenario, period, ...).
        from_cache: True when served from an earlier identical run.
    """

    config_hash: str
    command: str
    directory: str
    payload: List[str]
    summary: Dict[str, Any]
    from_cache: bool = False

    def path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def to_json(self, cfg: RunConfig) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config": cfg.canonical(),
            "payload": sorted(self.payload),
            "summary": self.summary,
        }


class RunContext:
    """What a command sees: the config, its parameters and writers into the result directory."""

    def __init__(self, command: str, cfg: RunConfig, workdir: str, hash_: str) -> None:
        self.command = command
        self.cfg = cfg
        self.workdir = workdir
        self.config_hash = hash_
        self.payload: List[str] = []

    @property
    def params(self):
        return self.cfg.params

    def _target(self, name: str) -> str:
        if os.sep in name or name == RECORD_FILE:
            raise ValueError(f"invalid payload name '{name}'")
        self.payload.append(name)
        return os.path.join(self.workdir, name)

    def csv(self, name: str, columns, rows) -> str:
        return write_csv(self._target(name), columns, rows, self.config_hash)

    def json(self, name: str, obj: Mapping[str, Any]) -> str:
        return write_json(self._target(name), obj, self.config_hash)

    def jsonl(self, name: str, records) -> str:
        return write_jsonl(self._target(name), records, self.config_hash)

    def field(self, name: str, values: np.ndarray, meta: Optional[Mapping[str, Any]] = None) -> str:
        path = write_field(self._target(name), values, self.config_hash, meta)
        self.payload.append(name + ".json")
        return path


class LabRunner:
    """Registry of commands plus the cached execution path."""

    def __init__(self) -> None:
        self.commands: Dict[str, Dict[str, Any]] = {}

    def register_command(self, command_name: str, execute_func: Callable, help_text: str) -> None:
        """Registers a command module discovered by main.py."""
        if not command_name or not isinstance(command_name, str):
            raise ValueError(f"command name must be a non-empty string, got {command_name!r}")
        if not callable(execute_func):
            raise TypeError(f"execute for command {command_name!r} is not callable")
        if not help_text or not isinstance(help_text, str):
            raise ValueError(f"command {command_name!r} needs a one-line help text")

        name = command_name.lower()
        if name in self.commands:
            logging.warning(f"Command '{name}' is already registered. Overwriting.")
        self.commands[name] = {'execute': execute_func, 'help': help_text}
        logging.debug(f"Registered command: {name}")

    def help_lines(self) -> List[str]:
        return [f"{name:12s} {self.commands[name]['help']}" for name in sorted(self.commands)]

    def result_dir(self, command: str, cfg: RunConfig) -> str:
        return os.path.join(cfg.output_dir, f"{command}-{config_hash(command, cfg)}")

    def run_command(self, command: str, cfg: RunConfig) -> ResultRecord:
        """
        Runs one command, or serves it from the cache.

        Args:
            command: Registered command name.
            cfg: Validated configuration.

        Returns:
            The ResultRecord (``from_cache`` tells whether anything ran).

        Raises:
            ConfigError: Unknown command.
            ValidationMismatch: The command reported a failed cross-check
                (raised after its results were stored).
            SolverError: Propagated from the numerical modules.
        """
        name = command.lower()
        if name not in self.commands:
            known = ", ".join(sorted(self.commands)) or "none"
            raise ConfigError(f"unknown command '{command}' (available: {known})")

        hash_ = config_hash(name, cfg)
        final_dir = os.path.join(cfg.output_dir, f"{name}-{hash_}")
        record_path = os.path.join(final_dir, RECORD_FILE)

        if cfg.cache and os.path.isfile(record_path):
            with open(record_path, encoding="utf-8") as fh:
                stored = json.load(fh)
            logging.info(f"Cache hit for {name} ({hash_}): {final_dir}")
            record = ResultRecord(hash_, name, final_dir, stored["payload"], stored["summary"], from_cache=True)
            self._check_mismatch(record)
            return record
        logging.info(f"Cache {'miss' if cfg.cache else 'disabled'} for {name} ({hash_})")

        os.makedirs(cfg.output_dir, exist_ok=True)
        workdir = tempfile.mkdtemp(prefix=f".{name}-{hash_}-", dir=cfg.output_dir)
        ctx = RunContext(name, cfg, workdir, hash_)
        started = time.perf_counter()
        try:
            summary = self.commands[name]['execute'](ctx)
            summary = to_jsonable(summary or {})
            record = ResultRecord(hash_, name, final_dir, sorted(ctx.payload), summary)
            write_json(os.path.join(workdir, RECORD_FILE), record.to_json(cfg), hash_)
            if os.path.isdir(final_dir):
                shutil.rmtree(final_dir)
            os.replace(workdir, final_dir)
        except BaseException:
            shutil.rmtree(workdir, ignore_errors=True)
            raise
        logging.info(f"{name} finished in {time.perf_counter() - started:.2f} s; results in {final_dir}")
        self._check_mismatch(record)
        return record

    @staticmethod
    def _check_mismatch(record: ResultRecord) -> None:
        message = record.summary.get(MISMATCH_KEY)
        if message:
            raise ValidationMismatch(f"{message} (report: {record.directory})")
