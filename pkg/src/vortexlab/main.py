# src/vortexlab/main.py

"""
Main entry point for vortexlab.

Parses the command line (flags override the config file), sets up logging,
dynamically loads the command modules, runs the requested command through
the LabRunner and maps errors to exit codes: 0 success, 2 configuration
error, 3 solver failure, 4 validation mismatch, 1 anything else.
"""

import argparse
import importlib
import json
import logging
import os
import sys
from typing import List, Optional

# --- Project Imports ---
try:
    import vortexlab.commands
    import vortexlab.config as config
    from vortexlab import __version__
    from vortexlab.errors import ConfigError, VortexLabError
    from vortexlab.runner import LabRunner
except ImportError as e:
    print(f"Import Error: {e}", file=sys.stderr)
    print("Ensure the 'src' directory is in your PYTHONPATH,", file=sys.stderr)
    print("e.g. run 'PYTHONPATH=src python src/vortexlab/main.py'.", file=sys.stderr)
    sys.exit(1)


COMMAND_ATTRS = ("COMMAND_NAME", "COMMAND_HELP", "execute")


def setup_logging(log_level: int) -> None:
    """Configures application-wide logging."""
    logging.basicConfig(level=log_level, format=config.LOG_FORMAT, datefmt=config.LOG_DATE_FORMAT)
    if log_level > logging.DEBUG:
        logging.getLogger("joblib").setLevel(logging.WARNING)
        logging.getLogger("pubsub").setLevel(logging.WARNING)
        logging.getLogger("matplotlib").setLevel(logging.WARNING)


def load_and_register_commands(runner: LabRunner) -> None:
    """Discovers cmd_*.py modules in the commands package and registers them."""
    commands_path = os.path.dirname(vortexlab.commands.__file__)
    logging.debug(f"Loading commands from directory: {commands_path}")

    for filename in sorted(os.listdir(commands_path)):
        if not (filename.startswith("cmd_") and filename.endswith(".py")):
            continue
        module_name = filename[:-3]
        full_module_path = f"vortexlab.commands.{module_name}"
        try:
            module = importlib.import_module(full_module_path)
        except ImportError as e:
            logging.error(f"Cannot import {full_module_path}: {e}", exc_info=True)
            continue

        missing = [attr for attr in COMMAND_ATTRS if not hasattr(module, attr)]
        if missing or not callable(module.execute):
            logging.warning(f"Skipping {module_name}: missing or invalid {', '.join(missing) or 'execute'}")
            continue
        runner.register_command(module.COMMAND_NAME, module.execute, module.COMMAND_HELP)


def build_parser(runner: LabRunner) -> argparse.ArgumentParser:
    """One positional command, a config file, and one ``--<key>`` flag per RunConfig key."""
    parser = argparse.ArgumentParser(
        prog="vortexlab",
        description="Numerical laboratory for current- and field-driven thin-film superconductors",
        epilog="commands:\n  " + "\n  ".join(runner.help_lines()),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
    )
    parser.add_argument("command", help="Command to run (see below)")
    parser.add_argument("-c", "--config", default=None, help="key=value config file")
    parser.add_argument("--no-cache", action="store_true", help="Recompute even if a cached result exists")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable DEBUG level logging")
    parser.add_argument("--version", action="version", version=f"vortexlab {__version__}")
    group = parser.add_argument_group("run settings (override the config file)")
    for key in config.config_keys():
        group.add_argument(f"--{key}", dest=f"cfg_{key}", default=None, metavar="VALUE")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Runs one command.

    Returns:
        The process exit code.
    """
    runner = LabRunner()
    load_and_register_commands(runner)
    parser = build_parser(runner)
    args = parser.parse_args(argv)

    setup_logging(logging.DEBUG if args.verbose else config.LOG_LEVEL)
    logging.debug(f"Command line arguments parsed: {args}")

    try:
        overrides = {
            name[len("cfg_"):]: value
            for name, value in vars(args).items()
            if name.startswith("cfg_") and value is not None
        }
        if args.no_cache:
            overrides["cache"] = "false"
        cfg = config.parse_config(args.config, overrides)
        record = runner.run_command(args.command, cfg)
    except VortexLabError as e:
        logging.error(f"{type(e).__name__}: {e}")
        print(json.dumps({"error": type(e).__name__, "message": str(e), "exit_code": e.exit_code}, sort_keys=True))
        return e.exit_code
    except ValueError as e:
        # Parameter checks in the numerical modules surface as configuration errors
        err = ConfigError(str(e))
        logging.error(f"ConfigError: {e}")
        print(json.dumps({"error": "ConfigError", "message": str(err), "exit_code": err.exit_code}, sort_keys=True))
        return err.exit_code
    except Exception as e:
        logging.exception(f"An unexpected error occurred: {e}")
        print(json.dumps({"error": type(e).__name__, "message": str(e), "exit_code": 1}, sort_keys=True))
        return 1

    print(json.dumps(
        {"command": record.command, "config_hash": record.config_hash, "directory": record.directory,
         "from_cache": record.from_cache, "summary": record.summary},
        sort_keys=True,
    ))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
