# src/vortexlab/commands/__init__.py

"""
Commands package for vortexlab.

Command modules (cmd_*.py) in this directory are loaded dynamically by
main.py. Each command module defines:
- COMMAND_NAME (str): The subcommand name typed on the command line.
- COMMAND_HELP (str): A one-line description shown in the help text.
- execute(ctx): Runs the command.
    - ctx: The runner.RunContext, holding the RunConfig (``ctx.cfg``) and the
      writers for payload files (``ctx.csv``, ``ctx.json``, ``ctx.jsonl``,
      ``ctx.field``).
    - Returns a dict of summary scalars stored in the result record.

Helpers shared by several commands live in common.py.
"""
