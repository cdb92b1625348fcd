"""
Command-line front end.
"""

from cli.commands import (
    CommandResult,
    cmd_bootstrap,
    cmd_estimate,
    cmd_montecarlo,
    cmd_oracle,
    cmd_simulate,
)
from cli.main import build_parser, exit_code_for, main

__all__ = [
    "CommandResult",
    "build_parser",
    "cmd_bootstrap",
    "cmd_estimate",
    "cmd_montecarlo",
    "cmd_oracle",
    "cmd_simulate",
    "exit_code_for",
    "main",
]
