"""
Scenario Runner

Frames one command run as a stream of newline-delimited JSON records:
scenario_started, inputs, constants, partial_sums, result (or error) and
scenario_completed, with a short human-readable summary on stderr.
"""

import argparse
import json
import logging
import math
import sys
import time
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, List, Optional, TextIO

import numpy as np

from .base import BaseCommand, CommandResult

logger = logging.getLogger(__name__)

# argparse bookkeeping that is not part of the scenario
HIDDEN_ARGUMENTS = ("command", "handler", "log_level", "output")


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become "inf", "-inf" or "nan"."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


class ScenarioRunner:
    """
    Runs one command and formats its report.

    Args:
        no_timestamp: Write null timestamps and wall time so identical
            scenarios give byte-identical reports
    """

    def __init__(self, no_timestamp: bool = False):
        self.no_timestamp = no_timestamp
        self.last_result: Optional[CommandResult] = None
        self.logger = logging.getLogger(__name__)

    def stream(self, command: BaseCommand, args: argparse.Namespace) -> Iterator[str]:
        """
        Execute the command with streaming report records.

        Yields:
            One JSON record per line
        """
        started = time.perf_counter()
        yield self._format_progress_message(
            "scenario_started",
            {"command": command.command_name, "description": command.description},
        )
        yield self._format_progress_message("inputs", self._inputs(args))

        result = command.execute(args)
        self.last_result = result

        constants = result.metadata.get("constants")
        if constants:
            yield self._format_progress_message("constants", constants)
        for table in result.metadata.get("partial_sums", []):
            yield self._format_progress_message("partial_sums", table)

        if result.errors:
            yield self._format_error_message(
                "Scenario execution failed", result.errors, result.metadata.get("details", {})
            )
        else:
            yield self._format_progress_message("result", {"passed": result.success, **(result.data or {})})

        wall_time = None if self.no_timestamp else time.perf_counter() - started
        yield self._format_progress_message(
            "scenario_completed",
            {
                "command": command.command_name,
                "success": result.success,
                "exit_code": result.exit_code,
                "wall_time": wall_time,
            },
        )

    def run(self, command: BaseCommand, args: argparse.Namespace, out: TextIO, summary: Optional[TextIO] = None) -> int:
        """Write the report to ``out`` and return the exit code."""
        for line in self.stream(command, args):
            out.write(line)
        out.flush()
        result: CommandResult = self.last_result
        self._write_summary(command, result, summary or sys.stderr)
        return result.exit_code

    def _inputs(self, args: argparse.Namespace) -> Dict[str, Any]:
        return {k: v for k, v in sorted(vars(args).items()) if k not in HIDDEN_ARGUMENTS}

    def _timestamp(self) -> Optional[str]:
        if self.no_timestamp:
            return None
        return datetime.now(timezone.utc).isoformat()

    def _format_progress_message(self, message_type: str, data: Dict[str, Any]) -> str:
        message = {"type": message_type, "timestamp": self._timestamp(), "data": jsonable(data)}
        return json.dumps(message, allow_nan=False) + "\n"

    def _format_error_message(self, error_message: str, errors: List[str], details: Dict[str, Any]) -> str:
        message = {
            "type": "error",
            "timestamp": self._timestamp(),
            "error": error_message,
            "details": jsonable({"errors": errors, **details}),
        }
        return json.dumps(message, allow_nan=False) + "\n"

    def _write_summary(self, command: BaseCommand, result: CommandResult, stream: TextIO):
        if result.errors:
            status = "error"
        else:
            status = "passed" if result.success else "check failed"
        stream.write(f"{command.command_name}: {status}\n")
        for line in result.metadata.get("summary", []):
            stream.write(f"  {line}\n")
        for error in result.errors:
            stream.write(f"  {error}\n")
