"""
Base Command Class

Shared structure of every CLI scenario: argument registration, execution
with error capture, and command-scoped progress logging.
"""

import argparse
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List

from cluster.errors import ClusterError

logger = logging.getLogger(__name__)


@dataclass
class CommandResult:
    """Result structure for command runs"""

    success: bool
    data: Any
    metadata: Dict[str, Any] = None
    errors: List[str] = None

    def __post_init__(self):
        if self.metadata is None:
            self.metadata = {}
        if self.errors is None:
            self.errors = []

    @property
    def exit_code(self) -> int:
        """0 on success, 1 when a check failed, 2 when the run itself failed."""
        if self.success:
            return 0
        return 2 if self.errors else 1


class BaseCommand(ABC):
    """
    Base class for all scenario commands.

    A command reads its inputs from parsed arguments, calls the library and
    returns a CommandResult. Constants and partial sums go to ``metadata``
    under the keys "constants" and "partial_sums"; the runner frames them as
    separate report records.
    """

    def __init__(self):
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    @property
    @abstractmethod
    def command_name(self) -> str:
        """Subcommand name on the command line"""
        pass

    @property
    @abstractmethod
    def description(self) -> str:
        """One-line help text"""
        pass

    @abstractmethod
    def add_arguments(self, parser: argparse.ArgumentParser):
        pass

    @abstractmethod
    def run(self, args: argparse.Namespace) -> CommandResult:
        """
        Execute the scenario.

        Args:
            args: Parsed command line, global flags included

        Returns:
            CommandResult whose ``success`` is the outcome of the check
        """
        pass

    def execute(self, args: argparse.Namespace) -> CommandResult:
        """Run the scenario, turning library and input errors into a failed result."""
        try:
            return self.run(args)
        except ClusterError as e:
            self.log_progress(f"{type(e).__name__}: {e}", "error")
            return CommandResult(
                success=False,
                data=None,
                metadata={"error_type": type(e).__name__, "details": _error_details(e)},
                errors=[str(e)],
            )
        except (ValueError, KeyError, OSError) as e:
            self.log_progress(f"invalid input: {e}", "error")
            return CommandResult(
                success=False,
                data=None,
                metadata={"error_type": type(e).__name__, "details": {}},
                errors=[str(e)],
            )

    def log_progress(self, message: str, level: str = "info"):
        """Log at the named level, prefixed with the subcommand name; unknown levels fall back to info."""
        log_method = getattr(self.logger, level, self.logger.info)
        log_method(f"[{self.command_name}] {message}")


def _error_details(error: ClusterError) -> Dict[str, Any]:
    keys = ("path", "line", "column", "location", "what", "requested", "cap")
    return {key: getattr(error, key) for key in keys if getattr(error, key, None) is not None}
