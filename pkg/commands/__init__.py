"""
Command Line Scenarios

Every subcommand of the CLI is a BaseCommand; the ScenarioRunner frames its
run as a newline-delimited JSON report.
"""

from .base import BaseCommand, CommandResult
from .beg import BegBeta0Command, BegCheckCommand, BijectionCheckCommand
from .criterion import CheckCriterionCommand, OptimizeMuCommand
from .polymer import PartitionCommand, StabilityCommand, UrsellCommand, VerifyIdentityCommand
from .runner import ScenarioRunner, jsonable

COMMANDS = (
    UrsellCommand,
    PartitionCommand,
    StabilityCommand,
    VerifyIdentityCommand,
    CheckCriterionCommand,
    OptimizeMuCommand,
    BegBeta0Command,
    BegCheckCommand,
    BijectionCheckCommand,
)

__all__ = [
    "BaseCommand",
    "CommandResult",
    "ScenarioRunner",
    "jsonable",
    "COMMANDS",
    "UrsellCommand",
    "PartitionCommand",
    "StabilityCommand",
    "VerifyIdentityCommand",
    "CheckCriterionCommand",
    "OptimizeMuCommand",
    "BegBeta0Command",
    "BegCheckCommand",
    "BijectionCheckCommand",
]
