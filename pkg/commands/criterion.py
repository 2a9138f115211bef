"""
Criterion Commands

Check the convergence criterion for a given weight file, or search for
weights that pass it, and optionally certify pinned-series bounds.
"""

import argparse
from pathlib import Path
from typing import Any, Dict, List

from cluster.criterion import (
    certified_pinned_bound,
    check_criterion,
    iterate_tree_series,
    kotecky_preiss,
    optimize_mu,
)
from cluster.model import PolymerSpace, WeightAssignment
from models import dump_weights, load_model, load_weights

from .base import BaseCommand, CommandResult
from .polymer import resolve_ids


def _certify(space: PolymerSpace, mu: WeightAssignment, args: argparse.Namespace) -> List[Dict[str, Any]]:
    """Pinned-series partial sums and tree-recursion traces for each requested polymer."""
    tables = []
    for pinned in resolve_ids(space, args.pinned):
        bound = certified_pinned_bound(space, mu, pinned, max_order=args.max_order)
        trace = iterate_tree_series(
            space, space.rho_tilde(), pinned, args.generations, mu=mu, tail=space.tail
        )
        tables.append(
            {
                "series": "pinned_sum",
                "pinned": space.ids[pinned],
                "bound": bound.bound,
                "partial_sums": bound.partial_sums,
                "consistent": bound.consistent,
            }
        )
        tables.append({"series": "tree_recursion", **trace.to_dict(), "pinned": space.ids[pinned]})
    return tables


class CheckCriterionCommand(BaseCommand):
    @property
    def command_name(self) -> str:
        return "check-criterion"

    @property
    def description(self) -> str:
        return "Convergence criterion for a polymer model and a weight assignment"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--model", required=True, help="polymer model file")
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument("--mu", help="weight file")
        source.add_argument("--optimize-mu", action="store_true", help="search for weights instead")
        parser.add_argument("--pinned", help="comma-separated polymer ids to certify")
        parser.add_argument("--max-order", type=int, default=4, help="pinned-series order for certification")
        parser.add_argument("--generations", type=int, default=8, help="tree-recursion generations")
        parser.add_argument("--hard-core", action="store_true", help="also report the literal hard-core condition")

    def run(self, args: argparse.Namespace) -> CommandResult:
        space = load_model(args.model)
        metadata: Dict[str, Any] = {}
        if args.optimize_mu:
            search = optimize_mu(space)
            mu, report = search.mu, search.report
            metadata["constants"] = {"search_status": search.status, "sweeps": search.sweeps, "log_margin": search.log_margin}
        else:
            mu = load_weights(args.mu, space)
            report = check_criterion(space, mu)
        data = report.to_dict(space.ids)
        if args.hard_core:
            literal = kotecky_preiss(space, mu)
            data["hard_core_passed"] = literal.passed
            data["hard_core_rhs"] = {space.ids[k]: float(literal.rhs[k]) for k in range(space.size)}
        if args.pinned and report.passed:
            metadata["partial_sums"] = _certify(space, mu, args)
            data["certified_consistent"] = all(
                table["consistent"] for table in metadata["partial_sums"] if table["series"] == "pinned_sum"
            )
        self.log_progress(f"criterion {'passes' if report.passed else 'fails'}, min margin {report.min_margin:.3e}")
        metadata["summary"] = [
            f"min margin {report.min_margin:.6g} at {data['worst_polymer']}",
        ]
        success = report.passed and data.get("certified_consistent", True)
        return CommandResult(success=success, data=data, metadata=metadata)


class OptimizeMuCommand(BaseCommand):
    @property
    def command_name(self) -> str:
        return "optimize-mu"

    @property
    def description(self) -> str:
        return "Search for weights passing the criterion"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--model", required=True, help="polymer model file")
        parser.add_argument("--max-multiplier", type=float, default=1e4)
        parser.add_argument("--grid-points", type=int, default=64)
        parser.add_argument("--max-sweeps", type=int, default=50)
        parser.add_argument("--write-mu", help="write the weights found to this file")

    def run(self, args: argparse.Namespace) -> CommandResult:
        space = load_model(args.model)
        search = optimize_mu(
            space,
            max_multiplier=args.max_multiplier,
            grid_points=args.grid_points,
            max_sweeps=args.max_sweeps,
        )
        if args.write_mu:
            Path(args.write_mu).write_text(dump_weights(space, search.mu))
            self.log_progress(f"weights written to {args.write_mu}")
        return CommandResult(
            success=search.passed,
            data={
                "status": search.status,
                "mu": {space.ids[k]: search.mu[k] for k in range(space.size)},
                "criterion": search.report.to_dict(space.ids),
            },
            metadata={
                "constants": {
                    "sweeps": search.sweeps,
                    "evaluations": search.evaluations,
                    "log_margin": search.log_margin,
                },
                "summary": [search.status],
            },
        )
