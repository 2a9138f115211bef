"""
Polymer Gas Commands

Scenarios on a polymer model file: Ursell coefficients with their tree
bound, partition functions with the Mayer series, stability checks, and the
randomized tree-graph identity check.
"""

import argparse
import math
from typing import List

import numpy as np

from config import MAX_MULTISETS, MAX_TUPLES, QUADRATURE_ORDER
from cluster.expansion import (
    URSELL_METHODS,
    UrsellEvaluator,
    Volume,
    abs_log_xi,
    mayer_log_xi,
    partition_function,
    ursell,
    ursell_from_matrix,
)
from cluster.graphs import enumerate_trees
from cluster.model import PolymerSpace, verify_stability
from cluster.treebound import (
    DEFAULT_QUADRATURE_ORDER,
    MAX_IDENTITY_VERTICES,
    measure_mass,
    tree_graph_rhs,
    ursell_tree_bound,
)
from models import load_model

from .base import BaseCommand, CommandResult


def resolve_ids(space: PolymerSpace, text: str) -> List[int]:
    """Comma-separated polymer ids, repeats allowed."""
    return [space.index_of(token.strip()) for token in text.split(",") if token.strip()]


class UrsellCommand(BaseCommand):
    @property
    def command_name(self) -> str:
        return "ursell"

    @property
    def description(self) -> str:
        return "Ursell coefficient of a configuration, with its tree-graph bound"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--model", required=True, help="polymer model file")
        parser.add_argument("--config", help="comma-separated polymer ids; every polymer once when omitted")
        parser.add_argument("--method", choices=URSELL_METHODS, default="graphs")

    def run(self, args: argparse.Namespace) -> CommandResult:
        space = load_model(args.model)
        config = resolve_ids(space, args.config) if args.config else list(range(space.size))
        value = ursell(space, config, method=args.method)
        bound = ursell_tree_bound(space, config)
        self.log_progress(f"phi^T of {len(config)} polymers = {value!r}")
        return CommandResult(
            success=True,
            data={
                "config": [space.ids[i] for i in config],
                "method": args.method,
                "ursell": value,
                "tree_bound": bound,
                "bound_holds": abs(value) <= bound * (1.0 + 1e-12),
            },
            metadata={"summary": [f"phi^T = {value!r}", f"tree bound = {bound!r}"]},
        )


class PartitionCommand(BaseCommand):
    @property
    def command_name(self) -> str:
        return "partition"

    @property
    def description(self) -> str:
        return "Partition function of a finite volume, with optional log Xi series"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--model", required=True, help="polymer model file")
        parser.add_argument("--volume", help="comma-separated polymer ids; the whole space when omitted")
        parser.add_argument("--max-order", type=int, help="truncation order; picked from the tail bound when omitted")
        parser.add_argument("--series-order", type=int, default=0, help="also sum |log Xi| and log Xi through this order")

    def run(self, args: argparse.Namespace) -> CommandResult:
        space = load_model(args.model)
        volume = Volume.of(space, resolve_ids(space, args.volume)) if args.volume else Volume.of(space)
        result = partition_function(
            space,
            volume=volume,
            max_order=args.max_order,
            tolerance=args.tolerance,
            max_tuples=MAX_TUPLES,
            threads=args.threads,
        )
        partial_sums = [{"series": "partition_function", "orders": list(range(len(result.terms))), "terms": result.terms}]
        data = {"volume": [space.ids[i] for i in volume.indices], "partition": result.to_dict()}
        summary = [f"Xi = {result.value!r} (order {result.order}, exact {result.exact})"]
        if args.series_order > 0:
            evaluator = UrsellEvaluator(space, "recursive")
            absolute = abs_log_xi(
                space, volume, max_order=args.series_order, max_tuples=MAX_TUPLES, evaluator=evaluator
            )
            signed = mayer_log_xi(
                space, volume, max_order=args.series_order, max_tuples=MAX_TUPLES, evaluator=evaluator
            )
            partial_sums.append({"series": "abs_log_xi", **absolute.to_dict()})
            partial_sums.append({"series": "mayer_log_xi", **signed.to_dict()})
            data["log_xi"] = math.log(result.value) if result.value > 0 else None
            data["mayer_log_xi"] = signed.value
            data["abs_log_xi"] = absolute.value
            summary.append(f"log Xi = {data['log_xi']!r}, Mayer series {signed.value!r}")
        return CommandResult(success=True, data=data, metadata={"partial_sums": partial_sums, "summary": summary})


class StabilityCommand(BaseCommand):
    @property
    def command_name(self) -> str:
        return "stability-check"

    @property
    def description(self) -> str:
        return "Exhaustive stability check of B over small multisets"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--model", required=True, help="polymer model file")
        parser.add_argument("--max-size", type=int, default=3, help="largest multiset size")
        parser.add_argument("--max-multisets", type=int, help="guard on visited multisets")

    def run(self, args: argparse.Namespace) -> CommandResult:
        space = load_model(args.model)
        report = verify_stability(space, args.max_size, max_multisets=args.max_multisets or MAX_MULTISETS)
        violation = None if report.violation is None else [space.ids[i] for i in report.violation]
        return CommandResult(
            success=report.passed,
            data={
                "max_multiset_size": report.max_multiset_size,
                "checked": report.checked,
                "vacuous": report.vacuous,
                "per_size": report.per_size,
                "worst_margin": report.worst_margin,
                "violation": violation,
                "violation_energy": report.violation_energy,
                "violation_bound": report.violation_bound,
            },
            metadata={"summary": [f"{report.checked} multisets checked", f"violation: {violation}"]},
        )


class VerifyIdentityCommand(BaseCommand):
    @property
    def command_name(self) -> str:
        return "verify-identity"

    @property
    def description(self) -> str:
        return "Tree-graph identity on seeded random finite potentials"

    def add_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--n", type=int, default=3, help="vertex count")
        parser.add_argument("--trials", type=int, default=100)
        parser.add_argument("--low", type=float, default=-2.0, help="lower end of the potential entries")
        parser.add_argument("--high", type=float, default=2.0, help="upper end of the potential entries")
        parser.add_argument("--order", type=int, help="per-axis quadrature order")

    def run(self, args: argparse.Namespace) -> CommandResult:
        if not 2 <= args.n <= MAX_IDENTITY_VERTICES:
            raise ValueError(f"--n must lie in 2..{MAX_IDENTITY_VERTICES}")
        order = args.order or QUADRATURE_ORDER or DEFAULT_QUADRATURE_ORDER
        rng = np.random.Generator(np.random.PCG64(args.seed))
        residuals = []
        unconverged = 0
        for _ in range(args.trials):
            upper = np.triu(rng.uniform(args.low, args.high, size=(args.n, args.n)), 1)
            potential = upper + upper.T
            lhs = ursell_from_matrix(potential, "graphs")
            rhs = tree_graph_rhs(potential, order=order)
            unconverged += 0 if rhs.converged else 1
            residuals.append(abs(rhs.value - lhs))
        masses = [measure_mass(tree) for tree in enumerate_trees(args.n)]
        max_residual = max(residuals) if residuals else 0.0
        mass_error = max(abs(m - 1.0) for m in masses)
        passed = max_residual < args.tolerance and mass_error < 1e-9
        self.log_progress(f"{args.trials} trials, max residual {max_residual:.3e}")
        return CommandResult(
            success=passed,
            data={
                "trials": args.trials,
                "max_residual": max_residual,
                "worst_trial": int(np.argmax(residuals)) if residuals else None,
                "unconverged_quadratures": unconverged,
                "measure_mass_max_error": mass_error,
            },
            metadata={
                "constants": {
                    "rng": "PCG64",
                    "seed": args.seed,
                    "quadrature_order": order,
                    "trees": len(masses),
                    "tolerance": args.tolerance,
                },
                "summary": [f"max |rhs - lhs| = {max_residual:.3e} over {args.trials} trials"],
            },
        )
