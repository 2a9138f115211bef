"""
Convergence Criterion

Checks rho_gamma e^{B(gamma)} <= mu_gamma exp(-sum F(gamma, .) mu) on a finite
(truncated) polymer space, searches for a weight certificate, iterates the
exponential tree recursion and compares it with the planar and labeled tree
sums it resums.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import PreconditionError
from .expansion import UrsellEvaluator, pinned_sum
from .graphs import enumerate_planar_rooted, preimage_count, PlanarRootedTree
from .model import PolymerSpace, WeightAssignment, as_weights
from .treebound import tree_kernel_sum

logger = logging.getLogger(__name__)

CRITERION_SLACK = 1e-12
CERTIFICATE_FOUND = "certificate found"
NO_CERTIFICATE = "no certificate found within budget"

Weights = Union[WeightAssignment, Sequence[float], np.ndarray]


@dataclass
class CriterionReport:
    """Both sides of the criterion per polymer, with margins and pass flags."""

    lhs: np.ndarray
    rhs: np.ndarray
    exponent: np.ndarray
    mu: np.ndarray
    tail: np.ndarray
    margin: np.ndarray = field(init=False)
    passed_each: np.ndarray = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.margin = self.rhs - self.lhs
        self.passed_each = self.lhs <= self.rhs * (1.0 + CRITERION_SLACK)
        self.passed = bool(np.all(self.passed_each))

    @property
    def R(self) -> np.ndarray:
        """R_gamma = mu_gamma / phi_gamma(mu), the right side."""
        return self.rhs

    @property
    def phi(self) -> np.ndarray:
        """phi_gamma(mu) = exp(sum F mu + tail)."""
        return np.exp(self.exponent)

    @property
    def bounds(self) -> np.ndarray:
        """Certified bounds mu_gamma on rho_gamma Pi^gamma(rho)."""
        return self.mu

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margin)) if len(self.margin) else math.inf

    @property
    def worst_polymer(self) -> int:
        return int(np.argmin(self.margin)) if len(self.margin) else -1

    def to_dict(self, ids: Optional[Sequence[str]] = None) -> Dict[str, object]:
        ids = list(ids) if ids is not None else list(range(len(self.lhs)))
        return {
            "passed": self.passed,
            "min_margin": self.min_margin,
            "worst_polymer": ids[self.worst_polymer] if len(ids) else None,
            "polymers": [
                {
                    "id": ids[k],
                    "lhs": float(self.lhs[k]),
                    "rhs": float(self.rhs[k]),
                    "margin": float(self.margin[k]),
                    "mu": float(self.mu[k]),
                    "exponent": float(self.exponent[k]),
                    "tail": float(self.tail[k]),
                    "passed": bool(self.passed_each[k]),
                }
                for k in range(len(self.lhs))
            ],
        }


def _tail_of(space: PolymerSpace, tail: Optional[Sequence[float]]) -> np.ndarray:
    if tail is not None:
        tail = np.asarray(tail, dtype=float)
        if tail.shape != (space.size,) or np.any(tail < 0):
            raise ValueError("tail needs one nonnegative entry per polymer")
        return tail
    if space.tail is not None:
        return space.tail
    return np.zeros(space.size)


def check_criterion(
    space: PolymerSpace,
    mu: Weights,
    rho: Optional[Sequence[float]] = None,
    tail: Optional[Sequence[float]] = None,
) -> CriterionReport:
    """
    Evaluate rho e^B <= mu exp(-sum_{gamma'} F(gamma, gamma') mu_{gamma'} - tail).

    Args:
        space: Finite truncation of the polymer space
        mu: Weight assignment, one finite nonnegative entry per polymer
        rho: Activities overriding the space's own
        tail: Per-polymer bound on sum F mu over polymers outside the truncation;
            falls back to the space's tail hook

    Returns:
        CriterionReport
    """
    mu = as_weights(mu)
    if mu.shape != (space.size,):
        raise ValueError("weights need one entry per polymer")
    tail = _tail_of(space, tail)
    lhs = space.rho_tilde(rho)
    exponent = space.F_matrix() @ mu + tail
    rhs = mu * np.exp(-exponent)
    return CriterionReport(lhs=lhs, rhs=rhs, exponent=exponent, mu=mu, tail=tail)


@dataclass
class KoteckyPreissReport:
    """Literal hard-core condition rho <= mu exp(-sum over incompatible mu)."""

    lhs: np.ndarray
    rhs: np.ndarray
    passed_each: np.ndarray
    passed: bool


def kotecky_preiss(
    space: PolymerSpace, mu: Weights, rho: Optional[Sequence[float]] = None
) -> KoteckyPreissReport:
    """
    Hard-core condition, written with the incompatibility relation only.

    Raises:
        PreconditionError: if the space has finite nonzero interactions
    """
    if not space.is_hard_core():
        raise PreconditionError("the hard-core condition needs a purely hard-core potential")
    mu = as_weights(mu)
    rho = space.rho if rho is None else np.asarray(rho, dtype=float)
    incompatible = space.incompatible
    rhs = np.array(
        [mu[k] * math.exp(-float(np.sum(mu[incompatible[k]]))) for k in range(space.size)]
    )
    passed_each = rho <= rhs * (1.0 + CRITERION_SLACK)
    return KoteckyPreissReport(lhs=rho, rhs=rhs, passed_each=passed_each, passed=bool(np.all(passed_each)))


@dataclass
class MuSearchResult:
    """Best weight assignment found by the coordinate search."""

    mu: WeightAssignment
    report: CriterionReport
    status: str
    sweeps: int
    evaluations: int
    log_margin: float

    @property
    def passed(self) -> bool:
        return self.report.passed


def _log_margins(
    multipliers: np.ndarray, rho_tilde: np.ndarray, weighted_F: np.ndarray, tail: np.ndarray
) -> np.ndarray:
    """log(rhs / lhs) per polymer; +inf where the activity vanishes."""
    exponent = weighted_F @ multipliers + tail
    margins = np.log(multipliers) - exponent
    return np.where(rho_tilde > 0.0, margins, np.inf)


def optimize_mu(
    space: PolymerSpace,
    rho: Optional[Sequence[float]] = None,
    tail: Optional[Sequence[float]] = None,
    max_multiplier: float = 1e4,
    grid_points: int = 64,
    max_sweeps: int = 50,
    tolerance: float = 1e-12,
) -> MuSearchResult:
    """
    Search for weights mu passing the criterion.

    The weights are written mu = rho e^B * c and each multiplier c_gamma is
    chosen in turn by a log-spaced grid scan on [1, max_multiplier] followed
    by bounded scalar refinement, maximizing the smallest log-margin among
    the polymers that c_gamma influences. Polymers that interact with no one
    else decouple and are optimized on their own.

    Args:
        space: Finite polymer space
        rho: Activities overriding the space's own
        tail: Per-polymer tail term, falling back to the space's hook
        max_multiplier: Upper end of the multiplier range
        grid_points: Grid resolution per coordinate
        max_sweeps: Budget of coordinate sweeps
        tolerance: Stop when a sweep improves the objective by less than this

    Returns:
        MuSearchResult, "certificate found" or "no certificate found within budget"
    """
    tail = _tail_of(space, tail)
    rho_tilde = space.rho_tilde(rho)
    active = rho_tilde > 0.0
    weighted_F = space.F_matrix() * rho_tilde[None, :]
    multipliers = np.where(active, math.e, 1.0)
    exponent = weighted_F @ multipliers + tail
    grid = np.linspace(0.0, math.log(max_multiplier), grid_points)
    evaluations = 0

    best = float(np.min(_log_margins(multipliers, rho_tilde, weighted_F, tail)))
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        previous = best
        for k in np.flatnonzero(active):
            affected = np.flatnonzero(((weighted_F[:, k] > 0.0) & active) | (np.arange(space.size) == k))
            own = int(np.searchsorted(affected, k))
            column = weighted_F[affected, k]
            base = exponent[affected] - column * multipliers[k]
            logs = np.log(multipliers[affected])

            def objective(log_c: float) -> float:
                nonlocal evaluations
                evaluations += 1
                trial = logs.copy()
                trial[own] = log_c
                return float(np.min(trial - base - column * math.exp(log_c)))

            scores = [objective(u) for u in grid]
            pick = int(np.argmax(scores))
            refined = minimize_scalar(
                lambda u: -objective(u),
                bounds=(grid[max(pick - 1, 0)], grid[min(pick + 1, len(grid) - 1)]),
                method="bounded",
                options={"xatol": 1e-10},
            )
            log_c = float(refined.x) if -refined.fun >= scores[pick] else float(grid[pick])
            updated = math.exp(log_c)
            exponent += weighted_F[:, k] * (updated - multipliers[k])
            multipliers[k] = updated
        best = float(np.min(_log_margins(multipliers, rho_tilde, weighted_F, tail)))
        if not math.isfinite(best) or best - previous <= tolerance:
            break

    mu = WeightAssignment(np.where(active, rho_tilde * multipliers, 0.0))
    report = check_criterion(space, mu, rho=rho, tail=tail)
    status = CERTIFICATE_FOUND if report.passed else NO_CERTIFICATE
    logger.info(f"weight search: {status} after {sweeps} sweeps, log-margin {best:.6g}")
    return MuSearchResult(
        mu=mu, report=report, status=status, sweeps=sweeps, evaluations=evaluations, log_margin=best
    )


@dataclass
class IterationTrace:
    """rho~_{gamma0} a^{(l)}_{gamma0} per generation l, with the certificate cap."""

    pinned: int
    partial_sums: List[float]
    cap: Optional[float] = None
    contradiction: bool = False
    diverged: bool = False

    @property
    def monotone(self) -> bool:
        return all(b >= a for a, b in zip(self.partial_sums, self.partial_sums[1:]))

    @property
    def value(self) -> float:
        return self.partial_sums[-1]

    def to_dict(self) -> Dict[str, object]:
        return {
            "pinned": self.pinned,
            "generations": list(range(len(self.partial_sums))),
            "partial_sums": self.partial_sums,
            "cap": self.cap,
            "monotone": self.monotone,
            "contradiction": self.contradiction,
            "diverged": self.diverged,
        }


def iterate_tree_series(
    space: PolymerSpace,
    rho_tilde: Sequence[float],
    pinned: int,
    max_generations: int,
    mu: Optional[Weights] = None,
    tail: Optional[Sequence[float]] = None,
) -> IterationTrace:
    """
    Generation-by-generation sums over planar rooted trees.

    a^{(0)} = 1 and a^{(l+1)}_gamma = exp(sum_{gamma'} F(gamma, gamma') rho~_{gamma'} a^{(l)}_{gamma'}),
    the exponential resumming the 1/s_v! weights over branching factors.
    The trace records rho~_{gamma0} a^{(l)}_{gamma0}.

    Args:
        space: Polymer space supplying F
        rho_tilde: Reweighted activities rho e^B
        pinned: Index gamma0
        max_generations: Generation cap l_max
        mu: Certificate; exceeding it at any generation flags a contradiction
        tail: Optional per-polymer term added inside the exponential
    """
    rho_tilde = np.asarray(rho_tilde, dtype=float)
    weighted_F = space.F_matrix() * rho_tilde[None, :]
    extra = np.zeros(space.size) if tail is None else np.asarray(tail, dtype=float)
    cap_vector = None if mu is None else as_weights(mu)
    a = np.ones(space.size)
    trace = IterationTrace(
        pinned=pinned,
        partial_sums=[float(rho_tilde[pinned])],
        cap=None if cap_vector is None else float(cap_vector[pinned]),
    )
    for generation in range(1, max_generations + 1):
        with np.errstate(over="ignore"):
            a = np.exp(weighted_F @ a + extra)
        value = float(rho_tilde[pinned] * a[pinned])
        if not math.isfinite(value):
            trace.diverged = True
            logger.info(f"tree recursion overflowed at generation {generation}")
            break
        trace.partial_sums.append(value)
        if cap_vector is not None and np.any(
            rho_tilde * a > cap_vector * (1.0 + CRITERION_SLACK)
        ):
            trace.contradiction = True
    if trace.contradiction:
        logger.warning(f"tree recursion exceeded the certificate for polymer {pinned}")
    return trace


def _planar_weight(tree: PlanarRootedTree, hop: np.ndarray) -> np.ndarray:
    """W(t, .) = prod over root children c of hop @ W(c, .)."""
    weight = np.ones(hop.shape[0])
    for child in tree.children:
        weight = weight * (hop @ _planar_weight(child, hop))
    return weight


def planar_tree_sum(
    space: PolymerSpace, rho_tilde: Sequence[float], pinned: int, max_order: int
) -> List[float]:
    """
    Order-n coefficients sum over planar rooted trees t with n non-root vertices
    of (preimage_count(t) / n!) W(t, gamma0).

    preimage_count(t) / n! equals 1 / prod_v s_v!, the weight the exponential
    recursion assigns to t.
    """
    rho_tilde = np.asarray(rho_tilde, dtype=float)
    hop = space.F_matrix() * rho_tilde[None, :]
    terms = []
    for n in range(max_order + 1):
        total = [
            preimage_count(tree) / math.factorial(n) * float(_planar_weight(tree, hop)[pinned])
            for tree in enumerate_planar_rooted(n)
        ]
        terms.append(math.fsum(total))
    return terms


def labeled_tree_pinned_sum(
    space: PolymerSpace,
    rho_tilde: Sequence[float],
    pinned: int,
    max_order: int,
    method: str = "kirchhoff",
) -> List[float]:
    """
    Order-n coefficients (1/n!) sum over (gamma_1..gamma_n) of
    rho~_{gamma_1}...rho~_{gamma_n} sum_{tau in T0_n} prod_{E_tau} F.

    This is the pinned series with the tree-graph bound in place of |phi^T|
    and with reweighted activities.
    """

    rho_tilde = np.asarray(rho_tilde, dtype=float)
    kernel_full = space.F_matrix()
    cache: Dict[tuple, float] = {}
    terms = [1.0]
    for n in range(1, max_order + 1):
        contributions = []
        for config in itertools.product(range(space.size), repeat=n):
            weight = math.prod(rho_tilde[i] for i in config)
            if weight == 0.0:
                continue
            key = tuple(sorted(config))
            if key not in cache:
                full = (pinned,) + key
                kernel = kernel_full[np.ix_(full, full)].copy()
                np.fill_diagonal(kernel, 0.0)
                cache[key] = tree_kernel_sum(kernel, method)
            contributions.append(weight * cache[key])
        terms.append(math.fsum(contributions) / math.factorial(n))
    return terms


@dataclass
class CertifiedBound:
    """Certified mu_{gamma0} with the truncated series it caps."""

    pinned: int
    bound: float
    partial_sums: List[float]
    consistent: bool

    def to_dict(self) -> Dict[str, object]:
        return {
            "pinned": self.pinned,
            "bound": self.bound,
            "partial_sums": self.partial_sums,
            "consistent": self.consistent,
        }


def certified_pinned_bound(
    space: PolymerSpace,
    mu: Weights,
    pinned: int,
    rho: Optional[Sequence[float]] = None,
    max_order: int = 0,
    evaluator: Optional[UrsellEvaluator] = None,
) -> CertifiedBound:
    """
    mu_{gamma0} as the bound on rho_{gamma0} Pi^{gamma0}(rho).

    With ``max_order`` > 0 the pinned series is evaluated through that order
    and every partial sum, times rho_{gamma0}, is checked against the bound.

    Raises:
        PreconditionError: if the criterion does not pass for (rho, mu)
    """
    report = check_criterion(space, mu, rho=rho)
    if not report.passed:
        raise PreconditionError(
            f"criterion fails (min margin {report.min_margin:.3e}); no bound is certified"
        )
    bound = float(report.mu[pinned])
    activity = space.rho if rho is None else np.asarray(rho, dtype=float)
    partial_sums: List[float] = []
    if max_order > 0:
        series = pinned_sum(space, pinned, rho=activity, max_order=max_order, evaluator=evaluator)
        partial_sums = [float(activity[pinned]) * s for s in series.partial_sums]
    consistent = all(s <= bound + CRITERION_SLACK for s in partial_sums)
    if not consistent:
        logger.error(f"truncated pinned series exceeds the certified bound for polymer {pinned}")
    return CertifiedBound(pinned=pinned, bound=bound, partial_sums=partial_sums, consistent=consistent)
