"""
Cluster Expansion Sums

Exact grand-canonical partition functions on finite volumes, Ursell
coefficients, the signed Mayer series of log Xi, the positive series |log Xi|
and pinned sums.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammainc

from .errors import CapacityError
from .graphs import MAX_GRAPH_VERTICES, connected_edge_sets, enumerate_connected_graphs
from .model import PolymerSpace

logger = logging.getLogger(__name__)

DEFAULT_MAX_TUPLES = 5_000_000
DEFAULT_TAIL_TOLERANCE = 1e-13
MAX_PARTITION_ORDER = 64
MAX_RECURSIVE_VERTICES = 12
MAX_CACHED_GRAPH_VERTICES = 6
URSELL_METHODS = ("graphs", "recursive")


@dataclass(frozen=True)
class Volume:
    """A non-empty set of polymer indices of one space."""

    indices: Tuple[int, ...]

    @classmethod
    def of(cls, space: PolymerSpace, indices: Optional[Sequence[int]] = None) -> "Volume":
        if indices is None:
            return cls(tuple(range(space.size)))
        chosen = tuple(sorted(set(int(i) for i in indices)))
        if not chosen:
            raise ValueError("volume must be non-empty")
        if chosen[0] < 0 or chosen[-1] >= space.size:
            raise ValueError(f"volume index outside 0..{space.size - 1}")
        return cls(chosen)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass
class SeriesTruncation:
    """
    Order-by-order terms and partial sums of a truncated series.

    ``partial_sums[k]`` is the sum of terms of orders first_order..first_order+k.
    """

    first_order: int
    terms: List[float]
    partial_sums: List[float] = field(default_factory=list)
    monotone: bool = False

    def __post_init__(self):
        if not self.partial_sums:
            self.partial_sums = [
                math.fsum(self.terms[: k + 1]) for k in range(len(self.terms))
            ]

    @property
    def order(self) -> int:
        return self.first_order + len(self.terms) - 1

    @property
    def value(self) -> float:
        return self.partial_sums[-1] if self.partial_sums else 0.0

    def partial_sum(self, order: int) -> float:
        """Partial sum through the given order."""
        if order < self.first_order:
            return 0.0
        return self.partial_sums[min(order, self.order) - self.first_order]

    def to_dict(self) -> Dict[str, object]:
        return {
            "orders": list(range(self.first_order, self.order + 1)),
            "terms": self.terms,
            "partial_sums": self.partial_sums,
            "monotone": self.monotone,
        }


@dataclass
class PartitionResult:
    """Truncated partition function with its recorded tail bound."""

    value: float
    tail_bound: float
    order: int
    exact: bool
    terms: List[float]
    method: str
    configurations: int = 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "value": self.value,
            "tail_bound": self.tail_bound,
            "order": self.order,
            "exact": self.exact,
            "terms": self.terms,
            "method": self.method,
            "configurations": self.configurations,
        }


# ---------------------------------------------------------------------------
# Ursell coefficients
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _graph_pair_indices(n: int) -> np.ndarray:
    """Connected graphs on n vertices as rows of pair indices, padded with a sentinel."""
    pairs = {pair: k for k, pair in enumerate(itertools.combinations(range(n), 2))}
    sentinel = len(pairs)
    edge_sets = connected_edge_sets(n)
    width = max((len(edges) for edges in edge_sets), default=0)
    table = np.full((len(edge_sets), max(width, 1)), sentinel, dtype=np.int16)
    for row, edges in enumerate(edge_sets):
        for col, edge in enumerate(edges):
            table[row, col] = pairs[edge]
    return table


def _ursell_by_graphs(mayer: np.ndarray) -> float:
    k = mayer.shape[0]
    if k > MAX_GRAPH_VERTICES:
        raise CapacityError("Ursell graph sum", k, MAX_GRAPH_VERTICES)
    factors = [mayer[i, j] for i, j in itertools.combinations(range(k), 2)]
    if k <= MAX_CACHED_GRAPH_VERTICES:
        padded = np.array(factors + [1.0])
        return float(np.prod(padded[_graph_pair_indices(k)], axis=1).sum())

    index = {pair: n for n, pair in enumerate(itertools.combinations(range(1, k + 1), 2))}
    total = 0.0
    for graph in enumerate_connected_graphs(k):
        product = 1.0
        for edge in graph.edges:
            product *= factors[index[edge]]
        total += product
    return total


def _ursell_by_recursion(gibbs: np.ndarray) -> float:
    """
    Connected part of prod(1 + f) by subset recursion.

    C(S) = W(S) - sum over proper T containing min(S) of C(T) W(S \\ T), where
    W(S) is the product of e^{-V} over pairs inside S.
    """
    k = gibbs.shape[0]
    if k > MAX_RECURSIVE_VERTICES:
        raise CapacityError("Ursell subset recursion", k, MAX_RECURSIVE_VERTICES)
    full = (1 << k) - 1
    weight = [1.0] * (full + 1)
    for subset in range(1, full + 1):
        top = subset.bit_length() - 1
        rest = subset ^ (1 << top)
        product = weight[rest]
        bits = rest
        while bits and product != 0.0:
            low = bits & -bits
            product *= gibbs[top, low.bit_length() - 1]
            bits ^= low
        weight[subset] = product

    connected = [0.0] * (full + 1)
    for subset in range(1, full + 1, 2):
        rest = subset & ~1
        total = weight[subset]
        if rest:
            sub = (rest - 1) & rest
            while True:
                head = sub | 1
                total -= connected[head] * weight[subset ^ head]
                if sub == 0:
                    break
                sub = (sub - 1) & rest
        connected[subset] = total
    return connected[full]


class UrsellEvaluator:
    """
    Memoized Ursell coefficients over one polymer space.

    Coefficients are symmetric, so configurations are keyed by their sorted
    index tuple and permutations of a configuration share one evaluation.
    """

    def __init__(self, space: PolymerSpace, method: str = "graphs"):
        if method not in URSELL_METHODS:
            raise ValueError(f"unknown Ursell method {method!r}")
        self.space = space
        self.method = method
        self._cache: Dict[Tuple[int, ...], float] = {}

    def _sub_matrix(self, key: Tuple[int, ...]) -> np.ndarray:
        pairs = self.space.pairs
        k = len(key)
        gibbs = np.ones((k, k))
        for a in range(k):
            for b in range(a + 1, k):
                i, j = key[a], key[b]
                value = 0.0 if pairs.is_incompatible(i, j) else math.exp(-pairs.finite_value(i, j))
                gibbs[a, b] = gibbs[b, a] = value
        return gibbs

    def __call__(self, config: Sequence[int]) -> float:
        key = tuple(sorted(int(i) for i in config))
        if not key:
            raise ValueError("configuration must be non-empty")
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        if len(key) == 1:
            value = 1.0
        elif self.method == "graphs":
            value = _ursell_by_graphs(self._sub_matrix(key) - 1.0)
        else:
            value = _ursell_by_recursion(self._sub_matrix(key))
        self._cache[key] = value
        return value

    @property
    def evaluations(self) -> int:
        return len(self._cache)


def ursell(space: PolymerSpace, config: Sequence[int], method: str = "graphs") -> float:
    """
    Ursell coefficient phi^T of an ordered configuration.

    Args:
        space: Polymer space supplying the pair potential
        config: Polymer indices, repeats allowed
        method: "graphs" sums over connected graphs; "recursive" uses the subset recursion

    Returns:
        1 for a single polymer, the connected-graph sum otherwise

    Raises:
        CapacityError: beyond the graph enumeration cap
    """
    return UrsellEvaluator(space, method)(config)


def ursell_from_matrix(potential: np.ndarray, method: str = "graphs") -> float:
    """Ursell coefficient for an explicit finite symmetric potential matrix."""
    potential = np.asarray(potential, dtype=float)
    if potential.shape[0] == 1:
        return 1.0
    gibbs = np.exp(-potential)
    if method == "graphs":
        return _ursell_by_graphs(gibbs - 1.0)
    return _ursell_by_recursion(gibbs)


# ---------------------------------------------------------------------------
# Series over Lambda^n
# ---------------------------------------------------------------------------


def _tuple_budget(volume_size: int, max_order: int, ordered: bool) -> int:
    if ordered:
        return sum(volume_size**n for n in range(1, max_order + 1))
    return sum(math.comb(volume_size + n - 1, n) for n in range(1, max_order + 1))


def _series_terms(
    indices: Sequence[int],
    rho: np.ndarray,
    max_order: int,
    summand: Callable[[Tuple[int, ...]], float],
    max_tuples: int,
    first_order: int = 1,
) -> Tuple[List[float], str]:
    """
    Terms (1/n!) sum over Lambda^n of summand(config) * prod rho.

    Ordered tuples with the explicit 1/n! are used while they fit the budget;
    beyond it, non-decreasing sequences carry the equivalent weight 1/prod m!.
    """
    size = len(indices)
    ordered = _tuple_budget(size, max_order, True) <= max_tuples
    if not ordered and _tuple_budget(size, max_order, False) > max_tuples:
        raise CapacityError("series configurations", _tuple_budget(size, max_order, False), max_tuples)

    terms: List[float] = []
    for n in range(first_order, max_order + 1):
        if n == 0:
            terms.append(summand(()))
            continue
        contributions = []
        if ordered:
            for config in itertools.product(indices, repeat=n):
                weight = math.prod(rho[i] for i in config)
                if weight != 0.0:
                    contributions.append(weight * summand(config))
            terms.append(math.fsum(contributions) / math.factorial(n))
        else:
            for config in itertools.combinations_with_replacement(indices, n):
                weight = math.prod(rho[i] for i in config)
                if weight == 0.0:
                    continue
                multiplicity = 1
                for _, group in itertools.groupby(config):
                    multiplicity *= math.factorial(len(list(group)))
                contributions.append(weight * summand(config) / multiplicity)
            terms.append(math.fsum(contributions))
    return terms, "ordered" if ordered else "multiset"


def _resolve_rho(space: PolymerSpace, rho: Optional[Sequence[float]]) -> np.ndarray:
    if rho is None:
        return space.rho
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (space.size,) or np.any(rho < 0):
        raise ValueError("activities must be one nonnegative entry per polymer")
    return rho


def abs_log_xi(
    space: PolymerSpace,
    volume: Optional[Volume] = None,
    rho: Optional[Sequence[float]] = None,
    max_order: int = 4,
    method: str = "recursive",
    max_tuples: int = DEFAULT_MAX_TUPLES,
    evaluator: Optional[UrsellEvaluator] = None,
) -> SeriesTruncation:
    """
    Positive-term series |log Xi| through max_order.

    Args:
        space: Polymer space
        volume: Summation volume, the whole space when omitted
        rho: Activities overriding the space's own
        max_order: Largest cluster size N
        method: Ursell evaluation route; the subset recursion by default since
            series configurations outgrow the connected-graph cap
        max_tuples: Budget on enumerated configurations
        evaluator: Shared memo of Ursell coefficients

    Returns:
        SeriesTruncation over orders 1..N with the monotone flag set
    """
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    volume = volume or Volume.of(space)
    rho = _resolve_rho(space, rho)
    evaluator = evaluator or UrsellEvaluator(space, method)
    terms, route = _series_terms(
        volume.indices, rho, max_order, lambda config: abs(evaluator(config)), max_tuples
    )
    logger.debug(f"|log Xi| through order {max_order} via {route} tuples")
    return SeriesTruncation(first_order=1, terms=terms, monotone=True)


def mayer_log_xi(
    space: PolymerSpace,
    volume: Optional[Volume] = None,
    rho: Optional[Sequence[float]] = None,
    max_order: int = 4,
    method: str = "recursive",
    max_tuples: int = DEFAULT_MAX_TUPLES,
    evaluator: Optional[UrsellEvaluator] = None,
) -> SeriesTruncation:
    """Signed Mayer series of log Xi through max_order, Ursell coefficients routed as in abs_log_xi."""
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    volume = volume or Volume.of(space)
    rho = _resolve_rho(space, rho)
    evaluator = evaluator or UrsellEvaluator(space, method)
    terms, _ = _series_terms(volume.indices, rho, max_order, evaluator, max_tuples)
    return SeriesTruncation(first_order=1, terms=terms, monotone=False)


def pinned_sum(
    space: PolymerSpace,
    pinned: int,
    rho: Optional[Sequence[float]] = None,
    max_order: int = 4,
    volume: Optional[Volume] = None,
    method: str = "recursive",
    max_tuples: int = DEFAULT_MAX_TUPLES,
    evaluator: Optional[UrsellEvaluator] = None,
) -> SeriesTruncation:
    """
    Pinned sum Pi^{gamma0}(rho) through max_order.

    The order-n term is (1/n!) sum over Lambda^n of |phi^T(gamma0, gamma_1..gamma_n)|
    times the activities of gamma_1..gamma_n; the order-0 term is 1.
    Coefficients come from the subset recursion by default; method="graphs"
    switches to the connected-graph sum up to eight polymers.
    """
    if max_order < 0:
        raise ValueError("max_order must be nonnegative")
    if not 0 <= pinned < space.size:
        raise ValueError(f"pinned polymer {pinned} outside the space")
    volume = volume or Volume.of(space)
    rho = _resolve_rho(space, rho)
    evaluator = evaluator or UrsellEvaluator(space, method)
    terms, _ = _series_terms(
        volume.indices,
        rho,
        max_order,
        lambda config: abs(evaluator((pinned,) + tuple(config))),
        max_tuples,
        first_order=0,
    )
    return SeriesTruncation(first_order=0, terms=terms, monotone=True)


# ---------------------------------------------------------------------------
# Partition function
# ---------------------------------------------------------------------------


def stability_tail_bound(activity_sum: float, order: int) -> float:
    """sum_{n>N} s^n/n!, written as e^s P(N+1, s) with the regularized gamma."""
    if activity_sum <= 0.0:
        return 0.0
    return math.exp(activity_sum) * float(gammainc(order + 1, activity_sum))


def _order_for_tail(activity_sum: float, tolerance: float) -> int:
    for order in range(0, MAX_PARTITION_ORDER + 1):
        if stability_tail_bound(activity_sum, order) <= tolerance:
            return order
    return MAX_PARTITION_ORDER


class _ConfigurationWalker:
    """
    Depth-first walk over admissible configurations of one volume.

    Incompatible extensions carry Gibbs weight zero together with all their
    extensions, so candidates are filtered through compatibility bitmasks.
    Polymers with zero activity are left out for the same reason.
    """

    def __init__(
        self,
        space: PolymerSpace,
        volume: Volume,
        max_order: int,
        ordered: bool,
        max_nodes: int,
    ):
        self.space = space
        self.pairs = space.pairs
        self.max_order = max_order
        self.ordered = ordered
        self.max_nodes = max_nodes
        self.counter = itertools.count(1)
        self.volume_mask = 0
        for i in volume.indices:
            if space.rho[i] > 0.0:
                self.volume_mask |= 1 << i

    def walk_from(self, first: int) -> Tuple[List[List[float]], bool]:
        """
        Contributions of configurations starting with ``first``, bucketed by order.

        The flag reports whether some configuration of the top order still has
        an admissible extension.
        """
        orders: List[List[float]] = [[] for _ in range(self.max_order + 1)]
        rho = self.space.rho
        config: List[int] = []
        extendable = False

        def visit(allowed: int, energy: float, activity: float, multiplicity: float, run: int):
            nonlocal extendable
            depth = len(config)
            if next(self.counter) > self.max_nodes:
                raise CapacityError("partition function configurations", self.max_nodes + 1, self.max_nodes)
            orders[depth].append(activity * math.exp(-energy) / multiplicity)
            last = config[-1]
            bits = allowed if self.ordered else allowed & ~((1 << last) - 1)
            if depth == self.max_order:
                extendable = extendable or bits != 0
                return
            while bits:
                low = bits & -bits
                idx = low.bit_length() - 1
                bits ^= low
                added = 0.0
                for other in config:
                    added += self.pairs.finite_value(idx, other)
                repeat = run + 1 if (not self.ordered and idx == last) else 1
                config.append(idx)
                visit(
                    allowed & self.pairs.compatible_mask(idx),
                    energy + added,
                    activity * rho[idx],
                    multiplicity * repeat,
                    repeat,
                )
                config.pop()

        config.append(first)
        visit(self.volume_mask & self.pairs.compatible_mask(first), 0.0, float(rho[first]), 1.0, 1)
        return orders, extendable


def partition_function(
    space: PolymerSpace,
    volume: Optional[Volume] = None,
    max_order: Optional[int] = None,
    tolerance: float = DEFAULT_TAIL_TOLERANCE,
    max_tuples: int = DEFAULT_MAX_TUPLES,
    threads: int = 1,
    method: str = "auto",
) -> PartitionResult:
    """
    Grand-canonical partition function Xi_Lambda.

    Orders are summed until either no admissible configuration of the next
    order exists (the sum is then exact) or ``max_order`` is reached; without
    ``max_order`` the order is picked so that the stability tail bound
    sum_{n>N} (sum_Lambda rho e^B)^n / n! falls below ``tolerance``.

    Args:
        space: Polymer space
        volume: Finite volume Lambda, the whole space when omitted
        max_order: Truncation order N
        tolerance: Target tail bound when max_order is omitted
        max_tuples: Budget on visited configurations
        threads: Worker threads splitting the sum by first polymer
        method: "ordered" (tuples with explicit 1/n!), "multiset" (1/prod m!) or "auto"

    Returns:
        PartitionResult with per-order terms and the tail bound

    Raises:
        CapacityError: when the configuration budget is exhausted
    """
    volume = volume or Volume.of(space)
    indices = volume.indices
    activity_sum = float(np.sum(space.rho_tilde()[list(indices)]))
    if max_order is None:
        max_order = _order_for_tail(activity_sum, tolerance)
        if all(space.pairs.is_incompatible(i, i) for i in indices):
            max_order = min(max_order, len(indices))
    if max_order < 0:
        raise ValueError("max_order must be nonnegative")

    if method == "auto":
        method = "ordered" if _tuple_budget(len(indices), max_order, True) <= max_tuples else "multiset"
    if method not in ("ordered", "multiset"):
        raise ValueError(f"unknown summation method {method!r}")

    walker = _ConfigurationWalker(space, volume, max_order, method == "ordered", max_tuples)
    firsts = [i for i in indices if space.rho[i] > 0.0] if max_order > 0 else []
    if threads > 1 and len(firsts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            branches = list(pool.map(walker.walk_from, firsts))
    else:
        branches = [walker.walk_from(first) for first in firsts]

    terms = [1.0]
    highest = 0
    for n in range(1, max_order + 1):
        contributions = [c for orders, _ in branches for c in orders[n]]
        if contributions:
            highest = n
        scale = 1.0 / math.factorial(n) if method == "ordered" else 1.0
        terms.append(math.fsum(contributions) * scale)

    exact = not any(extendable for _, extendable in branches)
    if max_order == 0:
        exact = not any(space.rho[i] > 0.0 for i in indices)
    if exact:
        del terms[highest + 1 :]
    tail = 0.0 if exact else stability_tail_bound(activity_sum, max_order)
    configurations = sum(len(level) for orders, _ in branches for level in orders)
    result = PartitionResult(
        value=math.fsum(terms),
        tail_bound=tail,
        order=len(terms) - 1,
        exact=exact,
        terms=terms,
        method=method,
        configurations=configurations,
    )
    logger.debug(
        f"Xi over {len(indices)} polymers: {result.value!r} through order {result.order}"
        f" ({configurations} configurations, tail {tail:.3e})"
    )
    return result
