"""
Tree-Graph Identity and Bound

Interpolation chains and their measure, the convex decomposition of the
potential, a quadrature evaluation of the tree-graph identity for finite
potentials, the cut-off potential V_H and the tree-graph bound on |phi^T|.
"""

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import CapacityError, QuadratureError, TreeIdentityError
from .expansion import ursell_from_matrix
from .graphs import LabeledTree, enumerate_trees
from .model import PolymerSpace

logger = logging.getLogger(__name__)

DEFAULT_QUADRATURE_ORDER = 24
MAX_IDENTITY_VERTICES = 5
MAX_SUBSET_SCAN = 12


@dataclass(frozen=True)
class InterpolationChain:
    """
    Increasing chain X_1 ⊂ ... ⊂ X_{n-1} with X_1 = {1}.

    Stored as the vertex ordering whose first i entries form X_i.
    """

    ordering: Tuple[int, ...]

    def __post_init__(self):
        n = len(self.ordering)
        if n < 2 or self.ordering[0] != 1 or sorted(self.ordering) != list(range(1, n + 1)):
            raise ValueError(f"not a chain ordering: {self.ordering}")

    @property
    def n(self) -> int:
        return len(self.ordering)

    @property
    def sets(self) -> Tuple[FrozenSet[int], ...]:
        return tuple(frozenset(self.ordering[:i]) for i in range(1, self.n))

    def position(self, vertex: int) -> int:
        return self.ordering.index(vertex)

    def crossing_range(self, i: int, j: int) -> range:
        """0-based indices l-1 of the sets X_l that the pair {i, j} crosses."""
        low, high = sorted((self.position(i), self.position(j)))
        return range(low, high)

    def crosses(self, i: int, j: int, level: int) -> bool:
        return (level - 1) in self.crossing_range(i, j)

    def is_compatible(self, tree: LabeledTree) -> bool:
        """Each X_i holds exactly i-1 edges of the tree."""
        for size, members in enumerate(self.sets, start=1):
            inside = sum(1 for u, v in tree.edges if u in members and v in members)
            if inside != size - 1:
                return False
        return True

    def crossing_counts(self, tree: LabeledTree) -> Tuple[int, ...]:
        counts = [0] * (self.n - 1)
        for u, v in tree.edges:
            for level in self.crossing_range(u, v):
                counts[level] += 1
        return tuple(counts)


def enumerate_chains(n: int) -> Iterator[InterpolationChain]:
    if n < 2:
        raise ValueError("chains need at least two vertices")
    for rest in itertools.permutations(range(2, n + 1)):
        yield InterpolationChain((1,) + rest)


def convex_decomposition_K(
    potential: np.ndarray, chain: InterpolationChain, t: Sequence[float]
) -> float:
    """
    K(X, t) = sum_{i<j} t_1({i,j}) ... t_{n-1}({i,j}) V_ij.

    t_l({i,j}) is t_l when {i,j} crosses X_l and 1 otherwise; vertex v is
    row v-1 of the potential matrix.
    """
    potential = np.asarray(potential, dtype=float)
    t = np.asarray(t, dtype=float)
    if len(t) != chain.n - 1:
        raise ValueError(f"expected {chain.n - 1} interpolation parameters, got {len(t)}")
    total = 0.0
    for i, j in itertools.combinations(range(1, chain.n + 1), 2):
        factor = float(np.prod(t[list(chain.crossing_range(i, j))]))
        total += factor * potential[i - 1, j - 1]
    return total


@lru_cache(maxsize=None)
def _unit_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order)
    return (nodes + 1.0) / 2.0, weights / 2.0


@lru_cache(maxsize=None)
def _tensor_rule(order: int, dims: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = _unit_rule(order)
    grids = np.meshgrid(*([nodes] * dims), indexing="ij")
    weight_grids = np.meshgrid(*([weights] * dims), indexing="ij")
    points = np.stack([g.ravel() for g in grids])
    return points, np.prod(np.stack([w.ravel() for w in weight_grids]), axis=0)


@lru_cache(maxsize=None)
def _chain_tree_table(n: int) -> Tuple[Tuple[InterpolationChain, Tuple[Tuple[LabeledTree, Tuple[int, ...]], ...]], ...]:
    """For each chain, the compatible trees with their crossing counts."""
    trees = list(enumerate_trees(n))
    table = []
    for chain in enumerate_chains(n):
        members = []
        for tree in trees:
            if chain.is_compatible(tree):
                counts = chain.crossing_counts(tree)
                if min(counts) < 1:
                    raise TreeIdentityError(f"zero crossing count {counts} for chain {chain.ordering}")
                members.append((tree, counts))
        table.append((chain, tuple(members)))
    return tuple(table)


@dataclass
class TreeGraphResult:
    """Right side of the tree-graph identity at two quadrature orders."""

    value: float
    refined_value: float
    order: int
    disagreement: float
    converged: bool
    chains: int
    trees: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "value": self.value,
            "refined_value": self.refined_value,
            "order": self.order,
            "disagreement": self.disagreement,
            "converged": self.converged,
            "chains": self.chains,
            "trees": self.trees,
        }


def _identity_rhs(potential: np.ndarray, n: int, order: int) -> float:
    points, weights = _tensor_rule(order, n - 1)
    total = 0.0
    for chain, members in _chain_tree_table(n):
        if not members:
            continue
        exponent = np.zeros(points.shape[1])
        for i, j in itertools.combinations(range(1, n + 1), 2):
            levels = list(chain.crossing_range(i, j))
            exponent += potential[i - 1, j - 1] * np.prod(points[levels], axis=0)
        integrand = weights * np.exp(-exponent)

        grouped: Dict[Tuple[int, ...], float] = defaultdict(float)
        for tree, counts in members:
            grouped[counts] += math.prod(-potential[u - 1, v - 1] for u, v in tree.edges)
        for counts, coefficient in grouped.items():
            if coefficient == 0.0:
                continue
            powers = np.prod(points ** (np.asarray(counts)[:, None] - 1), axis=0)
            total += coefficient * float(np.dot(integrand, powers))
    return total


def tree_graph_rhs(
    potential: np.ndarray,
    n: Optional[int] = None,
    order: int = DEFAULT_QUADRATURE_ORDER,
    tolerance: float = 1e-9,
    strict: bool = False,
) -> TreeGraphResult:
    """
    Right side of the tree-graph identity for a finite potential.

    Sums over trees of prod(-V_ij) times the interpolation integral of
    e^{-K}, evaluated by tensor Gauss-Legendre quadrature at ``order`` and
    at twice that order.

    Args:
        potential: Finite symmetric n x n matrix; vertex v is row v-1
        n: Vertex count, read from the matrix when omitted
        order: Per-axis quadrature order
        tolerance: Allowed disagreement between the two orders
        strict: Raise instead of flagging when the orders disagree

    Raises:
        QuadratureError: in strict mode, when the two orders disagree
        CapacityError: beyond five vertices
    """
    potential = np.asarray(potential, dtype=float)
    n = potential.shape[0] if n is None else n
    if potential.shape != (n, n):
        raise ValueError("potential matrix must be n x n")
    if not np.all(np.isfinite(potential)) or not np.array_equal(potential, potential.T):
        raise ValueError("the identity needs a finite symmetric potential")
    if n > MAX_IDENTITY_VERTICES:
        raise CapacityError("tree-graph identity vertices", n, MAX_IDENTITY_VERTICES)

    table = _chain_tree_table(n) if n >= 2 else ()
    if n == 1:
        return TreeGraphResult(1.0, 1.0, order, 0.0, True, 0, 1)

    value = _identity_rhs(potential, n, order)
    refined = _identity_rhs(potential, n, 2 * order)
    disagreement = abs(refined - value)
    converged = disagreement <= tolerance * max(1.0, abs(refined))
    if not converged:
        message = f"quadrature orders {order} and {2 * order} disagree by {disagreement:.3e}"
        if strict:
            raise QuadratureError(message)
        logger.warning(message)
    return TreeGraphResult(
        value=value,
        refined_value=refined,
        order=order,
        disagreement=disagreement,
        converged=converged,
        chains=sum(1 for _, members in table if members),
        trees=n ** (n - 2),
    )


def measure_mass(tree: LabeledTree, n: Optional[int] = None) -> float:
    """
    Total mass of the interpolation measure of a tree on {1..n}.

    The integrand t_1^{b_1-1}...t_{n-1}^{b_{n-1}-1} is separable, so each
    compatible chain contributes a product of one-dimensional quadratures.
    """
    n = tree.n if n is None else n
    if tree.offset != 1 or tree.n != n:
        raise ValueError("tree must live on the vertices 1..n")
    if n > MAX_IDENTITY_VERTICES:
        raise CapacityError("interpolation measure vertices", n, MAX_IDENTITY_VERTICES)
    if n == 1:
        return 1.0
    nodes, weights = _unit_rule(max(2, n))
    total = []
    for chain in enumerate_chains(n):
        if not chain.is_compatible(tree):
            continue
        counts = chain.crossing_counts(tree)
        if min(counts) < 1:
            raise TreeIdentityError(f"zero crossing count {counts} for chain {chain.ordering}")
        total.append(math.prod(float(np.dot(weights, nodes ** (b - 1))) for b in counts))
    return math.fsum(total)


@dataclass(frozen=True)
class CutoffPotential:
    """V_H: the value H on incompatible pairs, V elsewhere."""

    space: PolymerSpace
    H: float

    def __post_init__(self):
        if not math.isfinite(self.H):
            raise ValueError("the cutoff H must be finite")

    def value(self, i: int, j: int) -> float:
        if self.space.pairs.is_incompatible(i, j):
            return float(self.H)
        return self.space.pairs.finite_value(i, j)

    def matrix(self, config: Sequence[int]) -> np.ndarray:
        k = len(config)
        matrix = np.zeros((k, k))
        for a, b in itertools.combinations(range(k), 2):
            matrix[a, b] = matrix[b, a] = self.value(config[a], config[b])
        return matrix

    def ursell(self, config: Sequence[int], method: str = "graphs") -> float:
        return ursell_from_matrix(self.matrix(config), method)

    def stable_on(self, config: Sequence[int], tolerance: float = 1e-12) -> bool:
        """Every subset X satisfies sum V_H >= -sum B."""
        if len(config) > MAX_SUBSET_SCAN:
            raise CapacityError("cut-off stability subsets", len(config), MAX_SUBSET_SCAN)
        matrix = self.matrix(config)
        B = self.space.B[list(config)]
        for size in range(2, len(config) + 1):
            for subset in itertools.combinations(range(len(config)), size):
                energy = sum(matrix[a, b] for a, b in itertools.combinations(subset, 2))
                if energy < -float(np.sum(B[list(subset)])) - tolerance:
                    return False
        return True


def cutoff_H0(space: PolymerSpace, config: Sequence[int]) -> float:
    """
    Smallest cutoff of the subset recipe making V_H stable on the configuration.

    Every subset X holding an incompatible pair contributes minus the sum of
    its compatible pair potentials with V <= 0; H0 is the maximum over X, and
    0 when no subset holds an incompatible pair.
    """
    k = len(config)
    if k > MAX_SUBSET_SCAN:
        raise CapacityError("cut-off subsets", k, MAX_SUBSET_SCAN)
    pairs = space.pairs
    best = 0.0
    for size in range(2, k + 1):
        for subset in itertools.combinations(range(k), size):
            has_incompatible = False
            negative = 0.0
            for a, b in itertools.combinations(subset, 2):
                i, j = config[a], config[b]
                if pairs.is_incompatible(i, j):
                    has_incompatible = True
                else:
                    value = pairs.finite_value(i, j)
                    if value <= 0.0:
                        negative += value
            if has_incompatible:
                best = max(best, -negative)
    return best


def _kernel_submatrix(space: PolymerSpace, config: Sequence[int]) -> np.ndarray:
    k = len(config)
    kernel = np.zeros((k, k))
    for a, b in itertools.combinations(range(k), 2):
        kernel[a, b] = kernel[b, a] = space.kernel_F(config[a], config[b])
    return kernel


def tree_kernel_sum(kernel: np.ndarray, method: str = "enumerate") -> float:
    """
    Sum over spanning trees of the product of edge weights.

    "kirchhoff" evaluates the reduced weighted Laplacian determinant instead
    of enumerating trees.
    """
    k = kernel.shape[0]
    if k == 1:
        return 1.0
    if method == "kirchhoff":
        laplacian = np.diag(kernel.sum(axis=1)) - kernel
        return float(np.linalg.det(laplacian[1:, 1:]))
    if method != "enumerate":
        raise ValueError(f"unknown tree sum method {method!r}")
    return math.fsum(
        math.prod(kernel[u - 1, v - 1] for u, v in tree.edges) for tree in enumerate_trees(k)
    )


def ursell_tree_bound(
    space: PolymerSpace, config: Sequence[int], method: str = "enumerate"
) -> float:
    """
    Tree-graph bound e^{sum B} sum_{tau} prod_{E_tau} F on |phi^T|.

    A pinned configuration (gamma_0, ..., gamma_n) is bounded by the same
    expression, the trees then being read on {0..n}.

    Raises:
        CapacityError: beyond the tree enumeration cap
    """
    if not config:
        raise ValueError("configuration must be non-empty")
    kernel = _kernel_submatrix(space, config)
    prefactor = math.exp(float(np.sum(space.B[list(config)])))
    return prefactor * tree_kernel_sum(kernel, method)
