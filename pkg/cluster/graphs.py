"""
Graph Enumeration

Connected graphs, labeled trees and planar rooted trees on small vertex sets,
plus the projection of a labeled tree rooted at 0 onto its planar drawing.
"""

import heapq
import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.utils import UnionFind

from .errors import CapacityError

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]

MAX_GRAPH_VERTICES = 8
MAX_TREE_VERTICES = 9
MAX_PLANAR_VERTICES = 12


@dataclass(frozen=True)
class LabeledGraph:
    """
    Simple undirected graph on the labels offset..offset+n-1.

    Edges are stored as a sorted tuple of (low, high) pairs, so two graphs
    with the same edge set compare equal.
    """

    n: int
    edges: Tuple[Edge, ...] = ()
    offset: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"vertex count must be positive, got {self.n}")
        normalized = []
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            low, high = (u, v) if u < v else (v, u)
            if low < self.offset or high >= self.offset + self.n:
                raise ValueError(f"edge ({u}, {v}) outside vertex range")
            normalized.append((low, high))
        normalized.sort()
        if len(set(normalized)) != len(normalized):
            raise ValueError("duplicate edge")
        object.__setattr__(self, "edges", tuple(normalized))

    @property
    def vertices(self) -> range:
        return range(self.offset, self.offset + self.n)

    def adjacency(self) -> Dict[int, List[int]]:
        adj: Dict[int, List[int]] = {v: [] for v in self.vertices}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for neighbours in adj.values():
            neighbours.sort()
        return adj

    def is_connected(self) -> bool:
        return _connected_mask(self.n, [(u - self.offset, v - self.offset) for u, v in self.edges])

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices)
        graph.add_edges_from(self.edges)
        return graph


@dataclass(frozen=True)
class LabeledTree(LabeledGraph):
    """A connected graph with exactly n-1 edges."""

    def __post_init__(self):
        super().__post_init__()
        if len(self.edges) != self.n - 1:
            raise ValueError(
                f"a tree on {self.n} vertices has {self.n - 1} edges, got {len(self.edges)}"
            )
        components = UnionFind(self.vertices)
        for u, v in self.edges:
            if components[u] == components[v]:
                raise ValueError(f"edge ({u}, {v}) closes a cycle")
            components.union(u, v)


@dataclass(frozen=True)
class PlanarRootedTree:
    """
    Rooted tree whose descendant lists are ordered.

    A vertex is represented by the ordered tuple of its descendants, so the
    root is the outermost object and equality is structural.
    """

    children: Tuple["PlanarRootedTree", ...] = ()

    @property
    def branching(self) -> int:
        return len(self.children)

    @property
    def size(self) -> int:
        """Number of non-root vertices."""
        return sum(1 + child.size for child in self.children)

    @property
    def depth(self) -> int:
        if not self.children:
            return 0
        return 1 + max(child.depth for child in self.children)

    def branching_factors(self) -> List[int]:
        """s_v for every vertex in pre-order, root first."""
        factors = [self.branching]
        for child in self.children:
            factors.extend(child.branching_factors())
        return factors

    def generations(self) -> List[int]:
        """Vertex counts per generation, the root being generation 0."""
        counts = [1]
        layer: Sequence[PlanarRootedTree] = [self]
        while True:
            layer = [child for node in layer for child in node.children]
            if not layer:
                return counts
            counts.append(len(layer))

    def shape(self) -> str:
        return "[" + ",".join(child.shape() for child in self.children) + "]"

    def __repr__(self) -> str:
        return f"PlanarRootedTree({self.shape()})"


def _connected_mask(n: int, edges: Sequence[Edge]) -> bool:
    """Connectivity of a graph on 0..n-1 using bitmask flood fill."""
    adj = [0] * n
    for u, v in edges:
        adj[u] |= 1 << v
        adj[v] |= 1 << u
    full = (1 << n) - 1
    seen = 1
    frontier = 1
    while frontier:
        reach = 0
        bits = frontier
        while bits:
            low = bits & -bits
            reach |= adj[low.bit_length() - 1]
            bits ^= low
        frontier = reach & ~seen
        seen |= frontier
    return seen == full


def _lex_subsets(m: int) -> Iterator[Tuple[int, ...]]:
    """Subsets of range(m) as increasing tuples, in lexicographic order."""
    chosen: List[int] = []

    def walk(start: int) -> Iterator[Tuple[int, ...]]:
        yield tuple(chosen)
        for k in range(start, m):
            chosen.append(k)
            yield from walk(k + 1)
            chosen.pop()

    return walk(0)


def enumerate_connected_graphs(n: int) -> Iterator[LabeledGraph]:
    """
    Yield every connected graph on {1..n} exactly once.

    Graphs come out in lexicographic order of their sorted edge lists.

    Args:
        n: Vertex count, 1 <= n <= MAX_GRAPH_VERTICES

    Raises:
        CapacityError: if n exceeds the enumeration cap
    """
    if n < 1:
        raise ValueError(f"vertex count must be positive, got {n}")
    if n > MAX_GRAPH_VERTICES:
        raise CapacityError("connected graph enumeration", n, MAX_GRAPH_VERTICES)

    pairs = list(itertools.combinations(range(n), 2))
    for subset in _lex_subsets(len(pairs)):
        edges = [pairs[k] for k in subset]
        if _connected_mask(n, edges):
            yield LabeledGraph(n=n, edges=tuple((u + 1, v + 1) for u, v in edges))


@lru_cache(maxsize=None)
def connected_edge_sets(n: int) -> Tuple[Tuple[Edge, ...], ...]:
    """Materialized edge lists of connected graphs on 0..n-1, cached per n."""
    return tuple(
        tuple((u - 1, v - 1) for u, v in graph.edges)
        for graph in enumerate_connected_graphs(n)
    )


def prufer_decode(sequence: Sequence[int], labels: Sequence[int]) -> Tuple[Edge, ...]:
    """Decode a Prüfer sequence over the given labels into a sorted edge tuple."""
    degree = {v: 1 for v in labels}
    for v in sequence:
        degree[v] += 1
    leaves = [v for v in labels if degree[v] == 1]
    heapq.heapify(leaves)

    edges: List[Edge] = []
    for v in sequence:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    u, w = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((min(u, w), max(u, w)))
    return tuple(sorted(edges))


def enumerate_trees(n: int, include_root_zero: bool = False) -> Iterator[LabeledTree]:
    """
    Yield every labeled tree on {1..n}, or on {0..n} with the root flag.

    Trees are produced in Prüfer-sequence order, which is deterministic and
    visits each tree once; the count is Cayley's m^(m-2) for m vertices.

    Args:
        n: Number of non-root vertices
        include_root_zero: Add the vertex 0 to the vertex set

    Raises:
        CapacityError: if the vertex set exceeds MAX_TREE_VERTICES
    """
    if n < 1:
        raise ValueError(f"vertex count must be positive, got {n}")
    labels = list(range(0 if include_root_zero else 1, n + 1))
    m = len(labels)
    if m > MAX_TREE_VERTICES:
        raise CapacityError("labeled tree enumeration", m, MAX_TREE_VERTICES)

    if m == 1:
        yield LabeledTree(n=1, edges=(), offset=labels[0])
        return
    for sequence in itertools.product(labels, repeat=m - 2):
        yield LabeledTree(n=m, edges=prufer_decode(sequence, labels), offset=labels[0])


def to_planar_rooted(tree: LabeledTree) -> PlanarRootedTree:
    """
    Planar drawing m(tau) of a tree rooted at vertex 0.

    Descendants of every vertex are ordered by increasing label; labels are
    then discarded.
    """
    if tree.offset != 0:
        raise ValueError("tree must contain the root vertex 0")
    adj = tree.adjacency()

    def build(v: int, parent: int) -> PlanarRootedTree:
        return PlanarRootedTree(tuple(build(u, v) for u in adj[v] if u != parent))

    return build(0, -1)


def preimage_count(tree: PlanarRootedTree) -> int:
    """Number of labelings of the shape, n! / prod_v s_v!, in exact integers."""
    denominator = 1
    for s in tree.branching_factors():
        denominator *= math.factorial(s)
    return math.factorial(tree.size) // denominator


@lru_cache(maxsize=None)
def _ordered_forests(total: int) -> Tuple[Tuple[PlanarRootedTree, ...], ...]:
    if total == 0:
        return ((),)
    forests = []
    for head_size in range(1, total + 1):
        for head_children in _ordered_forests(head_size - 1):
            head = PlanarRootedTree(head_children)
            for rest in _ordered_forests(total - head_size):
                forests.append((head,) + rest)
    return tuple(forests)


def enumerate_planar_rooted(n: int, max_depth: Optional[int] = None) -> List[PlanarRootedTree]:
    """
    All planar rooted trees with n non-root vertices.

    Args:
        n: Number of non-root vertices
        max_depth: Keep only trees with at most this many generations below the root

    Returns:
        Catalan(n) trees when max_depth is None
    """
    if n < 0:
        raise ValueError(f"vertex count must be nonnegative, got {n}")
    if n > MAX_PLANAR_VERTICES:
        raise CapacityError("planar rooted tree enumeration", n, MAX_PLANAR_VERTICES)
    trees = [PlanarRootedTree(forest) for forest in _ordered_forests(n)]
    if max_depth is not None:
        trees = [t for t in trees if t.depth <= max_depth]
    return trees
